//! Shared test helpers: an independent long-horizon propagator oracle and
//! small utilities.

// Each integration-test binary compiles this module separately and uses a
// different subset of it.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use nvkin::kinetics::{Populations, RateMatrix};

/// Matrix exponential by scaling-and-squaring with a Taylor kernel.
///
/// Deliberately naive (no Pade economization) so it shares nothing with the
/// solvers under test; fine for the 8x8 systems used here.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.iter().map(|x| x.abs()).fold(0.0, f64::max) * n as f64;
    let k = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / 2f64.powi(k as i32);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for j in 1..40 {
        term = (&term * &scaled) / j as f64;
        sum += &term;
        if term.iter().map(|x| x.abs()).fold(0.0, f64::max) < 1e-18 {
            break;
        }
    }
    for _ in 0..k {
        sum = &sum * &sum;
    }
    sum
}

/// Propagate dn/dt = A n - b to time `t` by variation of constants:
/// n(t) = m + exp(A t)(n0 - m) with A m = b. The fixed point m is obtained by
/// an SVD least-squares solve of the row-equilibrated system plus the
/// normalization row, and the homogeneous part is advanced by repeated
/// application of one chunk exponential. Deflating m first keeps the
/// stiffness-limited exponential error acting only on the decaying deviation,
/// which is what makes 1e-8 agreement reachable in f64; the library's
/// explicit stepper cannot reach multi-T1 horizons at all.
pub fn propagate_exact(rm: &RateMatrix, n0: &Populations, t: f64) -> [f64; 7] {
    let a = rm.generator();
    let b = DVector::from_column_slice(&rm.thermal_drive);

    // Fixed point: rows of [A; 1] scaled to unit max-abs, SVD least squares.
    let mut sys = DMatrix::<f64>::zeros(8, 7);
    let mut rhs = DVector::<f64>::zeros(8);
    for i in 0..7 {
        let scale = (0..7).map(|j| a[(i, j)].abs()).fold(0.0, f64::max).max(1e-300);
        for j in 0..7 {
            sys[(i, j)] = a[(i, j)] / scale;
        }
        rhs[i] = b[i] / scale;
    }
    for j in 0..7 {
        sys[(7, j)] = 1.0;
    }
    rhs[7] = 1.0;
    let m = sys.svd(true, true).solve(&rhs, 1e-14).expect("fixed-point solve");

    let chunks = 512;
    let prop = expm(&(&a * (t / chunks as f64)));
    let mut w = DVector::from_column_slice(&n0.n) - &m;
    for _ in 0..chunks {
        w = &prop * w;
    }
    let x = m + w;
    let mut out = [0.0; 7];
    out.copy_from_slice(x.as_slice());
    out
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}
