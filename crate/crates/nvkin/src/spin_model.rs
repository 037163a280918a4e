//! NV ground- and excited-state spin Hamiltonians, diagonalization, and
//! spin-mixing coefficients against the zero-field basis.
//!
//! The S = 1 matrices are written in the m_s = (+1, 0, -1) eigenbasis of Sz.
//! Zero-field state *labels* follow the level diagram ordering
//! (m_s = 0, -1, +1), i.e. label 1 is the m_s = 0 state.

use nalgebra::{Complex, DMatrix, DVector};

use crate::constants::gyromagnetic_ratio;
use crate::{NvError, Result};

type C64 = Complex<f64>;

/// Relative tolerance for the Hermiticity check of constructed matrices.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Tolerance for eigenvector orthonormality.
pub const UNITARITY_TOL: f64 = 1e-10;
/// Relative tolerance for the eigen residual ||H V - V E||.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Physical constants of the NV spin system.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SpinSystemParams {
    /// Ground-state zero-field splitting D_gs, Hz.
    pub d_gs: f64,
    /// Excited-state zero-field splitting D_es, Hz.
    pub d_es: f64,
    /// Lande g-factor.
    pub g_factor: f64,
    /// Axial 14N hyperfine constant A_par, Hz.
    pub hyperfine_par: f64,
    /// Transverse 14N hyperfine constant A_perp, Hz.
    pub hyperfine_perp: f64,
    /// Sample temperature, K.
    pub temperature: f64,
}

impl Default for SpinSystemParams {
    fn default() -> Self {
        Self {
            d_gs: 2.87e9,
            d_es: 1.42e9,
            g_factor: 2.0,
            // Standard 14N literature values; only the splitting magnitude
            // matters for the spectra.
            hyperfine_par: -2.16e6,
            hyperfine_perp: -2.70e6,
            temperature: 298.0,
        }
    }
}

impl SpinSystemParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_gs > self.d_es && self.d_es > 0.0) {
            return Err(NvError::InvalidParameter(format!(
                "require d_gs > d_es > 0, got d_gs = {}, d_es = {}",
                self.d_gs, self.d_es
            )));
        }
        if self.temperature <= 0.0 {
            return Err(NvError::InvalidParameter(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    /// g * mu_B / h, Hz/T.
    pub fn gamma(&self) -> f64 {
        gyromagnetic_ratio(self.g_factor)
    }
}

/// Static magnetic field in the NV frame (z along the NV axis, field in the
/// x-z plane by convention).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FieldVector {
    /// Field magnitude B, T.
    pub magnitude: f64,
    /// Polar angle theta from the NV axis, rad.
    pub polar_angle: f64,
    /// Azimuth, rad. Fixed to 0 by convention; the electron-only model is
    /// azimuth-independent.
    pub azimuth: f64,
}

impl FieldVector {
    pub fn new(magnitude: f64, polar_angle: f64) -> Result<Self> {
        if magnitude < 0.0 {
            return Err(NvError::InvalidParameter(format!(
                "field magnitude must be >= 0, got {magnitude}"
            )));
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&polar_angle) {
            return Err(NvError::InvalidParameter(format!(
                "polar angle must lie in [0, pi/2], got {polar_angle}"
            )));
        }
        Ok(Self {
            magnitude,
            polar_angle,
            azimuth: 0.0,
        })
    }

    pub fn from_degrees(magnitude: f64, theta_deg: f64) -> Result<Self> {
        Self::new(magnitude, theta_deg.to_radians())
    }

    /// Cartesian components (Bx, By, Bz) in the NV frame, T.
    pub fn components(&self) -> (f64, f64, f64) {
        let bperp = self.magnitude * self.polar_angle.sin();
        (
            bperp * self.azimuth.cos(),
            bperp * self.azimuth.sin(),
            self.magnitude * self.polar_angle.cos(),
        )
    }
}

/// Triplet manifold selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Manifold {
    Ground,
    Excited,
}

/// Complex Hermitian spin Hamiltonian in frequency units (Hz).
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    pub matrix: DMatrix<C64>,
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Maximum relative deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let scale = self.matrix.norm().max(1.0);
        let adj = self.matrix.adjoint();
        (&self.matrix - adj).norm() / scale
    }

    pub fn check_hermitian(&self) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect > HERMITICITY_TOL {
            return Err(NvError::NotHermitian(defect));
        }
        Ok(())
    }
}

/// Spin-1 angular momentum matrices (Sx, Sy, Sz) in the m_s = (+1, 0, -1)
/// basis. Only S = 1 is supported.
pub fn spin_operators(spin: u32) -> Result<[DMatrix<C64>; 3]> {
    if spin != 1 {
        return Err(NvError::UnsupportedSpin(spin));
    }
    let z = C64::new(0.0, 0.0);
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let si = C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
    let sx = DMatrix::from_row_slice(3, 3, &[z, s, z, s, z, s, z, s, z]);
    let sy = DMatrix::from_row_slice(3, 3, &[z, -si, z, si, z, -si, z, si, z]);
    let sz = DMatrix::from_diagonal(&DVector::from_vec(vec![
        C64::new(1.0, 0.0),
        z,
        C64::new(-1.0, 0.0),
    ]));
    Ok([sx, sy, sz])
}

/// Build the triplet Hamiltonian H/h = D (Sz^2 + 2/3) + (g mu_B / h) B.S
/// [+ S.A.I with the 14N nucleus], in Hz.
///
/// The (Sz^2 + 2/3) form carries a uniform offset relative to the traceless
/// convention; transition frequencies, mixing, and populations are unaffected.
pub fn build_hamiltonian(
    params: &SpinSystemParams,
    field: &FieldVector,
    manifold: Manifold,
    include_nucleus: bool,
) -> Result<HamiltonianMatrix> {
    params.validate()?;
    if include_nucleus && manifold == Manifold::Excited {
        return Err(NvError::InvalidParameter(
            "hyperfine term is only supported for the ground manifold".into(),
        ));
    }
    let [sx, sy, sz] = spin_operators(1)?;
    let d = match manifold {
        Manifold::Ground => params.d_gs,
        Manifold::Excited => params.d_es,
    };
    let (bx, by, bz) = field.components();
    let gamma = params.gamma();
    let ident = DMatrix::<C64>::identity(3, 3);

    let mut h = (&sz * &sz + &ident * C64::new(2.0 / 3.0, 0.0)) * C64::new(d, 0.0);
    h += &sx * C64::new(gamma * bx, 0.0);
    h += &sy * C64::new(gamma * by, 0.0);
    h += &sz * C64::new(gamma * bz, 0.0);

    let matrix = if include_nucleus {
        // 14N has I = 1; reuse the spin-1 matrices for the nucleus.
        let nuc_ident = DMatrix::<C64>::identity(3, 3);
        let mut h9 = h.kronecker(&nuc_ident);
        h9 += (sx.kronecker(&sx) + sy.kronecker(&sy)) * C64::new(params.hyperfine_perp, 0.0);
        h9 += sz.kronecker(&sz) * C64::new(params.hyperfine_par, 0.0);
        h9
    } else {
        h
    };

    let out = HamiltonianMatrix { matrix };
    out.check_hermitian()?;
    Ok(out)
}

/// Eigen decomposition of a Hermitian Hamiltonian: ascending energies with
/// orthonormal column eigenvectors in a deterministic phase convention.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// Eigenfrequencies, Hz, ascending.
    pub energies: Vec<f64>,
    /// Column k is the eigenvector of energies[k].
    pub vectors: DMatrix<C64>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }
}

/// Diagonalize a Hermitian matrix. Energies come out ascending; each
/// eigenvector is rephased so its largest-magnitude component is real and
/// positive, making results reproducible bit-for-bit.
pub fn eigensolve(h: &HamiltonianMatrix) -> Result<EigenSystem> {
    h.check_hermitian()?;
    let dim = h.dim();
    // Symmetrize to kill round-off asymmetry before handing to the solver.
    let sym = (&h.matrix + h.matrix.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut energies = Vec::with_capacity(dim);
    let mut vectors = DMatrix::<C64>::zeros(dim, dim);
    for (k, &idx) in order.iter().enumerate() {
        energies.push(eig.eigenvalues[idx]);
        let col = eig.eigenvectors.column(idx);
        // Phase convention: largest-magnitude component real and positive.
        let mut imax = 0;
        let mut vmax = 0.0;
        for (i, c) in col.iter().enumerate() {
            let n = c.norm();
            if n > vmax {
                vmax = n;
                imax = i;
            }
        }
        let pivot = col[imax];
        let phase = if pivot.norm() > 0.0 {
            pivot.conj() / C64::new(pivot.norm(), 0.0)
        } else {
            C64::new(1.0, 0.0)
        };
        let norm = col.norm();
        for i in 0..dim {
            vectors[(i, k)] = col[i] * phase / C64::new(norm, 0.0);
        }
    }
    Ok(EigenSystem { energies, vectors })
}

/// |alpha_ij|^2 overlap table of eigenstates against the zero-field basis.
///
/// Row i is the eigenstate (labelled by ascending energy), column j the
/// zero-field state in the (m_s = 0, -1, +1) label order.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    pub alpha_sq: [[f64; 3]; 3],
}

/// Basis row in the m_s = (+1, 0, -1) matrix ordering for zero-field label j
/// (labels run m_s = 0, -1, +1).
const LABEL_TO_ROW: [usize; 3] = [1, 2, 0];

/// Compute |alpha_ij|^2 = |<j0|i>|^2 from an electron-only eigen-system.
///
/// The `manifold` argument only fixes which label set (ground |1..3> or
/// excited |4..6>) the rows refer to; the math is identical.
pub fn mixing_coefficients(eig: &EigenSystem, _manifold: Manifold) -> Result<MixingMatrix> {
    if eig.dim() != 3 {
        return Err(NvError::DimensionMismatch(format!(
            "mixing coefficients need a 3x3 electron-only eigen-system, got dim {}",
            eig.dim()
        )));
    }
    let mut alpha_sq = [[0.0; 3]; 3];
    for (i, row) in alpha_sq.iter_mut().enumerate() {
        for j in 0..3 {
            row[j] = eig.vectors[(LABEL_TO_ROW[j], i)].norm_sqr();
        }
    }
    Ok(MixingMatrix { alpha_sq })
}

impl MixingMatrix {
    /// Maximum deviation of any row or column sum from 1.
    pub fn stochasticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..3 {
            let row: f64 = self.alpha_sq[k].iter().sum();
            let col: f64 = (0..3).map(|i| self.alpha_sq[i][k]).sum();
            worst = worst.max((row - 1.0).abs()).max((col - 1.0).abs());
        }
        worst
    }
}

/// Convenience: build, diagonalize, and mix in one call (electron-only).
pub fn mixing_at_field(
    params: &SpinSystemParams,
    field: &FieldVector,
    manifold: Manifold,
) -> Result<(EigenSystem, MixingMatrix)> {
    let h = build_hamiltonian(params, field, manifold, false)?;
    let eig = eigensolve(&h)?;
    let mix = mixing_coefficients(&eig, manifold)?;
    Ok((eig, mix))
}
