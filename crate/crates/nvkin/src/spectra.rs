//! ESR spectrum synthesis, integration, baseline correction, multipeak
//! Lorentzian fitting, and polarization extraction from peak areas.

use nalgebra::{DMatrix, DVector};

use crate::constants::gyromagnetic_ratio;
use crate::{NvError, Result};

/// Differential (field-modulated) or absorption line shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    Differential,
    Absorption,
}

impl std::fmt::Display for SpectrumKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpectrumKind::Differential => write!(f, "differential"),
            SpectrumKind::Absorption => write!(f, "absorption"),
        }
    }
}

/// A sampled curve over magnetic field.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Field axis, T, strictly increasing.
    pub field_axis: Vec<f64>,
    /// Signal samples, same length as the axis.
    pub signal: Vec<f64>,
    pub kind: SpectrumKind,
}

impl Spectrum {
    pub fn new(field_axis: Vec<f64>, signal: Vec<f64>, kind: SpectrumKind) -> Result<Self> {
        if field_axis.len() != signal.len() {
            return Err(NvError::DimensionMismatch(format!(
                "axis has {} samples, signal {}",
                field_axis.len(),
                signal.len()
            )));
        }
        if field_axis.len() < 2 {
            return Err(NvError::Malformed("spectrum needs at least 2 samples".into()));
        }
        if field_axis.windows(2).any(|w| w[1] <= w[0]) {
            return Err(NvError::Malformed("field axis must be strictly increasing".into()));
        }
        if field_axis
            .iter()
            .chain(signal.iter())
            .any(|x| !x.is_finite())
        {
            return Err(NvError::Malformed("non-finite sample in spectrum".into()));
        }
        Ok(Self {
            field_axis,
            signal,
            kind,
        })
    }

    pub fn len(&self) -> usize {
        self.field_axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.field_axis.is_empty()
    }

    /// Parse a 2-column CSV (field_tesla, signal); an optional header line is
    /// skipped if it does not parse as numbers.
    pub fn from_csv(text: &str, kind: SpectrumKind) -> Result<Self> {
        let mut axis = Vec::new();
        let mut signal = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split(',');
            let a = cols.next().map(str::trim).unwrap_or("");
            let b = cols.next().map(str::trim);
            let parsed = b.and_then(|b| Some((a.parse::<f64>().ok()?, b.parse::<f64>().ok()?)));
            match parsed {
                Some((x, y)) => {
                    axis.push(x);
                    signal.push(y);
                }
                None if lineno == 0 => {} // header
                None => {
                    return Err(NvError::Malformed(format!(
                        "line {}: expected two comma-separated numbers, got {line:?}",
                        lineno + 1
                    )));
                }
            }
        }
        Self::new(axis, signal, kind)
    }

    /// Emit the 2-column CSV with a unit-suffixed header, 9 significant
    /// digits, deterministic across runs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("field_T,signal\n");
        for (b, s) in self.field_axis.iter().zip(&self.signal) {
            out.push_str(&format!("{b:.8e},{s:.8e}\n"));
        }
        out
    }
}

/// One Lorentzian peak group: a hyperfine multiplet with shared width and
/// (under the equal-magnitude constraint) shared amplitude.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PeakModel {
    /// Multiplet center, T.
    pub center: f64,
    /// Full width at half maximum of each component, T.
    pub fwhm: f64,
    /// Signed amplitude; sign encodes emission vs absorption polarity.
    pub amplitude: f64,
    /// Spacing between adjacent hyperfine components, T.
    pub hyperfine_splitting: f64,
    /// Number of hyperfine components (3 for 14N).
    pub n_hyperfine: usize,
}

impl PeakModel {
    pub fn single(center: f64, fwhm: f64, amplitude: f64) -> Self {
        Self {
            center,
            fwhm,
            amplitude,
            hyperfine_splitting: 0.0,
            n_hyperfine: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm > 0.0) {
            return Err(NvError::InvalidParameter(format!(
                "fwhm must be positive, got {}",
                self.fwhm
            )));
        }
        if self.n_hyperfine < 1 {
            return Err(NvError::InvalidParameter("n_hyperfine must be >= 1".into()));
        }
        Ok(())
    }

    /// Centers of the individual components, symmetric about `center`.
    pub fn component_centers(&self) -> Vec<f64> {
        let n = self.n_hyperfine;
        (0..n)
            .map(|k| self.center + (k as f64 - (n as f64 - 1.0) / 2.0) * self.hyperfine_splitting)
            .collect()
    }

    /// Total absorption area, sum over components of (pi/2) a w.
    pub fn area(&self) -> f64 {
        self.n_hyperfine as f64 * std::f64::consts::FRAC_PI_2 * self.amplitude * self.fwhm
    }
}

/// Absorption Lorentzian a (w/2)^2 / ((x - c)^2 + (w/2)^2) and its analytic
/// field derivative for the differential kind.
fn lorentzian(kind: SpectrumKind, x: f64, c: f64, w: f64, a: f64) -> f64 {
    let q = (0.5 * w).powi(2);
    let d = x - c;
    let den = d * d + q;
    match kind {
        SpectrumKind::Absorption => a * q / den,
        SpectrumKind::Differential => -2.0 * a * q * d / (den * den),
    }
}

/// Sum the peak models (all hyperfine components) over the given field axis.
pub fn synthesize(peaks: &[PeakModel], axis: &[f64], kind: SpectrumKind) -> Result<Spectrum> {
    for p in peaks {
        p.validate()?;
    }
    let mut signal = vec![0.0; axis.len()];
    for p in peaks {
        for c in p.component_centers() {
            for (s, &x) in signal.iter_mut().zip(axis) {
                *s += lorentzian(kind, x, c, p.fwhm, p.amplitude);
            }
        }
    }
    Spectrum::new(axis.to_vec(), signal, kind)
}

/// Cumulative trapezoidal integral of a differential spectrum, anchored to
/// zero at the first sample.
pub fn integrate(s: &Spectrum) -> Result<Spectrum> {
    if s.kind != SpectrumKind::Differential {
        return Err(NvError::WrongKind {
            expected: "differential".into(),
            got: s.kind.to_string(),
        });
    }
    let mut out = Vec::with_capacity(s.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..s.len() {
        let dx = s.field_axis[i] - s.field_axis[i - 1];
        acc += 0.5 * (s.signal[i] + s.signal[i - 1]) * dx;
        out.push(acc);
    }
    Spectrum::new(s.field_axis.clone(), out, SpectrumKind::Absorption)
}

/// Fit a polynomial baseline (degree <= 3) to samples outside the peak
/// windows and subtract it everywhere.
pub fn baseline_correct(
    s: &Spectrum,
    peak_windows: &[(f64, f64)],
    degree: usize,
) -> Result<Spectrum> {
    if degree > 3 {
        return Err(NvError::InvalidParameter(format!(
            "baseline degree must be <= 3, got {degree}"
        )));
    }
    let in_window =
        |x: f64| peak_windows.iter().any(|&(lo, hi)| x >= lo.min(hi) && x <= lo.max(hi));
    let support: Vec<usize> = (0..s.len())
        .filter(|&i| !in_window(s.field_axis[i]))
        .collect();
    if support.len() < 10 {
        return Err(NvError::InsufficientBaseline(support.len()));
    }
    // Center and scale the axis for conditioning of the normal equations.
    let lo = s.field_axis[0];
    let hi = s.field_axis[s.len() - 1];
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let scaled = |x: f64| (x - mid) / half;

    let ncoef = degree + 1;
    let mut design = DMatrix::<f64>::zeros(support.len(), ncoef);
    let mut rhs = DVector::<f64>::zeros(support.len());
    for (row, &i) in support.iter().enumerate() {
        let t = scaled(s.field_axis[i]);
        let mut pw = 1.0;
        for col in 0..ncoef {
            design[(row, col)] = pw;
            pw *= t;
        }
        rhs[row] = s.signal[i];
    }
    let svd = design.svd(true, true);
    let coef = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| NvError::Malformed(format!("baseline solve failed: {e}")))?;

    let corrected: Vec<f64> = s
        .field_axis
        .iter()
        .zip(&s.signal)
        .map(|(&x, &y)| {
            let t = scaled(x);
            let mut pw = 1.0;
            let mut base = 0.0;
            for c in coef.iter() {
                base += c * pw;
                pw *= t;
            }
            y - base
        })
        .collect();
    Spectrum::new(s.field_axis.clone(), corrected, s.kind)
}

/// One fitted multiplet: shared center/width, per-component amplitudes
/// (a single shared entry under the equal-amplitude constraint).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FittedPeak {
    pub center: f64,
    pub fwhm: f64,
    pub amplitudes: Vec<f64>,
    pub hyperfine_splitting: f64,
    pub n_hyperfine: usize,
}

impl FittedPeak {
    /// Mean component amplitude.
    pub fn amplitude(&self) -> f64 {
        self.amplitudes.iter().sum::<f64>() / self.amplitudes.len() as f64
    }

    /// Total absorption area over all components.
    pub fn area(&self) -> f64 {
        let per = if self.amplitudes.len() == 1 {
            self.n_hyperfine as f64 * self.amplitudes[0]
        } else {
            self.amplitudes.iter().sum::<f64>()
        };
        std::f64::consts::FRAC_PI_2 * per * self.fwhm
    }

    fn component_centers(&self) -> Vec<f64> {
        let n = self.n_hyperfine;
        (0..n)
            .map(|k| self.center + (k as f64 - (n as f64 - 1.0) / 2.0) * self.hyperfine_splitting)
            .collect()
    }

    fn component_amplitude(&self, k: usize) -> f64 {
        if self.amplitudes.len() == 1 {
            self.amplitudes[0]
        } else {
            self.amplitudes[k]
        }
    }
}

/// Result of a multipeak fit.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FitResult {
    pub peaks: Vec<FittedPeak>,
    /// Euclidean norm of the final residual vector.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Parameter packing for the Levenberg-Marquardt solve: for each peak
/// [center, fwhm, amp...] with one amplitude under the equal constraint,
/// otherwise one per hyperfine component.
struct FitLayout {
    n_hyperfine: Vec<usize>,
    splitting: Vec<f64>,
    amps_per_peak: Vec<usize>,
}

impl FitLayout {
    fn n_params(&self) -> usize {
        self.amps_per_peak.iter().map(|&m| 2 + m).sum()
    }

    fn unpack(&self, params: &[f64]) -> Vec<FittedPeak> {
        let mut peaks = Vec::with_capacity(self.amps_per_peak.len());
        let mut off = 0;
        for (idx, &m) in self.amps_per_peak.iter().enumerate() {
            peaks.push(FittedPeak {
                center: params[off],
                fwhm: params[off + 1].abs(),
                amplitudes: params[off + 2..off + 2 + m].to_vec(),
                hyperfine_splitting: self.splitting[idx],
                n_hyperfine: self.n_hyperfine[idx],
            });
            off += 2 + m;
        }
        peaks
    }
}

/// Evaluate the model and (optionally) the analytic Jacobian at `params`.
fn eval_model(
    layout: &FitLayout,
    params: &[f64],
    axis: &[f64],
    kind: SpectrumKind,
    mut jacobian: Option<&mut DMatrix<f64>>,
) -> DVector<f64> {
    let mut model = DVector::<f64>::zeros(axis.len());
    if let Some(j) = jacobian.as_deref_mut() {
        j.fill(0.0);
    }
    let peaks = layout.unpack(params);
    let mut off = 0;
    for (pi, peak) in peaks.iter().enumerate() {
        let w = peak.fwhm.max(1e-300);
        let q = (0.5 * w).powi(2);
        let centers = peak.component_centers();
        for (k, &ck) in centers.iter().enumerate() {
            let a = peak.component_amplitude(k);
            let a_col = off + 2 + if layout.amps_per_peak[pi] == 1 { 0 } else { k };
            for (row, &x) in axis.iter().enumerate() {
                let d = x - ck;
                let den = d * d + q;
                let (value, d_da, d_dc, d_dw) = match kind {
                    SpectrumKind::Absorption => {
                        let u = q / den;
                        let v = a * u;
                        let dc = a * q * 2.0 * d / (den * den);
                        let dw = a * d * d / (den * den) * (0.5 * w);
                        (v, u, dc, dw)
                    }
                    SpectrumKind::Differential => {
                        let den3 = den * den * den;
                        let v = -2.0 * a * q * d / (den * den);
                        let da = -2.0 * q * d / (den * den);
                        let dc = 2.0 * a * q * (q - 3.0 * d * d) / den3;
                        let dw = -2.0 * a * d * (d * d - q) / den3 * (0.5 * w);
                        (v, da, dc, dw)
                    }
                };
                model[row] += value;
                if let Some(j) = jacobian.as_deref_mut() {
                    j[(row, off)] += d_dc;
                    j[(row, off + 1)] += d_dw;
                    j[(row, a_col)] += d_da;
                }
            }
        }
        off += 2 + layout.amps_per_peak[pi];
    }
    model
}

/// Maximum Levenberg-Marquardt iterations.
pub const FIT_MAX_ITERATIONS: usize = 200;
/// Relative gradient tolerance for convergence.
pub const FIT_GRADIENT_TOL: f64 = 1e-10;

/// Nonlinear least-squares fit of a sum of Lorentzian multiplets by damped
/// iterative descent (Levenberg-Marquardt) with an analytic Jacobian.
///
/// With `equal_amplitude` every hyperfine component of a multiplet shares one
/// amplitude; otherwise each component amplitude is free. Non-convergence is
/// reported through `FitResult::converged` with the best parameters so far.
pub fn fit_multipeak(
    s: &Spectrum,
    initial: &[PeakModel],
    equal_amplitude: bool,
) -> Result<FitResult> {
    if initial.is_empty() {
        return Err(NvError::InvalidParameter("need at least one initial peak".into()));
    }
    let (lo, hi) = (s.field_axis[0], s.field_axis[s.len() - 1]);
    for p in initial {
        p.validate()?;
        if p.center < lo || p.center > hi {
            return Err(NvError::InvalidParameter(format!(
                "initial center {} outside the axis span [{lo}, {hi}]",
                p.center
            )));
        }
    }

    let layout = FitLayout {
        n_hyperfine: initial.iter().map(|p| p.n_hyperfine).collect(),
        splitting: initial.iter().map(|p| p.hyperfine_splitting).collect(),
        amps_per_peak: initial
            .iter()
            .map(|p| if equal_amplitude { 1 } else { p.n_hyperfine })
            .collect(),
    };
    let mut params = Vec::with_capacity(layout.n_params());
    for p in initial {
        params.push(p.center);
        params.push(p.fwhm);
        let m = if equal_amplitude { 1 } else { p.n_hyperfine };
        params.extend(std::iter::repeat_n(p.amplitude, m));
    }

    let npar = layout.n_params();
    let npts = s.len();
    let y = DVector::from_column_slice(&s.signal);
    let mut jac = DMatrix::<f64>::zeros(npts, npar);

    let mut model = eval_model(&layout, &params, &s.field_axis, s.kind, Some(&mut jac));
    let mut residual = &y - &model;
    let mut cost = residual.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..FIT_MAX_ITERATIONS {
        iterations = iter + 1;
        let jt = jac.transpose();
        let gradient = &jt * &residual;
        if gradient.amax() <= FIT_GRADIENT_TOL * (1.0 + cost) {
            converged = true;
            break;
        }
        let jtj = &jt * &jac;
        let mut accepted = false;
        for _ in 0..20 {
            let mut damped = jtj.clone();
            for i in 0..npar {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-30);
            }
            let step = match damped.clone().lu().solve(&gradient) {
                Some(st) => st,
                None => break,
            };
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, d)| p + d).collect();
            let trial_model = eval_model(&layout, &trial, &s.field_axis, s.kind, None);
            let trial_res = &y - &trial_model;
            let trial_cost = trial_res.norm_squared();
            if trial_cost < cost {
                // Relative step below tolerance on every parameter means the
                // iteration is stationary.
                let stationary = step
                    .iter()
                    .zip(&trial)
                    .all(|(d, p)| d.abs() <= 1e-10 * (p.abs() + 1e-300));
                params = trial;
                let cost_drop = (cost - trial_cost) / (cost + 1e-300);
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-14);
                accepted = true;
                if stationary || cost_drop < 1e-14 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // Damping exhausted: no descent direction improves the cost, so
            // the iterate is a numerical stationary point.
            converged = true;
            break;
        }
        model = eval_model(&layout, &params, &s.field_axis, s.kind, Some(&mut jac));
        residual = &y - &model;
        cost = residual.norm_squared();
        if converged {
            break;
        }
    }
    if !converged {
        let gradient = jac.transpose() * &residual;
        converged = gradient.amax() <= FIT_GRADIENT_TOL * (1.0 + cost);
    }

    Ok(FitResult {
        peaks: layout.unpack(&params),
        residual_norm: cost.sqrt(),
        iterations,
        converged,
    })
}

/// Spin polarization recovered from an ESR peak area via the reference chain
/// S_z = (A_ij / C_ij) * (ref_pol / ref_area).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PolarizationEstimate {
    pub value: f64,
    pub area: f64,
    pub coupling: f64,
    pub reference_area: f64,
    pub reference_polarization: f64,
}

pub fn extract_polarization(
    area: f64,
    coupling: f64,
    ref_area: f64,
    ref_pol: f64,
) -> Result<PolarizationEstimate> {
    if !(coupling > 0.0) {
        return Err(NvError::InvalidParameter(format!(
            "coupling must be positive, got {coupling}"
        )));
    }
    if ref_area == 0.0 {
        return Err(NvError::InvalidParameter("reference area must be nonzero".into()));
    }
    Ok(PolarizationEstimate {
        value: (area / coupling) * (ref_pol / ref_area),
        area,
        coupling,
        reference_area: ref_area,
        reference_polarization: ref_pol,
    })
}

/// Field spacing of adjacent hyperfine lines for a hyperfine constant in Hz:
/// |A| h / (g mu_B).
pub fn hyperfine_field_spacing(a_hz: f64, g_factor: f64) -> f64 {
    a_hz.abs() / gyromagnetic_ratio(g_factor)
}

/// T2* upper bound from a fitted field-domain linewidth:
/// T2* = 1 / (pi df), df = fwhm g mu_B / h.
pub fn linewidth_to_t2star(fwhm_tesla: f64, g_factor: f64) -> f64 {
    1.0 / (std::f64::consts::PI * fwhm_tesla * gyromagnetic_ratio(g_factor))
}

/// Local extrema of the 5-sample-smoothed curve, used to seed CLI fits:
/// each extremum becomes a single Lorentzian with fwhm of 3 sample spacings.
pub fn auto_initial_peaks(s: &Spectrum, threshold_frac: f64) -> Vec<PeakModel> {
    let n = s.len();
    let window = 5usize;
    let half = window / 2;
    let smoothed: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            s.signal[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let max_abs = smoothed.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if max_abs == 0.0 {
        return Vec::new();
    }
    let dx = (s.field_axis[n - 1] - s.field_axis[0]) / (n as f64 - 1.0);
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        let v = smoothed[i];
        if v.abs() < threshold_frac * max_abs {
            continue;
        }
        let is_max = v > 0.0 && v >= smoothed[i - 1] && v > smoothed[i + 1];
        let is_min = v < 0.0 && v <= smoothed[i - 1] && v < smoothed[i + 1];
        if is_max || is_min {
            peaks.push(PeakModel::single(s.field_axis[i], 3.0 * dx, s.signal[i]));
        }
    }
    peaks
}
