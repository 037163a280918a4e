//! Resonant-field search at fixed microwave frequency, microwave coupling
//! factors, and the sample-rotation geometry mapping rotation angle to the
//! four NV-axis misalignment angles.

use nalgebra::{Complex, DMatrix};

use crate::spin_model::{
    build_hamiltonian, eigensolve, spin_operators, EigenSystem, FieldVector, Manifold,
    SpinSystemParams,
};
use crate::{NvError, Result};

type C64 = Complex<f64>;

/// Default root-search window, T.
pub const DEFAULT_WINDOW: (f64, f64) = (0.05, 0.7);
/// Bracketing grid spacing for the root search, T.
pub const ROOT_GRID_STEP: f64 = 0.5e-3;
/// Bisection tolerance on the resonant field, T.
pub const ROOT_TOL: f64 = 1e-7;
/// Roots closer than this are merged and reported once, T.
pub const ROOT_MERGE_DISTANCE: f64 = 1e-3;
/// Default microwave drive axis in the NV frame: perpendicular to the x-z
/// plane that contains both the static field and the NV axis.
pub const DEFAULT_DRIVE_AXIS: [f64; 3] = [0.0, 1.0, 0.0];

/// A ground-manifold transition identified by its eigenstate labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TransitionSpec {
    pub lower: u8,
    pub upper: u8,
}

/// Single- vs double-quantum character of a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionKind {
    Sqt,
    Dqt,
}

impl TransitionSpec {
    pub fn new(lower: u8, upper: u8) -> Result<Self> {
        if !(1..=3).contains(&lower) || !(1..=3).contains(&upper) || lower >= upper {
            return Err(NvError::InvalidParameter(format!(
                "transition labels must satisfy 1 <= lower < upper <= 3, got ({lower}, {upper})"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// The {1,3} pair is the double-quantum transition.
    pub fn kind(&self) -> TransitionKind {
        if (self.lower, self.upper) == (1, 3) {
            TransitionKind::Dqt
        } else {
            TransitionKind::Sqt
        }
    }

    /// All three ground-manifold transitions: (1,2), (2,3), (1,3).
    pub fn all() -> [TransitionSpec; 3] {
        [
            TransitionSpec { lower: 1, upper: 2 },
            TransitionSpec { lower: 2, upper: 3 },
            TransitionSpec { lower: 1, upper: 3 },
        ]
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.lower, self.upper)
    }
}

impl std::fmt::Display for TransitionSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.lower, self.upper)
    }
}

/// One resonance of a transition at a given orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceResult {
    /// Resonant field, T.
    pub field: f64,
    /// Misalignment angle, rad.
    pub theta: f64,
    pub transition: TransitionSpec,
    /// Relative microwave coupling C_ij.
    pub coupling: f64,
    /// Microwave frequency the field was solved for, Hz.
    pub frequency: f64,
}

/// E_upper - E_lower of the electron-only ground Hamiltonian, Hz.
pub fn transition_frequency(
    params: &SpinSystemParams,
    field: &FieldVector,
    t: &TransitionSpec,
) -> Result<f64> {
    let h = build_hamiltonian(params, field, Manifold::Ground, false)?;
    let eig = eigensolve(&h)?;
    Ok(eig.energies[t.upper as usize - 1] - eig.energies[t.lower as usize - 1])
}

/// All fields in `window` where the transition frequency equals `f_mw`.
///
/// Sign changes are bracketed on a 0.5 mT grid and refined by bisection to
/// 1e-7 T; roots closer than 1 mT are merged. An empty list is a valid
/// outcome.
pub fn resonant_fields(
    params: &SpinSystemParams,
    f_mw: f64,
    theta: f64,
    t: &TransitionSpec,
    window: (f64, f64),
) -> Result<Vec<f64>> {
    if !(f_mw > 0.0) {
        return Err(NvError::InvalidParameter(format!(
            "microwave frequency must be positive, got {f_mw}"
        )));
    }
    if !(0.0..=1.0).contains(&window.0) || !(0.0..=1.0).contains(&window.1) || window.0 >= window.1
    {
        return Err(NvError::InvalidParameter(format!(
            "window must be an ordered pair within [0, 1 T], got {window:?}"
        )));
    }
    let objective = |b: f64| -> Result<f64> {
        let field = FieldVector::new(b, theta)?;
        Ok(transition_frequency(params, &field, t)? - f_mw)
    };

    let n_steps = ((window.1 - window.0) / ROOT_GRID_STEP).ceil() as usize;
    let mut roots = Vec::new();
    let mut b_prev = window.0;
    let mut f_prev = objective(b_prev)?;
    for k in 1..=n_steps {
        let b_next = (window.0 + k as f64 * ROOT_GRID_STEP).min(window.1);
        let f_next = objective(b_next)?;
        if f_prev == 0.0 {
            roots.push(b_prev);
        } else if f_prev * f_next < 0.0 {
            // Bisection refinement.
            let (mut lo, mut hi) = (b_prev, b_next);
            let mut f_lo = f_prev;
            while hi - lo > ROOT_TOL {
                let mid = 0.5 * (lo + hi);
                let f_mid = objective(mid)?;
                if f_mid == 0.0 {
                    lo = mid;
                    hi = mid;
                } else if f_lo * f_mid < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    f_lo = f_mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        b_prev = b_next;
        f_prev = f_next;
    }
    if f_prev == 0.0 {
        roots.push(b_prev);
    }
    // Merge near-degenerate roots.
    roots.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::new();
    for r in roots {
        match merged.last() {
            Some(&last) if r - last < ROOT_MERGE_DISTANCE => {}
            _ => merged.push(r),
        }
    }
    Ok(merged)
}

/// Relative microwave coupling C = |<i|S.b|j>|^2 / |<1_0|Sx|2_0>|^2,
/// normalized so the theta = 0, |1><->|2> coupling is 1.
pub fn mw_coupling(eig: &EigenSystem, t: &TransitionSpec, drive_axis: [f64; 3]) -> Result<f64> {
    if eig.dim() != 3 {
        return Err(NvError::DimensionMismatch(format!(
            "coupling needs a 3x3 electron-only eigen-system, got dim {}",
            eig.dim()
        )));
    }
    let norm = (drive_axis[0].powi(2) + drive_axis[1].powi(2) + drive_axis[2].powi(2)).sqrt();
    if norm == 0.0 {
        return Err(NvError::InvalidParameter("drive axis must be nonzero".into()));
    }
    let [sx, sy, sz] = spin_operators(1)?;
    let drive: DMatrix<C64> = sx * C64::new(drive_axis[0] / norm, 0.0)
        + sy * C64::new(drive_axis[1] / norm, 0.0)
        + sz * C64::new(drive_axis[2] / norm, 0.0);
    let vi = eig.vectors.column(t.lower as usize - 1);
    let vj = eig.vectors.column(t.upper as usize - 1);
    let element = (vi.adjoint() * &drive * vj)[(0, 0)];
    // Reference |<m_s=0|Sx|m_s=-1>|^2 = 1/2.
    Ok(element.norm_sqr() / 0.5)
}

/// Coupling with the default drive axis (perpendicular to the static-field /
/// NV-axis plane).
pub fn mw_coupling_default(eig: &EigenSystem, t: &TransitionSpec) -> Result<f64> {
    mw_coupling(eig, t, DEFAULT_DRIVE_AXIS)
}

/// Mounting geometry of the (100) crystal: glued at 45 degrees to the sample
/// tube so a <110> crystal axis lies along the tube, which is rotated about
/// the lab vertical while the static field stays in the (110) plane.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CrystalMount {
    /// Rotation about the tube axis, rad.
    pub rotation_angle: f64,
    /// Tilt of the crystal on the tube, rad; fixed to 45 degrees.
    pub mount_tilt: f64,
}

impl CrystalMount {
    pub fn new(rotation_angle: f64) -> Self {
        Self {
            rotation_angle,
            mount_tilt: std::f64::consts::FRAC_PI_4,
        }
    }
}

/// The four <111> NV axes, one representative per axis.
const NV_AXES: [[f64; 3]; 4] = [
    [1.0, 1.0, 1.0],
    [1.0, -1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
];

/// Angles between the static field and the four NV axes for a given tube
/// rotation, folded into [0, pi/2].
///
/// With the 45-degree mount the tube axis is the crystal [110]; the field is
/// perpendicular to the tube, so in crystal coordinates it sweeps the plane
/// spanned by [001] and [-110] as the tube rotates.
pub fn nv_orientation_angles(mount: &CrystalMount) -> [f64; 4] {
    let (s, c) = mount.rotation_angle.sin_cos();
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let b_dir = [-s * inv_sqrt2, s * inv_sqrt2, c];
    let inv_sqrt3 = 1.0 / 3f64.sqrt();
    let mut angles = [0.0; 4];
    for (k, axis) in NV_AXES.iter().enumerate() {
        let dot: f64 = b_dir
            .iter()
            .zip(axis.iter())
            .map(|(b, a)| b * a * inv_sqrt3)
            .sum();
        // Folding: the Hamiltonian is invariant under axis inversion.
        angles[k] = dot.abs().clamp(0.0, 1.0).acos();
    }
    angles
}

/// Resonances with couplings for one orientation and transition.
pub fn find_resonances(
    params: &SpinSystemParams,
    f_mw: f64,
    theta: f64,
    t: &TransitionSpec,
    window: (f64, f64),
) -> Result<Vec<ResonanceResult>> {
    let fields = resonant_fields(params, f_mw, theta, t, window)?;
    let mut out = Vec::with_capacity(fields.len());
    for b in fields {
        let field = FieldVector::new(b, theta)?;
        let h = build_hamiltonian(params, &field, Manifold::Ground, false)?;
        let eig = eigensolve(&h)?;
        let coupling = mw_coupling_default(&eig, t)?;
        out.push(ResonanceResult {
            field: b,
            theta,
            transition: *t,
            coupling,
            frequency: f_mw,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_model::mixing_at_field;
    use approx::assert_relative_eq;

    const F_MW: f64 = 9.43e9;

    #[test]
    fn transition_kinds() {
        assert_eq!(TransitionSpec::new(1, 2).unwrap().kind(), TransitionKind::Sqt);
        assert_eq!(TransitionSpec::new(2, 3).unwrap().kind(), TransitionKind::Sqt);
        assert_eq!(TransitionSpec::new(1, 3).unwrap().kind(), TransitionKind::Dqt);
        assert!(TransitionSpec::new(2, 1).is_err());
        assert!(TransitionSpec::new(0, 2).is_err());
    }

    #[test]
    fn aligned_frequency_closed_form() {
        let params = SpinSystemParams::default();
        let field = FieldVector::new(0.2, 0.0).unwrap();
        // Above the GSLAC: upper SQT branch is D + gamma B.
        let f = transition_frequency(&params, &field, &TransitionSpec::new(2, 3).unwrap()).unwrap();
        assert_relative_eq!(f, params.d_gs + params.gamma() * 0.2, max_relative = 1e-6);
    }

    #[test]
    fn zero_field_frequencies_equal_dgs() {
        let params = SpinSystemParams::default();
        let field = FieldVector::new(0.0, 0.0).unwrap();
        for pair in [(1, 2), (1, 3)] {
            let t = TransitionSpec::new(pair.0, pair.1).unwrap();
            let f = transition_frequency(&params, &field, &t).unwrap();
            assert_relative_eq!(f, 2.87e9, max_relative = 1e-10);
        }
    }

    #[test]
    fn frequency_lipschitz_in_field() {
        let params = SpinSystemParams::default();
        let t = TransitionSpec::new(1, 2).unwrap();
        let delta = 1e-4;
        let bound = 2.0 * params.gamma() * delta;
        for &theta in &[0.0f64, 0.35, 1.2] {
            for &b in &[0.05, 0.1024, 0.3, 0.65] {
                let f1 =
                    transition_frequency(&params, &FieldVector::new(b, theta).unwrap(), &t).unwrap();
                let f2 =
                    transition_frequency(&params, &FieldVector::new(b + delta, theta).unwrap(), &t)
                        .unwrap();
                assert!((f2 - f1).abs() < bound);
            }
        }
    }

    #[test]
    fn aligned_sqt_roots_match_closed_form() {
        let params = SpinSystemParams::default();
        let gamma = params.gamma();
        let roots12 = resonant_fields(
            &params,
            F_MW,
            0.0,
            &TransitionSpec::new(1, 2).unwrap(),
            DEFAULT_WINDOW,
        )
        .unwrap();
        assert_eq!(roots12.len(), 1);
        assert!((roots12[0] - (F_MW + params.d_gs) / gamma).abs() < 1e-6);

        let roots23 = resonant_fields(
            &params,
            F_MW,
            0.0,
            &TransitionSpec::new(2, 3).unwrap(),
            DEFAULT_WINDOW,
        )
        .unwrap();
        assert_eq!(roots23.len(), 1);
        assert!((roots23[0] - (F_MW - params.d_gs) / gamma).abs() < 1e-6);
    }

    #[test]
    fn dqt_root_near_half_zeeman_span() {
        let params = SpinSystemParams::default();
        let theta = 0.01f64.to_radians();
        let roots = resonant_fields(
            &params,
            F_MW,
            theta,
            &TransitionSpec::new(1, 3).unwrap(),
            DEFAULT_WINDOW,
        )
        .unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - F_MW / (2.0 * params.gamma())).abs() < 1e-3);
    }

    #[test]
    fn empty_window_yields_no_roots() {
        let params = SpinSystemParams::default();
        let roots = resonant_fields(
            &params,
            F_MW,
            0.0,
            &TransitionSpec::new(1, 2).unwrap(),
            (0.5, 0.7),
        )
        .unwrap();
        assert!(roots.is_empty());
    }

    #[test]
    fn roots_satisfy_resonance_condition() {
        let params = SpinSystemParams::default();
        for &theta_deg in &[0.0f64, 10.0, 35.0, 70.5] {
            let theta = theta_deg.to_radians();
            for t in TransitionSpec::all() {
                let roots = resonant_fields(&params, F_MW, theta, &t, DEFAULT_WINDOW).unwrap();
                for b in roots {
                    let f = transition_frequency(&params, &FieldVector::new(b, theta).unwrap(), &t)
                        .unwrap();
                    assert!(
                        (f - F_MW).abs() < 3e3,
                        "root {b} off resonance by {} Hz (theta {theta_deg}, {t})",
                        f - F_MW
                    );
                }
            }
        }
    }

    #[test]
    fn root_completeness_on_fine_grid() {
        // No sign change on a 0.05 mT verification grid away from reported roots.
        let params = SpinSystemParams::default();
        let theta = 20f64.to_radians();
        for t in TransitionSpec::all() {
            let roots = resonant_fields(&params, F_MW, theta, &t, DEFAULT_WINDOW).unwrap();
            let fine = 0.05e-3;
            let mut b = DEFAULT_WINDOW.0;
            let mut prev = transition_frequency(&params, &FieldVector::new(b, theta).unwrap(), &t)
                .unwrap()
                - F_MW;
            while b < DEFAULT_WINDOW.1 {
                b += fine;
                let cur =
                    transition_frequency(&params, &FieldVector::new(b, theta).unwrap(), &t).unwrap()
                        - F_MW;
                if prev * cur < 0.0 {
                    let near_reported = roots
                        .iter()
                        .any(|&r| (r - b).abs() < ROOT_MERGE_DISTANCE + fine);
                    assert!(near_reported, "unreported sign change near {b} T for {t}");
                }
                prev = cur;
            }
        }
    }

    #[test]
    fn coupling_normalization_and_selection_rule() {
        let params = SpinSystemParams::default();
        let field = FieldVector::new(0.4389, 0.0).unwrap();
        let (eig, _) = mixing_at_field(&params, &field, Manifold::Ground).unwrap();
        let c12 = mw_coupling_default(&eig, &TransitionSpec::new(1, 2).unwrap()).unwrap();
        assert_relative_eq!(c12, 1.0, max_relative = 1e-9);
        let c13 = mw_coupling_default(&eig, &TransitionSpec::new(1, 3).unwrap()).unwrap();
        assert!(c13 < 1e-10, "DQT must be forbidden at theta = 0, C = {c13:e}");
    }

    #[test]
    fn coupling_symmetric_and_dqt_allowed_off_axis() {
        let params = SpinSystemParams::default();
        let t13 = TransitionSpec::new(1, 3).unwrap();
        for &theta_deg in &[5.0f64, 20.0, 45.0, 70.0, 85.0] {
            let theta = theta_deg.to_radians();
            let roots = resonant_fields(&params, F_MW, theta, &t13, DEFAULT_WINDOW).unwrap();
            assert!(!roots.is_empty(), "no DQT resonance at theta = {theta_deg}");
            let field = FieldVector::new(roots[0], theta).unwrap();
            let (eig, _) = mixing_at_field(&params, &field, Manifold::Ground).unwrap();
            let c = mw_coupling_default(&eig, &t13).unwrap();
            assert!(c > 0.0, "DQT coupling vanishes at theta = {theta_deg}");
            // Symmetry C(i,j) = C(j,i): the drive operator is Hermitian, so
            // the swapped matrix element is the conjugate of the original.
            let [_, sy, _] = spin_operators(1).unwrap();
            let vi = eig.vectors.column(0);
            let vj = eig.vectors.column(2);
            let e_ij = (vi.adjoint() * &sy * vj)[(0, 0)].norm_sqr();
            let e_ji = (vj.adjoint() * &sy * vi)[(0, 0)].norm_sqr();
            assert_relative_eq!(e_ij, e_ji, max_relative = 1e-12);
            assert_relative_eq!(c, e_ij / 0.5, max_relative = 1e-12);
        }
    }

    #[test]
    fn coupling_rejects_zero_drive() {
        let params = SpinSystemParams::default();
        let field = FieldVector::new(0.2, 0.3).unwrap();
        let (eig, _) = mixing_at_field(&params, &field, Manifold::Ground).unwrap();
        assert!(mw_coupling(&eig, &TransitionSpec::new(1, 2).unwrap(), [0.0; 3]).is_err());
    }

    #[test]
    fn geometry_aligned_with_111() {
        // tan(phi) = sqrt(2) aligns B with a <111> axis in the (110) plane.
        let phi = 2f64.sqrt().atan();
        let angles = nv_orientation_angles(&CrystalMount::new(phi));
        let mut sorted = angles.to_vec();
        sorted.sort_by(f64::total_cmp);
        assert!(sorted[0].to_degrees() < 0.01);
        for a in &sorted[1..] {
            assert!((a.to_degrees() - 70.53).abs() < 0.01, "angle {}", a.to_degrees());
        }
    }

    #[test]
    fn geometry_field_along_001() {
        let angles = nv_orientation_angles(&CrystalMount::new(0.0));
        for a in angles {
            assert!((a.to_degrees() - 54.74).abs() < 0.01);
        }
    }

    #[test]
    fn geometry_angles_bounded_and_continuous() {
        let mut prev = nv_orientation_angles(&CrystalMount::new(0.0));
        let step = 0.01;
        let mut phi = step;
        while phi < 2.0 * std::f64::consts::PI {
            let cur = nv_orientation_angles(&CrystalMount::new(phi));
            for k in 0..4 {
                assert!((0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&cur[k]));
                assert!((cur[k] - prev[k]).abs() < 0.05, "jump at phi = {phi}");
            }
            prev = cur;
            phi += step;
        }
    }

    #[test]
    fn sqt_resonance_curves_monotone_in_theta() {
        let params = SpinSystemParams::default();
        let mut prev12 = f64::NAN;
        let mut prev23 = f64::NAN;
        for theta_deg in 0..=70 {
            let theta = (theta_deg as f64).to_radians();
            let r12 = resonant_fields(
                &params,
                F_MW,
                theta,
                &TransitionSpec::new(1, 2).unwrap(),
                DEFAULT_WINDOW,
            )
            .unwrap();
            let r23 = resonant_fields(
                &params,
                F_MW,
                theta,
                &TransitionSpec::new(2, 3).unwrap(),
                DEFAULT_WINDOW,
            )
            .unwrap();
            assert_eq!(r12.len(), 1);
            assert_eq!(r23.len(), 1);
            if !prev12.is_nan() {
                assert!(r12[0] <= prev12 + 1e-9, "1-2 branch not monotone at {theta_deg} deg");
                assert!(r23[0] >= prev23 - 1e-9, "2-3 branch not monotone at {theta_deg} deg");
            }
            prev12 = r12[0];
            prev23 = r23[0];
        }
    }
}
