//! Seven-level rate model between spin-mixed eigenstates: rate-matrix
//! assembly, thermally-corrected steady state, and time evolution.
//!
//! State labels follow the level diagram: 1..3 ground triplet, 4..6 excited
//! triplet (each ordered by ascending energy within the manifold), 7 the
//! metastable singlet. Internally everything is 0-based.

use nalgebra::{DMatrix, DVector};

use crate::constants::{BOLTZMANN, PLANCK, SPEED_OF_LIGHT};
use crate::spin_model::MixingMatrix;
use crate::{NvError, Result};

/// Zero-field transition rates and optical parameters of the kinetic model.
///
/// Defaults are the Robledo et al. rate set: k0_41,52,63 = 62.7 MHz,
/// k0_47,67 = 80 MHz, k0_57 = 12.97 MHz, k0_71,73 = 1.08 MHz,
/// k0_72 = 3.45 MHz, T1 = 5.5 ms, sigma = 9.3e-17 cm^2 (stored in m^2).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ZeroFieldRates {
    /// Spin-conserving radiative decay rate k0_41 = k0_52 = k0_63, Hz.
    pub k_radiative: f64,
    /// Intersystem crossing from the m_s = +/-1 excited states, k0_47 = k0_67, Hz.
    pub k_isc_pm: f64,
    /// Intersystem crossing from the m_s = 0 excited state, k0_57, Hz.
    pub k_isc_0: f64,
    /// Singlet decay into the m_s = +/-1 ground states, k0_71 = k0_73, Hz.
    pub k_singlet_pm: f64,
    /// Singlet decay into the m_s = 0 ground state, k0_72, Hz.
    pub k_singlet_0: f64,
    /// Longitudinal relaxation time T1, s.
    pub t1: f64,
    /// Absorption cross-section under 532 nm illumination, m^2.
    pub sigma: f64,
    /// Pump wavelength, m.
    pub wavelength: f64,
}

impl Default for ZeroFieldRates {
    fn default() -> Self {
        Self {
            k_radiative: 62.7e6,
            k_isc_pm: 80e6,
            k_isc_0: 12.97e6,
            k_singlet_pm: 1.08e6,
            k_singlet_0: 3.45e6,
            t1: 5.5e-3,
            sigma: 9.3e-21,
            wavelength: 532e-9,
        }
    }
}

impl ZeroFieldRates {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("k_radiative", self.k_radiative),
            ("k_isc_pm", self.k_isc_pm),
            ("k_isc_0", self.k_isc_0),
            ("k_singlet_pm", self.k_singlet_pm),
            ("k_singlet_0", self.k_singlet_0),
            ("t1", self.t1),
            ("sigma", self.sigma),
            ("wavelength", self.wavelength),
        ];
        for (name, v) in fields {
            if !(v > 0.0) {
                return Err(NvError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Dimensionless optical pumping strength beta = sigma * I / (4 k_r h nu).
///
/// The factor 4 accounts for pumping only one of the four NV orientations.
pub fn pumping_beta(laser_intensity: f64, rates: &ZeroFieldRates) -> Result<f64> {
    rates.validate()?;
    if laser_intensity < 0.0 {
        return Err(NvError::InvalidParameter(format!(
            "laser intensity must be >= 0, got {laser_intensity}"
        )));
    }
    let nu = SPEED_OF_LIGHT / rates.wavelength;
    Ok(rates.sigma * laser_intensity / (4.0 * rates.k_radiative * PLANCK * nu))
}

/// Zero-field rate table k0(p -> q), 0-based 7x7, at pumping strength beta.
///
/// Labels follow the mixing-basis order (m_s = 0, -1, +1) per manifold, so
/// the spin-selective rates attach to the states by physical role: strong
/// intersystem crossing from the m_s = +/-1 excited states (labels 5, 6),
/// preferential singlet decay into the m_s = 0 ground state (label 1). In
/// the energy-ordered eigenstate labels above the anti-crossing this
/// reproduces the conventional subscripts (k_47 = k_67, k_72, ...).
pub fn zero_field_rate_table(rates: &ZeroFieldRates, beta: f64) -> [[f64; 7]; 7] {
    let mut k0 = [[0.0; 7]; 7];
    // Spin-conserving radiative decay 4->1, 5->2, 6->3.
    k0[3][0] = rates.k_radiative;
    k0[4][1] = rates.k_radiative;
    k0[5][2] = rates.k_radiative;
    // Intersystem crossing into the singlet: strong from m_s = +/-1, weak
    // from m_s = 0.
    k0[4][6] = rates.k_isc_pm;
    k0[5][6] = rates.k_isc_pm;
    k0[3][6] = rates.k_isc_0;
    // Singlet decay back to the ground manifold, preferring m_s = 0.
    k0[6][1] = rates.k_singlet_pm;
    k0[6][2] = rates.k_singlet_pm;
    k0[6][0] = rates.k_singlet_0;
    // Optical pumping 1->4, 2->5, 3->6.
    let pump = beta * rates.k_radiative;
    k0[0][3] = pump;
    k0[1][4] = pump;
    k0[2][5] = pump;
    // Ground-state longitudinal relaxation, 1<->2 and 1<->3.
    let relax = 1.0 / (2.0 * rates.t1);
    k0[0][1] = relax;
    k0[1][0] = relax;
    k0[0][2] = relax;
    k0[2][0] = relax;
    k0
}

/// 7x7 table of transition rates between spin-mixed eigenstates, k(i -> j),
/// plus the pumping strength it was assembled at and an optional thermal
/// drive vector for inhomogeneous time evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    /// k[i][j] = rate of transfer from eigenstate i to eigenstate j, Hz.
    pub k: [[f64; 7]; 7],
    /// Dimensionless pumping strength.
    pub beta: f64,
    /// Inhomogeneous drive b in dn/dt = A n - b; zero unless set via
    /// [`RateMatrix::with_thermal_drive`].
    pub thermal_drive: [f64; 7],
}

/// Block-diagonal extension of the manifold mixing tables to all 7 levels:
/// ground 3x3, excited 3x3, singlet = 1.
fn alpha_sq_7(mix_gs: &MixingMatrix, mix_es: &MixingMatrix) -> [[f64; 7]; 7] {
    let mut a = [[0.0; 7]; 7];
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] = mix_gs.alpha_sq[i][j];
            a[i + 3][j + 3] = mix_es.alpha_sq[i][j];
        }
    }
    a[6][6] = 1.0;
    a
}

/// Assemble k_ij(B) = sum_pq |alpha_ip|^2 |alpha_jq|^2 k0_pq from the ground
/// and excited mixing tables at a common field point.
pub fn assemble_rate_matrix(
    mix_gs: &MixingMatrix,
    mix_es: &MixingMatrix,
    rates: &ZeroFieldRates,
    beta: f64,
) -> Result<RateMatrix> {
    rates.validate()?;
    if beta < 0.0 {
        return Err(NvError::InvalidParameter(format!(
            "beta must be >= 0, got {beta}"
        )));
    }
    if mix_gs.stochasticity_defect() > 1e-8 || mix_es.stochasticity_defect() > 1e-8 {
        return Err(NvError::DimensionMismatch(
            "mixing matrices are not doubly stochastic; manifolds mismatched?".into(),
        ));
    }
    let a = alpha_sq_7(mix_gs, mix_es);
    let k0 = zero_field_rate_table(rates, beta);
    let mut k = [[0.0; 7]; 7];
    // The blocks of alpha are disjoint, so only terms with p in the block of i
    // and q in the block of j survive; summing over all (p, q) keeps the code
    // identical to the defining double sum.
    for i in 0..7 {
        for j in 0..7 {
            if i == j {
                continue;
            }
            let mut acc = 0.0;
            for p in 0..7 {
                if a[i][p] == 0.0 {
                    continue;
                }
                for q in 0..7 {
                    acc += a[i][p] * a[j][q] * k0[p][q];
                }
            }
            k[i][j] = acc;
        }
    }
    Ok(RateMatrix {
        k,
        beta,
        thermal_drive: [0.0; 7],
    })
}

impl RateMatrix {
    /// The same rate matrix with the pumping switched off (beta = 0).
    ///
    /// Only the ground-to-excited block carries the pumping rates, so the
    /// dark matrix is obtained by zeroing it.
    pub fn dark(&self) -> RateMatrix {
        let mut k = self.k;
        for row in k.iter_mut().take(3) {
            for entry in row.iter_mut().skip(3).take(3) {
                *entry = 0.0;
            }
        }
        RateMatrix {
            k,
            beta: 0.0,
            thermal_drive: [0.0; 7],
        }
    }

    /// Generator A of dn/dt = A n: A[i][j] = k(j -> i) off-diagonal,
    /// A[j][j] = -sum_i k(j -> i). Columns sum to zero exactly.
    pub fn generator(&self) -> DMatrix<f64> {
        let mut a = DMatrix::<f64>::zeros(7, 7);
        for j in 0..7 {
            let mut out = 0.0;
            for i in 0..7 {
                if i != j {
                    a[(i, j)] = self.k[j][i];
                    out += self.k[j][i];
                }
            }
            a[(j, j)] = -out;
        }
        a
    }

    /// Attach the thermal drive b = A(beta = 0) . n_dark, making the
    /// thermally-corrected steady state the fixed point of the evolution.
    pub fn with_thermal_drive(mut self, n_dark: &Populations) -> RateMatrix {
        let a_dark = self.dark().generator();
        let b = &a_dark * DVector::from_column_slice(&n_dark.n);
        // dn/dt = A n - b with b = A(0) n_dark.
        for i in 0..7 {
            self.thermal_drive[i] = b[i];
        }
        self
    }

    /// Largest total outflow rate; bounds the stable explicit step size.
    pub fn max_rate(&self) -> f64 {
        (0..7)
            .map(|i| self.k[i].iter().sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Populations of the seven levels, normalized to sum 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Populations {
    pub n: [f64; 7],
}

impl Populations {
    pub fn new(n: [f64; 7]) -> Result<Self> {
        let sum: f64 = n.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(NvError::InvalidParameter(format!(
                "populations must sum to 1, got {sum}"
            )));
        }
        if n.iter().any(|&x| x < -1e-12) {
            return Err(NvError::InvalidParameter(
                "populations must be non-negative".into(),
            ));
        }
        Ok(Self { n })
    }

    pub fn sum(&self) -> f64 {
        self.n.iter().sum()
    }
}

/// Boltzmann populations over the three ground eigenenergies; excited and
/// singlet levels are empty (all spins in the ground manifold at room
/// temperature).
pub fn thermal_populations(ground_energies: &[f64], temperature: f64) -> Result<Populations> {
    if ground_energies.len() != 3 {
        return Err(NvError::DimensionMismatch(format!(
            "need exactly 3 ground energies, got {}",
            ground_energies.len()
        )));
    }
    if !(temperature > 0.0) {
        return Err(NvError::InvalidParameter(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let e_min = ground_energies.iter().cloned().fold(f64::MAX, f64::min);
    let mut n = [0.0; 7];
    let mut z = 0.0;
    for (i, &e) in ground_energies.iter().enumerate() {
        let w = (-(PLANCK * (e - e_min)) / (BOLTZMANN * temperature)).exp();
        n[i] = w;
        z += w;
    }
    for x in n.iter_mut().take(3) {
        *x /= z;
    }
    Populations::new(n)
}

/// Solve the thermally-corrected steady state A(beta) n = A(0) n_dark with
/// one rate equation replaced by the normalization sum n_i = 1.
pub fn steady_state(rm: &RateMatrix, n_dark: &Populations) -> Result<Populations> {
    let a = rm.generator();
    let a_dark = rm.dark().generator();
    let mut rhs = &a_dark * DVector::from_column_slice(&n_dark.n);

    // Replace the last (redundant) equation by the normalization; any row
    // works for a consistent system.
    let mut sys = a;
    for j in 0..7 {
        sys[(6, j)] = 1.0;
    }
    rhs[6] = 1.0;

    // Equilibrate: rate rows span ~1e8 Hz down to the 1/T1 scale; scaling
    // each row by its largest entry keeps the LU solve well conditioned.
    for i in 0..7 {
        let scale = (0..7).map(|j| sys[(i, j)].abs()).fold(0.0, f64::max);
        if scale > 0.0 {
            for j in 0..7 {
                sys[(i, j)] /= scale;
            }
            rhs[i] /= scale;
        }
    }

    let lu = sys.lu();
    let sol = lu.solve(&rhs).ok_or(NvError::SingularSystem)?;
    let mut n = [0.0; 7];
    for i in 0..7 {
        n[i] = sol[i];
    }
    Populations::new(n)
}

/// Integrate dn/dt = A n - b by fixed-step classical RK4.
///
/// `dt` must resolve the fastest rate (dt * max_rate < 0.1, checked). The
/// drive b is the rate matrix's thermal drive (zero unless attached).
pub fn time_evolution(
    rm: &RateMatrix,
    n0: &Populations,
    t_final: f64,
    dt: f64,
) -> Result<Populations> {
    if t_final < 0.0 || !(dt > 0.0) {
        return Err(NvError::InvalidParameter(
            "t_final must be >= 0 and dt > 0".into(),
        ));
    }
    let stiffness = dt * rm.max_rate();
    if stiffness >= 0.1 {
        return Err(NvError::UnstableStep(stiffness));
    }
    let a = rm.generator();
    let b = DVector::from_column_slice(&rm.thermal_drive);
    let deriv = |n: &DVector<f64>| -> DVector<f64> { &a * n - &b };

    let mut n = DVector::from_column_slice(&n0.n);
    let mut t = 0.0;
    while t < t_final {
        let h = dt.min(t_final - t);
        let k1 = deriv(&n);
        let k2 = deriv(&(&n + &k1 * (h / 2.0)));
        let k3 = deriv(&(&n + &k2 * (h / 2.0)));
        let k4 = deriv(&(&n + &k3 * h));
        n += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        t += h;
    }
    let mut out = [0.0; 7];
    for i in 0..7 {
        out[i] = n[i];
    }
    Populations::new(out)
}

/// Spin polarization S_z^{ij} = (n_i - n_j) / sum_p n_p with 1-based labels.
pub fn spin_polarization(n: &Populations, i: usize, j: usize) -> Result<f64> {
    if i == j || !(1..=7).contains(&i) || !(1..=7).contains(&j) {
        return Err(NvError::IndexError(format!(
            "spin polarization needs distinct labels in 1..7, got ({i}, {j})"
        )));
    }
    Ok((n.n[i - 1] - n.n[j - 1]) / n.sum())
}

/// Amplification ratio |optical / thermal| of two polarizations.
pub fn amplification(optical_pol: f64, thermal_pol: f64) -> Result<f64> {
    if thermal_pol == 0.0 {
        return Err(NvError::InvalidParameter(
            "thermal polarization is zero; amplification undefined".into(),
        ));
    }
    Ok((optical_pol / thermal_pol).abs())
}
