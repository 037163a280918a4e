//! Physical constants (SI, 2018 CODATA exact values where defined).

/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Bohr magneton, J/T.
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Electron gyromagnetic ratio g * mu_B / h in Hz/T.
///
/// For g = 2 this is about 27.99 GHz/T.
pub fn gyromagnetic_ratio(g_factor: f64) -> f64 {
    g_factor * BOHR_MAGNETON / PLANCK
}
