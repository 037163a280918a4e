//! Simulation and analysis of NV-center electron spins in off-axis magnetic
//! fields under laser pumping.
//!
//! The crate is organized around the physical pipeline:
//!
//! * [`spin_model`] builds and diagonalizes the ground/excited spin
//!   Hamiltonians and quantifies spin mixing against the zero-field basis.
//! * [`resonance`] finds resonant fields at fixed microwave frequency,
//!   computes microwave coupling factors, and maps sample-rotation angles to
//!   NV-axis misalignment angles.
//! * [`kinetics`] assembles the seven-level rate matrix between spin-mixed
//!   eigenstates and solves the thermally-corrected steady state.
//! * [`spectra`] synthesizes, integrates, baseline-corrects, and fits
//!   multipeak Lorentzian ESR spectra, and converts peak areas to spin
//!   polarizations.
//! * [`cli`] composes the above into the `nvkin` command-line tool.

pub mod cli;
pub mod config;
pub mod constants;
pub mod kinetics;
pub mod resonance;
pub mod spectra;
pub mod spin_model;

use thiserror::Error;

/// Errors produced by the physics and analysis routines.
#[derive(Debug, Error)]
pub enum NvError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported spin quantum number {0}; only S = 1 is implemented")]
    UnsupportedSpin(u32),
    #[error("matrix is not Hermitian (max deviation {0:.3e} relative)")]
    NotHermitian(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular linear system in steady-state solve")]
    SingularSystem,
    #[error("unstable step size: dt * max_rate = {0:.3e} (must be < 0.1)")]
    UnstableStep(f64),
    #[error("index out of range: {0}")]
    IndexError(String),
    #[error("wrong spectrum kind: expected {expected}, got {got}")]
    WrongKind { expected: String, got: String },
    #[error("insufficient off-peak samples for baseline fit ({0} < 10)")]
    InsufficientBaseline(usize),
    #[error("fit did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NvError>;
