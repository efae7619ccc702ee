use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("modulus must lie in the upper half-plane, got tau = {0}")]
    InvalidModulus(Complex64),

    #[error("point {z} lies within {distance:.3e} of the lattice (guard radius {guard:.3e})")]
    PoleProximity { z: Complex64, distance: f64, guard: f64 },

    #[error("integrator could not meet tolerance {tol:.1e}: {reason}")]
    StepFailure { tol: f64, reason: String },

    #[error("commutator trace drifted to {trace} (expected -2, tolerance {tol:.1e})")]
    CommutatorDrift { trace: Complex64, tol: f64 },

    #[error("calibration failed for tau = {tau}: {reason} (residual {residual:.3e})")]
    CalibrationFailure {
        tau: Complex64,
        reason: String,
        residual: f64,
    },

    #[error("invalid slope {p}/{q}: {reason}")]
    InvalidSlope { p: i64, q: i64, reason: &'static str },

    #[error("quadratic differential is zero; foliation directions are undefined")]
    ZeroDifferential,

    #[error("holonomy of the pleating curve has no hyperbolic axis (trace {0})")]
    DegenerateAxis(Complex64),

    #[error("continuation stalled at weight {t:.6} (c = {c}): {reason}")]
    ContinuationStall { t: f64, c: Complex64, reason: String },

    #[error("continuation jumped branch near weight {t:.6}: corrector moved {jump:.3e}, predictor step {step:.3e}")]
    BranchLoss { t: f64, jump: f64, step: f64 },

    #[error("Newton iteration diverged: {reason} (residual {residual:.3e})")]
    NewtonDivergence { reason: String, residual: f64 },

    #[error("grids have mismatched geometry")]
    GridMismatch,

    #[error("derivative vanishes at {0}")]
    DegenerateDerivative(Complex64),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
