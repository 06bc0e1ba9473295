use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("pole of the gamma function at z = {0}")]
    Pole(Complex64),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("integration failed at x = {x}: {reason}")]
    IntegrationFailure { x: f64, reason: String },
    #[error("blow-up at x = {x}: |phi'| = {dphi}")]
    BlowUp { x: f64, dphi: f64 },
    #[error("inconsistent crossing at x = {x}: phi' = {dphi}")]
    InconsistentCrossing { x: f64, dphi: f64 },
    #[error("h is singular at x = {x} (phi' = 1)")]
    HSingular { x: f64 },
    #[error("singular coefficient: {0}")]
    Singular(String),
    #[error("not in the asymptotic regime: mean slope {mean_slope} on the last window")]
    NotAsymptotic { mean_slope: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("classification conflict: {0}")]
    ClassificationConflict(String),
    #[error("invalid bracket: {0}")]
    Bracketing(String),
    #[error("zero of h on the integration path near tau = {tau}")]
    PathSingularity { tau: f64 },
    #[error("ill-conditioned: {0}")]
    Conditioning(String),
}

pub type Result<T> = std::result::Result<T, Error>;
