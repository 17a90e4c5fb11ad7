use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid jump law: {0}")]
    InvalidLaw(String),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("index {index} out of range (expected < {bound})")]
    OutOfRange { index: usize, bound: usize },

    #[error("quadrature did not converge on [{a}, {b}]: estimated error {error:e} after {intervals} intervals")]
    Quadrature {
        a: f64,
        b: f64,
        error: f64,
        intervals: usize,
    },

    #[error("root bracketing failed for u = {target}: {detail}")]
    Bracket { target: f64, detail: String },

    #[error("reduced ODE identity failed: {0}")]
    Identity(String),

    #[error("resonant indicial roots (rho2 = {rho2}); logarithmic Frobenius case is not supported")]
    Resonance { rho2: f64 },

    #[error("theorem preconditions not met: {0}")]
    Gate(String),

    #[error("tail fit needs at least 3 points above the noise floor, got {0}")]
    TooFewPoints(usize),

    #[error("scenario config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
