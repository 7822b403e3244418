use thiserror::Error;

/// Errors raised by transforms, operators, the time integrator and the
/// scenario layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("consistency violation: {0}")]
    Consistency(String),

    #[error("parity violation: {0}")]
    Parity(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("quadrature not converged: relative change {achieved:.3e} exceeds {tolerance:.3e}")]
    Quadrature { achieved: f64, tolerance: f64 },

    #[error("blow-up at t = {t} ({reason}); last good state at t = {last_good}")]
    BlowUp { t: f64, last_good: f64, reason: String },

    #[error("{found} samples inside the fit window, at least {required} required")]
    InsufficientSamples { found: usize, required: usize },

    #[error("non-positive value {value} at Nt = {nt} inside the fit window")]
    NonPositive { nt: f64, value: f64 },

    #[error("run not completed: {0}")]
    Incomplete(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
