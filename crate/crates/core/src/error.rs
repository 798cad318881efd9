use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("binomial overflow for N={particles}, m={modes}")]
    Overflow { particles: usize, modes: usize },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("matrix is not Hermitian (residual {0:e})")]
    NotHermitian(f64),

    #[error("step size underflow at t={time}: dt={dt:e}")]
    Stiffness { time: f64, dt: f64 },

    #[error("non-finite value encountered at t={0}")]
    NonFinite(f64),

    #[error("relaxation did not converge after {steps} steps (last energy {energy})")]
    NotConverged { steps: usize, energy: f64 },

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) | Error::Overflow { .. } | Error::Index(_) => 2,
            Error::ResourceCap(_) => 4,
            _ => 3,
        }
    }

    /// Short machine-readable kind tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) | Error::Json(_) => "config",
            Error::Index(_) => "index",
            Error::Shape(_) => "shape",
            Error::Overflow { .. } => "overflow",
            Error::ZeroNorm => "zero_norm",
            Error::NotHermitian(_) => "not_hermitian",
            Error::Stiffness { .. } => "stiffness",
            Error::NonFinite(_) => "non_finite",
            Error::NotConverged { .. } => "not_converged",
            Error::ResourceCap(_) => "resource_cap",
            Error::Checkpoint(_) => "checkpoint",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
