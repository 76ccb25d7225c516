use thiserror::Error;

pub type Result<T> = std::result::Result<T, FggcError>;

#[derive(Debug, Error)]
pub enum FggcError {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("time span {span} is not an integer number of steps of size {dt}")]
    StepCount { span: f64, dt: f64 },

    #[error("neighbor index {index} out of range for a strategy with {len} neighbors")]
    NeighborIndex { index: usize, len: usize },

    #[error("mismatched semi-classical parameters: {0} vs {1}")]
    EpsilonMismatch(f64, f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("every wave-packet amplitude fell below the truncation threshold")]
    EmptyEnsemble,

    #[error("caustic proximity: |det Z| = {det:.3e} below {threshold:.3e} at t = {time:.6}")]
    Caustic { det: f64, threshold: f64, time: f64 },

    #[error("field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FggcError {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            FggcError::Caustic { .. } => 3,
            _ => 2,
        }
    }
}
