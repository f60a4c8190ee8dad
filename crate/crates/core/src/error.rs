use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("point ({x}, {y}) outside {width}x{height} frame")]
    OutOfFrame {
        x: f64,
        y: f64,
        width: u32,
        height: u32,
    },

    #[error("invalid quaternion: norm {norm}")]
    InvalidQuaternion { norm: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient data: need {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateInput(_) => "degenerate_input",
            Error::OutOfFrame { .. } => "out_of_frame",
            Error::InvalidQuaternion { .. } => "invalid_quaternion",
            Error::InvalidInput(_) => "invalid_input",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::InvalidState(_) => "invalid_state",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
