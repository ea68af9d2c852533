use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit codes:
/// invalid input/config -> 2, degenerate numerics -> 3, I/O -> 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("calibration invalid: {0}")]
    CalibrationInvalid(String),
    #[error("config invalid: {0}")]
    ConfigInvalid(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the `beamsim` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::CalibrationInvalid(_) | Error::ConfigInvalid(_) => 2,
            Error::DegenerateGeometry(_) => 3,
            Error::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
