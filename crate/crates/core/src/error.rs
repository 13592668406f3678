use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coherent amplitude with mean phonon number {mean} leaves tail {tail:e} above n_max={n_max}, limit is {epsilon:e}")]
    TailViolation {
        mean: f64,
        n_max: usize,
        tail: f64,
        epsilon: f64,
    },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("kerr sign calibration is ambiguous (fidelity +: {plus:.6}, -: {minus:.6})")]
    AmbiguousCalibration { plus: f64, minus: f64 },

    #[error("drive under-resolved: {steps} steps per trap period, at least {min} required")]
    UnderResolvedDrive { steps: usize, min: usize },

    #[error("norm drift {drift:e} at t = {t_us} us exceeds {limit:e}")]
    NormDrift { drift: f64, t_us: f64, limit: f64 },

    #[error("non-finite amplitude encountered at t = {t_us} us")]
    NonFinite { t_us: f64 },

    #[error("no trajectory samples inside [{start}, {end}] us")]
    EmptyWindow { start: f64, end: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NormDrift { .. }
            | Error::NonFinite { .. }
            | Error::AmbiguousCalibration { .. }
            | Error::UnderResolvedDrive { .. }
            | Error::EmptyWindow { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
