use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("unsupported WAV encoding in {}: {detail}", .path.display())]
    UnsupportedEncoding { path: PathBuf, detail: String },
    #[error("{} contains no audio samples", .0.display())]
    EmptyAudio(PathBuf),
    #[error("malformed WAV file {}: {detail}", .path.display())]
    MalformedWav { path: PathBuf, detail: String },
    #[error("I/O error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("buffer too short: need {needed} samples, have {available}")]
    BufferTooShort { needed: usize, available: usize },
    #[error("input is silent (zero RMS)")]
    Silent,
    #[error(
        "no periodicity found: peak normalized autocorrelation {peak:.3} is below {threshold}"
    )]
    NoPeriodicity { peak: f64, threshold: f64 },
    #[error("f0 verification failed for {cell}: measured {measured:.2} Hz, target {target} Hz")]
    F0Verification {
        cell: String,
        measured: f64,
        target: f64,
    },
    #[error("f0 verification failed for {} token(s): {}", .0.len(), .0.join("; "))]
    F0VerificationBatch(Vec<String>),
    #[error("unknown vowel '{0}'")]
    UnknownVowel(String),
    #[error("spectra are on different channel grids")]
    GridMismatch,
    #[error("spectrum must be normalized before computing distances")]
    Unnormalized,
    #[error("labels do not match: {0}")]
    LabelMismatch(String),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("missing cells: {}", .0.join(", "))]
    MissingCells(Vec<String>),
    #[error("duplicate cell: {0}")]
    DuplicateCell(String),
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("p-value out of range [0, 1]: {0}")]
    PValueOutOfRange(f64),
    #[error("selection matched no cells")]
    EmptySelection,
    #[error("results are incomplete, missing stage: {0}")]
    MissingStage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) => ErrorKind::Usage,
            Error::RankDeficient | Error::NoConvergence(_) | Error::Numerical(_) => {
                ErrorKind::Numerical
            }
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
