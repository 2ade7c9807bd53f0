use std::path::PathBuf;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed input, violated precondition, or bad configuration.
    Data,
    /// A numerical procedure failed on otherwise valid input.
    Numerical,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("ragged grid for subject `{subject}`: {message}")]
    RaggedGrid { subject: String, message: String },

    #[error("value out of range: {0}")]
    Range(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("cluster {cluster} has {size} subject(s); at least 2 are required")]
    DegenerateCluster { cluster: usize, size: usize },

    #[error("within-subject variance is unidentifiable: no subject has more than one replicate")]
    Unidentifiable,

    #[error("penalized system is rank deficient ({0})")]
    RankDeficient(String),

    #[error("Cholesky factorization failed even with jitter {jitter:e}")]
    Cholesky { jitter: f64 },

    #[error("all component densities underflow for observation {row}")]
    DensityUnderflow { row: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("at grid index {t_index}: {source}")]
    AtGridIndex {
        t_index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("outer iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("every candidate mixture fit failed: {}", .0.join("; "))]
    AllFitsFailed(Vec<String>),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Cholesky { .. }
            | Error::DensityUnderflow { .. }
            | Error::Numerical(_)
            | Error::RankDeficient(_)
            | Error::AllFitsFailed(_) => ErrorClass::Numerical,
            Error::AtGridIndex { source, .. } | Error::AtIteration { source, .. } => {
                source.class()
            }
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
