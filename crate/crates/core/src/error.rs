use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0} (expected 2 or 4)")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("{what} failed validation: {detail}")]
    Invalid { what: &'static str, detail: String },

    #[error("parameter {name} = {value} outside its allowed range")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("Kraus set is not complete (max deviation {0:.3e})")]
    IncompleteKraus(f64),

    #[error("effect {effect} is fully depolarized (q = {q:.3e})")]
    DegeneratePovm { effect: usize, q: f64 },

    #[error("objective returned {value} after {evaluations} evaluations")]
    NonFiniteObjective { value: f64, evaluations: usize },

    #[error("effect set spans rank {rank}, {required} needed for reconstruction")]
    NotInformationallyComplete { rank: usize, required: usize },

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("all {count} optimization starts failed: {diagnostics}")]
    AllStartsFailed { count: usize, diagnostics: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(what: &'static str, detail: impl Into<String>) -> Error {
    Error::Invalid {
        what,
        detail: detail.into(),
    }
}
