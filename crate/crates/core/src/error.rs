use thiserror::Error;

use crate::modal::ModeIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("Wood's anomaly at mode {mode}: |k - |alpha_j|| = {gap:e}")]
    WoodAnomaly { mode: ModeIndex, gap: f64 },

    #[error("modal series needs separated heights, got x3 - y3 = {0:e}")]
    CoincidentHeight(f64),

    #[error("kernel evaluated on the singular lattice (image distance {0:e})")]
    SingularPoint(f64),

    #[error("modal series tail bound {bound:e} above tolerance after {shells} shells")]
    TailNotConverged { shells: usize, bound: f64 },

    #[error("point {0:?} lies outside the slab |x3| < h")]
    OutsideSlab([f64; 3]),

    #[error(
        "iterative solver stopped after {iterations} iterations at relative residual {residual:e}"
    )]
    NotConverged { iterations: usize, residual: f64 },

    #[error("Born series diverges (increment ratio {ratio:.3} at term {term})")]
    BornDivergence { term: usize, ratio: f64 },

    #[error("source {index}: {source}")]
    Source {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("mode set mismatch: {0}")]
    ModeMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("config: {0}")]
    Config(String),

    #[error("data file line {line}: {reason}")]
    DataFormat { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
