use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bounding box [{x0}, {y0}, {x1}, {y1}]")]
    InvalidBBox { x0: i64, y0: i64, x1: i64, y1: i64 },

    #[error("invalid page {id}: {reason}")]
    InvalidPage { id: String, reason: String },

    #[error("alignment failed for ({word:?}, {index}): {reason}")]
    Alignment {
        word: String,
        index: u32,
        reason: String,
    },

    #[error("alignment failed: {0}")]
    AlignmentCount(String),

    #[error("appearance index {0} does not fit in 24 bits")]
    IndexRange(u64),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("infeasible generator geometry: {0}")]
    Geometry(String),

    #[error("line adaptation error: {0}")]
    Adaptation(String),

    #[error("{path}:{line}: {source}")]
    Parse {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
