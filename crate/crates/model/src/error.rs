use thiserror::Error;

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),

    #[error("page {page_id} has {tokens} tokens, model accepts at most {max}")]
    TooManyTokens { page_id: String, tokens: usize, max: usize },

    #[error("page {page_id}: token {index} box {bbox:?} lies outside the {width}x{height} page")]
    OutOfPage {
        page_id: String,
        index: usize,
        bbox: [u32; 4],
        width: u32,
        height: u32,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("training diverged at epoch {epoch}, step {step}: loss {loss}")]
    Diverged { epoch: usize, step: usize, loss: f64 },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Data(#[from] readorder_core::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
