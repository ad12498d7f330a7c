//! Reading-order detection toolkit: the token/page data model and everything
//! that does not need a neural network.
//!
//! * [`types`]: tokens, pages, predictions and their JSONL wire format.
//! * [`colorkey`]: appearance-index colors and sequence/layout alignment.
//! * [`heuristic`]: left-to-right, top-to-bottom baseline order.
//! * [`metrics`]: page-level BLEU, average relative distance, corpus stats.
//! * [`adaptation`]: lifting a token order onto OCR text lines.
//! * [`synthgen`]: deterministic synthetic pages with known reading order.

pub mod adaptation;
pub mod colorkey;
mod error;
pub mod heuristic;
pub mod jsonl;
pub mod metrics;
pub mod synthgen;
pub mod types;

pub use error::{Error, Result};
pub use types::{BBox, OrderPrediction, Page, Token};
