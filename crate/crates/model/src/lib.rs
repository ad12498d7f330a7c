//! Layout-aware pointer model for reading-order detection.
//!
//! A page is packed as `[start, source tokens, target tokens]` and run
//! through a small transformer encoder whose attention mask lets the target
//! segment see the source and its own prefix. Each step points at one source
//! token. Training is teacher-forced with hand-written gradients; inference
//! decodes greedily or with a beam, reusing cached source keys and values.

pub mod checkpoint;
mod config;
pub mod decode;
mod error;
pub mod network;
pub mod optim;
pub mod packing;
pub mod params;
mod scalar;
pub mod train;
pub mod vocab;

pub use config::{Mode, ModelConfig};
pub use decode::DecodeOptions;
pub use error::{ModelError, Result};
pub use network::Model;
pub use scalar::Scalar;
pub use train::{train, TrainConfig, TrainReport};
