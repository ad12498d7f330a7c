use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{ModelError, Result};

/// Which embedding families feed the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Words, 1D positions and 2D box coordinates.
    #[default]
    Full,
    /// Words and 1D positions only.
    TextOnly,
    /// 1D positions and 2D box coordinates only.
    LayoutOnly,
}

impl Mode {
    pub fn uses_words(self) -> bool {
        self != Mode::LayoutOnly
    }

    pub fn uses_layout(self) -> bool {
        self != Mode::TextOnly
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::TextOnly => "text_only",
            Mode::LayoutOnly => "layout_only",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Mode::Full),
            "text_only" => Ok(Mode::TextOnly),
            "layout_only" => Ok(Mode::LayoutOnly),
            other => Err(ModelError::Config(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub layers: usize,
    pub hidden_dim: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub max_tokens_per_page: usize,
    /// Box coordinates are bucketed into `0..=coord_grid`.
    pub coord_grid: u32,
    pub mode: Mode,
    pub vocab_size: usize,
    pub dropout: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            layers: 2,
            hidden_dim: 128,
            heads: 4,
            ffn_dim: 512,
            max_tokens_per_page: 128,
            coord_grid: 1000,
            mode: Mode::Full,
            vocab_size: 4096,
            dropout: 0.0,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(ModelError::Config(m.to_string()));
        if self.layers == 0 || self.hidden_dim == 0 || self.heads == 0 || self.ffn_dim == 0 {
            return fail("layers, hidden_dim, heads and ffn_dim must be positive");
        }
        if self.hidden_dim % self.heads != 0 {
            return fail("hidden_dim must be divisible by heads");
        }
        if self.coord_grid == 0 {
            return fail("coord_grid must be at least 1");
        }
        if self.vocab_size < 2 {
            return fail("vocab_size must leave room for the unknown id");
        }
        if self.max_tokens_per_page == 0 {
            return fail("max_tokens_per_page must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail("dropout must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.hidden_dim / self.heads
    }

    /// Packed length bound: one start slot, the source, and its targets.
    pub fn max_positions(&self) -> usize {
        2 * self.max_tokens_per_page + 1
    }
}
