use std::fmt;

use readorder_model::ModelError;
use serde::Serialize;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// A classified failure, printed to stderr as one JSON object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            kind: "usage",
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            kind: "data",
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

fn message(err: &anyhow::Error) -> String {
    err.chain().map(ToString::to_string).collect::<Vec<_>>().join(": ")
}

/// Maps an error chain onto an exit code: explicit failures keep their
/// class, divergence is numeric, bad configuration is usage, and anything
/// else (I/O, parsing, schema or consistency problems) is a data error.
pub fn classify(err: &anyhow::Error) -> Failure {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return Failure {
                message: message(err),
                ..f.clone()
            };
        }
        if let Some(m) = cause.downcast_ref::<ModelError>() {
            return match m {
                ModelError::Diverged { .. } => Failure {
                    code: EXIT_NUMERIC,
                    kind: "numeric",
                    message: message(err),
                },
                ModelError::Config(_) => Failure::usage(message(err)),
                _ => Failure::data(message(err)),
            };
        }
    }
    Failure::data(message(err))
}
