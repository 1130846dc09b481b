use thiserror::Error;

use crate::circuit::LayerId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The layer graph is malformed (cycles, unreachable layers, bad widths).
    #[error("structural error at layer {layer}: {reason}")]
    Structural { layer: LayerId, reason: String },

    #[error("layer {from} references missing layer {to}")]
    DanglingReference { from: String, to: String },

    #[error("shape error: {0}")]
    Shape(String),

    /// A pivot fell below the rank threshold during QR.
    #[error("matrix is numerically rank deficient at column {column} (pivot {pivot:e}, threshold {threshold:e})")]
    Singular {
        column: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("input error: {0}")]
    Input(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("quadrature order {order} too small for {basis} (need at least {required})")]
    Precision {
        basis: String,
        order: usize,
        required: usize,
    },

    /// The result has a non-negligible imaginary part or a negative real part;
    /// this signals a defect rather than roundoff.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },

    #[error("unsupported format version {found:?} (expected {expected:?})")]
    Version { found: String, expected: String },
}

impl Error {
    /// True for failures caused by floating-point breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular { .. } | Error::Numerical(_))
    }

    pub(crate) fn structural(layer: LayerId, reason: impl Into<String>) -> Self {
        Error::Structural {
            layer,
            reason: reason.into(),
        }
    }
}
