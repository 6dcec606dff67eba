use thiserror::Error;

/// Errors raised across the coded-modulation chain.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A buffer has the wrong length for the frame it belongs to.
    #[error("framing error: expected {expected} {what}, got {actual}")]
    Framing {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    /// A symbol block does not carry the matcher's composition.
    #[error("matching error: block composition {actual:?} differs from {expected:?}")]
    Matching {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },
    /// A constant-composition block ranks outside the matcher's input range.
    #[error("decode range error: block index is not below 2^{bits}")]
    DecodeRange { bits: usize },
    /// The parity-check construction failed.
    #[error("construction error: {0}")]
    Construction(String),
    /// Invalid run configuration; the message names the offending key.
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn framing(what: &'static str, expected: usize, actual: usize) -> Self {
        Error::Framing {
            what,
            expected,
            actual,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
