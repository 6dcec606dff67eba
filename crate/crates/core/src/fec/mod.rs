//! Systematic quasi-cyclic LDPC code at rate 5/6 and its decoder.
//!
//! The default code has 3456 coded bits, 2880 of them information, and is
//! decoded by normalized min-sum with factor 0.75, at most 50 iterations and
//! channel LLRs clipped to ±24.

mod code;
mod decoder;
pub mod gf2;
mod sparse;

pub use code::{build_code, CodeDefinition, CodeSpec};
pub use decoder::{DecodeOutcome, DecoderConfig};
pub use sparse::{SparseMatrix, EXPORT_MAGIC};

pub const DEFAULT_NORMALIZATION: f64 = 0.75;
pub const DEFAULT_MAX_ITERATIONS: usize = 50;
/// Channel LLR magnitude limit, natural-log units.
pub const LLR_CLIP: f64 = 24.0;

/// Channel log-likelihood ratios, `ln P(0)/P(1)`, clipped to `±LLR_CLIP`.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrFrame(Vec<f64>);

impl LlrFrame {
    /// Clips every value into `[-LLR_CLIP, LLR_CLIP]`; NaN becomes 0.
    pub fn new(values: Vec<f64>) -> Self {
        Self::with_clip(values, LLR_CLIP)
    }

    pub fn with_clip(mut values: Vec<f64>, clip: f64) -> Self {
        for v in &mut values {
            *v = if v.is_nan() { 0.0 } else { v.clamp(-clip, clip) };
        }
        LlrFrame(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Noiseless LLRs of a codeword: `+clip` for 0 and `-clip` for 1.
    pub fn from_bits(bits: &[u8]) -> Self {
        LlrFrame(
            bits.iter()
                .map(|&b| if b == 0 { LLR_CLIP } else { -LLR_CLIP })
                .collect(),
        )
    }
}
