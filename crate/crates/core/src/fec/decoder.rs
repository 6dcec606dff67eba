//! Normalized min-sum belief propagation with a flooding schedule.

use super::code::CodeDefinition;
use super::LlrFrame;
use crate::{Error, Result};

/// Decoder settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderConfig {
    /// Scale applied to every check-to-variable message.
    pub normalization: f64,
    pub max_iterations: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            normalization: super::DEFAULT_NORMALIZATION,
            max_iterations: super::DEFAULT_MAX_ITERATIONS,
        }
    }
}

/// Result of one decoding attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    /// Hard decisions on all `n_c` code bits.
    pub bits: Vec<u8>,
    /// Whether the hard decisions satisfy every parity check.
    pub converged: bool,
    /// Iterations run; zero when the channel decisions were already a codeword.
    pub iterations: usize,
}

impl DecodeOutcome {
    pub fn info_bits<'a>(&'a self, code: &CodeDefinition) -> &'a [u8] {
        &self.bits[code.systematic_columns()]
    }
}

fn hard(llr: f64) -> u8 {
    (llr <= 0.0) as u8
}

impl CodeDefinition {
    /// Decodes with the default normalization and the given iteration cap.
    pub fn decode(&self, llrs: &LlrFrame, max_iterations: usize) -> Result<DecodeOutcome> {
        self.decode_with(
            llrs,
            &DecoderConfig {
                max_iterations,
                ..DecoderConfig::default()
            },
        )
    }

    pub fn decode_with(&self, llrs: &LlrFrame, config: &DecoderConfig) -> Result<DecodeOutcome> {
        let channel = llrs.values();
        let n = self.n();
        if channel.len() != n {
            return Err(Error::framing("LLRs", n, channel.len()));
        }
        let mut bits: Vec<u8> = channel.iter().map(|&l| hard(l)).collect();
        if self.checks_satisfied(&bits) {
            return Ok(DecodeOutcome {
                bits,
                converged: true,
                iterations: 0,
            });
        }

        let edges = self.edge_vars.len();
        let mut c2v = vec![0.0f64; edges];
        let mut posterior = channel.to_vec();
        let alpha = config.normalization;

        for iteration in 1..=config.max_iterations {
            for r in 0..self.row_ptr.len() - 1 {
                let (start, end) = (self.row_ptr[r], self.row_ptr[r + 1]);
                let mut min1 = f64::INFINITY;
                let mut min2 = f64::INFINITY;
                let mut min_edge = start;
                let mut negative = false;
                for e in start..end {
                    let q = posterior[self.edge_vars[e] as usize] - c2v[e];
                    negative ^= q < 0.0;
                    let mag = q.abs();
                    if mag < min1 {
                        min2 = min1;
                        min1 = mag;
                        min_edge = e;
                    } else if mag < min2 {
                        min2 = mag;
                    }
                }
                for e in start..end {
                    let q = posterior[self.edge_vars[e] as usize] - c2v[e];
                    let mag = if e == min_edge { min2 } else { min1 };
                    let sign = if negative ^ (q < 0.0) { -1.0 } else { 1.0 };
                    // Each edge reads its own old message before overwriting
                    // it, and posteriors stay frozen until all checks ran.
                    c2v[e] = alpha * sign * mag;
                }
            }
            for v in 0..n {
                let incoming: f64 = self.var_edges[self.var_ptr[v]..self.var_ptr[v + 1]]
                    .iter()
                    .map(|&e| c2v[e as usize])
                    .sum();
                posterior[v] = channel[v] + incoming;
                bits[v] = hard(posterior[v]);
            }
            if self.checks_satisfied(&bits) {
                return Ok(DecodeOutcome {
                    bits,
                    converged: true,
                    iterations: iteration,
                });
            }
        }
        Ok(DecodeOutcome {
            bits,
            converged: false,
            iterations: config.max_iterations,
        })
    }

    fn checks_satisfied(&self, bits: &[u8]) -> bool {
        self.row_ptr.windows(2).all(|w| {
            self.edge_vars[w[0]..w[1]]
                .iter()
                .fold(0u8, |acc, &v| acc ^ bits[v as usize])
                == 0
        })
    }
}
