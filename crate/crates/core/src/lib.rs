//! Probabilistically shaped 64-QAM coded modulation.
//!
//! The crate models a rate-adaptive transceiver in which a constant-composition
//! distribution matcher shapes the 8-ASK amplitudes of each 64-QAM axis, a
//! systematic rate-5/6 LDPC code protects the amplitude labels, and parity bits
//! ride on the uniform sign positions. The transmission rate is tuned solely by
//! the Maxwell-Boltzmann distribution; code, constellation and symbol rate stay
//! fixed.
//!
//! Modules:
//! - [`shaping`]: constellations, the Maxwell-Boltzmann family, entropy and
//!   operating points.
//! - [`ccdm`]: constant-composition distribution matcher (exact ranking).
//! - [`fec`]: quasi-cyclic LDPC code and normalized min-sum decoder.
//! - [`pas`]: frame layout, mapper, prior-aware demapper and the full chains.
//! - [`channel`]: complex AWGN with reproducible per-frame streams.
//! - [`metrics`]: mutual information, bit-metric rates and error counting.
//! - [`cli`]: sweep configuration, rate tables and result emission.

pub mod ccdm;
pub mod channel;
pub mod cli;
mod error;
pub mod fec;
pub mod metrics;
pub mod pas;
pub mod shaping;

pub use error::{Error, Result};

/// Output schema version of sweep and rate-table files.
pub const SCHEMA_VERSION: u32 = 1;
