//! Memoryless complex AWGN channel.
//!
//! SNR is Es/N0 per QAM symbol: with unit average symbol energy the complex
//! noise has total variance `10^(-snr_db/10)`, split evenly between I and Q.
//!
//! Randomness comes from ChaCha12 seeded with the run seed; independent frames
//! draw from distinct ChaCha streams (the 64-bit stream selector), so any
//! frame can be regenerated on its own and frames can run in any order.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

/// Reproducible generator for one stream of a seeded run.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Folds a tuple of indices into a stream selector (SplitMix64 mixing).
pub fn stream_id(parts: &[u64]) -> u64 {
    parts.iter().fold(0x9e37_79b9_7f4a_7c15u64, |acc, &p| {
        let mut z = acc ^ p.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    })
}

/// Total complex noise variance for unit symbol energy; zero at `+inf` dB.
pub fn noise_variance(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 10.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    /// Es/N0 in dB; `f64::INFINITY` disables the noise.
    pub snr_db: f64,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn new(snr_db: f64, seed: u64) -> Self {
        ChannelConfig { snr_db, seed }
    }

    pub fn noise_var(&self) -> f64 {
        noise_variance(self.snr_db)
    }
}

/// Adds noise from stream 0 of the configured seed.
pub fn transmit(cfg: &ChannelConfig, symbols: &[Complex64]) -> Vec<Complex64> {
    transmit_stream(cfg, 0, symbols)
}

/// Adds noise drawn from the given stream.
pub fn transmit_stream(cfg: &ChannelConfig, stream: u64, symbols: &[Complex64]) -> Vec<Complex64> {
    let mut out = symbols.to_vec();
    let mut rng = stream_rng(cfg.seed, stream);
    add_noise(&mut rng, cfg.noise_var(), &mut out);
    out
}

/// Adds circularly symmetric Gaussian noise of total variance `noise_var`.
pub fn add_noise<R: rand::Rng>(rng: &mut R, noise_var: f64, symbols: &mut [Complex64]) {
    if noise_var == 0.0 {
        return;
    }
    let sigma = (noise_var / 2.0).sqrt();
    for x in symbols {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *x += Complex64::new(sigma * re, sigma * im);
    }
}
