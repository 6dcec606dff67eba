//! Probabilistic amplitude shaping transceiver.
//!
//! One frame holds `N_s` 64-QAM symbols and exactly one FEC codeword of
//! `6·N_s` bits. Each symbol carries two shaped amplitudes (I and Q), each
//! labelled by two Gray bits, and two sign bits.
//!
//! Transmit side, per frame:
//! 1. data bits split into matcher inputs (one per block of `n_DM`
//!    amplitudes) followed by the uniform sign-data bits;
//! 2. the matcher produces the amplitude stream, amplitude `t` belonging to
//!    symbol `t / 2` on axis `t % 2` (0 = I, 1 = Q);
//! 3. the systematic information word is the amplitude labels (two bits per
//!    amplitude, in stream order) followed by the sign-data bits;
//! 4. the FEC encoder appends parity;
//! 5. sign slots, numbered like amplitudes, carry parity or data according
//!    to an evenly spread pattern: slot `s` carries parity iff
//!    `floor((s+1)·P / 2N_s) > floor(s·P / 2N_s)` for `P` parity bits. At
//!    rate 5/6, `P = N_s` and every Q sign carries parity;
//! 6. each axis maps `(sign, amplitude)` to its level.
//!
//! The receiver inverts these steps with prior-aware bit-wise LLRs.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;

use crate::ccdm::{quantize_to_composition, Composition, Matcher};
use crate::fec::{CodeDefinition, DecoderConfig, LlrFrame, LLR_CLIP};
use crate::shaping::{axis_sublabel, gray, gray_inverse, split_sublabel, ShapedConstellation, BITS_PER_SYMBOL, POINTS};
use crate::{Error, Result};

/// Bits per axis: one sign bit and two amplitude bits.
const AXIS_BITS: usize = 3;

/// How one frame's bits tile the QAM symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub qam_symbols_per_frame: usize,
    pub dm_block_length: usize,
    pub parity_bits_per_frame: usize,
    pub extra_data_sign_bits_per_frame: usize,
}

impl FrameLayout {
    pub const AMPLITUDE_BITS_PER_SYMBOL: usize = 4;
    pub const SIGN_BITS_PER_SYMBOL: usize = 2;

    /// Layout that carries one codeword of `code` per frame.
    pub fn for_code(code: &CodeDefinition, dm_block_length: usize) -> Result<Self> {
        let n = code.n();
        let m = BITS_PER_SYMBOL as usize;
        if !n.is_multiple_of(m) {
            return Err(Error::Domain(format!(
                "code length {n} is not a multiple of {m} bits per symbol"
            )));
        }
        let symbols = n / m;
        let parity = code.parity_bits();
        let signs = Self::SIGN_BITS_PER_SYMBOL * symbols;
        if parity > signs {
            return Err(Error::Domain(format!(
                "{parity} parity bits do not fit into {signs} sign positions"
            )));
        }
        let layout = FrameLayout {
            qam_symbols_per_frame: symbols,
            dm_block_length,
            parity_bits_per_frame: parity,
            extra_data_sign_bits_per_frame: signs - parity,
        };
        if dm_block_length == 0 || !layout.amplitudes().is_multiple_of(dm_block_length) {
            return Err(Error::Domain(format!(
                "matcher block length {dm_block_length} does not divide {} amplitudes",
                layout.amplitudes()
            )));
        }
        debug_assert_eq!(layout.information_bits(), code.k());
        Ok(layout)
    }

    pub fn amplitudes(&self) -> usize {
        2 * self.qam_symbols_per_frame
    }

    pub fn amplitude_bits(&self) -> usize {
        Self::AMPLITUDE_BITS_PER_SYMBOL * self.qam_symbols_per_frame
    }

    pub fn sign_bits(&self) -> usize {
        Self::SIGN_BITS_PER_SYMBOL * self.qam_symbols_per_frame
    }

    pub fn coded_bits(&self) -> usize {
        BITS_PER_SYMBOL as usize * self.qam_symbols_per_frame
    }

    /// FEC information bits: amplitude labels plus sign data.
    pub fn information_bits(&self) -> usize {
        self.amplitude_bits() + self.extra_data_sign_bits_per_frame
    }

    pub fn dm_blocks(&self) -> usize {
        self.amplitudes() / self.dm_block_length
    }

    pub fn sign_slot_carries_parity(&self, slot: usize) -> bool {
        let p = self.parity_bits_per_frame;
        let s = self.sign_bits();
        (slot + 1) * p / s > slot * p / s
    }

    /// Data bits per QAM symbol for a matcher emitting `k_dm` bits per block.
    pub fn data_rate(&self, k_dm: usize) -> f64 {
        (self.dm_blocks() * k_dm + self.extra_data_sign_bits_per_frame) as f64
            / self.qam_symbols_per_frame as f64
    }
}

/// Bit-wise demapper of a one-dimensional constellation.
#[derive(Debug, Clone, PartialEq)]
pub struct AskDemapper {
    levels: Vec<f64>,
    log_priors: Vec<f64>,
    labels: Vec<u8>,
    bits: usize,
}

impl AskDemapper {
    /// `labels[i]` is the `bits`-bit label of `levels[i]`, most significant
    /// bit first in the LLR output.
    pub fn new(levels: Vec<f64>, priors: Vec<f64>, labels: Vec<u8>, bits: usize) -> Self {
        assert!(levels.len() == priors.len() && levels.len() == labels.len());
        AskDemapper {
            levels,
            log_priors: priors.iter().map(|p| p.ln()).collect(),
            labels,
            bits,
        }
    }

    /// Per-axis 8-ASK demapper of a product-form constellation.
    pub fn for_axis(c: &ShapedConstellation) -> Result<Self> {
        let amp = c.amplitude_probs().ok_or_else(|| {
            Error::Domain("constellation is not a product of identical 8-ASK axes".into())
        })?;
        let subs: Vec<u8> = (0..8).collect();
        Ok(Self::new(
            subs.iter().map(|&s| c.axis_level(s)).collect(),
            subs.iter().map(|&s| 0.5 * amp[split_sublabel(s).1]).collect(),
            subs,
            AXIS_BITS,
        ))
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    /// Unclipped LLRs `ln P(b=0|y) / P(b=1|y)` of every label bit.
    pub fn llrs(&self, y: f64, noise_var: f64, out: &mut [f64]) {
        let metrics: Vec<f64> = self
            .levels
            .iter()
            .zip(&self.log_priors)
            .map(|(x, lp)| lp - (y - x) * (y - x) / noise_var)
            .collect();
        for (b, o) in out.iter_mut().enumerate().take(self.bits) {
            let shift = self.bits - 1 - b;
            let mut zero = f64::NEG_INFINITY;
            let mut one = f64::NEG_INFINITY;
            for (m, l) in metrics.iter().zip(&self.labels) {
                if l >> shift & 1 == 0 {
                    zero = log_add(zero, *m);
                } else {
                    one = log_add(one, *m);
                }
            }
            *o = zero - one;
        }
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn check_noise(noise_var: f64) -> Result<()> {
    if noise_var > 0.0 && noise_var.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("noise variance must be positive, got {noise_var}")))
    }
}

/// Six clipped LLRs per symbol, in label order (I sign, I amplitude bits,
/// Q sign, Q amplitude bits).
///
/// Product-form constellations are demapped per axis over 8 levels; any other
/// distribution falls back to [`demap_llrs_joint`].
pub fn demap_llrs(c: &ShapedConstellation, received: &[Complex64], noise_var: f64) -> Result<Vec<f64>> {
    check_noise(noise_var)?;
    let Ok(axis) = AskDemapper::for_axis(c) else {
        return demap_llrs_joint(c, received, noise_var);
    };
    let mut out = vec![0.0; received.len() * BITS_PER_SYMBOL as usize];
    for (y, llr) in received.iter().zip(out.chunks_exact_mut(BITS_PER_SYMBOL as usize)) {
        axis.llrs(y.re, noise_var, &mut llr[..AXIS_BITS]);
        axis.llrs(y.im, noise_var, &mut llr[AXIS_BITS..]);
    }
    Ok(clip(out))
}

/// Six clipped LLRs per symbol from sums over all 64 points.
pub fn demap_llrs_joint(c: &ShapedConstellation, received: &[Complex64], noise_var: f64) -> Result<Vec<f64>> {
    check_noise(noise_var)?;
    let m = BITS_PER_SYMBOL as usize;
    let log_priors: Vec<f64> = c.probs().iter().map(|p| p.ln()).collect();
    let mut out = Vec::with_capacity(received.len() * m);
    for y in received {
        let metrics: Vec<f64> = (0..POINTS)
            .map(|i| log_priors[i] - (y - c.points()[i]).norm_sqr() / noise_var)
            .collect();
        for b in 0..m {
            let shift = m - 1 - b;
            let (mut zero, mut one) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for (i, &metric) in metrics.iter().enumerate() {
                if c.labels()[i] >> shift & 1 == 0 {
                    zero = log_add(zero, metric);
                } else {
                    one = log_add(one, metric);
                }
            }
            out.push(zero - one);
        }
    }
    Ok(clip(out))
}

fn clip(mut v: Vec<f64>) -> Vec<f64> {
    for x in &mut v {
        *x = x.clamp(-LLR_CLIP, LLR_CLIP);
    }
    v
}

/// Everything produced while transmitting one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TxFrame {
    pub data_bits: Vec<u8>,
    /// Concatenated matcher output blocks.
    pub dm_output: Vec<u8>,
    /// Amplitude indices the mapper actually used, read back from the codeword.
    pub amplitudes: Vec<u8>,
    /// Sign bits in slot order.
    pub signs: Vec<u8>,
    pub codeword: Vec<u8>,
    pub symbols: Vec<Complex64>,
}

/// Everything recovered from one received frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RxFrame {
    pub llrs: LlrFrame,
    pub decoded_codeword: Vec<u8>,
    pub data_bits: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
    /// Matcher blocks whose decoded amplitudes could not be inverted.
    pub dm_failures: usize,
    /// Bit errors against the reference data, when one was supplied.
    pub bit_errors: Option<usize>,
    pub frame_error: bool,
}

/// Full transmit and receive chains for one shaped distribution.
#[derive(Debug, Clone)]
pub struct Transceiver {
    layout: FrameLayout,
    matcher: Matcher,
    code: Arc<CodeDefinition>,
    constellation: ShapedConstellation,
    demapper: AskDemapper,
    decoder: DecoderConfig,
    /// Codeword position of each sign slot.
    sign_positions: Vec<usize>,
}

impl Transceiver {
    /// Quantizes the constellation's amplitude distribution to a block of
    /// `dm_block_length` amplitudes and wires up the frame.
    pub fn new(
        constellation: ShapedConstellation,
        code: Arc<CodeDefinition>,
        dm_block_length: usize,
    ) -> Result<Self> {
        let amp = constellation.amplitude_probs().ok_or_else(|| {
            Error::Domain("amplitude shaping needs a product-form constellation".into())
        })?;
        let composition = quantize_to_composition(&amp, dm_block_length)?;
        Self::with_composition(constellation, code, composition)
    }

    pub fn with_composition(
        constellation: ShapedConstellation,
        code: Arc<CodeDefinition>,
        composition: Composition,
    ) -> Result<Self> {
        if composition.alphabet_size() != 4 {
            return Err(Error::Domain("compositions range over 4 amplitudes".into()));
        }
        let layout = FrameLayout::for_code(&code, composition.n())?;
        let demapper = AskDemapper::for_axis(&constellation)?;
        let mut data_next = layout.amplitude_bits();
        let mut parity_next = code.k();
        let sign_positions = (0..layout.sign_bits())
            .map(|s| {
                let slot = if layout.sign_slot_carries_parity(s) {
                    &mut parity_next
                } else {
                    &mut data_next
                };
                *slot += 1;
                *slot - 1
            })
            .collect();
        Ok(Transceiver {
            layout,
            matcher: Matcher::new(composition),
            code,
            constellation,
            demapper,
            decoder: DecoderConfig::default(),
            sign_positions,
        })
    }

    pub fn with_decoder(mut self, decoder: DecoderConfig) -> Self {
        self.decoder = decoder;
        self
    }

    pub fn layout(&self) -> &FrameLayout {
        &self.layout
    }

    pub fn matcher(&self) -> &Matcher {
        &self.matcher
    }

    pub fn code(&self) -> &CodeDefinition {
        &self.code
    }

    pub fn constellation(&self) -> &ShapedConstellation {
        &self.constellation
    }

    /// Data bits consumed per frame.
    pub fn data_bits_per_frame(&self) -> usize {
        self.layout.dm_blocks() * self.matcher.input_bits() + self.layout.extra_data_sign_bits_per_frame
    }

    /// Achieved data bits per QAM symbol.
    pub fn data_rate(&self) -> f64 {
        self.layout.data_rate(self.matcher.input_bits())
    }

    pub fn tx_chain(&self, data_bits: &[u8]) -> Result<TxFrame> {
        let expected = self.data_bits_per_frame();
        if data_bits.len() != expected {
            return Err(Error::framing("frame data bits", expected, data_bits.len()));
        }
        let k_dm = self.matcher.input_bits();
        let blocks = self.layout.dm_blocks();
        let mut dm_output = Vec::with_capacity(self.layout.amplitudes());
        for b in 0..blocks {
            dm_output.extend(self.matcher.encode(&data_bits[b * k_dm..(b + 1) * k_dm])?);
        }
        let sign_data = &data_bits[blocks * k_dm..];

        let mut info = Vec::with_capacity(self.code.k());
        for &a in &dm_output {
            let g = gray(a as usize);
            info.push(g >> 1 & 1);
            info.push(g & 1);
        }
        info.extend_from_slice(sign_data);
        let codeword = self.code.encode(&info)?;

        let amplitudes: Vec<u8> = codeword[..self.layout.amplitude_bits()]
            .chunks_exact(2)
            .map(|p| gray_inverse(p[0] << 1 | p[1]) as u8)
            .collect();
        let signs: Vec<u8> = self.sign_positions.iter().map(|&p| codeword[p]).collect();
        let level = |t: usize| {
            self.constellation
                .axis_level(axis_sublabel(signs[t] == 1, amplitudes[t] as usize))
        };
        let symbols = (0..self.layout.qam_symbols_per_frame)
            .map(|j| Complex64::new(level(2 * j), level(2 * j + 1)))
            .collect();
        Ok(TxFrame {
            data_bits: data_bits.to_vec(),
            dm_output,
            amplitudes,
            signs,
            codeword,
            symbols,
        })
    }

    /// Rearranges per-symbol label-order LLRs into codeword order.
    pub fn codeword_llrs(&self, label_llrs: &[f64]) -> LlrFrame {
        let mut cw = vec![0.0; self.code.n()];
        for (t, axis) in label_llrs.chunks_exact(AXIS_BITS).enumerate() {
            self.place_axis_llrs(t, axis, &mut cw);
        }
        LlrFrame::new(cw)
    }

    fn place_axis_llrs(&self, t: usize, axis: &[f64], cw: &mut [f64]) {
        cw[self.sign_positions[t]] = axis[0];
        cw[2 * t] = axis[1];
        cw[2 * t + 1] = axis[2];
    }

    /// Prior-aware LLRs of a received frame, in codeword order.
    pub fn demap_llrs(&self, received: &[Complex64], noise_var: f64) -> Result<LlrFrame> {
        check_noise(noise_var)?;
        let n_s = self.layout.qam_symbols_per_frame;
        if received.len() != n_s {
            return Err(Error::framing("received symbols", n_s, received.len()));
        }
        let mut cw = vec![0.0; self.code.n()];
        let mut axis = [0.0; AXIS_BITS];
        for (j, y) in received.iter().enumerate() {
            for (a, v) in [y.re, y.im].into_iter().enumerate() {
                self.demapper.llrs(v, noise_var, &mut axis);
                self.place_axis_llrs(2 * j + a, &axis, &mut cw);
            }
        }
        Ok(LlrFrame::new(cw))
    }

    pub fn rx_chain(
        &self,
        received: &[Complex64],
        noise_var: f64,
        reference: Option<&[u8]>,
    ) -> Result<RxFrame> {
        let llrs = self.demap_llrs(received, noise_var)?;
        let outcome = self.code.decode_with(&llrs, &self.decoder)?;
        let bits = &outcome.bits;

        let k_dm = self.matcher.input_bits();
        let n_dm = self.layout.dm_block_length;
        let mut data_bits = Vec::with_capacity(self.data_bits_per_frame());
        let mut dm_failures = 0;
        let amplitudes: Vec<u8> = bits[..self.layout.amplitude_bits()]
            .chunks_exact(2)
            .map(|p| gray_inverse(p[0] << 1 | p[1]) as u8)
            .collect();
        for block in amplitudes.chunks_exact(n_dm) {
            match self.matcher.decode(block) {
                Ok(b) => data_bits.extend(b),
                Err(_) => {
                    dm_failures += 1;
                    data_bits.extend(std::iter::repeat_n(0, k_dm));
                }
            }
        }
        data_bits.extend_from_slice(&bits[self.layout.amplitude_bits()..self.code.k()]);

        let bit_errors = match reference {
            Some(r) if r.len() != data_bits.len() => {
                return Err(Error::framing("reference bits", data_bits.len(), r.len()))
            }
            Some(r) => Some(r.iter().zip(&data_bits).filter(|(a, b)| a != b).count()),
            None => None,
        };
        let frame_error = !outcome.converged || dm_failures > 0 || bit_errors.is_some_and(|e| e > 0);
        Ok(RxFrame {
            llrs,
            decoded_codeword: outcome.bits,
            data_bits,
            converged: outcome.converged,
            iterations: outcome.iterations,
            dm_failures,
            bit_errors,
            frame_error,
        })
    }

    /// CSV dump of one transmitted frame, one row per QAM symbol.
    ///
    /// Columns: `symbol,amp_i,amp_q,sign_i,sign_q,role_i,role_q,label,re,im`.
    /// Amplitude columns hold indices into `1,3,5,7`; roles are `data` or
    /// `parity`; `label` is the 6-bit point label in decimal.
    pub fn frame_csv(&self, frame: &TxFrame) -> String {
        let mut s = String::from("symbol,amp_i,amp_q,sign_i,sign_q,role_i,role_q,label,re,im\n");
        let role = |t: usize| {
            if self.layout.sign_slot_carries_parity(t) {
                "parity"
            } else {
                "data"
            }
        };
        for (j, y) in frame.symbols.iter().enumerate() {
            let (i, q) = (2 * j, 2 * j + 1);
            let label = axis_sublabel(frame.signs[i] == 1, frame.amplitudes[i] as usize) << 3
                | axis_sublabel(frame.signs[q] == 1, frame.amplitudes[q] as usize);
            writeln!(
                s,
                "{j},{},{},{},{},{},{},{label},{:.12},{:.12}",
                frame.amplitudes[i],
                frame.amplitudes[q],
                frame.signs[i],
                frame.signs[q],
                role(i),
                role(q),
                y.re,
                y.im
            )
            .unwrap();
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shaping::Preset;

    #[test]
    fn two_level_sign_llr_closed_form() {
        let d = AskDemapper::new(vec![-1.0, 1.0], vec![0.5, 0.5], vec![1, 0], 1);
        for &nv in &[0.1, 0.5, 2.0] {
            for &y in &[-1.7, -0.2, 0.0, 0.3, 1.1] {
                let mut out = [0.0];
                d.llrs(y, nv, &mut out);
                assert!((out[0] - 2.0 * y * 2.0 / nv).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn llr_signs_match_label_on_point() {
        let c = Preset::P3.constellation();
        let rx = c.points().to_vec();
        let llrs = demap_llrs(&c, &rx, 1e-3).unwrap();
        for (l, chunk) in llrs.chunks_exact(6).enumerate() {
            for (b, &v) in chunk.iter().enumerate() {
                let bit = (l >> (5 - b)) & 1;
                assert!(if bit == 0 { v > 0.0 } else { v < 0.0 }, "label {l} bit {b}: {v}");
            }
        }
    }

    #[test]
    fn shaped_prior_biases_toward_inner_amplitudes() {
        // At y = 0 the sign bit is undecided and only the prior separates
        // amplitude labels: gray 00 (inner level) is favoured by shaping.
        let c = Preset::P4.constellation();
        let shaped = AskDemapper::for_axis(&c).unwrap();
        let subs: Vec<u8> = (0..8).collect();
        let uniform = AskDemapper::new(
            subs.iter().map(|&s| c.axis_level(s)).collect(),
            vec![0.125; 8],
            subs,
            3,
        );
        let (mut s, mut u) = ([0.0; 3], [0.0; 3]);
        shaped.llrs(0.0, 0.05, &mut s);
        uniform.llrs(0.0, 0.05, &mut u);
        assert!(s[0].abs() < 1e-12 && u[0].abs() < 1e-12);
        // Bit 1 is 0 for levels 1 and 3 (inner half).
        assert!(s[1] > u[1]);
        assert!(s[2] > u[2]);
    }

    #[test]
    fn separable_equals_joint() {
        let c = Preset::P2.constellation();
        let rx: Vec<Complex64> = (0..50)
            .map(|i| Complex64::new((i as f64 * 0.37).sin() * 1.3, (i as f64 * 0.91).cos() * 1.2))
            .collect();
        let a = demap_llrs(&c, &rx, 0.07).unwrap();
        let b = demap_llrs_joint(&c, &rx, 0.07).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn rejects_non_positive_noise() {
        let c = ShapedConstellation::uniform();
        assert!(matches!(demap_llrs(&c, &[], 0.0), Err(Error::Domain(_))));
        assert!(matches!(demap_llrs(&c, &[], -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn parity_pattern_at_rate_five_sixths() {
        let layout = FrameLayout {
            qam_symbols_per_frame: 576,
            dm_block_length: 288,
            parity_bits_per_frame: 576,
            extra_data_sign_bits_per_frame: 576,
        };
        let parity: Vec<usize> = (0..1152).filter(|&s| layout.sign_slot_carries_parity(s)).collect();
        assert_eq!(parity.len(), 576);
        assert!(parity.iter().all(|s| s % 2 == 1));
    }
}
