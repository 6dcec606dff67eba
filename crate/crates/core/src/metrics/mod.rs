//! Mutual information, bit-metric rates and error counting.
//!
//! Symbol-wise mutual information `I(X;Y)` of the discrete-input complex AWGN
//! channel is estimated either by Monte Carlo or by Gauss-Hermite quadrature.
//! Product-form constellations reduce to a one-dimensional 8-ASK integral per
//! axis; other distributions use the two-dimensional tensor rule. The
//! bit-metric rate `H(X) - Σ_b H(B_b | Y)` of a bit-wise receiver with
//! prior-aware LLRs is computed by the same machinery and reported as GMI.

mod hermite;

pub use hermite::GaussHermite;

use std::f64::consts::LN_2;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{noise_variance, stream_rng};
use crate::shaping::{solve_nu_for_entropy, split_sublabel, MaxwellBoltzmann, ShapedConstellation, POINTS};
use crate::{Error, Result};

/// Quadrature nodes per dimension used when none are specified.
pub const DEFAULT_QUADRATURE_NODES: usize = 64;
const MC_BATCH: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiMethodKind {
    MonteCarlo,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MiMethod {
    MonteCarlo { samples: usize, seed: u64 },
    Quadrature { nodes: usize },
}

impl Default for MiMethod {
    fn default() -> Self {
        MiMethod::Quadrature {
            nodes: DEFAULT_QUADRATURE_NODES,
        }
    }
}

/// An information-rate estimate in bits per QAM symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    pub value_bits: f64,
    /// Standard error of the Monte-Carlo mean; zero for quadrature.
    pub std_error: f64,
    /// Monte-Carlo samples, or quadrature nodes per dimension.
    pub samples: usize,
    pub method: MiMethodKind,
}

/// Symbol-wise mutual information.
pub fn mutual_information(c: &ShapedConstellation, snr_db: f64, method: MiMethod) -> MiEstimate {
    estimate(c, snr_db, method, Rate::Symbol)
}

/// Bit-metric (GMI) rate of a bit-wise receiver, floored at zero.
pub fn bit_metric_rate(c: &ShapedConstellation, snr_db: f64, method: MiMethod) -> MiEstimate {
    let mut e = estimate(c, snr_db, method, Rate::BitMetric);
    e.value_bits = e.value_bits.max(0.0);
    e
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rate {
    Symbol,
    BitMetric,
}

fn estimate(c: &ShapedConstellation, snr_db: f64, method: MiMethod, rate: Rate) -> MiEstimate {
    let noise_var = noise_variance(snr_db);
    match method {
        MiMethod::Quadrature { nodes } => {
            let gh = GaussHermite::new(nodes);
            let value = if noise_var == 0.0 {
                c.entropy()
            } else if let Some(axis) = Alphabet::axis(c) {
                2.0 * axis.quadrature_1d(&gh, noise_var, rate)
            } else {
                Alphabet::joint(c).quadrature_2d(&gh, noise_var, rate)
            };
            MiEstimate {
                value_bits: value,
                std_error: 0.0,
                samples: nodes,
                method: MiMethodKind::Quadrature,
            }
        }
        MiMethod::MonteCarlo { samples, seed } => {
            let (mean, se) = if noise_var == 0.0 {
                (c.entropy(), 0.0)
            } else {
                monte_carlo(c, noise_var, samples, seed, rate)
            };
            MiEstimate {
                value_bits: mean,
                std_error: se,
                samples,
                method: MiMethodKind::MonteCarlo,
            }
        }
    }
}

/// Points with non-zero probability, their log-priors and labels.
struct Alphabet<T> {
    points: Vec<T>,
    log_priors: Vec<f64>,
    labels: Vec<u8>,
    bits: usize,
    entropy: f64,
}

impl Alphabet<f64> {
    fn axis(c: &ShapedConstellation) -> Option<Self> {
        let amp = c.amplitude_probs()?;
        let mut a = Alphabet {
            points: Vec::new(),
            log_priors: Vec::new(),
            labels: Vec::new(),
            bits: 3,
            entropy: c.entropy() / 2.0,
        };
        for s in 0..8u8 {
            let p = 0.5 * amp[split_sublabel(s).1];
            if p > 0.0 {
                a.points.push(c.axis_level(s));
                a.log_priors.push(p.ln());
                a.labels.push(s);
            }
        }
        Some(a)
    }

    fn quadrature_1d(&self, gh: &GaussHermite, noise_var: f64, rate: Rate) -> f64 {
        let mut metrics = vec![0.0; self.points.len()];
        let mut total = 0.0;
        for (xi, &x) in self.points.iter().enumerate() {
            let px = self.log_priors[xi].exp();
            let e = gh.gaussian_expectation(noise_var / 2.0, |n| {
                let y = x + n;
                for (m, (p, lp)) in metrics.iter_mut().zip(self.points.iter().zip(&self.log_priors)) {
                    *m = lp - (y - p) * (y - p) / noise_var;
                }
                self.term(&metrics, xi, n * n / noise_var, rate)
            });
            total += px * e;
        }
        match rate {
            Rate::Symbol => total,
            Rate::BitMetric => self.entropy - total,
        }
    }
}

impl Alphabet<Complex64> {
    fn joint(c: &ShapedConstellation) -> Self {
        let mut a = Alphabet {
            points: Vec::new(),
            log_priors: Vec::new(),
            labels: Vec::new(),
            bits: 6,
            entropy: c.entropy(),
        };
        for i in 0..POINTS {
            if c.probs()[i] > 0.0 {
                a.points.push(c.points()[i]);
                a.log_priors.push(c.probs()[i].ln());
                a.labels.push(c.labels()[i]);
            }
        }
        a
    }

    fn metrics_at(&self, y: Complex64, noise_var: f64, out: &mut [f64]) {
        for (m, (p, lp)) in out.iter_mut().zip(self.points.iter().zip(&self.log_priors)) {
            *m = lp - (y - p).norm_sqr() / noise_var;
        }
    }

    fn quadrature_2d(&self, gh: &GaussHermite, noise_var: f64, rate: Rate) -> f64 {
        let s = noise_var.sqrt();
        let mut metrics = vec![0.0; self.points.len()];
        let mut total = 0.0;
        for (xi, &x) in self.points.iter().enumerate() {
            let px = self.log_priors[xi].exp();
            let mut e = 0.0;
            for (ti, wi) in gh.nodes.iter().zip(&gh.weights) {
                for (tj, wj) in gh.nodes.iter().zip(&gh.weights) {
                    let n = Complex64::new(s * ti, s * tj);
                    self.metrics_at(x + n, noise_var, &mut metrics);
                    e += wi * wj * self.term(&metrics, xi, n.norm_sqr() / noise_var, rate);
                }
            }
            total += px * e / std::f64::consts::PI;
        }
        match rate {
            Rate::Symbol => total,
            Rate::BitMetric => self.entropy - total,
        }
    }
}

impl<T> Alphabet<T> {
    /// Per-sample integrand: the information density in bits for `Symbol`,
    /// or `Σ_b log2(1 + exp(-s_b·L_b))` for `BitMetric`.
    fn term(&self, metrics: &[f64], sent: usize, noise_metric: f64, rate: Rate) -> f64 {
        match rate {
            Rate::Symbol => (-noise_metric - log_sum_exp(metrics)) / LN_2,
            Rate::BitMetric => {
                let label = self.labels[sent];
                (0..self.bits)
                    .map(|b| {
                        let shift = self.bits - 1 - b;
                        let (mut zero, mut one) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                        for (m, l) in metrics.iter().zip(&self.labels) {
                            if l >> shift & 1 == 0 {
                                zero = log_add(zero, *m);
                            } else {
                                one = log_add(one, *m);
                            }
                        }
                        // log(1 + P(other bit)/P(sent bit)).
                        let z = if label >> shift & 1 == 0 { one - zero } else { zero - one };
                        softplus(z) / LN_2
                    })
                    .sum()
            }
        }
    }
}

fn monte_carlo(c: &ShapedConstellation, noise_var: f64, samples: usize, seed: u64, rate: Rate) -> (f64, f64) {
    let alphabet = Alphabet::joint(c);
    let cdf: Vec<f64> = alphabet
        .log_priors
        .iter()
        .scan(0.0, |acc, lp| {
            *acc += lp.exp();
            Some(*acc)
        })
        .collect();
    let batches = samples.div_ceil(MC_BATCH);
    let sigma = (noise_var / 2.0).sqrt();
    let partial: Vec<(f64, f64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let count = MC_BATCH.min(samples - b * MC_BATCH);
            let mut metrics = vec![0.0; alphabet.points.len()];
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..count {
                let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
                let xi = cdf.partition_point(|&v| v <= u).min(cdf.len() - 1);
                let n = Complex64::new(
                    sigma * rng.sample::<f64, _>(rand_distr::StandardNormal),
                    sigma * rng.sample::<f64, _>(rand_distr::StandardNormal),
                );
                alphabet.metrics_at(alphabet.points[xi] + n, noise_var, &mut metrics);
                let t = alphabet.term(&metrics, xi, n.norm_sqr() / noise_var, rate);
                let v = match rate {
                    Rate::Symbol => t,
                    Rate::BitMetric => alphabet.entropy - t,
                };
                sum += v;
                sq += v * v;
            }
            (sum, sq)
        })
        .collect();
    let (sum, sq) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), (s, q)| (a + s, b + q));
    let nf = samples as f64;
    let mean = sum / nf;
    let var = (sq / nf - mean * mean).max(0.0) * nf / (nf - 1.0).max(1.0);
    (mean, (var / nf).sqrt())
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

fn log_sum_exp(v: &[f64]) -> f64 {
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + v.iter().map(|x| (x - hi).exp()).sum::<f64>().ln()
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// SNR in dB at which the quadrature MI reaches `target_mi_bits`, by
/// bisection down to a bracket of `tolerance_db`; returns the bracket midpoint.
pub fn required_snr(c: &ShapedConstellation, target_mi_bits: f64, tolerance_db: f64) -> Result<f64> {
    required_snr_with(c, target_mi_bits, tolerance_db, DEFAULT_QUADRATURE_NODES)
}

pub fn required_snr_with(
    c: &ShapedConstellation,
    target_mi_bits: f64,
    tolerance_db: f64,
    nodes: usize,
) -> Result<f64> {
    let h = c.entropy();
    if !(target_mi_bits > 0.0 && target_mi_bits < h) {
        return Err(Error::Domain(format!(
            "target MI {target_mi_bits} outside (0, {h}) bits"
        )));
    }
    if tolerance_db.is_nan() || tolerance_db <= 0.0 {
        return Err(Error::Domain(format!("tolerance {tolerance_db} dB must be positive")));
    }
    let gh = GaussHermite::new(nodes);
    let axis = Alphabet::axis(c);
    let joint = axis.is_none().then(|| Alphabet::joint(c));
    let mi = |snr: f64| {
        let nv = noise_variance(snr);
        match (&axis, &joint) {
            (Some(a), _) => 2.0 * a.quadrature_1d(&gh, nv, Rate::Symbol),
            (None, Some(j)) => j.quadrature_2d(&gh, nv, Rate::Symbol),
            (None, None) => unreachable!(),
        }
    };
    let mut lo = -30.0;
    while mi(lo) >= target_mi_bits {
        lo -= 30.0;
        if lo < -300.0 {
            return Err(Error::Domain(format!("MI stays above {target_mi_bits} bits")));
        }
    }
    let mut hi = 40.0;
    while mi(hi) < target_mi_bits {
        lo = hi;
        hi += 20.0;
        if hi > 300.0 {
            return Err(Error::Domain(format!(
                "target MI {target_mi_bits} too close to the entropy {h}"
            )));
        }
    }
    while hi - lo > tolerance_db {
        let mid = 0.5 * (lo + hi);
        if mi(mid) < target_mi_bits {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The Maxwell-Boltzmann distribution that reaches `target_mi_bits` at the
/// lowest SNR, found by golden-section search over its entropy.
pub fn best_mb_required_snr(target_mi_bits: f64, tolerance_db: f64) -> Result<(MaxwellBoltzmann, f64)> {
    if !(target_mi_bits > 0.0 && target_mi_bits < 6.0) {
        return Err(Error::Domain(format!("target MI {target_mi_bits} outside (0, 6) bits")));
    }
    let snr_for = |h: f64| -> Result<(MaxwellBoltzmann, f64)> {
        let nu = solve_nu_for_entropy(h)?;
        let snr = required_snr(&nu.constellation(), target_mi_bits, tolerance_db)?;
        Ok((nu, snr))
    };
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = ((target_mi_bits + 0.02).max(2.0 + 1e-3), 6.0);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut fc = snr_for(c)?;
    let mut fd = snr_for(d)?;
    while b - a > 1e-3 {
        if fc.1 < fd.1 {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = snr_for(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = snr_for(d)?;
        }
    }
    let uniform = (MaxwellBoltzmann::UNIFORM, required_snr(&ShapedConstellation::uniform(), target_mi_bits, tolerance_db)?);
    Ok([fc, fd, uniform]
        .into_iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap())
}

/// Lowest SNR on `[lo, hi]` at which `passes` holds, to within `resolution`
/// dB, for a predicate that is monotone in SNR. Returns `hi` if nothing in
/// the bracket passes below it.
pub fn find_threshold(mut lo: f64, mut hi: f64, resolution: f64, mut passes: impl FnMut(f64) -> bool) -> f64 {
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if passes(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Bit and frame error counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub bit_errors: u64,
    pub bits: u64,
    pub frame_errors: u64,
    pub frames: u64,
}

impl ErrorStats {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits as f64
    }

    pub fn fer(&self) -> f64 {
        self.frame_errors as f64 / self.frames as f64
    }

    /// Counts one frame; it is errored iff any bit differs.
    pub fn accumulate(&mut self, reference: &[u8], decoded: &[u8]) -> Result<()> {
        if reference.len() != decoded.len() {
            return Err(Error::framing("decoded bits", reference.len(), decoded.len()));
        }
        let errors = reference.iter().zip(decoded).filter(|(a, b)| a != b).count() as u64;
        self.record_frame(reference.len() as u64, errors, errors > 0);
        Ok(())
    }

    pub fn record_frame(&mut self, bits: u64, bit_errors: u64, frame_error: bool) {
        self.bits += bits;
        self.bit_errors += bit_errors;
        self.frames += 1;
        self.frame_errors += frame_error as u64;
    }

    pub fn merge(&mut self, other: &ErrorStats) {
        self.bit_errors += other.bit_errors;
        self.bits += other.bits;
        self.frame_errors += other.frame_errors;
        self.frames += other.frames;
    }
}

pub fn accumulate_errors(mut stats: ErrorStats, reference: &[u8], decoded: &[u8]) -> Result<ErrorStats> {
    stats.accumulate(reference, decoded)?;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shaping::Preset;

    #[test]
    fn error_accounting() {
        let a = [0u8, 1, 1, 0, 1];
        let s = accumulate_errors(ErrorStats::default(), &a, &a).unwrap();
        assert_eq!((s.bit_errors, s.frame_errors, s.frames), (0, 0, 1));
        let mut b = a;
        b[2] ^= 1;
        let s = accumulate_errors(s, &a, &b).unwrap();
        assert_eq!((s.bit_errors, s.frame_errors, s.frames, s.bits), (1, 1, 2, 10));
        let flipped: Vec<u8> = a.iter().map(|x| x ^ 1).collect();
        let s = accumulate_errors(ErrorStats::default(), &a, &flipped).unwrap();
        assert_eq!(s.bit_errors, s.bits);
        assert!(matches!(accumulate_errors(s, &a, &a[..3]), Err(Error::Framing { .. })));
    }

    #[test]
    fn limits() {
        for p in Preset::ALL {
            let c = p.constellation();
            let hi = mutual_information(&c, 40.0, MiMethod::default()).value_bits;
            assert!((hi - c.entropy()).abs() < 0.01, "{p}: {hi}");
            let lo = mutual_information(&c, -25.0, MiMethod::default()).value_bits;
            assert!(lo.abs() < 0.01 && lo >= -1e-12, "{p}: {lo}");
        }
    }

    #[test]
    fn quadrature_nodes_converged() {
        for p in [Preset::Uniform, Preset::P3] {
            let c = p.constellation();
            for snr in [0.0, 8.0, 14.0, 20.0] {
                let a = mutual_information(&c, snr, MiMethod::Quadrature { nodes: 64 }).value_bits;
                let b = mutual_information(&c, snr, MiMethod::Quadrature { nodes: 160 }).value_bits;
                assert!((a - b).abs() < 1e-6, "{p} {snr}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn one_and_two_dimensional_rules_agree() {
        let c = Preset::P2.constellation();
        let axis = Alphabet::axis(&c).unwrap();
        let joint = Alphabet::joint(&c);
        let gh = GaussHermite::new(40);
        for snr in [3.0, 12.0] {
            let nv = noise_variance(snr);
            for rate in [Rate::Symbol, Rate::BitMetric] {
                let a = 2.0 * axis.quadrature_1d(&gh, nv, rate);
                let b = joint.quadrature_2d(&gh, nv, rate);
                assert!((a - b).abs() < 1e-9, "{snr} {rate:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn gmi_below_mi() {
        for p in Preset::ALL {
            let c = p.constellation();
            for snr in [2.0, 10.0, 18.0] {
                let mi = mutual_information(&c, snr, MiMethod::default()).value_bits;
                let gmi = bit_metric_rate(&c, snr, MiMethod::default()).value_bits;
                assert!(gmi <= mi + 1e-9, "{p} {snr}: {gmi} > {mi}");
            }
        }
    }

    #[test]
    fn mi_monotone_in_snr() {
        let c = Preset::P1.constellation();
        let mut last = -1.0;
        for i in 0..50 {
            let v = mutual_information(&c, -10.0 + i as f64, MiMethod::default()).value_bits;
            assert!(v >= last - 1e-12);
            last = v;
        }
    }

    #[test]
    fn required_snr_domain_and_monotone() {
        let p1 = Preset::P1.constellation();
        assert!(matches!(required_snr(&p1, 6.0, 0.05), Err(Error::Domain(_))));
        let h = p1.entropy();
        let near = required_snr(&p1, h - 1e-4, 0.01).unwrap();
        let mid = required_snr(&p1, h - 0.5, 0.01).unwrap();
        assert!(near.is_finite() && near > mid);
    }

    #[test]
    fn threshold_search() {
        let t = find_threshold(0.0, 10.0, 0.01, |s| s >= 3.3);
        assert!((t - 3.3).abs() <= 0.01);
    }
}
