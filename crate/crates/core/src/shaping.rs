//! Constellations, the Maxwell-Boltzmann family and operating points.
//!
//! Points live on the 64-QAM grid `{±1, ±3, ±5, ±7}²` and are rescaled so
//! that the average energy under the point distribution is one. Each point
//! is addressed by its 6-bit label: the upper three bits label the in-phase
//! axis, the lower three the quadrature axis. A per-axis sub-label is
//! `sign << 2 | gray(amplitude index)`, with sign bit 0 for positive levels,
//! so every pair of neighbouring levels on an axis differs in one bit.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Bit levels of 64-QAM.
pub const BITS_PER_SYMBOL: u32 = 6;
/// Points of 64-QAM.
pub const POINTS: usize = 1 << BITS_PER_SYMBOL;
/// Unnormalized 8-ASK amplitude levels of one axis.
pub const AMPLITUDES: [f64; 4] = [1.0, 3.0, 5.0, 7.0];

/// Largest entropy deviation accepted by [`solve_nu_for_entropy`].
pub const ENTROPY_TOLERANCE: f64 = 1e-6;
const MAX_BISECTION_STEPS: usize = 200;

/// Reflected binary code of an amplitude index.
pub fn gray(index: usize) -> u8 {
    (index ^ (index >> 1)) as u8
}

/// Inverse of [`gray`] on two bits.
pub fn gray_inverse(code: u8) -> usize {
    let c = code as usize;
    c ^ (c >> 1)
}

/// Per-axis 3-bit sub-label of a level.
pub fn axis_sublabel(negative: bool, amplitude: usize) -> u8 {
    ((negative as u8) << 2) | gray(amplitude)
}

/// Splits a 3-bit sub-label into (negative, amplitude index).
pub fn split_sublabel(sublabel: u8) -> (bool, usize) {
    (sublabel & 0b100 != 0, gray_inverse(sublabel & 0b11))
}

/// Unnormalized axis level carried by a sub-label.
pub fn sublabel_level(sublabel: u8) -> f64 {
    let (negative, amplitude) = split_sublabel(sublabel);
    if negative {
        -AMPLITUDES[amplitude]
    } else {
        AMPLITUDES[amplitude]
    }
}

/// Shannon entropy in bits with `0 log 0 = 0`.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Named distributions of the rate-adaptive operating points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Preset {
    P1,
    P2,
    P3,
    P4,
    Uniform,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::P1,
        Preset::P2,
        Preset::P3,
        Preset::P4,
        Preset::Uniform,
    ];
    pub const SHAPED: [Preset; 4] = [Preset::P1, Preset::P2, Preset::P3, Preset::P4];

    /// Entropy in bits per QAM symbol that defines the preset.
    pub fn entropy_target(self) -> f64 {
        match self {
            Preset::P1 => 5.73,
            Preset::P2 => 5.23,
            Preset::P3 => 4.60,
            Preset::P4 => 4.13,
            Preset::Uniform => 6.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::P1 => "P1",
            Preset::P2 => "P2",
            Preset::P3 => "P3",
            Preset::P4 => "P4",
            Preset::Uniform => "uniform",
        }
    }

    /// The Maxwell-Boltzmann parameter whose entropy matches the preset.
    pub fn parameter(self) -> MaxwellBoltzmann {
        match self {
            Preset::Uniform => MaxwellBoltzmann::UNIFORM,
            p => solve_nu_for_entropy(p.entropy_target())
                .expect("preset entropies lie inside the reachable range"),
        }
    }

    pub fn constellation(self) -> ShapedConstellation {
        let mut c = self.parameter().constellation();
        c.id = DistributionId::Preset(self);
        c
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "P1" | "p1" => Ok(Preset::P1),
            "P2" | "p2" => Ok(Preset::P2),
            "P3" | "p3" => Ok(Preset::P3),
            "P4" | "p4" => Ok(Preset::P4),
            "uniform" | "Uniform" | "UNIFORM" => Ok(Preset::Uniform),
            other => Err(Error::Domain(format!("unknown preset `{other}`"))),
        }
    }
}

/// Identifies where a constellation's distribution came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionId {
    Preset(Preset),
    MaxwellBoltzmann(f64),
    Custom,
}

impl fmt::Display for DistributionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionId::Preset(p) => write!(f, "{p}"),
            DistributionId::MaxwellBoltzmann(nu) => write!(f, "mb:{nu}"),
            DistributionId::Custom => f.write_str("custom"),
        }
    }
}

/// Shaping exponent of `P(x) ∝ exp(-nu·|x|²)` over the unnormalized grid.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MaxwellBoltzmann(f64);

impl MaxwellBoltzmann {
    pub const UNIFORM: MaxwellBoltzmann = MaxwellBoltzmann(0.0);

    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() || nu < 0.0 {
            return Err(Error::Domain(format!(
                "shaping exponent must be finite and non-negative, got {nu}"
            )));
        }
        Ok(MaxwellBoltzmann(nu))
    }

    pub fn nu(self) -> f64 {
        self.0
    }

    /// Per-axis amplitude distribution over [`AMPLITUDES`].
    pub fn amplitude_probs(self) -> [f64; 4] {
        // Shifting the exponent by the smallest |a|² keeps large nu from
        // underflowing every weight.
        let a0 = AMPLITUDES[0] * AMPLITUDES[0];
        let w = AMPLITUDES.map(|a| (-self.0 * (a * a - a0)).exp());
        let z: f64 = w.iter().sum();
        w.map(|x| x / z)
    }

    /// Entropy of the 64-QAM distribution in bits per symbol.
    pub fn entropy(self) -> f64 {
        2.0 * (1.0 + entropy_bits(&self.amplitude_probs()))
    }

    pub fn constellation(self) -> ShapedConstellation {
        let mut c = ShapedConstellation::from_amplitude_probs(self.amplitude_probs())
            .expect("Maxwell-Boltzmann weights form a distribution");
        c.id = DistributionId::MaxwellBoltzmann(self.0);
        c
    }
}

/// Maxwell-Boltzmann shaped 64-QAM, normalized to unit average energy.
pub fn mb_distribution(nu: f64) -> Result<ShapedConstellation> {
    Ok(MaxwellBoltzmann::new(nu)?.constellation())
}

/// Finds the shaping exponent whose distribution has `target_bits` entropy.
///
/// Entropy falls strictly from 6 bits at `nu = 0` towards 2 bits, the four
/// innermost points, as `nu` grows, so targets at or below 2 bits cannot be
/// reached and are rejected along with anything above 6.
pub fn solve_nu_for_entropy(target_bits: f64) -> Result<MaxwellBoltzmann> {
    if !(target_bits > 0.0 && target_bits <= 6.0) {
        return Err(Error::Domain(format!(
            "target entropy {target_bits} outside (0, 6] bits"
        )));
    }
    if target_bits <= 2.0 {
        return Err(Error::Domain(format!(
            "target entropy {target_bits} is not reachable by a Maxwell-Boltzmann \
             64-QAM distribution (infimum 2 bits)"
        )));
    }
    let entropy = |nu: f64| MaxwellBoltzmann(nu).entropy();
    if (entropy(0.0) - target_bits).abs() <= ENTROPY_TOLERANCE {
        return Ok(MaxwellBoltzmann::UNIFORM);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while entropy(hi) > target_bits {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Domain(format!(
                "target entropy {target_bits} too close to the 2-bit limit"
            )));
        }
    }
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let h = entropy(mid);
        if (h - target_bits).abs() <= ENTROPY_TOLERANCE {
            return Ok(MaxwellBoltzmann(mid));
        }
        if h > target_bits {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Domain(format!(
        "bisection for entropy {target_bits} did not converge"
    )))
}

/// 64-QAM with a per-point probability mass.
///
/// Points are indexed by their label: `points()[l]` carries label `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapedConstellation {
    points: Vec<Complex64>,
    labels: Vec<u8>,
    probs: Vec<f64>,
    scale: f64,
    amplitude_probs: Option<[f64; 4]>,
    id: DistributionId,
}

impl ShapedConstellation {
    /// Builds a constellation from any distribution over the 64 labels.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.len() != POINTS {
            return Err(Error::framing("point probabilities", POINTS, probs.len()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Domain(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let grid: Vec<Complex64> = (0..POINTS as u8).map(grid_point).collect();
        let energy: f64 = grid
            .iter()
            .zip(&probs)
            .map(|(g, p)| p * g.norm_sqr())
            .sum();
        let scale = energy.sqrt().recip();
        let amplitude_probs = detect_product_form(&probs);
        Ok(ShapedConstellation {
            points: grid.into_iter().map(|g| g * scale).collect(),
            labels: (0..POINTS as u8).collect(),
            probs,
            scale,
            amplitude_probs,
            id: DistributionId::Custom,
        })
    }

    /// Builds the product distribution of two identical 8-ASK axes with
    /// uniform signs and the given amplitude distribution over [`AMPLITUDES`].
    pub fn from_amplitude_probs(amplitude_probs: [f64; 4]) -> Result<Self> {
        if amplitude_probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Domain(
                "amplitude probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = amplitude_probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "amplitude probabilities sum to {total}, not 1"
            )));
        }
        let a = amplitude_probs.map(|p| p / total);
        let axis = |sub: u8| 0.5 * a[split_sublabel(sub).1];
        let probs = (0..POINTS as u8)
            .map(|l| axis(l >> 3) * axis(l & 0b111))
            .collect::<Vec<_>>();
        // Rounding in the products may leave the sum a few ulp away from one.
        let z: f64 = probs.iter().sum();
        let mut c = Self::from_probs(probs.into_iter().map(|p| p / z).collect())?;
        c.amplitude_probs = Some(a);
        Ok(c)
    }

    pub fn uniform() -> Self {
        Preset::Uniform.constellation()
    }

    pub fn id(&self) -> DistributionId {
        self.id
    }

    pub fn with_id(mut self, id: DistributionId) -> Self {
        self.id = id;
        self
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn bits_per_symbol(&self) -> u32 {
        BITS_PER_SYMBOL
    }

    /// Factor mapping the unnormalized grid onto the unit-energy points.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Per-axis amplitude distribution, when the constellation is a product
    /// of two identical 8-ASK axes with uniform signs.
    pub fn amplitude_probs(&self) -> Option<[f64; 4]> {
        self.amplitude_probs
    }

    /// Normalized axis level of a 3-bit sub-label.
    pub fn axis_level(&self, sublabel: u8) -> f64 {
        sublabel_level(sublabel) * self.scale
    }

    pub fn average_energy(&self) -> f64 {
        self.points
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| p * x.norm_sqr())
            .sum()
    }

    /// Entropy in bits per QAM symbol.
    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.probs)
    }
}

/// Entropy of a constellation's distribution in bits per QAM symbol.
pub fn entropy(c: &ShapedConstellation) -> f64 {
    c.entropy()
}

fn grid_point(label: u8) -> Complex64 {
    Complex64::new(sublabel_level(label >> 3), sublabel_level(label & 0b111))
}

fn detect_product_form(probs: &[f64]) -> Option<[f64; 4]> {
    let mut amp = [0.0; 4];
    for l in 0..POINTS as u8 {
        let (_, ai) = split_sublabel(l >> 3);
        amp[ai] += probs[l as usize];
    }
    let axis = |sub: u8| 0.5 * amp[split_sublabel(sub).1];
    let matches = (0..POINTS as u8).all(|l| {
        let expected = axis(l >> 3) * axis(l & 0b111);
        (probs[l as usize] - expected).abs() <= 1e-12
    });
    matches.then_some(amp)
}

/// Code rate as an exact fraction `num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodeRate {
    num: u64,
    den: u64,
}

impl CodeRate {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || num >= den {
            return Err(Error::Domain(format!(
                "code rate {num}/{den} outside (0, 1)"
            )));
        }
        let g = gcd(num, den);
        Ok(CodeRate {
            num: num / g,
            den: den / g,
        })
    }

    /// Rate of a code with the given overhead in percent, `100/(100 + oh)`.
    pub fn from_overhead_percent(overhead: u64) -> Result<Self> {
        Self::new(100, 100 + overhead)
    }

    pub fn num(self) -> u64 {
        self.num
    }

    pub fn den(self) -> u64 {
        self.den
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Overhead `1/c - 1` as a fraction.
    pub fn overhead(self) -> f64 {
        (self.den - self.num) as f64 / self.num as f64
    }
}

impl fmt::Display for CodeRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Bits per QAM symbol left after spending `(1 - c)·m` on parity.
pub fn transmission_rate(entropy_bits: f64, code_rate: f64, bits_per_symbol: u32) -> f64 {
    entropy_bits - (1.0 - code_rate) * bits_per_symbol as f64
}

/// One rate-adaptation setting of the transceiver.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub distribution_id: DistributionId,
    pub entropy_bits: f64,
    pub code_rate: CodeRate,
    pub rate_bits: f64,
    pub net_rate_gbps: f64,
    pub baud_ghz: f64,
    pub polarizations: u32,
}

pub fn operating_point(
    dist: &ShapedConstellation,
    code_rate: CodeRate,
    baud_ghz: f64,
    polarizations: u32,
) -> Result<OperatingPoint> {
    let c = code_rate.value();
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Domain(format!("code rate {code_rate} outside (0, 1)")));
    }
    let entropy_bits = dist.entropy();
    let rate_bits = transmission_rate(entropy_bits, c, dist.bits_per_symbol());
    Ok(OperatingPoint {
        distribution_id: dist.id(),
        entropy_bits,
        code_rate,
        rate_bits,
        net_rate_gbps: rate_bits * baud_ghz * polarizations as f64,
        baud_ghz,
        polarizations,
    })
}
