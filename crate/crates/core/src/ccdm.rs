//! Constant-composition distribution matching.
//!
//! A matcher maps `k` uniform bits onto a block of `n` amplitude indices whose
//! histogram is fixed by a [`Composition`]. The `k` bits are read as an
//! integer `i < 2^k` and the output is the `i`-th sequence in lexicographic
//! order among all sequences with that composition; decoding ranks a block back
//! into its index. Both directions use exact big-integer arithmetic over
//! multinomial coefficients, so the map is bit-exact and invertible.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::shaping::entropy_bits;
use crate::{Error, Result};

/// Default number of amplitudes per matcher block.
pub const DEFAULT_BLOCK_LENGTH: usize = 288;

/// Exact per-symbol counts of a block.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Composition {
    counts: Vec<usize>,
}

impl Composition {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Domain("composition needs at least one symbol".into()));
        }
        if counts.iter().sum::<usize>() == 0 {
            return Err(Error::Domain("composition must have a positive length".into()));
        }
        Ok(Composition { counts })
    }

    /// Histogram of a symbol block over `alphabet_size` symbols.
    pub fn of(symbols: &[u8], alphabet_size: usize) -> Vec<usize> {
        let mut h = vec![0; alphabet_size];
        for &s in symbols {
            if let Some(c) = h.get_mut(s as usize) {
                *c += 1;
            }
        }
        h
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    /// Block length.
    pub fn n(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Number of distinct blocks, `n! / Π counts[i]!`.
    pub fn multinomial(&self) -> BigUint {
        let mut total = BigUint::one();
        let mut placed = 0u64;
        for &c in &self.counts {
            // Running product of binomials C(placed + j, j) stays integral.
            for j in 1..=c as u64 {
                placed += 1;
                total *= placed;
                total /= j;
            }
        }
        total
    }

    /// `floor(log2(multinomial))`.
    pub fn input_bits(&self) -> usize {
        (self.multinomial().bits() - 1) as usize
    }

    /// Empirical distribution `counts / n`.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// Quantizes a target distribution to counts summing to `n`.
///
/// Every symbol first gets `floor(n·p)`; the symbols still missing are handed
/// out one at a time to the largest remainder `n·p - count`, ties going to the
/// lower index.
pub fn quantize_to_composition(target: &[f64], n: usize) -> Result<Composition> {
    if n == 0 {
        return Err(Error::Domain("block length must be positive".into()));
    }
    if target.is_empty() || target.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::Domain(
            "target must be a non-empty sequence of non-negative probabilities".into(),
        ));
    }
    let total: f64 = target.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("target sums to {total}, not 1")));
    }
    let ideal: Vec<f64> = target.iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = ideal.iter().map(|x| x.floor() as usize).collect();
    let mut remainder: Vec<f64> = ideal
        .iter()
        .zip(&counts)
        .map(|(x, &c)| x - c as f64)
        .collect();
    let mut assigned: usize = counts.iter().sum();
    // Guard against floors overshooting n when the target sums to 1 + eps.
    while assigned > n {
        let i = argmin(&remainder);
        counts[i] -= 1;
        remainder[i] += 1.0;
        assigned -= 1;
    }
    while assigned < n {
        let i = argmax(&remainder);
        counts[i] += 1;
        remainder[i] -= 1.0;
        assigned += 1;
    }
    Composition::new(counts)
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

/// Fixed-to-fixed constant-composition matcher.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matcher {
    composition: Composition,
    k: usize,
    size: BigUint,
}

impl Matcher {
    pub fn new(composition: Composition) -> Self {
        let size = composition.multinomial();
        let k = (size.bits() - 1) as usize;
        Matcher {
            composition,
            k,
            size,
        }
    }

    pub fn composition(&self) -> &Composition {
        &self.composition
    }

    /// Input bits per block.
    pub fn input_bits(&self) -> usize {
        self.k
    }

    /// Output symbols per block.
    pub fn block_length(&self) -> usize {
        self.composition.n()
    }

    /// Matcher rate in bits per output symbol.
    pub fn rate(&self) -> f64 {
        self.k as f64 / self.block_length() as f64
    }

    /// Maps `k` bits (most significant first) to a constant-composition block.
    pub fn encode(&self, bits: &[u8]) -> Result<Vec<u8>> {
        if bits.len() != self.k {
            return Err(Error::framing("matcher input bits", self.k, bits.len()));
        }
        let mut index = BigUint::zero();
        for &b in bits {
            index <<= 1u32;
            if b != 0 {
                index += 1u32;
            }
        }
        Ok(self.unrank(index))
    }

    /// Inverse of [`Matcher::encode`].
    pub fn decode(&self, symbols: &[u8]) -> Result<Vec<u8>> {
        let n = self.block_length();
        if symbols.len() != n {
            return Err(Error::framing("matcher block symbols", n, symbols.len()));
        }
        let alphabet = self.composition.alphabet_size();
        let hist = Composition::of(symbols, alphabet);
        if hist != self.composition.counts || symbols.iter().any(|&s| s as usize >= alphabet) {
            return Err(Error::Matching {
                expected: self.composition.counts.clone(),
                actual: hist,
            });
        }
        let index = self.rank(symbols);
        if index.bits() as usize > self.k {
            return Err(Error::DecodeRange { bits: self.k });
        }
        Ok((0..self.k)
            .rev()
            .map(|i| index.bit(i as u64) as u8)
            .collect())
    }

    /// Lexicographic position of a block among all blocks of the composition.
    pub fn rank(&self, symbols: &[u8]) -> BigUint {
        let mut counts = self.composition.counts.clone();
        let mut remaining = symbols.len() as u64;
        // Number of completions of the current prefix.
        let mut completions = self.size.clone();
        let mut index = BigUint::zero();
        for &s in symbols {
            let s = s as usize;
            for &c in &counts[..s] {
                if c > 0 {
                    index += &completions * c as u64 / remaining;
                }
            }
            completions = completions * counts[s] as u64 / remaining;
            counts[s] -= 1;
            remaining -= 1;
        }
        index
    }

    /// Block at lexicographic position `index`.
    pub fn unrank(&self, mut index: BigUint) -> Vec<u8> {
        debug_assert!(index < self.size);
        let mut counts = self.composition.counts.clone();
        let n = self.block_length();
        let mut out = Vec::with_capacity(n);
        let mut completions = self.size.clone();
        for remaining in (1..=n as u64).rev() {
            for (b, c) in counts.iter_mut().enumerate() {
                if *c == 0 {
                    continue;
                }
                let branch = &completions * *c as u64 / remaining;
                if index < branch {
                    out.push(b as u8);
                    *c -= 1;
                    completions = branch;
                    break;
                }
                index -= branch;
            }
        }
        out
    }

    /// Finite-length penalty `H(target) - k/n` in bits per symbol.
    pub fn rate_loss(&self, target: &[f64]) -> f64 {
        entropy_bits(target) - self.rate()
    }

    /// Number of distinct blocks, as a float (may be `inf` for huge blocks).
    pub fn codebook_size(&self) -> f64 {
        self.size.to_f64().unwrap_or(f64::INFINITY)
    }
}

/// Finite-length penalty of a matcher relative to a target distribution.
pub fn rate_loss(matcher: &Matcher, target: &[f64]) -> f64 {
    matcher.rate_loss(target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Every sequence with the given counts, in lexicographic order, by brute force.
    fn enumerate_lex(counts: &[usize]) -> Vec<Vec<u8>> {
        let n: usize = counts.iter().sum();
        let a = counts.len();
        let mut out = Vec::new();
        let total = a.pow(n as u32);
        for mut code in 0..total {
            let mut seq = vec![0u8; n];
            for pos in (0..n).rev() {
                seq[pos] = (code % a) as u8;
                code /= a;
            }
            if Composition::of(&seq, a) == counts {
                out.push(seq);
            }
        }
        out
    }

    fn bits_of(i: usize, k: usize) -> Vec<u8> {
        (0..k).rev().map(|b| ((i >> b) & 1) as u8).collect()
    }

    fn matcher(counts: &[usize]) -> Matcher {
        Matcher::new(Composition::new(counts.to_vec()).unwrap())
    }

    #[test]
    fn quantizer_examples() {
        let q = |t: &[f64], n| quantize_to_composition(t, n).unwrap().counts().to_vec();
        assert_eq!(q(&[0.25; 4], 8), vec![2, 2, 2, 2]);
        assert_eq!(q(&[0.7, 0.1, 0.1, 0.1], 10), vec![7, 1, 1, 1]);
        assert_eq!(q(&[0.4, 0.3, 0.2, 0.1], 7), vec![3, 2, 1, 1]);
    }

    /// Brute-force oracle: the compositions of n minimizing the largest
    /// deviation `|counts[i] - n·target[i]|`.
    fn best_compositions(target: &[f64], n: usize) -> (f64, Vec<Vec<usize>>) {
        let mut best = f64::INFINITY;
        let mut argbest = Vec::new();
        for a in 0..=n {
            for b in 0..=n - a {
                for c in 0..=n - a - b {
                    let counts = vec![a, b, c, n - a - b - c];
                    let dev = counts
                        .iter()
                        .zip(target)
                        .map(|(&k, &p)| (k as f64 - p * n as f64).abs())
                        .fold(0.0, f64::max);
                    if dev < best - 1e-12 {
                        best = dev;
                        argbest = vec![counts];
                    } else if (dev - best).abs() <= 1e-12 {
                        argbest.push(counts);
                    }
                }
            }
        }
        (best, argbest)
    }

    #[test]
    fn quantizer_agrees_with_exhaustive_search() {
        let (_, best) = best_compositions(&[0.4, 0.3, 0.2, 0.1], 7);
        assert_eq!(best, vec![vec![3, 2, 1, 1]]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let w: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
            let z: f64 = w.iter().sum();
            let t: Vec<f64> = w.iter().map(|x| x / z).collect();
            let n = rng.random_range(1..20);
            let got = quantize_to_composition(&t, n).unwrap();
            let dev = got
                .counts()
                .iter()
                .zip(&t)
                .map(|(&k, &p)| (k as f64 - p * n as f64).abs())
                .fold(0.0, f64::max);
            let (best, _) = best_compositions(&t, n);
            assert!(dev <= best + 1e-9, "{t:?} n={n}: {got:?}");
        }
    }

    #[test]
    fn multinomial_values() {
        assert_eq!(matcher(&[2, 2, 2, 2]).size, BigUint::from(2520u32));
        assert_eq!(matcher(&[2, 2]).input_bits(), 2);
        assert_eq!(matcher(&[5, 0, 0, 0]).input_bits(), 0);
    }

    #[test]
    fn encode_follows_lexicographic_order() {
        for counts in [&[1usize, 1][..], &[2, 2], &[2, 1, 1], &[3, 2, 1, 0], &[1, 1, 1, 1]] {
            let m = matcher(counts);
            let lex = enumerate_lex(counts);
            for i in 0..1usize << m.input_bits() {
                assert_eq!(m.encode(&bits_of(i, m.input_bits())).unwrap(), lex[i]);
            }
            for (i, seq) in lex.iter().enumerate() {
                assert_eq!(m.rank(seq), BigUint::from(i));
            }
        }
        let m = matcher(&[1, 1]);
        assert_eq!(m.encode(&[0]).unwrap(), vec![0, 1]);
        assert_eq!(m.encode(&[1]).unwrap(), vec![1, 0]);
    }

    #[test]
    fn single_letter_block() {
        let m = matcher(&[6, 0, 0, 0]);
        assert_eq!(m.encode(&[]).unwrap(), vec![0; 6]);
        assert_eq!(m.decode(&[0; 6]).unwrap(), Vec::<u8>::new());
        assert!((m.rate_loss(&[0.25; 4]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_roundtrip_small() {
        let m = matcher(&[2, 2]);
        let mut outputs = Vec::new();
        for i in 0..4 {
            let bits = bits_of(i, 2);
            let block = m.encode(&bits).unwrap();
            assert_eq!(Composition::of(&block, 2), vec![2, 2]);
            assert_eq!(m.decode(&block).unwrap(), bits);
            outputs.push(block);
        }
        outputs.sort();
        outputs.dedup();
        assert_eq!(outputs.len(), 4);
    }

    #[test]
    fn decode_errors() {
        let m = matcher(&[2, 2]);
        assert!(matches!(m.decode(&[0, 0, 0, 1]), Err(Error::Matching { .. })));
        assert!(matches!(m.decode(&[0, 1]), Err(Error::Framing { .. })));
        assert!(matches!(m.encode(&[0]), Err(Error::Framing { .. })));
        // Lexicographic ranks 4 and 5 lie outside the 2-bit input range.
        assert!(matches!(m.decode(&[1, 1, 0, 0]), Err(Error::DecodeRange { bits: 2 })));
        assert!(matches!(m.decode(&[1, 0, 1, 0]), Err(Error::DecodeRange { bits: 2 })));
    }

    #[test]
    fn rate_loss_uniform_small() {
        let m = matcher(&[2, 2, 2, 2]);
        assert_eq!(m.input_bits(), 11);
        assert!((m.rate_loss(&[0.25; 4]) - 0.625).abs() < 1e-12);
    }

    #[test]
    fn rate_loss_shrinks_with_length() {
        let target = [0.6112496045542721, 0.30415903682435486, 0.0753121403694933, 0.009279218251879717];
        let losses: Vec<f64> = [16, 64, 256, 1024]
            .iter()
            .map(|&n| {
                let m = Matcher::new(quantize_to_composition(&target, n).unwrap());
                m.rate_loss(&target)
            })
            .collect();
        for w in losses.windows(2) {
            assert!(w[1] < w[0], "{losses:?}");
        }
        assert!(losses[3] < 0.02);
    }

    #[test]
    fn randomized_roundtrip_n96() {
        let m = Matcher::new(quantize_to_composition(&[0.45, 0.3, 0.17, 0.08], 96).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(96);
        for _ in 0..1000 {
            let bits: Vec<u8> = (0..m.input_bits()).map(|_| rng.random_range(0..2)).collect();
            let block = m.encode(&bits).unwrap();
            assert_eq!(Composition::of(&block, 4), m.composition().counts());
            assert_eq!(m.decode(&block).unwrap(), bits);
        }
    }

    proptest! {
        #[test]
        fn rate_never_exceeds_empirical_entropy(counts in proptest::collection::vec(0usize..40, 1..5)) {
            prop_assume!(counts.iter().sum::<usize>() > 0);
            let c = Composition::new(counts).unwrap();
            let m = Matcher::new(c.clone());
            let n = c.n() as f64;
            prop_assert!(m.input_bits() as f64 <= n * entropy_bits(&c.frequencies()) + 1e-9);
        }

        #[test]
        fn injective_on_random_pairs(seed in any::<u64>()) {
            let m = Matcher::new(quantize_to_composition(&[0.5, 0.3, 0.15, 0.05], 64).unwrap());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<u8> = (0..m.input_bits()).map(|_| rng.random_range(0..2)).collect();
            let mut b = a.clone();
            let flip = rng.random_range(0..b.len());
            b[flip] ^= 1;
            prop_assert_ne!(m.encode(&a).unwrap(), m.encode(&b).unwrap());
        }
    }
}
