//! Gauss-Hermite quadrature for `∫ f(t) exp(-t²) dt`.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Roots of the Hermite polynomial by Newton iteration on the
    /// orthonormal three-term recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "at least one node");
        let pim4 = PI.powf(-0.25);
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let nf = n as f64;
        let mut z = 0.0;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-14 * z1.abs().max(1.0) {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        GaussHermite {
            nodes: x,
            weights: w,
        }
    }

    /// `E[f(N)]` for `N ~ Normal(0, variance)`.
    pub fn gaussian_expectation(&self, variance: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let s = (2.0 * variance).sqrt();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * f(s * t))
            .sum::<f64>()
            / PI.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `∫ t^(2k) exp(-t²) dt = Γ(k + 1/2) = (2k-1)!! √π / 2^k`.
    fn even_moment(k: u32) -> f64 {
        let mut v = PI.sqrt();
        for j in 1..=k {
            v *= (2 * j - 1) as f64 / 2.0;
        }
        v
    }

    #[test]
    fn integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 20, 48, 64, 100] {
            let gh = GaussHermite::new(n);
            for k in 0..n.min(12) as u32 {
                let got: f64 = gh
                    .nodes
                    .iter()
                    .zip(&gh.weights)
                    .map(|(t, w)| w * t.powi(2 * k as i32))
                    .sum();
                let want = even_moment(k);
                assert!((got - want).abs() <= 1e-10 * want, "n={n} k={k}: {got} vs {want}");
                let terms = gh.nodes.iter().zip(&gh.weights).map(|(t, w)| w * t.powi(2 * k as i32 + 1));
                let (odd, scale) = terms.fold((0.0, 0.0), |(s, a), v| (s + v, a + v.abs()));
                assert!(odd.abs() <= 1e-12 * scale.max(1.0), "n={n} k={k}: {odd}");
            }
        }
    }

    #[test]
    fn gaussian_second_moment() {
        let gh = GaussHermite::new(20);
        assert!((gh.gaussian_expectation(0.3, |n| n * n) - 0.3).abs() < 1e-12);
    }
}
