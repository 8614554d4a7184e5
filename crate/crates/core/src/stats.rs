//! Mergeable moment accumulators and normality diagnostics.

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Count, mean vector and centered cross-product matrix of a vector stream.
///
/// Updates use Welford's recurrence; merges use the pairwise formula of
/// Chan, Golub and LeVeque, so `merge` is exact up to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    dim: usize,
    count: u64,
    mean: Vec<f64>,
    // row-major dim x dim, Σ (x - mean)(x - mean)ᵀ
    comoment: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            count: 0,
            mean: vec![0.0; dim],
            comoment: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn push(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.dim, "sample dimension");
        self.count += 1;
        let n = self.count as f64;
        let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        for (m, d) in self.mean.iter_mut().zip(&delta) {
            *m += d / n;
        }
        for i in 0..self.dim {
            let after_i = x[i] - self.mean[i];
            for j in 0..self.dim {
                self.comoment[i * self.dim + j] += delta[j] * after_i;
            }
        }
        // keep exact symmetry
        for i in 0..self.dim {
            for j in 0..i {
                let v = 0.5 * (self.comoment[i * self.dim + j] + self.comoment[j * self.dim + i]);
                self.comoment[i * self.dim + j] = v;
                self.comoment[j * self.dim + i] = v;
            }
        }
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.dim, other.dim, "accumulator dimension");
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        let delta: Vec<f64> = other.mean.iter().zip(&self.mean).map(|(b, a)| b - a).collect();
        let w = na * nb / n;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let k = i * self.dim + j;
                self.comoment[k] += other.comoment[k] + delta[i] * delta[j] * w;
            }
        }
        for (m, d) in self.mean.iter_mut().zip(&delta) {
            *m += d * nb / n;
        }
        self.count += other.count;
    }

    /// Merges in a fixed binary tree: `(0,1), (2,3), ...`, then their results, and so on.
    pub fn merge_tree(mut parts: Vec<Self>) -> Option<Self> {
        while parts.len() > 1 {
            let mut next = Vec::with_capacity(parts.len().div_ceil(2));
            let mut it = parts.into_iter();
            while let Some(mut a) = it.next() {
                if let Some(b) = it.next() {
                    a.merge(&b);
                }
                next.push(a);
            }
            parts = next;
        }
        parts.pop()
    }

    /// Unbiased covariance matrix (row-major). Needs at least two samples.
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let denom = (self.count as f64 - 1.0).max(1.0);
        (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| self.comoment[i * self.dim + j] / denom)
                    .collect()
            })
            .collect()
    }

    /// Standard errors of the mean vector.
    pub fn mean_standard_errors(&self) -> Vec<f64> {
        let cov = self.covariance();
        let n = self.count as f64;
        (0..self.dim).map(|i| (cov[i][i] / n).sqrt()).collect()
    }
}

/// Large-sample standard errors of covariance entries under normality:
/// `Var(ĉ_ij) ≈ (c_ii c_jj + c_ij²) / n`.
pub fn covariance_standard_errors(cov: &[Vec<f64>], n: u64) -> Vec<Vec<f64>> {
    let n = n as f64;
    (0..cov.len())
        .map(|i| {
            (0..cov.len())
                .map(|j| ((cov[i][i] * cov[j][j] + cov[i][j] * cov[i][j]) / n).sqrt())
                .collect()
        })
        .collect()
}

/// Moment-based shape diagnostics of a univariate sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalityStats {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    /// Standard error of `variance` from the sample fourth central moment.
    pub variance_se: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Kolmogorov–Smirnov distance to `N(0, variance)`.
    pub ks_distance: f64,
    pub degenerate: bool,
}

pub const MIN_NORMALITY_SAMPLES: usize = 100;

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Skewness, excess kurtosis and KS distance of `samples`.
///
/// A zero-variance sample is flagged `degenerate` with NaN shape statistics.
pub fn normality_stats(samples: &[f64]) -> Result<NormalityStats> {
    let n = samples.len();
    if n < MIN_NORMALITY_SAMPLES {
        return Err(Error::TooFewSamples {
            got: n,
            need: MIN_NORMALITY_SAMPLES,
        });
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in samples {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let variance = m2 * nf / (nf - 1.0);
    let variance_se = ((m4 - m2 * m2).max(0.0) / nf).sqrt();
    if m2 <= f64::EPSILON * f64::EPSILON * mean.abs().max(1.0) {
        return Ok(NormalityStats {
            n,
            mean,
            variance: 0.0,
            variance_se: 0.0,
            skewness: f64::NAN,
            excess_kurtosis: f64::NAN,
            ks_distance: f64::NAN,
            degenerate: true,
        });
    }
    let skewness = m3 / m2.powf(1.5);
    let excess_kurtosis = m4 / (m2 * m2) - 3.0;
    let sd = variance.sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut ks: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = normal_cdf(x / sd);
        ks = ks.max((f - i as f64 / nf).abs()).max(((i + 1) as f64 / nf - f).abs());
    }
    Ok(NormalityStats {
        n,
        mean,
        variance,
        variance_se,
        skewness,
        excess_kurtosis,
        ks_distance: ks,
        degenerate: false,
    })
}

/// Half-width of the Dvoretzky–Kiefer–Wolfowitz band for one ECDF of size `n`
/// at miscoverage `alpha`.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// DKW-type band for the difference of two independent ECDFs of sizes `n`, `m`.
pub fn dkw_two_sample_epsilon(n: usize, m: usize, alpha: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    ((2.0 / alpha).ln() * (n + m) / (2.0 * n * m)).sqrt()
}

fn ecdf_at(sorted: &[u64], z: u64) -> f64 {
    sorted.partition_point(|&x| x <= z) as f64 / sorted.len() as f64
}

fn support(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut zs: Vec<u64> = a.iter().chain(b).copied().collect();
    zs.sort_unstable();
    zs.dedup();
    zs
}

/// `sup_z |F_a(z) − F_b(z)|` for integer samples.
pub fn ecdf_sup_distance(a: &[u64], b: &[u64]) -> f64 {
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_unstable();
    sb.sort_unstable();
    support(a, b)
        .into_iter()
        .map(|z| (ecdf_at(&sa, z) - ecdf_at(&sb, z)).abs())
        .fold(0.0, f64::max)
}

/// `sup_z (F_upper(z) − F_lower(z))^+`: how far `lower <=_d upper` is violated.
pub fn stochastic_order_violation(lower: &[u64], upper: &[u64]) -> f64 {
    let mut sl = lower.to_vec();
    let mut su = upper.to_vec();
    sl.sort_unstable();
    su.sort_unstable();
    support(lower, upper)
        .into_iter()
        .map(|z| ecdf_at(&su, z) - ecdf_at(&sl, z))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn naive_cov(xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = xs.len() as f64;
        let d = xs[0].len();
        let mean: Vec<f64> = (0..d).map(|i| xs.iter().map(|x| x[i]).sum::<f64>() / n).collect();
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        xs.iter().map(|x| (x[i] - mean[i]) * (x[j] - mean[j])).sum::<f64>()
                            / (n - 1.0)
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn matches_two_pass_covariance() {
        let mut rng = RngStream::new(1, 1);
        let xs: Vec<Vec<f64>> = (0..500)
            .map(|_| {
                let a = rng.standard_normal();
                vec![a, a + rng.standard_normal(), 3.0 + 0.1 * rng.standard_normal()]
            })
            .collect();
        let mut acc = MomentAccumulator::new(3);
        for x in &xs {
            acc.push(x);
        }
        let c = acc.covariance();
        let r = naive_cov(&xs);
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(c[i][j], r[i][j], max_relative = 1e-10, epsilon = 1e-14);
                assert_eq!(c[i][j], c[j][i]);
            }
        }
    }

    proptest! {
        #[test]
        fn merge_equals_joint_accumulation(
            data in proptest::collection::vec(proptest::collection::vec(-100.0f64..100.0, 2), 2..200),
            cut in 0usize..200,
        ) {
            let cut = cut.min(data.len());
            let mut joint = MomentAccumulator::new(2);
            let mut a = MomentAccumulator::new(2);
            let mut b = MomentAccumulator::new(2);
            for (k, x) in data.iter().enumerate() {
                joint.push(x);
                if k < cut { a.push(x) } else { b.push(x) }
            }
            a.merge(&b);
            prop_assert_eq!(a.count(), joint.count());
            let (ca, cj) = (a.covariance(), joint.covariance());
            for i in 0..2 {
                prop_assert!((a.mean()[i] - joint.mean()[i]).abs() <= 1e-10 * (1.0 + joint.mean()[i].abs()));
                for j in 0..2 {
                    prop_assert!((ca[i][j] - cj[i][j]).abs() <= 1e-10 * (1.0 + cj[i][j].abs()));
                    prop_assert_eq!(ca[i][j], ca[j][i]);
                }
            }
        }
    }

    #[test]
    fn merge_tree_is_deterministic() {
        let mut rng = RngStream::new(3, 3);
        let parts: Vec<MomentAccumulator> = (0..5)
            .map(|_| {
                let mut a = MomentAccumulator::new(2);
                for _ in 0..50 {
                    a.push(&[rng.standard_normal(), rng.standard_normal()]);
                }
                a
            })
            .collect();
        let x = MomentAccumulator::merge_tree(parts.clone()).unwrap();
        let y = MomentAccumulator::merge_tree(parts).unwrap();
        assert_eq!(x, y);
        assert_eq!(x.count(), 250);
        assert!(MomentAccumulator::merge_tree(vec![]).is_none());
    }

    #[test]
    fn gaussian_sample_has_small_skew() {
        let mut rng = RngStream::new(8, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.standard_normal()).collect();
        let s = normality_stats(&xs).unwrap();
        assert!(s.skewness.abs() <= 0.05);
        assert!(s.excess_kurtosis.abs() <= 0.1);
        assert!(s.ks_distance < 0.01);
    }

    #[test]
    fn exponential_negative_control() {
        let mut rng = RngStream::new(8, 1);
        let xs: Vec<f64> = (0..100_000).map(|_| -rng.open01().ln()).collect();
        let s = normality_stats(&xs).unwrap();
        assert!((s.skewness - 2.0).abs() < 0.15, "skew {}", s.skewness);
        assert!(s.ks_distance > 0.1);
    }

    #[test]
    fn constant_sample_is_degenerate() {
        let s = normality_stats(&[2.5; 200]).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.variance, 0.0);
        assert!(matches!(
            normality_stats(&[1.0; 10]),
            Err(Error::TooFewSamples { got: 10, .. })
        ));
    }

    #[test]
    fn ecdf_helpers() {
        let a = [0u64, 1, 1, 2];
        let b = [1u64, 2, 2, 3];
        assert_relative_eq!(ecdf_sup_distance(&a, &b), 0.5);
        // a is stochastically smaller than b
        assert_eq!(stochastic_order_violation(&a, &b), 0.0);
        assert_relative_eq!(stochastic_order_violation(&b, &a), 0.5);
        assert_relative_eq!(dkw_epsilon(100_000, 0.01), (200f64.ln() / 200_000.0).sqrt());
    }
}
