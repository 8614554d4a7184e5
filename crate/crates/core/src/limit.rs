//! The Gaussian limit `X(u) = B(1 − u) + D(u)` on finite grids.
//!
//! `B` is a Brownian motion and `D` an independent centered Gaussian process
//! with independent values and `E D²(u) = u`. `D` has no path version, so only
//! grid samples are exposed.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Checks that `u` is nonempty, inside `[0, 1]` and strictly increasing.
pub fn validate_u_grid(u: &[f64]) -> Result<()> {
    if u.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(&bad) = u.iter().find(|&&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::GridOutOfRange(bad));
    }
    if u.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::GridNotIncreasing);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitGridSample {
    pub u_grid: Vec<f64>,
    pub values: Vec<f64>,
}

/// Draws `(B(1 − u_i))_i` and `(D(u_i))_i` separately.
///
/// The first `n` normals drive the Brownian increments over the partition
/// `0 < 1 − u_n < ... < 1 − u_1`; the next `n` drive `D`.
pub fn sample_limit_parts(u_grid: &[f64], rng: &mut RngStream) -> Result<(Vec<f64>, Vec<f64>)> {
    validate_u_grid(u_grid)?;
    let n = u_grid.len();
    let mut brownian = vec![0.0; n];
    let mut time = 0.0;
    let mut level = 0.0;
    for i in (0..n).rev() {
        let next = 1.0 - u_grid[i];
        level += (next - time).max(0.0).sqrt() * rng.standard_normal();
        brownian[i] = level;
        time = next;
    }
    let independent = u_grid.iter().map(|&u| u.sqrt() * rng.standard_normal()).collect();
    Ok((brownian, independent))
}

/// Exact draw of `(X(u_1), ..., X(u_n))`.
pub fn sample_limit_fdd(u_grid: &[f64], rng: &mut RngStream) -> Result<LimitGridSample> {
    let (b, d) = sample_limit_parts(u_grid, rng)?;
    Ok(LimitGridSample {
        u_grid: u_grid.to_vec(),
        values: b.iter().zip(&d).map(|(x, y)| x + y).collect(),
    })
}

/// `cov(X(u), X(v))`: `(1 − u) ∧ (1 − v)` off the diagonal, 1 on it.
///
/// The diagonal is detected by exact equality.
pub fn limit_covariance(u: f64, v: f64) -> f64 {
    #[allow(clippy::float_cmp)]
    if u == v {
        1.0
    } else {
        (1.0 - u).min(1.0 - v)
    }
}

pub fn limit_covariance_matrix(u_grid: &[f64]) -> Vec<Vec<f64>> {
    u_grid
        .iter()
        .map(|&u| u_grid.iter().map(|&v| limit_covariance(u, v)).collect())
        .collect()
}

/// `Var Σ α_i X(u_i) = Σ α_i² + 2 Σ_{k<m} α_k α_m (1 − u_m)` for increasing `u`.
pub fn cramer_wold_variance(alphas: &[f64], u_grid: &[f64]) -> Result<f64> {
    if alphas.len() != u_grid.len() {
        return Err(Error::LengthMismatch(alphas.len(), u_grid.len()));
    }
    validate_u_grid(u_grid)?;
    let mut total: f64 = alphas.iter().map(|a| a * a).sum();
    for m in 0..alphas.len() {
        for k in 0..m {
            total += 2.0 * alphas[k] * alphas[m] * (1.0 - u_grid[m]);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{covariance_standard_errors, normality_stats, MomentAccumulator};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn covariance_formula() {
        assert_relative_eq!(limit_covariance(0.3, 0.7), 0.3, max_relative = 1e-15);
        assert_eq!(limit_covariance(0.5, 0.5), 1.0);
        assert_eq!(limit_covariance(1.0, 1.0), 1.0);
        assert_eq!(limit_covariance(1.0, 0.4), 0.0);
    }

    #[test]
    fn cramer_wold_examples() {
        assert_eq!(cramer_wold_variance(&[1.0], &[0.4]).unwrap(), 1.0);
        assert_relative_eq!(cramer_wold_variance(&[1.0, 1.0], &[0.2, 0.6]).unwrap(), 2.8);
        assert_relative_eq!(cramer_wold_variance(&[1.0, -1.0], &[0.2, 0.6]).unwrap(), 1.2);
        assert_eq!(
            cramer_wold_variance(&[1.0, 1.0], &[0.6, 0.2]),
            Err(Error::GridNotIncreasing)
        );
        assert_eq!(
            cramer_wold_variance(&[1.0], &[0.2, 0.6]),
            Err(Error::LengthMismatch(1, 2))
        );
    }

    #[test]
    fn rejects_bad_grids() {
        let mut rng = RngStream::new(0, 0);
        assert_eq!(sample_limit_fdd(&[0.5, 0.2], &mut rng).err(), Some(Error::GridNotIncreasing));
        assert_eq!(sample_limit_fdd(&[1.5], &mut rng).err(), Some(Error::GridOutOfRange(1.5)));
        assert_eq!(sample_limit_fdd(&[], &mut rng).err(), Some(Error::EmptyGrid));
    }

    #[test]
    fn endpoint_marginals() {
        // X(1) = D(1), X(0) = B(1): both standard normal
        for u in [0.0, 1.0] {
            let xs: Vec<f64> = (0..20_000)
                .map(|i| sample_limit_fdd(&[u], &mut RngStream::new(6, i)).unwrap().values[0])
                .collect();
            let s = normality_stats(&xs).unwrap();
            assert!((s.variance - 1.0).abs() < 4.0 * s.variance_se);
            assert!(s.mean.abs() < 4.0 / (20_000f64).sqrt());
        }
        let (b, _) = sample_limit_parts(&[1.0], &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(b, vec![0.0]);
        let (_, d) = sample_limit_parts(&[0.0], &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(d, vec![0.0]);
    }

    #[test]
    fn two_point_covariance() {
        let u = [0.25, 0.75];
        let mut acc = MomentAccumulator::new(2);
        let n = 100_000;
        for i in 0..n {
            acc.push(&sample_limit_fdd(&u, &mut RngStream::new(12, i)).unwrap().values);
        }
        let c = acc.covariance();
        let se = covariance_standard_errors(&c, n);
        for i in 0..2 {
            for j in 0..2 {
                let target = limit_covariance(u[i], u[j]);
                assert!((c[i][j] - target).abs() < 3.0 * se[i][j], "{i}{j}: {}", c[i][j]);
            }
        }
    }

    #[test]
    fn regenerating_reproduces() {
        let u = [0.0, 0.3, 1.0];
        let a = sample_limit_fdd(&u, &mut RngStream::new(9, 9)).unwrap();
        let b = sample_limit_fdd(&u, &mut RngStream::new(9, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn not_self_similar() {
        let c = 0.5;
        let (u, v) = (0.4, 0.8);
        assert_ne!(limit_covariance(c * u, c * v), c * limit_covariance(u, v));
    }

    proptest! {
        #[test]
        fn cramer_wold_is_quadratic_form(
            alphas in proptest::collection::vec(-5.0f64..5.0, 1..8),
            raw in proptest::collection::vec(0.0f64..1.0, 8),
        ) {
            let mut u: Vec<f64> = raw[..alphas.len()].to_vec();
            u.sort_by(f64::total_cmp);
            u.dedup();
            prop_assume!(u.len() == alphas.len());
            let c = limit_covariance_matrix(&u);
            let mut q = 0.0;
            let mut scale = 0.0;
            for i in 0..u.len() {
                for j in 0..u.len() {
                    q += alphas[i] * c[i][j] * alphas[j];
                    scale += (alphas[i] * c[i][j] * alphas[j]).abs();
                }
            }
            let v = cramer_wold_variance(&alphas, &u).unwrap();
            prop_assert!((v - q).abs() <= 1e-12 * scale.max(1e-300));
        }
    }
}
