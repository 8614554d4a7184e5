//! Distributional checks on the counting processes `N` and `N*`.

use serde::Serialize;

use super::pool::fan_out;
use crate::error::Result;
use crate::jump::{DelayLaw, JumpLaw};
use crate::renewal::{count_renewals, PathCursor};
use crate::rng::RngStream;
use crate::stats::{dkw_two_sample_epsilon, ecdf_sup_distance, normality_stats, stochastic_order_violation, NormalityStats};

const BAND_ALPHA: f64 = 0.01;
const MEAN_SE_MULTIPLE: f64 = 5.0;

fn mean_and_var(xs: &[u64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
    let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowComparison {
    pub s: f64,
    pub ks_distance: f64,
    pub band: f64,
    pub mean_backward: f64,
    pub mean_forward: f64,
    pub mean_difference_se: f64,
    pub within_band: bool,
    pub means_match: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackwardInvarianceReport {
    pub t: f64,
    pub replications: u64,
    pub windows: Vec<WindowComparison>,
    pub pass: bool,
}

/// Compares `N*(t) − N*((t − s_j)−)` with `N*(s_j)` on independent samples.
///
/// Backward windows use streams `0..n`, forward counts use `n..2n`. The left
/// limit is taken with the strict inequality `S*_k < t − s`.
pub fn backward_invariance_check(
    delay: &DelayLaw,
    t: f64,
    s_grid: &[f64],
    replications: u64,
    seed: u64,
    workers: usize,
) -> BackwardInvarianceReport {
    let k = s_grid.len();
    let backward: Vec<Vec<u64>> = fan_out(replications, workers, |range| {
        range
            .map(|r| {
                let mut cursor = PathCursor::delayed(delay, RngStream::new(seed, r));
                let mut counts = vec![0u64; k];
                loop {
                    let x = cursor.stream_next();
                    if x > t {
                        break;
                    }
                    for (c, &s) in counts.iter_mut().zip(s_grid) {
                        if x >= t - s {
                            *c += 1;
                        }
                    }
                }
                counts
            })
            .collect::<Vec<_>>()
    })
    .concat();
    let horizon = s_grid.iter().copied().fold(0.0, f64::max);
    let forward: Vec<Vec<u64>> = fan_out(replications, workers, |range| {
        range
            .map(|r| {
                let mut cursor = PathCursor::delayed(delay, RngStream::new(seed, replications + r));
                let mut counts = vec![0u64; k];
                loop {
                    let x = cursor.stream_next();
                    if x > horizon {
                        break;
                    }
                    for (c, &s) in counts.iter_mut().zip(s_grid) {
                        if x <= s {
                            *c += 1;
                        }
                    }
                }
                counts
            })
            .collect::<Vec<_>>()
    })
    .concat();
    let n = replications as usize;
    let band = dkw_two_sample_epsilon(n, n, BAND_ALPHA);
    let windows: Vec<WindowComparison> = s_grid
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            let a: Vec<u64> = backward.iter().map(|row| row[j]).collect();
            let b: Vec<u64> = forward.iter().map(|row| row[j]).collect();
            let ks = ecdf_sup_distance(&a, &b);
            let (ma, va) = mean_and_var(&a);
            let (mb, vb) = mean_and_var(&b);
            let se = ((va + vb) / n as f64).sqrt();
            WindowComparison {
                s,
                ks_distance: ks,
                band,
                mean_backward: ma,
                mean_forward: mb,
                mean_difference_se: se,
                within_band: ks <= band,
                means_match: (ma - mb).abs() <= MEAN_SE_MULTIPLE * se,
            }
        })
        .collect();
    let pass = windows.iter().all(|w| w.within_band && w.means_match);
    BackwardInvarianceReport {
        t,
        replications,
        windows,
        pass,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubadditivityReport {
    pub s: f64,
    pub t: f64,
    pub replications: u64,
    /// `sup_z (F_{N(t)}(z) − F_{N(t+s)−N(s)}(z))^+`.
    pub violation: f64,
    pub band: f64,
    pub mean_increment: f64,
    pub mean_count: f64,
    pub pass: bool,
}

/// Checks `N(t + s) − N(s) <=_d N(t)` up to the two-sample DKW band.
pub fn subadditivity_check(
    law: &JumpLaw,
    s: f64,
    t: f64,
    replications: u64,
    seed: u64,
    workers: usize,
) -> SubadditivityReport {
    let increments: Vec<u64> = fan_out(replications, workers, |range| {
        range
            .map(|r| {
                let mut cursor = PathCursor::zero_delayed(law, RngStream::new(seed, r));
                let mut c = 0;
                loop {
                    let x = cursor.stream_next();
                    if x > s + t {
                        break;
                    }
                    if x > s {
                        c += 1;
                    }
                }
                c
            })
            .collect::<Vec<_>>()
    })
    .concat();
    let counts: Vec<u64> = fan_out(replications, workers, |range| {
        range
            .map(|r| count_renewals(law, None, t, RngStream::new(seed, replications + r)))
            .collect::<Vec<_>>()
    })
    .concat();
    let n = replications as usize;
    let band = dkw_two_sample_epsilon(n, n, BAND_ALPHA);
    let violation = stochastic_order_violation(&increments, &counts);
    SubadditivityReport {
        s,
        t,
        replications,
        violation,
        band,
        mean_increment: mean_and_var(&increments).0,
        mean_count: mean_and_var(&counts).0,
        pass: violation <= band,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenewalCltReport {
    pub t: f64,
    pub replications: u64,
    pub normality: NormalityStats,
}

/// Shape of `(N(t) − t/μ) / √(σ² μ^{-3} t)` across replications.
pub fn renewal_clt_check(
    law: &JumpLaw,
    t: f64,
    replications: u64,
    seed: u64,
    workers: usize,
) -> Result<RenewalCltReport> {
    let (mu, var, _) = law.moments();
    let scale = (var / mu.powi(3) * t).sqrt();
    let z: Vec<f64> = fan_out(replications, workers, |range| {
        range
            .map(|r| (count_renewals(law, None, t, RngStream::new(seed, r)) as f64 - t / mu) / scale)
            .collect::<Vec<_>>()
    })
    .concat();
    Ok(RenewalCltReport {
        t,
        replications,
        normality: normality_stats(&z)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElementaryRenewalReport {
    pub t: f64,
    pub replications: u64,
    pub mean_count: f64,
    /// `E N(t) / (t / μ)`.
    pub ratio: f64,
    pub ratio_se: f64,
}

pub fn elementary_renewal_check(
    law: &JumpLaw,
    t: f64,
    replications: u64,
    seed: u64,
    workers: usize,
) -> ElementaryRenewalReport {
    let counts: Vec<u64> = fan_out(replications, workers, |range| {
        range
            .map(|r| count_renewals(law, None, t, RngStream::new(seed, r)))
            .collect::<Vec<_>>()
    })
    .concat();
    let (mean, var) = mean_and_var(&counts);
    let expected = t / law.mean();
    ElementaryRenewalReport {
        t,
        replications,
        mean_count: mean,
        ratio: mean / expected,
        ratio_se: (var / counts.len() as f64).sqrt() / expected,
    }
}
