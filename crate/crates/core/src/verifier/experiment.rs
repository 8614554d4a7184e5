use serde::Serialize;

use super::oracles::poisson_normalized_covariance;
use super::pool::fan_out;
use crate::error::{invalid, Error, Result};
use crate::jump::{JumpSpec};
use crate::kernel::{KernelSpec, Scaling};
use crate::limit::{cramer_wold_variance, limit_covariance_matrix};
use crate::renewal::{fdd_replication, FddPlan};
use crate::stats::{covariance_standard_errors, normality_stats, MomentAccumulator, NormalityStats};

pub const MIN_EXPERIMENT_REPLICATIONS: u64 = 1000;

/// All replications of one plan: the merged accumulator and the samples in
/// replication order (row-major, one row per replication).
#[derive(Debug, Clone)]
pub struct FddBatch {
    pub accumulator: MomentAccumulator,
    pub samples: Vec<f64>,
    pub dim: usize,
}

impl FddBatch {
    pub fn replications(&self) -> usize {
        self.samples.len() / self.dim.max(1)
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.samples.chunks(self.dim).map(|row| row[i]).collect()
    }

    pub fn projection(&self, alphas: &[f64]) -> Vec<f64> {
        self.samples
            .chunks(self.dim)
            .map(|row| row.iter().zip(alphas).map(|(z, a)| z * a).sum())
            .collect()
    }
}

/// Runs replications `0..replications` on `workers` threads. Each worker owns
/// a contiguous block of stream indices; accumulators merge in a fixed binary
/// tree over worker index.
pub fn simulate_fdd(plan: &FddPlan, replications: u64, seed: u64, workers: usize) -> FddBatch {
    let dim = plan.u_grid().len();
    let parts = fan_out(replications, workers, |range| {
        let mut acc = MomentAccumulator::new(dim);
        let mut samples = Vec::with_capacity((range.end - range.start) as usize * dim);
        for r in range {
            let s = fdd_replication(plan, seed, r);
            acc.push(&s.z);
            samples.extend_from_slice(&s.z);
        }
        (acc, samples)
    });
    let (accs, chunks): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    FddBatch {
        accumulator: MomentAccumulator::merge_tree(accs).unwrap_or_else(|| MomentAccumulator::new(dim)),
        samples: chunks.concat(),
        dim,
    }
}

#[derive(Debug, Clone)]
pub struct FddExperiment {
    pub plan: FddPlan,
    pub replications: u64,
    pub seed: u64,
    pub workers: usize,
    /// Cramér–Wold coefficient vectors; an all-ones projection is used when empty.
    pub projections: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionReport {
    pub alphas: Vec<f64>,
    pub u_grid: Vec<f64>,
    pub sample_variance: f64,
    pub variance_se: f64,
    pub target_variance: f64,
    pub normality: Option<NormalityStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub law: JumpSpec,
    pub lattice: bool,
    pub kernel: KernelSpec,
    pub scaling: Scaling,
    pub t: f64,
    pub u_grid: Vec<f64>,
    pub times: Vec<f64>,
    pub replications: u64,
    pub seed: u64,
    pub workers: usize,
    pub mean: Vec<f64>,
    pub mean_se: Vec<f64>,
    /// Mean of each coordinate due to the shot at the origin.
    pub origin_atom_bias: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub covariance_se: Vec<Vec<f64>>,
    pub limit_covariance: Vec<Vec<f64>>,
    /// Exact finite-t covariance, present for exponential jumps.
    pub poisson_covariance: Option<Vec<Vec<f64>>>,
    pub deviation: Vec<Vec<f64>>,
    pub max_abs_deviation: f64,
    pub max_abs_deviation_se: f64,
    pub marginal_normality: Vec<Option<NormalityStats>>,
    pub projections: Vec<ProjectionReport>,
}

fn projection_report(batch: &FddBatch, alphas: &[f64], u_grid: &[f64]) -> Result<ProjectionReport> {
    let target = cramer_wold_variance(alphas, u_grid)?;
    let values = batch.projection(alphas);
    let normality = normality_stats(&values).ok();
    let (var, se) = match &normality {
        Some(s) => (s.variance, s.variance_se),
        None => {
            let mut acc = MomentAccumulator::new(1);
            for v in &values {
                acc.push(&[*v]);
            }
            (acc.covariance()[0][0], f64::NAN)
        }
    };
    Ok(ProjectionReport {
        alphas: alphas.to_vec(),
        u_grid: u_grid.to_vec(),
        sample_variance: var,
        variance_se: se,
        target_variance: target,
        normality,
    })
}

/// Estimates the covariance of the normalized fluctuations and compares it
/// with the limit covariance.
pub fn run_fdd_experiment(exp: &FddExperiment) -> Result<ExperimentReport> {
    if exp.replications < MIN_EXPERIMENT_REPLICATIONS {
        return Err(invalid(
            "replications",
            format!("need at least {MIN_EXPERIMENT_REPLICATIONS}, got {}", exp.replications),
        ));
    }
    let plan = &exp.plan;
    let u = plan.u_grid();
    let batch = simulate_fdd(plan, exp.replications, exp.seed, exp.workers);
    let acc = &batch.accumulator;
    let cov = acc.covariance();
    let cov_se = covariance_standard_errors(&cov, acc.count());
    let limit = limit_covariance_matrix(u);
    let k = u.len();
    let mut deviation = vec![vec![0.0; k]; k];
    let (mut max_dev, mut max_se) = (0.0f64, 0.0);
    for i in 0..k {
        for j in 0..k {
            deviation[i][j] = cov[i][j] - limit[i][j];
            if deviation[i][j].abs() > max_dev {
                max_dev = deviation[i][j].abs();
                max_se = cov_se[i][j];
            }
        }
    }
    let poisson_covariance = match plan.law().spec() {
        JumpSpec::Exponential { .. } => Some(poisson_normalized_covariance(
            plan.kernel(),
            plan.t(),
            plan.grid().times(),
        )),
        _ => None,
    };
    let marginal_normality = (0..k).map(|i| normality_stats(&batch.column(i)).ok()).collect();
    let default_projection = [vec![1.0; k]];
    let alphas_list: &[Vec<f64>] = if exp.projections.is_empty() {
        &default_projection
    } else {
        &exp.projections
    };
    let projections = alphas_list
        .iter()
        .map(|a| projection_report(&batch, a, u))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        law: plan.law().spec(),
        lattice: plan.law().is_lattice(),
        kernel: plan.kernel().spec(),
        scaling: plan.scaling(),
        t: plan.t(),
        u_grid: u.to_vec(),
        times: plan.grid().times().to_vec(),
        replications: exp.replications,
        seed: exp.seed,
        workers: exp.workers,
        mean: acc.mean().to_vec(),
        mean_se: acc.mean_standard_errors(),
        origin_atom_bias: plan.origin_atom_bias(),
        covariance: cov,
        covariance_se: cov_se,
        limit_covariance: limit,
        poisson_covariance,
        deviation,
        max_abs_deviation: max_dev,
        max_abs_deviation_se: max_se,
        marginal_normality,
        projections,
    })
}

/// Sample variance and normality of `Σ α_i Z_t(u_i)` against the limit variance.
pub fn cramer_wold_experiment(
    plan: &FddPlan,
    alphas: &[f64],
    replications: u64,
    seed: u64,
    workers: usize,
) -> Result<ProjectionReport> {
    if alphas.len() != plan.u_grid().len() {
        return Err(Error::LengthMismatch(alphas.len(), plan.u_grid().len()));
    }
    let batch = simulate_fdd(plan, replications, seed, workers);
    projection_report(&batch, alphas, plan.u_grid())
}

/// Whether max-entry deviations are nonincreasing along the sequence, allowing
/// each step to rise by at most the combined standard error of the two entries.
pub fn covariance_trend_holds(reports: &[ExperimentReport]) -> bool {
    reports.windows(2).all(|w| {
        let slack = w[0].max_abs_deviation_se.hypot(w[1].max_abs_deviation_se);
        w[1].max_abs_deviation <= w[0].max_abs_deviation + slack
    })
}
