//! Monte Carlo experiments, exact Poisson oracles and quadrature checks.

mod experiment;
mod oracles;
mod pool;
mod renewal_checks;

pub use experiment::{
    covariance_trend_holds, cramer_wold_experiment, run_fdd_experiment, simulate_fdd,
    ExperimentReport, FddBatch, FddExperiment, ProjectionReport, MIN_EXPERIMENT_REPLICATIONS,
};
pub use oracles::{
    campbell_oracle, karamata_report, lemma_variance_ratio, poisson_normalized_covariance,
    shot_cross_integral, CampbellMoments, KaramataRow,
};
pub use pool::fan_out;
pub use renewal_checks::{
    backward_invariance_check, elementary_renewal_check, renewal_clt_check, subadditivity_check,
    BackwardInvarianceReport, ElementaryRenewalReport, RenewalCltReport, SubadditivityReport,
    WindowComparison,
};
