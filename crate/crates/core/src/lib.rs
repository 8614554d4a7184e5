//! Renewal shot-noise processes with response functions regularly varying of
//! index −1/2, and Monte Carlo plus quadrature checks of their Gaussian
//! finite-dimensional limit `X(u) = B(1 − u) + D(u)`.

pub mod cli;
pub mod error;
pub mod jump;
pub mod kernel;
pub mod limit;
pub mod quad;
pub mod renewal;
pub mod rng;
pub mod stats;
pub mod verifier;

pub use error::{Error, Result};
pub use jump::{DelayLaw, JumpLaw, JumpSpec};
pub use kernel::{KernelSpec, ResponseKernel, Scaling};
pub use limit::{cramer_wold_variance, limit_covariance, sample_limit_fdd, LimitGridSample};
pub use renewal::{
    count_renewals, evaluate_shot_noise, fdd_replication, EvalGrid, FddPlan, FddSample, PathCursor,
};
pub use rng::RngStream;
pub use stats::{normality_stats, MomentAccumulator, NormalityStats};
