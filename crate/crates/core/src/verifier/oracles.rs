use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{ResponseKernel, Scaling};
use crate::quad::{integrate, integrate_log, Tolerance};

const CROSS_TOL: Tolerance = Tolerance::relative(1e-11);

/// Campbell moments of `Σ h(t − S_k) 1{S_k <= t}` for unit-rate Poisson arrivals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CampbellMoments {
    /// Arrivals on `(0, t]` only: mean `H(t)`, variance `m(t)`.
    pub pure_mean: f64,
    pub pure_variance: f64,
    /// With the extra deterministic shot at `S_0 = 0`: mean `H(t) + h(t)`.
    pub origin_atom_mean: f64,
    pub origin_atom_variance: f64,
}

pub fn campbell_oracle(kernel: &ResponseKernel, t: f64) -> CampbellMoments {
    let t = t.max(0.0);
    let mean = kernel.h_primitive(t);
    let var = kernel.m(t);
    CampbellMoments {
        pure_mean: mean,
        pure_variance: var,
        origin_atom_mean: mean + kernel.h(t),
        origin_atom_variance: var,
    }
}

/// `∫_0^upper h(y) h(y + lag) dy` for `lag >= 0`.
///
/// Split at the plateau edges `t_min − lag` and `t_min`; the part above the
/// cutoff is integrated in log coordinates.
pub fn shot_cross_integral(kernel: &ResponseKernel, upper: f64, lag: f64) -> f64 {
    if upper <= 0.0 {
        return 0.0;
    }
    let t_min = kernel.t_min();
    let h_min = kernel.h(0.0);
    let both_flat = (t_min - lag).max(0.0).min(upper);
    let mut total = both_flat * h_min * h_min;
    let first_flat_end = t_min.min(upper);
    if first_flat_end > both_flat {
        total += h_min
            * integrate(|y| kernel.h(y + lag), both_flat, first_flat_end, CROSS_TOL).value;
    }
    if upper > t_min {
        total += integrate_log(|y| kernel.h(y) * kernel.h(y + lag), t_min, upper, CROSS_TOL).value;
    }
    total
}

/// Exact covariance of the normalized fluctuations at times `τ_i` when the
/// jumps are exponential: `∫_0^{τ_i ∧ τ_j} h(y) h(y + |τ_i − τ_j|) dy / m(t)`.
///
/// The rate cancels against the normalization `σ² μ^{-3} m(t)`.
pub fn poisson_normalized_covariance(kernel: &ResponseKernel, t: f64, times: &[f64]) -> Vec<Vec<f64>> {
    let m = kernel.m(t);
    let k = times.len();
    let mut out = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let lo = times[i].min(times[j]);
            let lag = (times[i] - times[j]).abs();
            let v = shot_cross_integral(kernel, lo, lag) / m;
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    out
}

/// `∫_0^{t + g(t,b)} h(y) h(y + g(t,a) − g(t,b)) dy / m(t)` for `0 <= b < a <= 1`,
/// whose limit is `1 − a`.
pub fn lemma_variance_ratio(kernel: &ResponseKernel, t: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || b >= a {
        return Err(Error::LemmaOrder { a, b });
    }
    let ta = kernel.scaling(Scaling::Inverse, t, a)?;
    let tb = kernel.scaling(Scaling::Inverse, t, b)?;
    Ok(shot_cross_integral(kernel, t + tb, ta - tb) / kernel.m(t))
}

/// One row of the Karamata table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KaramataRow {
    pub t: f64,
    /// `m(t)` by quadrature.
    pub m: f64,
    /// `m(t) / (t h²(t))`; tends to `1/(2β+1)` for pure powers.
    pub integral_ratio: f64,
    /// `t h²(t) / m(t)`; tends to 0 for the −1/2 families.
    pub edge_ratio: f64,
    /// Limit of `integral_ratio` (pure powers) or of `edge_ratio` (−1/2 families).
    pub target: f64,
    /// `√m(t) / ((2β+1)^{-1/2} √t h(t))`, pure powers only.
    pub normalization_ratio: Option<f64>,
}

/// Tabulates the Karamata ratios along `t_grid`, with `m` computed by quadrature.
pub fn karamata_report(kernel: &ResponseKernel, t_grid: &[f64]) -> Vec<KaramataRow> {
    let beta = match kernel.spec() {
        crate::kernel::KernelSpec::PurePower { beta, .. } => Some(beta),
        _ => None,
    };
    t_grid
        .iter()
        .map(|&t| {
            let m = kernel.m_quadrature(t);
            let h = kernel.h(t);
            let edge = t * h * h;
            KaramataRow {
                t,
                m,
                integral_ratio: m / edge,
                edge_ratio: edge / m,
                target: beta.map_or(0.0, |b| 1.0 / (2.0 * b + 1.0)),
                normalization_ratio: beta
                    .map(|b| m.sqrt() / ((2.0 * b + 1.0).powf(-0.5) * t.sqrt() * h)),
            }
        })
        .collect()
}
