//! Streaming renewal walks and single-pass shot-noise evaluation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jump::{DelayLaw, JumpLaw};
use crate::kernel::{ResponseKernel, Scaling};
use crate::limit::validate_u_grid;
use crate::rng::RngStream;

/// Cursor over the walk `S_0, S_1, ...` (or `S*_0, S*_1, ...` when delayed).
#[derive(Debug, Clone)]
pub struct PathCursor<'a> {
    law: &'a JumpLaw,
    delay: Option<&'a DelayLaw>,
    current_sum: f64,
    index: u64,
    rng: RngStream,
}

impl<'a> PathCursor<'a> {
    /// Zero-delayed walk: the first point is `S_0 = 0`.
    pub fn zero_delayed(law: &'a JumpLaw, rng: RngStream) -> Self {
        Self {
            law,
            delay: None,
            current_sum: 0.0,
            index: 0,
            rng,
        }
    }

    /// Stationary walk: the first point is drawn from the delay law.
    pub fn delayed(delay: &'a DelayLaw, rng: RngStream) -> Self {
        Self {
            law: delay.base(),
            delay: Some(delay),
            current_sum: 0.0,
            index: 0,
            rng,
        }
    }

    pub fn new(law: &'a JumpLaw, delay: Option<&'a DelayLaw>, rng: RngStream) -> Self {
        match delay {
            Some(d) => Self::delayed(d, rng),
            None => Self::zero_delayed(law, rng),
        }
    }

    pub fn is_delayed(&self) -> bool {
        self.delay.is_some()
    }

    /// Number of points yielded so far.
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn current_sum(&self) -> f64 {
        self.current_sum
    }

    /// Yields the next walk point.
    #[inline]
    pub fn stream_next(&mut self) -> f64 {
        if self.index == 0 {
            self.current_sum = match self.delay {
                Some(d) => d.sample(&mut self.rng),
                None => 0.0,
            };
        } else {
            self.current_sum += self.law.sample(&mut self.rng);
        }
        self.index += 1;
        self.current_sum
    }
}

impl Iterator for PathCursor<'_> {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        Some(self.stream_next())
    }
}

/// `N(t) = #{k : S_k <= t}` for a fresh path (or `N*(t)` when `delay` is set).
pub fn count_renewals(law: &JumpLaw, delay: Option<&DelayLaw>, t: f64, rng: RngStream) -> u64 {
    let mut cursor = PathCursor::new(law, delay, rng);
    let mut n = 0;
    while cursor.stream_next() <= t {
        n += 1;
    }
    n
}

/// Strictly increasing, finite, nonnegative evaluation times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalGrid(Vec<f64>);

impl EvalGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(crate::error::invalid("times", "must be finite and nonnegative"));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::GridNotIncreasing);
        }
        Ok(Self(times))
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

/// Accumulates `Y(τ_i) = Σ_k h(τ_i − S_k) 1{S_k <= τ_i}` for every grid time
/// from one pass over `cursor`.
pub fn shot_noise_along(kernel: &ResponseKernel, grid: &EvalGrid, cursor: &mut PathCursor<'_>) -> Vec<f64> {
    let times = grid.times();
    let horizon = grid.last();
    let mut out = vec![0.0; times.len()];
    // grid times before `first` lie strictly before the current shot
    let mut first = 0;
    loop {
        let s = cursor.stream_next();
        if s > horizon {
            break;
        }
        while times[first] < s {
            first += 1;
        }
        for (acc, &tau) in out[first..].iter_mut().zip(&times[first..]) {
            *acc += kernel.h(tau - s);
        }
    }
    out
}

/// `(Y(τ_1), ..., Y(τ_K))` on one fresh path.
pub fn evaluate_shot_noise(
    law: &JumpLaw,
    kernel: &ResponseKernel,
    grid: &EvalGrid,
    delay: Option<&DelayLaw>,
    rng: RngStream,
) -> Vec<f64> {
    let mut cursor = PathCursor::new(law, delay, rng);
    shot_noise_along(kernel, grid, &mut cursor)
}

/// Everything a replication of the normalized fluctuation vector needs that
/// does not depend on the path: evaluation times `t + g(t, u_i)`, centerings
/// `μ^{-1} H(t + g(t, u_i))` and the common scale `√(σ² μ^{-3} m(t))`.
#[derive(Debug, Clone)]
pub struct FddPlan {
    law: JumpLaw,
    kernel: ResponseKernel,
    t: f64,
    u_grid: Vec<f64>,
    scaling: Scaling,
    grid: EvalGrid,
    centering: Vec<f64>,
    scale: f64,
}

impl FddPlan {
    pub fn new(
        law: JumpLaw,
        kernel: ResponseKernel,
        t: f64,
        u_grid: Vec<f64>,
        scaling: Scaling,
    ) -> Result<Self> {
        if law.variance() <= 0.0 {
            return Err(Error::DegenerateLaw);
        }
        if !(t.is_finite() && t > 0.0) {
            return Err(crate::error::invalid("t", format!("must be positive, got {t}")));
        }
        validate_u_grid(&u_grid)?;
        let times = u_grid
            .iter()
            .map(|&u| kernel.scaling(scaling, t, u).map(|g| t + g))
            .collect::<Result<Vec<_>>>()?;
        let grid = EvalGrid::new(times)?;
        let mu = law.mean();
        let centering = grid.times().iter().map(|&tau| kernel.h_primitive(tau) / mu).collect();
        let scale = (law.variance() / mu.powi(3) * kernel.m(t)).sqrt();
        Ok(Self {
            law,
            kernel,
            t,
            u_grid,
            scaling,
            grid,
            centering,
            scale,
        })
    }

    pub fn law(&self) -> &JumpLaw {
        &self.law
    }

    pub fn kernel(&self) -> &ResponseKernel {
        &self.kernel
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn u_grid(&self) -> &[f64] {
        &self.u_grid
    }

    pub fn scaling(&self) -> Scaling {
        self.scaling
    }

    pub fn grid(&self) -> &EvalGrid {
        &self.grid
    }

    pub fn centering(&self) -> &[f64] {
        &self.centering
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Mean offset of each `Z_t(u_i)` contributed by the shot at `S_0 = 0`,
    /// `h(τ_i) / scale`; the exact bias when arrivals are Poisson.
    pub fn origin_atom_bias(&self) -> Vec<f64> {
        self.grid
            .times()
            .iter()
            .map(|&tau| self.kernel.h(tau) / self.scale)
            .collect()
    }
}

/// One replication's normalized fluctuations on the u-grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FddSample {
    pub replication: u64,
    pub z: Vec<f64>,
}

/// Draws `Z_t(u_i)` for all `i` from one zero-delayed path on stream
/// `(master_seed, replication)`.
pub fn fdd_replication(plan: &FddPlan, master_seed: u64, replication: u64) -> FddSample {
    let rng = RngStream::new(master_seed, replication);
    let mut cursor = PathCursor::zero_delayed(&plan.law, rng);
    let mut z = shot_noise_along(&plan.kernel, &plan.grid, &mut cursor);
    for (zi, c) in z.iter_mut().zip(&plan.centering) {
        *zi = (*zi - c) / plan.scale;
    }
    FddSample { replication, z }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_kernel() -> ResponseKernel {
        ResponseKernel::moderate(1.0, Some(1.0)).unwrap()
    }

    #[test]
    fn deterministic_walks() {
        let law = JumpLaw::point_mass(1.0).unwrap();
        let c = PathCursor::zero_delayed(&law, RngStream::new(0, 0));
        assert_eq!(c.take(4).collect::<Vec<_>>(), vec![0.0, 1.0, 2.0, 3.0]);
        let delay = DelayLaw::new(law.clone());
        let c = PathCursor::delayed(&delay, RngStream::new(0, 0));
        assert_eq!(c.take(3).collect::<Vec<_>>(), vec![1.0, 2.0, 3.0]);
        let exp = JumpLaw::exponential(1.0).unwrap();
        let mut c = PathCursor::zero_delayed(&exp, RngStream::new(0, 0));
        assert_eq!(c.stream_next(), 0.0);
        let mut prev = 0.0;
        for _ in 0..1000 {
            let s = c.stream_next();
            assert!(s > prev);
            prev = s;
        }
    }

    #[test]
    fn counting_examples() {
        let law = JumpLaw::point_mass(1.0).unwrap();
        assert_eq!(count_renewals(&law, None, 2.5, RngStream::new(0, 0)), 3);
        let exp = JumpLaw::exponential(1.0).unwrap();
        assert_eq!(count_renewals(&exp, None, 0.0, RngStream::new(0, 0)), 1);
    }

    #[test]
    fn poisson_renewal_mean() {
        let law = JumpLaw::exponential(1.0).unwrap();
        let t = 1000.0;
        let n = 4000;
        let mean = (0..n)
            .map(|i| count_renewals(&law, None, t, RngStream::new(17, i)) as f64)
            .sum::<f64>()
            / n as f64;
        // N(t) - 1 ~ Poisson(t): SE = sqrt(t / n)
        let se = (t / n as f64).sqrt();
        assert!((mean - (t + 1.0)).abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn three_term_sum() {
        let law = JumpLaw::point_mass(1.0).unwrap();
        let grid = EvalGrid::new(vec![2.5]).unwrap();
        let y = evaluate_shot_noise(&law, &unit_kernel(), &grid, None, RngStream::new(0, 0));
        let expected = 2.5f64.powf(-0.5) + 1.5f64.powf(-0.5) + 1.0;
        assert_relative_eq!(y[0], expected, max_relative = 1e-15);
        assert!((y[0] - 2.448_952).abs() < 1e-6);
    }

    #[test]
    fn origin_only() {
        let law = JumpLaw::exponential(1.0).unwrap();
        let k = ResponseKernel::moderate(3.0, None).unwrap();
        let grid = EvalGrid::new(vec![0.0]).unwrap();
        let y = evaluate_shot_noise(&law, &k, &grid, None, RngStream::new(4, 4));
        assert_eq!(y, vec![k.h(k.t_min())]);
    }

    #[test]
    fn grid_validation() {
        assert_eq!(EvalGrid::new(vec![]), Err(Error::EmptyGrid));
        assert_eq!(EvalGrid::new(vec![1.0, 1.0]), Err(Error::GridNotIncreasing));
        assert!(EvalGrid::new(vec![-1.0]).is_err());
    }

    #[test]
    fn plan_rejects_point_mass() {
        let r = FddPlan::new(
            JumpLaw::point_mass(1.0).unwrap(),
            unit_kernel(),
            100.0,
            vec![0.0, 1.0],
            Scaling::Inverse,
        );
        assert_eq!(r.err(), Some(Error::DegenerateLaw));
    }

    #[test]
    fn replication_shape_and_replay() {
        let plan = FddPlan::new(
            JumpLaw::exponential(1.0).unwrap(),
            unit_kernel(),
            7f64.exp(),
            vec![0.0, 0.5, 1.0],
            Scaling::Inverse,
        )
        .unwrap();
        let a = fdd_replication(&plan, 42, 9);
        let b = fdd_replication(&plan, 42, 9);
        assert_eq!(a.z.len(), 3);
        assert_eq!(a, b);
        assert_ne!(a, fdd_replication(&plan, 42, 10));
        let times = plan.grid().times();
        assert_relative_eq!(times[0], 7f64.exp());
        assert_relative_eq!(times[2], 2.0 * 7f64.exp(), max_relative = 1e-12);
    }

    #[test]
    fn origin_atom_bias_matches_monte_carlo_mean() {
        // Poisson arrivals plus the atom at 0: E Y(t) = H(t) + h(t) exactly
        let t = 7f64.exp();
        let plan = FddPlan::new(
            JumpLaw::exponential(1.0).unwrap(),
            unit_kernel(),
            t,
            vec![0.0],
            Scaling::Inverse,
        )
        .unwrap();
        let bias = plan.origin_atom_bias()[0];
        assert_relative_eq!(bias, (-3.5f64).exp() / 8f64.sqrt(), max_relative = 1e-12);
        let n = 40_000;
        let zs: Vec<f64> = (0..n).map(|i| fdd_replication(&plan, 5, i).z[0]).collect();
        let mean = zs.iter().sum::<f64>() / n as f64;
        let var = zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - bias).abs() < 4.0 * se, "mean {mean} bias {bias} se {se}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn single_pass_equals_brute_force(
            seed in any::<u64>(),
            family in 0usize..4,
            raw in proptest::collection::vec(0.0f64..1000.0, 1..8),
            delayed in any::<bool>(),
        ) {
            let law = match family {
                0 => JumpLaw::exponential(0.7).unwrap(),
                1 => JumpLaw::gamma(2.0, 0.5).unwrap(),
                2 => JumpLaw::uniform(0.0, 3.0).unwrap(),
                _ => JumpLaw::pareto(1.0, 3.0).unwrap(),
            };
            let delay = DelayLaw::new(law.clone());
            let delay_ref = if delayed { Some(&delay) } else { None };
            let kernel = ResponseKernel::moderate(2.0, None).unwrap();
            let mut times = raw;
            times.sort_by(f64::total_cmp);
            times.dedup();
            let grid = EvalGrid::new(times.clone()).unwrap();
            let fast = evaluate_shot_noise(&law, &kernel, &grid, delay_ref, RngStream::new(seed, 1));

            let mut cursor = PathCursor::new(&law, delay_ref, RngStream::new(seed, 1));
            let horizon = grid.last();
            let mut points = Vec::new();
            loop {
                let s = cursor.stream_next();
                if s > horizon { break; }
                points.push(s);
            }
            for (i, &tau) in times.iter().enumerate() {
                let mut brute = 0.0;
                for &s in &points {
                    if s <= tau { brute += kernel.h(tau - s); }
                }
                prop_assert_eq!(fast[i].to_bits(), brute.to_bits());
            }
        }
    }
}
