//! Positive jump laws for the renewal walk and their stationary-delay laws.

use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur};

use crate::error::{invalid, Result};
use crate::rng::RngStream;

/// Declarative description of a jump law, as it appears in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpSpec {
    Exponential {
        rate: f64,
    },
    Gamma {
        shape: f64,
        scale: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    Pareto {
        scale: f64,
        #[serde(alias = "kappa")]
        tail_index: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        moment_order: Option<f64>,
    },
    PointMass {
        d: f64,
    },
}

/// A validated jump law with its closed-form moments.
#[derive(Debug, Clone)]
pub struct JumpLaw {
    spec: JumpSpec,
    mean: f64,
    variance: f64,
    moment_order: f64,
    gamma: Option<Gamma<f64>>,
}

fn positive_finite(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {x}")))
    }
}

impl JumpLaw {
    pub fn new(spec: JumpSpec) -> Result<Self> {
        // light-tailed families have every moment; reported as +inf
        let (mean, variance, moment_order) = match spec {
            JumpSpec::Exponential { rate } => {
                positive_finite("rate", rate)?;
                (1.0 / rate, 1.0 / (rate * rate), f64::INFINITY)
            }
            JumpSpec::Gamma { shape, scale } => {
                positive_finite("shape", shape)?;
                positive_finite("scale", scale)?;
                (shape * scale, shape * scale * scale, f64::INFINITY)
            }
            JumpSpec::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && a >= 0.0 && a < b) {
                    return Err(invalid("b", format!("uniform needs 0 <= a < b, got a={a}, b={b}")));
                }
                ((a + b) / 2.0, (b - a) * (b - a) / 12.0, f64::INFINITY)
            }
            JumpSpec::Pareto {
                scale,
                tail_index,
                moment_order,
            } => {
                positive_finite("scale", scale)?;
                if !(tail_index.is_finite() && tail_index > 2.0) {
                    return Err(invalid(
                        "tail_index",
                        format!("pareto needs tail index > 2, got {tail_index}"),
                    ));
                }
                let r = moment_order.unwrap_or((2.0 + tail_index) / 2.0);
                if !(r > 2.0 && r < tail_index) {
                    return Err(invalid(
                        "moment_order",
                        format!("must lie in (2, {tail_index}), got {r}"),
                    ));
                }
                let k = tail_index;
                let mean = k * scale / (k - 1.0);
                let var = scale * scale * k / ((k - 1.0) * (k - 1.0) * (k - 2.0));
                (mean, var, r)
            }
            JumpSpec::PointMass { d } => {
                positive_finite("d", d)?;
                (d, 0.0, f64::INFINITY)
            }
        };
        let gamma = match spec {
            JumpSpec::Gamma { shape, scale } => {
                Some(Gamma::new(shape, scale).map_err(|e| invalid("shape", e.to_string()))?)
            }
            _ => None,
        };
        Ok(Self {
            spec,
            mean,
            variance,
            moment_order,
            gamma,
        })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(JumpSpec::Exponential { rate })
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        Self::new(JumpSpec::Gamma { shape, scale })
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::new(JumpSpec::Uniform { a, b })
    }

    pub fn pareto(scale: f64, tail_index: f64) -> Result<Self> {
        Self::new(JumpSpec::Pareto {
            scale,
            tail_index,
            moment_order: None,
        })
    }

    pub fn point_mass(d: f64) -> Result<Self> {
        Self::new(JumpSpec::PointMass { d })
    }

    pub fn spec(&self) -> JumpSpec {
        self.spec
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Order `r > 2` with `E ξ^r < ∞`; `+inf` when every moment is finite.
    pub fn moment_order(&self) -> f64 {
        self.moment_order
    }

    /// `(μ, σ², r)`.
    pub fn moments(&self) -> (f64, f64, f64) {
        (self.mean, self.variance, self.moment_order)
    }

    /// True for arithmetic (lattice) laws.
    pub fn is_lattice(&self) -> bool {
        matches!(self.spec, JumpSpec::PointMass { .. })
    }

    /// One strictly positive draw.
    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match self.spec {
            JumpSpec::Exponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                // Exp1 can return exactly 0 with negligible probability
                if e > 0.0 {
                    e / rate
                } else {
                    f64::MIN_POSITIVE / rate
                }
            }
            JumpSpec::Gamma { .. } => {
                let g = self.gamma.as_ref().expect("gamma sampler built at construction");
                let x = g.sample(rng);
                if x > 0.0 {
                    x
                } else {
                    f64::MIN_POSITIVE
                }
            }
            JumpSpec::Uniform { a, b } => a + (b - a) * rng.open01(),
            JumpSpec::Pareto {
                scale, tail_index, ..
            } => scale * rng.open01().powf(-1.0 / tail_index),
            JumpSpec::PointMass { d } => d,
        }
    }

    /// `P{ξ > y}`.
    pub fn tail(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 1.0;
        }
        match self.spec {
            JumpSpec::Exponential { rate } => (-rate * y).exp(),
            JumpSpec::Gamma { shape, scale } => {
                if y == 0.0 {
                    1.0
                } else {
                    gamma_ur(shape, y / scale)
                }
            }
            JumpSpec::Uniform { a, b } => {
                if y < a {
                    1.0
                } else if y >= b {
                    0.0
                } else {
                    (b - y) / (b - a)
                }
            }
            JumpSpec::Pareto {
                scale, tail_index, ..
            } => {
                if y < scale {
                    1.0
                } else {
                    (scale / y).powf(tail_index)
                }
            }
            JumpSpec::PointMass { d } => {
                if y < d {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

const TABLE_POINTS: usize = 4096;
const QUANTILE_TOL: f64 = 1e-12;

/// Monotone `(x, F(x))` grid used to seed quantile inversion.
#[derive(Debug, Clone)]
pub struct CdfTable {
    xs: Vec<f64>,
    ps: Vec<f64>,
}

impl CdfTable {
    fn build(hi: f64, cdf: impl Fn(f64) -> f64) -> Self {
        let xs: Vec<f64> = (0..TABLE_POINTS)
            .map(|i| hi * i as f64 / (TABLE_POINTS - 1) as f64)
            .collect();
        let mut ps: Vec<f64> = xs.iter().map(|&x| cdf(x)).collect();
        // enforce monotonicity against rounding in special-function evaluation
        for i in 1..ps.len() {
            if ps[i] < ps[i - 1] {
                ps[i] = ps[i - 1];
            }
        }
        Self { xs, ps }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Bracket and linear-interpolation seed for `p`.
    fn seed(&self, p: f64) -> (f64, f64, f64) {
        let last = self.xs.len() - 1;
        if p >= self.ps[last] {
            return (self.xs[last], f64::INFINITY, self.xs[last]);
        }
        let j = self.ps.partition_point(|&q| q <= p).max(1);
        let (x0, x1) = (self.xs[j - 1], self.xs[j]);
        let (p0, p1) = (self.ps[j - 1], self.ps[j]);
        let x = if p1 > p0 {
            x0 + (x1 - x0) * (p - p0) / (p1 - p0)
        } else {
            x0
        };
        (x0, x1, x)
    }
}

/// Law of the stationary delay `S*_0`, with CDF `μ^{-1} ∫_0^x P{ξ > y} dy`
/// (or the arithmetic mass function for lattice laws).
#[derive(Debug, Clone)]
pub struct DelayLaw {
    base: JumpLaw,
    table: Option<CdfTable>,
}

impl DelayLaw {
    pub fn new(base: JumpLaw) -> Self {
        let table = match base.spec {
            JumpSpec::Uniform { b, .. } => {
                let probe = Self { base: base.clone(), table: None };
                Some(CdfTable::build(b, |x| probe.cdf(x)))
            }
            JumpSpec::Gamma { .. } => {
                let probe = Self { base: base.clone(), table: None };
                let mut hi = base.mean.max(1e-300);
                while 1.0 - probe.cdf(hi) > 1e-13 {
                    hi *= 2.0;
                }
                Some(CdfTable::build(hi, |x| probe.cdf(x)))
            }
            _ => None,
        };
        Self { base, table }
    }

    pub fn base(&self) -> &JumpLaw {
        &self.base
    }

    pub fn table(&self) -> Option<&CdfTable> {
        self.table.as_ref()
    }

    /// `P{S*_0 <= x}`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let mu = self.base.mean;
        match self.base.spec {
            JumpSpec::Exponential { rate } => -(-rate * x).exp_m1(),
            JumpSpec::Gamma { shape, scale } => {
                if x == 0.0 {
                    return 0.0;
                }
                // E[min(ξ, x)] / μ
                let z = x / scale;
                (gamma_lr(shape + 1.0, z) + x * gamma_ur(shape, z) / mu).min(1.0)
            }
            JumpSpec::Uniform { a, b } => {
                if x <= a {
                    x / mu
                } else if x >= b {
                    1.0
                } else {
                    let d = x - a;
                    (x - d * d / (2.0 * (b - a))) / mu
                }
            }
            JumpSpec::Pareto {
                scale, tail_index, ..
            } => {
                if x <= scale {
                    x / mu
                } else {
                    1.0 - (scale / x).powf(tail_index - 1.0) / tail_index
                }
            }
            JumpSpec::PointMass { d } => {
                if x >= d {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Density `P{ξ > x} / μ` of the nonarithmetic delay law.
    pub fn density(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.base.tail(x) / self.base.mean
        }
    }

    /// Atoms `(kd, P{S*_0 = kd})` for lattice laws; empty otherwise.
    pub fn lattice_masses(&self) -> Vec<(f64, f64)> {
        match self.base.spec {
            // span d and mean d: (d/μ) P{ξ >= kd} is 1 at k = 1 and 0 beyond
            JumpSpec::PointMass { d } => vec![(d, d / self.base.mean * self.base.tail(d - d * 1e-12))],
            _ => Vec::new(),
        }
    }

    /// Inverse CDF for `p` in (0, 1).
    pub fn quantile(&self, p: f64) -> f64 {
        let mu = self.base.mean;
        match self.base.spec {
            JumpSpec::Exponential { rate } => -(-p).ln_1p() / rate,
            JumpSpec::PointMass { d } => d,
            JumpSpec::Pareto {
                scale, tail_index, ..
            } => {
                let knee = scale / mu;
                if p <= knee {
                    p * mu
                } else {
                    scale * (tail_index * (1.0 - p)).powf(-1.0 / (tail_index - 1.0))
                }
            }
            JumpSpec::Uniform { .. } | JumpSpec::Gamma { .. } => self.invert_with_table(p),
        }
    }

    fn invert_with_table(&self, p: f64) -> f64 {
        let table = self.table.as_ref().expect("table built for this family");
        let (mut lo, mut hi, mut x) = table.seed(p);
        for _ in 0..64 {
            let err = self.cdf(x) - p;
            if err.abs() <= QUANTILE_TOL {
                return x;
            }
            if err > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let f = self.density(x);
            let newton = if f > 0.0 { x - err / f } else { f64::NAN };
            x = if newton > lo && newton < hi {
                newton
            } else if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                2.0 * lo.max(mu_floor(self.base.mean))
            };
        }
        x
    }

    /// One draw of `S*_0`.
    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match self.base.spec {
            JumpSpec::Exponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
            JumpSpec::PointMass { d } => d,
            _ => self.quantile(rng.open01()),
        }
    }
}

fn mu_floor(mu: f64) -> f64 {
    mu.max(f64::MIN_POSITIVE)
}
