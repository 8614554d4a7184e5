//! Response functions `h(t) = t^{-1/2} ℓ(t)` and their integrals.
//!
//! Every family is extended by a constant plateau `h(t_min)` on `[0, t_min)`,
//! which makes the −1/2 families nonincreasing on all of `[0, ∞)`. Writing
//! `s = ln t`, each family has `t h²(t) = φ(s)` above the cutoff with an
//! elementary antiderivative `Φ`, so `m(t) = ∫_0^t h²` and its inverse are
//! closed-form; the primitive `H(t) = ∫_0^t h` falls back to quadrature in
//! log coordinates where it has no elementary expression.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad::{integrate_log, Tolerance};

const QUAD_TOL: Tolerance = Tolerance::relative(1e-11);

/// Kernel declaration as written in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `ℓ(t) = (log t)^{(ρ-1)/2}`.
    Moderate {
        rho: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_min: Option<f64>,
    },
    /// `ℓ(t) = (log t)^{-1/2} (log log t)^{(ρ-1)/2}`.
    Slow {
        rho: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_min: Option<f64>,
    },
    /// `ℓ(t) = exp((ρ/2)(log t)^γ) (log t)^{(γ-1)/2}`.
    Fast {
        rho: f64,
        gamma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_min: Option<f64>,
    },
    /// `h(t) = t^β` with `β > -1/2` (square-integrable near zero, not at infinity).
    PurePower {
        beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_min: Option<f64>,
    },
}

/// Time-scaling function used to place the evaluation times `t + g(t, u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Scaling {
    /// `g(t, u) = m^←(u m(t))`.
    #[default]
    #[serde(rename = "inverse")]
    Inverse,
    /// Family-specific asymptotic closed forms.
    #[serde(rename = "remark3")]
    ClosedForm,
}

impl std::str::FromStr for Scaling {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "inverse" => Ok(Self::Inverse),
            "remark3" => Ok(Self::ClosedForm),
            other => Err(format!("unknown scaling `{other}` (expected inverse|remark3)")),
        }
    }
}

impl std::fmt::Display for Scaling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Inverse => "inverse",
            Self::ClosedForm => "remark3",
        })
    }
}

/// Which integrals are available analytically for a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClosedForms {
    pub primitive: bool,
    pub square_integral: bool,
    pub inverse: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    /// moderate with ρ = 1
    InvSqrt,
    Moderate { rho: f64 },
    Slow { rho: f64 },
    Fast { rho: f64, gamma: f64 },
    Power { beta: f64 },
}

/// A validated response function.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseKernel {
    spec: KernelSpec,
    shape: Shape,
    t_min: f64,
    h_min: f64,
    m_min: f64,
    phi_min: f64,
    nonincreasing: bool,
}

fn positive_finite(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {x}")))
    }
}

/// Smallest `s = ln t` from which a slow-family `h` is nonincreasing:
/// the root of `(s + 1) ln s = ρ - 1`.
fn slow_monotone_from(rho: f64) -> f64 {
    if rho <= 1.0 {
        return 1.0;
    }
    let f = |s: f64| (s + 1.0) * s.ln() - (rho - 1.0);
    let (mut lo, mut hi) = (1.0, 2.0);
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Smallest `s` from which a fast-family `h` is nonincreasing: the larger
/// root of `s - ργ s^γ + (1 - γ)`, or 0 when that expression never dips
/// below zero.
fn fast_monotone_from(rho: f64, gamma: f64) -> f64 {
    let q = |s: f64| s - rho * gamma * s.powf(gamma) + (1.0 - gamma);
    let s_star = (rho * gamma * gamma).powf(1.0 / (1.0 - gamma));
    if q(s_star) >= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (s_star, 2.0 * s_star.max(1.0));
    while q(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if q(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

impl ResponseKernel {
    pub fn new(spec: KernelSpec) -> Result<Self> {
        let (shape, t_min) = match spec {
            KernelSpec::Moderate { rho, t_min } => {
                positive_finite("rho", rho)?;
                let floor = (rho - 1.0).max(0.0).exp();
                let default = if rho < 1.0 { std::f64::consts::E } else { floor };
                let t_min = t_min.unwrap_or(default);
                if rho < 1.0 && t_min <= 1.0 {
                    return Err(invalid("t_min", format!("must exceed 1 for rho < 1, got {t_min}")));
                }
                if t_min < 1.0 {
                    return Err(invalid("t_min", format!("must be at least 1, got {t_min}")));
                }
                let shape = if rho == 1.0 {
                    Shape::InvSqrt
                } else {
                    Shape::Moderate { rho }
                };
                (shape, t_min)
            }
            KernelSpec::Slow { rho, t_min } => {
                positive_finite("rho", rho)?;
                let s0 = slow_monotone_from(rho);
                let default = s0.max(std::f64::consts::E).exp();
                let t_min = t_min.unwrap_or(default);
                let s_min = t_min.ln();
                if s_min <= 1.0 || s_min < s0 * (1.0 - 1e-12) {
                    return Err(invalid(
                        "t_min",
                        format!("must exceed max(e, {}) for the slow family, got {t_min}", s0.exp()),
                    ));
                }
                (Shape::Slow { rho }, t_min)
            }
            KernelSpec::Fast { rho, gamma, t_min } => {
                positive_finite("rho", rho)?;
                if !(gamma > 0.0 && gamma < 1.0) {
                    return Err(invalid("gamma", format!("must lie in (0, 1), got {gamma}")));
                }
                let s0 = fast_monotone_from(rho, gamma);
                let default = s0.max(1.0).exp();
                let t_min = t_min.unwrap_or(default);
                let s_min = t_min.ln();
                if s_min <= 0.0 || s_min < s0 * (1.0 - 1e-12) {
                    return Err(invalid(
                        "t_min",
                        format!("must be at least {} for this fast kernel, got {t_min}", s0.exp()),
                    ));
                }
                (Shape::Fast { rho, gamma }, t_min)
            }
            KernelSpec::PurePower { beta, t_min } => {
                if !(beta.is_finite() && beta > -0.5) {
                    return Err(invalid("beta", format!("must exceed -1/2, got {beta}")));
                }
                let t_min = t_min.unwrap_or(1.0);
                positive_finite("t_min", t_min)?;
                (Shape::Power { beta }, t_min)
            }
        };
        positive_finite("t_min", t_min)?;
        let mut k = Self {
            spec,
            shape,
            t_min,
            h_min: 0.0,
            m_min: 0.0,
            phi_min: 0.0,
            nonincreasing: true,
        };
        if let Shape::Moderate { rho } = shape {
            k.nonincreasing = t_min >= (rho - 1.0).max(0.0).exp() * (1.0 - 1e-12);
        }
        k.h_min = k.h_above(t_min);
        k.m_min = t_min * k.h_min * k.h_min;
        k.phi_min = k.phi(t_min);
        Ok(k)
    }

    pub fn moderate(rho: f64, t_min: Option<f64>) -> Result<Self> {
        Self::new(KernelSpec::Moderate { rho, t_min })
    }

    pub fn slow(rho: f64, t_min: Option<f64>) -> Result<Self> {
        Self::new(KernelSpec::Slow { rho, t_min })
    }

    pub fn fast(rho: f64, gamma: f64, t_min: Option<f64>) -> Result<Self> {
        Self::new(KernelSpec::Fast { rho, gamma, t_min })
    }

    pub fn pure_power(beta: f64, t_min: Option<f64>) -> Result<Self> {
        Self::new(KernelSpec::PurePower { beta, t_min })
    }

    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    /// False when a moderate kernel's cutoff lies below the maximum of
    /// `t^{-1/2} (ln t)^{(ρ-1)/2}`, so that `h` first rises past the plateau.
    pub fn is_nonincreasing(&self) -> bool {
        self.nonincreasing
    }

    /// True for the index −1/2 families (non-integrable `h²`).
    pub fn is_critical(&self) -> bool {
        !matches!(self.shape, Shape::Power { .. })
    }

    pub fn closed_form(&self) -> ClosedForms {
        ClosedForms {
            primitive: matches!(self.shape, Shape::InvSqrt | Shape::Power { .. }),
            square_integral: true,
            inverse: true,
        }
    }

    #[inline]
    fn h_above(&self, t: f64) -> f64 {
        match self.shape {
            Shape::InvSqrt => 1.0 / t.sqrt(),
            Shape::Moderate { rho } => t.ln().powf(0.5 * (rho - 1.0)) / t.sqrt(),
            Shape::Slow { rho } => {
                let s = t.ln();
                s.ln().powf(0.5 * (rho - 1.0)) / (s * t).sqrt()
            }
            Shape::Fast { rho, gamma } => {
                let s = t.ln();
                (0.5 * rho * s.powf(gamma)).exp() * s.powf(0.5 * (gamma - 1.0)) / t.sqrt()
            }
            Shape::Power { beta } => t.powf(beta),
        }
    }

    /// `h(t)`, held at `h(t_min)` below the cutoff.
    #[inline]
    pub fn h(&self, t: f64) -> f64 {
        if t < self.t_min {
            self.h_min
        } else {
            self.h_above(t)
        }
    }

    /// Antiderivative of `h²` above the cutoff (up to a constant).
    fn phi(&self, t: f64) -> f64 {
        match self.shape {
            Shape::InvSqrt => t.ln(),
            Shape::Moderate { rho } => t.ln().powf(rho) / rho,
            Shape::Slow { rho } => t.ln().ln().powf(rho) / rho,
            Shape::Fast { rho, gamma } => (rho * t.ln().powf(gamma)).exp() / (rho * gamma),
            Shape::Power { beta } => {
                let p = 2.0 * beta + 1.0;
                t.powf(p) / p
            }
        }
    }

    fn phi_inverse(&self, v: f64) -> f64 {
        match self.shape {
            Shape::InvSqrt => v.exp(),
            Shape::Moderate { rho } => (rho * v).powf(1.0 / rho).exp(),
            Shape::Slow { rho } => (rho * v).powf(1.0 / rho).exp().exp(),
            Shape::Fast { rho, gamma } => ((rho * gamma * v).ln() / rho).powf(1.0 / gamma).exp(),
            Shape::Power { beta } => {
                let p = 2.0 * beta + 1.0;
                (p * v).powf(1.0 / p)
            }
        }
    }

    /// `m(t) = ∫_0^t h²`.
    pub fn m(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else if t < self.t_min {
            t * self.h_min * self.h_min
        } else {
            self.m_min + (self.phi(t) - self.phi_min)
        }
    }

    /// `m(t)` by quadrature (plateau exact, log substitution above the cutoff).
    pub fn m_quadrature(&self, t: f64) -> f64 {
        if t <= self.t_min {
            return self.m(t);
        }
        let tail = integrate_log(|y| self.h_above(y).powi(2), self.t_min, t, QUAD_TOL);
        self.m_min + tail.value
    }

    /// Generalized inverse `m^←(v) = inf{t : m(t) >= v}`.
    pub fn m_inverse(&self, v: f64) -> f64 {
        if v <= 0.0 {
            0.0
        } else if v <= self.m_min {
            v / (self.h_min * self.h_min)
        } else {
            self.phi_inverse(v - self.m_min + self.phi_min)
        }
    }

    /// `m^←` by bracket expansion and 200 bisection steps on `m`.
    pub fn m_inverse_bisection(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, self.t_min.max(1.0));
        while self.m(hi) < v {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.m(mid) >= v {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// `g(t, u) = m^←(u m(t))`.
    pub fn scaling_g(&self, t: f64, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return t;
        }
        self.m_inverse(u * self.m(t))
    }

    /// Asymptotic closed-form scalings of the three −1/2 families.
    pub fn closed_form_scaling(&self, t: f64, u: f64) -> Result<f64> {
        if matches!(self.shape, Shape::Power { .. }) {
            return Err(Error::NoClosedFormScaling);
        }
        if t <= self.t_min {
            return Err(Error::ScalingBelowCutoff {
                t,
                t_min: self.t_min,
            });
        }
        let s = t.ln();
        Ok(match self.shape {
            Shape::InvSqrt => t.powf(u),
            Shape::Moderate { rho } => (s * u.powf(1.0 / rho)).exp(),
            Shape::Slow { rho } => s.powf(u.powf(1.0 / rho)).exp(),
            Shape::Fast { rho, gamma } => {
                if u <= 0.0 {
                    0.0
                } else {
                    (s + u.ln() * s.powf(1.0 - gamma) / (gamma * rho)).exp()
                }
            }
            Shape::Power { .. } => unreachable!(),
        })
    }

    /// Evaluates the selected scaling.
    pub fn scaling(&self, which: Scaling, t: f64, u: f64) -> Result<f64> {
        match which {
            Scaling::Inverse => Ok(self.scaling_g(t, u)),
            Scaling::ClosedForm => self.closed_form_scaling(t, u),
        }
    }

    /// `H(t) = ∫_0^t h`.
    pub fn h_primitive(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t <= self.t_min {
            return t * self.h_min;
        }
        let base = self.t_min * self.h_min;
        match self.shape {
            Shape::InvSqrt => base + 2.0 * (t.sqrt() - self.t_min.sqrt()),
            Shape::Power { beta } => {
                let p = beta + 1.0;
                base + (t.powf(p) - self.t_min.powf(p)) / p
            }
            _ => base + self.h_primitive_tail_quadrature(t),
        }
    }

    /// `H(t)` by quadrature regardless of closed-form availability.
    pub fn h_primitive_quadrature(&self, t: f64) -> f64 {
        if t <= self.t_min {
            return self.h_primitive(t);
        }
        self.t_min * self.h_min + self.h_primitive_tail_quadrature(t)
    }

    fn h_primitive_tail_quadrature(&self, t: f64) -> f64 {
        integrate_log(|y| self.h_above(y), self.t_min, t, QUAD_TOL).value
    }
}
