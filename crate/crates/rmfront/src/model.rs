//! Rosenzweig-MacArthur reaction terms, Jacobian entries, equilibria, and
//! parameter-validity predicates. Everything downstream (fronts, spectrum,
//! Evans systems) reads the model exclusively through this module.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model/{op}: {msg}")]
    InvalidParams { op: &'static str, msg: String },
    #[error("model/reaction: pole at u = {u} (denominator {which} vanishes)")]
    Pole { u: f64, which: &'static str },
}

/// The five scalars that define a run. Structural constraints (0 < alpha < 1,
/// eta > 0, c > 0, nonnegative delta/epsilon) are enforced at construction;
/// the softer regime conditions are reported by `validate`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub eta: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub c: f64,
}

impl ModelParams {
    pub fn new(
        alpha: f64,
        eta: f64,
        delta: f64,
        epsilon: f64,
        c: f64,
    ) -> Result<Self, ModelError> {
        let p = ModelParams {
            alpha,
            eta,
            delta,
            epsilon,
            c,
        };
        p.check_structural()?;
        Ok(p)
    }

    pub fn check_structural(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidParams { op: "params", msg });
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0,1), got {}", self.alpha));
        }
        if !(self.eta > 0.0) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.delta >= 0.0) {
            return bad(format!("delta must be nonnegative, got {}", self.delta));
        }
        if !(self.epsilon >= 0.0) {
            return bad(format!("epsilon must be nonnegative, got {}", self.epsilon));
        }
        if !(self.c > 0.0) {
            return bad(format!("c must be positive, got {}", self.c));
        }
        Ok(())
    }

    /// f(u,w) = u(1-u) - u w/(1+u),  g(u,w) = w(u-alpha)/(eta+u)
    pub fn reaction(&self, u: f64, w: f64) -> Result<(f64, f64), ModelError> {
        if (1.0 + u).abs() < 1e-14 {
            return Err(ModelError::Pole { u, which: "1+u" });
        }
        if (self.eta + u).abs() < 1e-14 {
            return Err(ModelError::Pole { u, which: "eta+u" });
        }
        let f = u * (1.0 - u) - u * w / (1.0 + u);
        let g = w * (u - self.alpha) / (self.eta + u);
        Ok((f, g))
    }

    /// (f_u, f_w, g_u, g_w) at (u, w).
    pub fn jacobian(&self, u: f64, w: f64) -> Result<JacobianEntries, ModelError> {
        if (1.0 + u).abs() < 1e-14 {
            return Err(ModelError::Pole { u, which: "1+u" });
        }
        if (self.eta + u).abs() < 1e-14 {
            return Err(ModelError::Pole { u, which: "eta+u" });
        }
        let opu = 1.0 + u;
        let epu = self.eta + u;
        Ok(JacobianEntries {
            f_u: 1.0 - 2.0 * u - w / (opu * opu),
            f_w: -u / opu,
            g_u: (self.eta + self.alpha) * w / (epu * epu),
            g_w: (u - self.alpha) / epu,
        })
    }

    pub fn equilibria(&self) -> EquilibriaSet {
        EquilibriaSet {
            a: (self.alpha, 1.0 - self.alpha * self.alpha),
            b: (1.0, 0.0),
            o: (0.0, 0.0),
        }
    }

    /// Minimal front speed 2*sqrt((1-alpha)/(eta+1)).
    pub fn min_speed(&self) -> f64 {
        2.0 * ((1.0 - self.alpha) / (self.eta + 1.0)).sqrt()
    }

    /// Right side of the delta smallness condition delta < alpha^3 (eta+alpha)
    /// / ((1+alpha)(1-alpha^2)).
    pub fn delta_ceiling(&self) -> f64 {
        let a = self.alpha;
        a.powi(3) * (self.eta + a) / ((1.0 + a) * (1.0 - a * a))
    }

    pub fn validate(&self) -> ValidityReport {
        let mut checks = Vec::new();
        checks.push(Check {
            name: "alpha-range",
            pass: self.alpha > 0.0 && self.alpha < 1.0,
            detail: format!("alpha = {} must lie in (0,1)", self.alpha),
        });
        checks.push(Check {
            name: "eta-positive",
            pass: self.eta > 0.0,
            detail: format!("eta = {} must be positive", self.eta),
        });
        let ms = self.min_speed();
        checks.push(Check {
            name: "speed",
            pass: self.c > ms,
            detail: format!("c = {} must exceed min_speed = {:.6}", self.c, ms),
        });
        let regime_pass = if self.epsilon > 0.0 && self.delta > 0.0 {
            self.epsilon <= self.delta
        } else {
            true
        };
        checks.push(Check {
            name: "regime",
            pass: regime_pass,
            detail: format!(
                "epsilon = {} must not exceed delta = {} when both are positive",
                self.epsilon, self.delta
            ),
        });
        let ceil = self.delta_ceiling();
        checks.push(Check {
            name: "delta-smallness",
            pass: self.delta < ceil,
            detail: format!("delta = {} must stay below {:.6}", self.delta, ceil),
        });
        ValidityReport { checks }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobianEntries {
    pub f_u: f64,
    pub f_w: f64,
    pub g_u: f64,
    pub g_w: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquilibriaSet {
    /// Coexistence state (alpha, 1-alpha^2): the front's left limit.
    pub a: (f64, f64),
    /// Prey-only state (1, 0): the front's right limit.
    pub b: (f64, f64),
    /// Extinction state (0, 0).
    pub o: (f64, f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidityReport {
    pub checks: Vec<Check>,
}

impl ValidityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}
