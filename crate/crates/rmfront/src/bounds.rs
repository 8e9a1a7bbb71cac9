//! Point-spectrum magnitude bounds: the beta-parametrized M1/M2 estimate for
//! epsilon > 0, the real-part bound, the epsilon = 0 bound, the KPP bound,
//! and the Evans contour radius derived from whichever bound is active.

use crate::model::ModelParams;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("bounds/{op}: {msg}")]
    Invalid { op: &'static str, msg: String },
}

/// Supremum norms of the reaction-Jacobian entries along a front profile.
/// Produced by the front module; synthetic values are accepted everywhere.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SupNorms {
    pub f_u: f64,
    pub f_w: f64,
    pub g_u: f64,
    pub g_w: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundRegime {
    EpsPositive,
    EpsZero,
    Kpp,
}

impl BoundRegime {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundRegime::EpsPositive => "eps-positive",
            BoundRegime::EpsZero => "eps-zero",
            BoundRegime::Kpp => "kpp",
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundReport {
    pub m1: f64,
    pub m2: f64,
    /// max(m1, m2) in the eps-positive regime, otherwise the regime's own value.
    pub bound: f64,
    pub betas: [f64; 4],
    pub re_bound: f64,
    pub regime: BoundRegime,
    pub contour_radius: f64,
}

pub const DEFAULT_BETA_GRID: [f64; 7] = [0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0];

const RADIUS_MARGIN: f64 = 1.05;

fn check_betas(op: &'static str, betas: &[f64]) -> Result<(), BoundsError> {
    if betas.iter().any(|b| !(*b > 0.0)) {
        return Err(BoundsError::Invalid {
            op,
            msg: format!("betas must be strictly positive, got {betas:?}"),
        });
    }
    Ok(())
}

/// Young-inequality eigenvalue-magnitude estimate for epsilon > 0:
/// |lambda| <= max(M1, M2) with
/// M1 = c^4/(4 eps) + (sup|f_u| + 1/(8 b1) + 1/(8 b3))/delta + sup|g_u| (b2 + 1/(4 b4)),
/// M2 = c^4/4 + (1-alpha)/(eta+1) + (1/(4 b2) + b4) sup|g_u| + (b1 + b3)/(2 delta).
pub fn bound_eps_positive(
    p: &ModelParams,
    sups: &SupNorms,
    betas: [f64; 4],
) -> Result<(f64, f64), BoundsError> {
    if !(p.epsilon > 0.0) {
        return Err(BoundsError::Invalid {
            op: "bound_eps_positive",
            msg: format!("requires epsilon > 0, got {}", p.epsilon),
        });
    }
    check_betas("bound_eps_positive", &betas)?;
    let [b1, b2, b3, b4] = betas;
    let c4 = p.c.powi(4);
    let m1 = c4 / (4.0 * p.epsilon)
        + (sups.f_u + 1.0 / (8.0 * b1) + 1.0 / (8.0 * b3)) / p.delta
        + sups.g_u * (b2 + 1.0 / (4.0 * b4));
    let m2 = c4 / 4.0
        + (1.0 - p.alpha) / (p.eta + 1.0)
        + (1.0 / (4.0 * b2) + b4) * sups.g_u
        + (b1 + b3) / (2.0 * p.delta);
    Ok((m1, m2))
}

/// Real-part estimate, valid for eps >= 0 (eps enters only through sups):
/// Re(lambda) <= max{ sup|f_u|/delta + b2 sup|g_u| + sup|f_w|/(4 b1 delta),
///                    sup|g_w| + b1 sup|f_w|/delta + sup|g_u|/(4 b2) }.
pub fn re_bound(
    p: &ModelParams,
    sups: &SupNorms,
    betas: [f64; 4],
) -> Result<f64, BoundsError> {
    check_betas("re_bound", &betas)?;
    let [b1, b2, _, _] = betas;
    let first = sups.f_u / p.delta + b2 * sups.g_u + sups.f_w / (4.0 * b1 * p.delta);
    let second = sups.g_w + b1 * sups.f_w / p.delta + sups.g_u / (4.0 * b2);
    Ok(first.max(second))
}

/// Exhaustive search over the beta grid (fourth Cartesian power) minimizing
/// max(M1, M2); ties resolve to the lexicographically smallest betas.
pub fn optimize_betas(
    p: &ModelParams,
    sups: &SupNorms,
    grid: &[f64],
) -> Result<BoundReport, BoundsError> {
    if grid.is_empty() {
        return Err(BoundsError::Invalid {
            op: "optimize_betas",
            msg: "empty beta grid".into(),
        });
    }
    check_betas("optimize_betas", grid)?;
    let mut sorted = grid.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();

    let mut best: Option<([f64; 4], f64, f64, f64)> = None;
    for &b1 in &sorted {
        for &b2 in &sorted {
            for &b3 in &sorted {
                for &b4 in &sorted {
                    let betas = [b1, b2, b3, b4];
                    let (m1, m2) = bound_eps_positive(p, sups, betas)?;
                    let bound = m1.max(m2);
                    let better = match &best {
                        None => true,
                        Some((bb, _, _, prev)) => {
                            bound < *prev || (bound == *prev && betas < *bb)
                        }
                    };
                    if better {
                        best = Some((betas, m1, m2, bound));
                    }
                }
            }
        }
    }
    let (betas, m1, m2, bound) = best.unwrap();
    let re = re_bound(p, sups, betas)?;
    Ok(BoundReport {
        m1,
        m2,
        bound,
        betas,
        re_bound: re,
        regime: BoundRegime::EpsPositive,
        contour_radius: RADIUS_MARGIN * bound,
    })
}

/// epsilon = 0 estimate:
/// |lambda| <= c^2/4 + sup|g_u|/(2 sup|f_u|) + (1-alpha)/(eta+alpha).
pub fn bound_eps_zero(p: &ModelParams, sups: &SupNorms) -> Result<f64, BoundsError> {
    if p.epsilon != 0.0 {
        return Err(BoundsError::Invalid {
            op: "bound_eps_zero",
            msg: format!("requires epsilon = 0, got {}", p.epsilon),
        });
    }
    if !(sups.f_u > 0.0) {
        return Err(BoundsError::Invalid {
            op: "bound_eps_zero",
            msg: "sup|f_u| must be positive along the front".into(),
        });
    }
    Ok(p.c * p.c / 4.0
        + sups.g_u / (2.0 * sups.f_u)
        + (1.0 - p.alpha) / (p.eta + p.alpha))
}

/// KPP-limit estimate: |lambda| <= c^2/4 + sup|ftilde'(w_f)|.
pub fn bound_kpp(p: &ModelParams, sup_ftilde: f64) -> f64 {
    p.c * p.c / 4.0 + sup_ftilde
}

/// Evans contour radius: the active bound with a 5% safety margin.
pub fn contour_radius(report: &BoundReport) -> f64 {
    RADIUS_MARGIN * report.bound
}

/// Assembles the epsilon = 0 report. M1/M2 are not defined in this regime, so
/// both carry the bound itself; betas only feed the real-part estimate.
pub fn report_eps_zero(p: &ModelParams, sups: &SupNorms) -> Result<BoundReport, BoundsError> {
    let bound = bound_eps_zero(p, sups)?;
    let betas = [1.0, 1.0, 1.0, 1.0];
    let re = re_bound(p, sups, betas)?;
    Ok(BoundReport {
        m1: bound,
        m2: bound,
        bound,
        betas,
        re_bound: re.min(bound),
        regime: BoundRegime::EpsZero,
        contour_radius: RADIUS_MARGIN * bound,
    })
}

/// Assembles the KPP report. The scalar problem has no beta structure; the
/// magnitude bound also caps the real part.
pub fn report_kpp(p: &ModelParams, sup_ftilde: f64) -> Result<BoundReport, BoundsError> {
    if !(sup_ftilde >= 0.0) {
        return Err(BoundsError::Invalid {
            op: "report_kpp",
            msg: format!("sup|ftilde'| must be nonnegative, got {sup_ftilde}"),
        });
    }
    let bound = bound_kpp(p, sup_ftilde);
    Ok(BoundReport {
        m1: bound,
        m2: bound,
        bound,
        betas: [1.0, 1.0, 1.0, 1.0],
        re_bound: bound,
        regime: BoundRegime::Kpp,
        contour_radius: RADIUS_MARGIN * bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::new(0.75, 3.0, 0.1, 0.01, 1.0).unwrap()
    }

    fn sups() -> SupNorms {
        SupNorms {
            f_u: 1.0,
            f_w: 0.5,
            g_u: 0.3,
            g_w: 0.0625,
        }
    }

    #[test]
    fn m1_m2_worked_example() {
        let (m1, m2) = bound_eps_positive(&params(), &sups(), [1.0; 4]).unwrap();
        assert!((m1 - 37.875).abs() < 1e-12, "m1 = {m1}");
        assert!((m2 - 10.6875).abs() < 1e-12, "m2 = {m2}");
    }

    #[test]
    fn m1_grows_like_inverse_eps() {
        let mut p = params();
        let (m1a, _) = bound_eps_positive(&p, &sups(), [1.0; 4]).unwrap();
        p.epsilon = 0.001;
        let (m1b, _) = bound_eps_positive(&p, &sups(), [1.0; 4]).unwrap();
        let tail_a = m1a - p.c.powi(4) / (4.0 * 0.01);
        let tail_b = m1b - p.c.powi(4) / (4.0 * 0.001);
        assert!((tail_a - tail_b).abs() < 1e-9);
        assert!(m1b > 10.0 * m1a / 2.0);
    }

    #[test]
    fn m2_independent_of_eps() {
        let mut p = params();
        let (_, m2a) = bound_eps_positive(&p, &sups(), [0.5, 0.2, 1.0, 0.35]).unwrap();
        p.epsilon = 0.05;
        let (_, m2b) = bound_eps_positive(&p, &sups(), [0.5, 0.2, 1.0, 0.35]).unwrap();
        assert_eq!(m2a, m2b);
    }

    #[test]
    fn rejects_bad_betas_and_eps() {
        assert!(bound_eps_positive(&params(), &sups(), [1.0, -1.0, 1.0, 1.0]).is_err());
        assert!(bound_eps_positive(&params(), &sups(), [0.0, 1.0, 1.0, 1.0]).is_err());
        let mut p = params();
        p.epsilon = 0.0;
        assert!(bound_eps_positive(&p, &sups(), [1.0; 4]).is_err());
    }

    #[test]
    fn re_bound_worked_example() {
        let r = re_bound(&params(), &sups(), [1.0; 4]).unwrap();
        assert!((r - 11.55).abs() < 1e-12, "re_bound = {r}");
    }

    #[test]
    fn re_bound_eps_independent() {
        let mut p = params();
        let a = re_bound(&p, &sups(), [0.35, 0.75, 1.0, 1.0]).unwrap();
        p.epsilon = 0.05;
        let b = re_bound(&p, &sups(), [0.35, 0.75, 1.0, 1.0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn re_bound_grows_with_beta2() {
        let r = re_bound(&params(), &sups(), [1.0, 100.0, 1.0, 1.0]).unwrap();
        assert!(r >= 100.0 * 0.3);
    }

    #[test]
    fn optimize_singleton_grid() {
        let rep = optimize_betas(&params(), &sups(), &[1.0]).unwrap();
        assert_eq!(rep.betas, [1.0; 4]);
        assert!((rep.bound - 37.875).abs() < 1e-12);
        assert_eq!(rep.regime, BoundRegime::EpsPositive);
    }

    #[test]
    fn optimize_default_grid_frozen() {
        let rep = optimize_betas(&params(), &sups(), &DEFAULT_BETA_GRID).unwrap();
        assert!((rep.bound - 37.59).abs() < 1e-12, "bound = {}", rep.bound);
        assert_eq!(rep.betas, [1.0, 0.05, 1.0, 1.0]);
        assert!((rep.contour_radius - 1.05 * 37.59).abs() < 1e-12);
        assert!(rep.contour_radius > rep.re_bound);
    }

    #[test]
    fn optimize_never_exceeds_unit_betas() {
        let p = params();
        let s = sups();
        let (m1, m2) = bound_eps_positive(&p, &s, [1.0; 4]).unwrap();
        let rep = optimize_betas(&p, &s, &DEFAULT_BETA_GRID).unwrap();
        assert!(rep.bound <= m1.max(m2));
    }

    #[test]
    fn optimize_refinement_monotone() {
        let p = params();
        let s = sups();
        let coarse = optimize_betas(&p, &s, &[0.5, 1.0]).unwrap();
        let fine = optimize_betas(&p, &s, &[0.25, 0.5, 0.75, 1.0]).unwrap();
        assert!(fine.bound <= coarse.bound);
    }

    #[test]
    fn optimize_rejects_empty_grid() {
        assert!(matches!(
            optimize_betas(&params(), &sups(), &[]),
            Err(BoundsError::Invalid { op: "optimize_betas", .. })
        ));
    }

    #[test]
    fn eps_zero_worked_example() {
        let mut p = params();
        p.epsilon = 0.0;
        let b = bound_eps_zero(&p, &sups()).unwrap();
        assert!((b - (0.25 + 0.15 + 0.25 / 3.75)).abs() < 1e-15, "b = {b}");
        assert!((b - 0.4666666666666667).abs() < 1e-15);
        // no explicit delta in the formula
        p.delta = 0.05;
        assert_eq!(bound_eps_zero(&p, &sups()).unwrap(), b);
    }

    #[test]
    fn eps_zero_requires_positive_fu() {
        let mut p = params();
        p.epsilon = 0.0;
        let mut s = sups();
        s.f_u = 0.0;
        assert!(bound_eps_zero(&p, &s).is_err());
        assert!(bound_eps_zero(&params(), &sups()).is_err());
    }

    #[test]
    fn eps_zero_speed_scaling() {
        let mut p = params();
        p.epsilon = 0.0;
        let b1 = bound_eps_zero(&p, &sups()).unwrap();
        p.c = 2.0;
        let b2 = bound_eps_zero(&p, &sups()).unwrap();
        assert!((b2 - b1 - 0.75).abs() < 1e-14);
    }

    #[test]
    fn kpp_worked_example() {
        assert!((bound_kpp(&params(), 0.3) - 0.55).abs() < 1e-15);
        let rep = report_kpp(&params(), 0.3).unwrap();
        assert_eq!(rep.regime, BoundRegime::Kpp);
        assert!((rep.contour_radius - 0.5775).abs() < 1e-15);
    }

    #[test]
    fn radius_multiplier() {
        let rep = BoundReport {
            m1: 10.0,
            m2: 8.0,
            bound: 10.0,
            betas: [1.0; 4],
            re_bound: 5.0,
            regime: BoundRegime::EpsPositive,
            contour_radius: 10.5,
        };
        assert!((contour_radius(&rep) - 10.5).abs() < 1e-15);
    }

    #[test]
    fn eps_zero_report_invariants() {
        let mut p = params();
        p.epsilon = 0.0;
        let rep = report_eps_zero(&p, &sups()).unwrap();
        assert!(rep.bound > 0.0);
        assert!(rep.contour_radius >= 1.05 * rep.bound);
        assert!(rep.re_bound <= rep.bound);
        assert_eq!(rep.regime, BoundRegime::EpsZero);
    }
}
