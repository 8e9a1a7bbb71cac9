//! Scalar Fisher-KPP reduction: in the double limit delta, epsilon -> 0 the
//! predator profile rides the prey nullcline u = sqrt(1 - w) and w solves a
//! scalar front equation with reaction f~(w). This module carries the
//! reduced reaction, its potential form, the reduced front and its
//! 2-dimensional Evans function, and the count comparison against the full
//! system, which is the independent oracle for the stability verdict.

use crate::evans::{self, EvansError};
use crate::front::{self, FrontError, FrontOptions, FrontProfile, FrontRegime};
use crate::model::{ModelError, ModelParams};
use crate::numerics::{C64, CMat};
use crate::spectrum;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KppError {
    #[error("kpp/{op}: {msg}")]
    Invalid { op: &'static str, msg: String },
    #[error("kpp/{op}: w = {w} is outside the domain of the reduced system")]
    Domain { op: &'static str, w: f64 },
    #[error("kpp/kpp_front_solve: speed c = {c} at or below min_speed = {min_speed:.6}; the reduced front tail would oscillate through zero")]
    Subcritical { c: f64, min_speed: f64 },
    #[error("kpp/kpp_front_solve: positivity check failed (min w = {min_w:.3e})")]
    Positivity { min_w: f64 },
    #[error(transparent)]
    Front(#[from] FrontError),
    #[error(transparent)]
    Evans(#[from] EvansError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Prey nullcline branch through the coexistence range: u = sqrt(1 - w).
pub fn nullcline_u(w: f64) -> Result<f64, KppError> {
    if w > 1.0 {
        return Err(KppError::Domain {
            op: "nullcline_u",
            w,
        });
    }
    Ok((1.0 - w).sqrt())
}

/// Reduced reaction f~(w) = w (sqrt(1-w) - alpha) / (eta + sqrt(1-w)),
/// NaN-propagating for use inside Newton fields.
pub(crate) fn reaction_raw(p: &ModelParams, w: f64) -> f64 {
    let s = (1.0 - w).sqrt();
    w * (s - p.alpha) / (p.eta + s)
}

/// d f~ / d w in closed form via s = sqrt(1-w):
/// (s - alpha)/(eta + s) - w (eta + alpha) / (2 s (eta + s)^2).
pub(crate) fn reaction_deriv_raw(p: &ModelParams, w: f64) -> f64 {
    let s = (1.0 - w).sqrt();
    (s - p.alpha) / (p.eta + s) - w * (p.eta + p.alpha) / (2.0 * s * (p.eta + s) * (p.eta + s))
}

pub fn kpp_reaction(p: &ModelParams, w: f64) -> Result<f64, KppError> {
    if w > 1.0 {
        return Err(KppError::Domain {
            op: "kpp_reaction",
            w,
        });
    }
    Ok(reaction_raw(p, w))
}

pub fn kpp_reaction_deriv(p: &ModelParams, w: f64) -> Result<f64, KppError> {
    if w >= 1.0 {
        return Err(KppError::Domain {
            op: "kpp_reaction_deriv",
            w,
        });
    }
    Ok(reaction_deriv_raw(p, w))
}

/// Supremum of |f~'| over the front range [0, 1 - alpha^2], by dense
/// sampling; the extremes sit at the endpoints for the tested parameters
/// but interior maxima are picked up as well.
pub fn sup_ftilde(p: &ModelParams) -> f64 {
    let mw = 1.0 - p.alpha * p.alpha;
    let n = 10_000;
    let mut sup = 0.0f64;
    for k in 0..=n {
        let w = mw * (k as f64) / (n as f64);
        sup = sup.max(reaction_deriv_raw(p, w).abs());
    }
    sup
}

/// Admissible weight interval (sigma_lo, sigma_2) of the reduced problem:
/// the two roots of sigma^2 - c sigma + f~'(0) = 0.
pub fn kpp_weight_interval(p: &ModelParams) -> Result<(f64, f64), KppError> {
    let fp0 = (1.0 - p.alpha) / (p.eta + 1.0);
    let disc = p.c * p.c - 4.0 * fp0;
    if disc <= 0.0 {
        return Err(KppError::Subcritical {
            c: p.c,
            min_speed: p.min_speed(),
        });
    }
    let root = disc.sqrt();
    Ok((0.5 * (p.c - root), 0.5 * (p.c + root)))
}

/// Computed reduced front: w decreasing from 1 - alpha^2 to 0.
#[derive(Clone, Debug, Serialize)]
pub struct KppProfile {
    /// Parameters with delta = epsilon = 0; only alpha, eta, c matter here.
    pub params: ModelParams,
    pub half_length: f64,
    pub nodes: Vec<f64>,
    pub w: Vec<f64>,
    pub wp: Vec<f64>,
    /// Field-derived curvature for the quintic interpolant.
    pub wpp: Vec<f64>,
    pub residual: f64,
}

impl KppProfile {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    fn step(&self) -> f64 {
        self.nodes[1] - self.nodes[0]
    }

    /// Quintic-Hermite interpolated w, clamped to the endpoint values
    /// outside the computed domain.
    pub fn eval_w(&self, zeta: f64) -> f64 {
        let n = self.nodes.len();
        if zeta <= self.nodes[0] {
            return self.w[0];
        }
        if zeta >= self.nodes[n - 1] {
            return self.w[n - 1];
        }
        let h = self.step();
        let i = (((zeta - self.nodes[0]) / h).floor() as usize).min(n - 2);
        let t = (zeta - self.nodes[i]) / h;
        front::quintic(
            h,
            t,
            self.w[i],
            self.wp[i],
            self.wpp[i],
            self.w[i + 1],
            self.wp[i + 1],
            self.wpp[i + 1],
        )
        .0
    }
}

/// Solves the reduced scalar front by collocation. Requires a supercritical
/// speed; the computed profile is checked for positivity.
pub fn kpp_front_solve(p: &ModelParams, opts: &FrontOptions) -> Result<KppProfile, KppError> {
    if p.c <= p.min_speed() {
        return Err(KppError::Subcritical {
            c: p.c,
            min_speed: p.min_speed(),
        });
    }
    let pk = ModelParams {
        delta: 0.0,
        epsilon: 0.0,
        ..*p
    };
    let prof = front::solve_front(&pk, opts)?;
    let min_w = prof.w.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_w < -1e-9 {
        return Err(KppError::Positivity { min_w });
    }
    Ok(KppProfile {
        params: pk,
        half_length: prof.half_length,
        nodes: prof.nodes,
        w: prof.w,
        wp: prof.wp,
        wpp: prof.wpp,
        residual: prof.residual,
    })
}

/// Potential form of the reduced linearization coefficient, expressed
/// through the full-system Jacobian on the nullcline:
/// V = -g_u f_w / f_u + g_w at (sqrt(1 - w), w). Chain rule makes this
/// identical to f~'(w); computing it the long way is the point, because the
/// agreement test then exercises the Jacobian entries independently.
pub fn kpp_potential(p: &ModelParams, w: f64) -> Result<f64, KppError> {
    let u = nullcline_u(w)?;
    let j = p.jacobian(u, w)?;
    if j.f_u.abs() < 1e-14 {
        return Err(KppError::Invalid {
            op: "kpp_potential",
            msg: format!("f_u vanishes on the nullcline at w = {w}"),
        });
    }
    Ok(-j.g_u * j.f_w / j.f_u + j.g_w)
}

/// Evaluator of the reduced 2-dimensional Evans function. The end states
/// are companion matrices, so spatial eigenvalues and eigenvectors are in
/// closed form and the splitting degeneracy test is exact.
pub struct KppEvaluator<'a> {
    profile: &'a KppProfile,
    sigma: f64,
    l: f64,
    tol: f64,
    r_minus: Vec<f64>,
    r_plus: Vec<f64>,
}

/// Roots of mu^2 + c mu + (fp - lambda) = 0, ascending real part.
fn end_roots(c: f64, fp: f64, lambda: C64) -> [C64; 2] {
    let cc = C64::new(c, 0.0);
    let root = (cc * cc + (lambda - fp) * 4.0).sqrt();
    [(-cc - root) / 2.0, (-cc + root) / 2.0]
}

impl<'a> KppEvaluator<'a> {
    pub fn new(profile: &'a KppProfile, sigma: f64, lambda_ref: f64) -> Result<Self, KppError> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(KppError::Invalid {
                op: "kpp_evans",
                msg: format!("weight sigma must be finite and nonnegative, got {sigma}"),
            });
        }
        if sigma > 0.0 {
            let (lo, hi) = kpp_weight_interval(&profile.params)?;
            if !(sigma > lo && sigma < hi) {
                return Err(KppError::Invalid {
                    op: "kpp_evans",
                    msg: format!("sigma = {sigma} outside the reduced interval ({lo:.12}, {hi:.12})"),
                });
            }
        }
        if !(lambda_ref > 0.0) || !lambda_ref.is_finite() {
            return Err(KppError::Invalid {
                op: "kpp_evans",
                msg: format!("lambda_ref must be positive, got {lambda_ref}"),
            });
        }
        let lref = C64::new(lambda_ref, 0.0);
        let (vm, _, vp, _) = raw_ends(profile, sigma, lref)?;
        let r_minus = evans::kato_reference(&vm, lref)?;
        let r_plus = evans::kato_reference(&vp, lref)?;
        Ok(KppEvaluator {
            profile,
            sigma,
            l: profile.half_length,
            tol: 1e-10,
            r_minus,
            r_plus,
        })
    }

    pub fn eval(&self, lambda: C64) -> Result<C64, EvansError> {
        let p = &self.profile.params;
        let (mut vm, mu_m, mut vp, mu_p) = raw_ends(self.profile, self.sigma, lambda)?;
        evans::kato_scale(&mut vm, &self.r_minus, lambda)?;
        evans::kato_scale(&mut vp, &self.r_plus, lambda)?;
        let mat = |zeta: f64| -> CMat {
            let fp = reaction_deriv_raw(p, self.profile.eval_w(zeta));
            let mut m = CMat::zeros(2, 2);
            m.set(0, 1, C64::new(1.0, 0.0));
            m.set(1, 0, lambda - fp);
            m.set(1, 1, C64::new(-p.c, 0.0));
            m.shift_diag(C64::new(-evans::weight_shift(self.sigma, zeta), 0.0));
            m
        };
        let wm = evans::transport_vector(mat, &vm, mu_m, (-self.l, 0.0), self.tol)?;
        let wp = evans::transport_vector(mat, &vp, mu_p, (self.l, 0.0), self.tol)?;
        Ok(wm[0] * wp[1] - wm[1] * wp[0])
    }
}

/// Raw end eigenvectors (1, mu) and the transported eigenvalue shifts for
/// the reduced system; errors if the exponential dichotomy degenerates or
/// the (1, 1) splitting fails.
#[allow(clippy::type_complexity)]
fn raw_ends(
    profile: &KppProfile,
    sigma: f64,
    lambda: C64,
) -> Result<(Vec<C64>, C64, Vec<C64>, C64), EvansError> {
    let p = &profile.params;
    let mw = 1.0 - p.alpha * p.alpha;
    let fpm = reaction_deriv_raw(p, mw);
    let fpp = reaction_deriv_raw(p, 0.0);
    let minus = end_roots(p.c, fpm, lambda);
    let plus_raw = end_roots(p.c, fpp, lambda);
    let sig = C64::new(sigma, 0.0);
    let plus = [plus_raw[0] + sig, plus_raw[1] + sig];
    for mu in minus.iter().chain(plus.iter()) {
        if mu.re.abs() < 1e-10 {
            return Err(EvansError::SplittingDegenerate {
                lambda,
                mu_re_abs: mu.re.abs(),
            });
        }
    }
    let unstable_minus = minus.iter().filter(|m| m.re > 0.0).count();
    let stable_plus = plus.iter().filter(|m| m.re < 0.0).count();
    if (unstable_minus, stable_plus) != (1, 1) {
        return Err(EvansError::SplittingCounts {
            lambda,
            unstable_minus,
            stable_plus,
            expected: (1, 1),
        });
    }
    // companion-matrix eigenvectors; the plus-side shift leaves them alone
    let vm = vec![C64::new(1.0, 0.0), minus[1]];
    let vp = vec![C64::new(1.0, 0.0), plus_raw[0]];
    Ok((vm, minus[1], vp, plus[0]))
}

/// Reduced Evans function at a single spectral parameter.
pub fn kpp_evans(profile: &KppProfile, sigma: f64, lambda: C64) -> Result<C64, KppError> {
    let lambda_ref = lambda.norm().max(1.0);
    let ev = KppEvaluator::new(profile, sigma, lambda_ref)?;
    Ok(ev.eval(lambda)?)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CompareReport {
    pub sigma: f64,
    pub radius: f64,
    /// sigma lies in the full system's admissible interval.
    pub in_full: bool,
    /// sigma lies in the reduced interval (sigma_lo, sigma_2).
    pub in_kpp: bool,
    /// Both hold, so the two winding numbers count the same region.
    pub comparable: bool,
    pub winding_full: Option<i32>,
    pub winding_kpp: Option<i32>,
    pub equal: Option<bool>,
}

/// Winds the full and the reduced Evans functions over the same contour and
/// compares the counts. Each count is only computed where the weight is
/// admissible; asking for a weight admissible in neither space is an error.
pub fn compare_counts(
    full: &FrontProfile,
    kpp_profile: &KppProfile,
    sigma: f64,
    radius: f64,
) -> Result<CompareReport, KppError> {
    if full.regime == FrontRegime::Kpp {
        return Err(KppError::Invalid {
            op: "compare_counts",
            msg: "the full profile must come from the positive-delta system".into(),
        });
    }
    let full_iv = spectrum::weight_interval(&full.params).map_err(|e| KppError::Invalid {
        op: "compare_counts",
        msg: e.to_string(),
    })?;
    let (klo, khi) = kpp_weight_interval(&kpp_profile.params)?;
    let in_full = full_iv.contains(sigma);
    let in_kpp = sigma > klo && sigma < khi;
    if !in_full && !in_kpp {
        return Err(KppError::Invalid {
            op: "compare_counts",
            msg: format!(
                "sigma = {sigma} admissible in neither the full interval ({:.6}, {:.6}) nor the reduced one ({klo:.6}, {khi:.6})",
                full_iv.sigma_lo, full_iv.sigma_hi
            ),
        });
    }
    let contour = evans::build_contour(radius, 64)?;
    let mut winding_full = None;
    if in_full {
        let sys = evans::build_system(full, sigma)?;
        let ev = evans::EvansEvaluator::new(
            &sys,
            evans::EvalOptions {
                lambda_ref: radius,
                ..evans::EvalOptions::default()
            },
        )?;
        let res = evans::winding(|lam| ev.eval(lam), &contour)?;
        winding_full = Some(res.winding);
    }
    let mut winding_kpp = None;
    if in_kpp {
        let kev = KppEvaluator::new(kpp_profile, sigma, radius)?;
        let res = evans::winding(|lam| kev.eval(lam), &contour)?;
        winding_kpp = Some(res.winding);
    }
    let equal = match (winding_full, winding_kpp) {
        (Some(a), Some(b)) => Some(a == b),
        _ => None,
    };
    Ok(CompareReport {
        sigma,
        radius,
        in_full,
        in_kpp,
        comparable: in_full && in_kpp,
        winding_full,
        winding_kpp,
        equal,
    })
}
