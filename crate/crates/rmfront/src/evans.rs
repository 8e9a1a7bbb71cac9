//! Evans-function evaluation for the weighted linearization about a
//! computed front, and the winding-number count of its zeros over a
//! right-half-plane contour.
//!
//! Two independent transport methods are kept side by side on purpose: the
//! second-compound lift with a scalar pairing at the matching point, and a
//! polar (orthonormal-frame plus log-scale) integration of the same
//! subspaces. They share only the initialization and the Kato-style
//! normalization, so agreement between them is a real cross-check.

use crate::front::{FrontProfile, FrontRegime};
use crate::model::ModelParams;
use crate::numerics::eig::eig;
use crate::numerics::ivp::integrate_ivp_opts;
use crate::numerics::wedge::{pairing3, pairing4, wedge2, wedge2_3, wedge_vec3, wedge_vec4};
use crate::numerics::{C64, CMat, NumericsError};
use crate::spectrum::{self, WeightInterval};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvansError {
    #[error("evans/{op}: {msg}")]
    Invalid { op: &'static str, msg: String },
    #[error("evans/splitting: asymptotic eigenvalue with |Re mu| = {mu_re_abs:.3e} at lambda = {lambda}; the exponential dichotomy degenerates")]
    SplittingDegenerate { lambda: C64, mu_re_abs: f64 },
    #[error("evans/splitting: counts (unstable minus, stable plus) = ({unstable_minus}, {stable_plus}) at lambda = {lambda}, expected ({}, {})", expected.0, expected.1)]
    SplittingCounts {
        lambda: C64,
        unstable_minus: usize,
        stable_plus: usize,
        expected: (usize, usize),
    },
    #[error("evans/winding: {msg}")]
    UnresolvedWinding { msg: String },
    #[error("evans/normalization: reference functional margin {margin:.3e} at lambda = {lambda}; the Kato section is not usable here")]
    Normalization { lambda: C64, margin: f64 },
    #[error("evans/{op}: {source}")]
    Numerics {
        op: &'static str,
        source: NumericsError,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvansMethod {
    /// Second-compound (wedge) transport of the invariant subspaces.
    Compound,
    /// Orthonormal-frame transport with a separate log-scale variable.
    Polar,
}

/// Weighted first-order linearization about a front, together with the
/// admissible-weight interval its sigma was checked against.
pub struct EvansSystem<'a> {
    pub profile: &'a FrontProfile,
    pub sigma: f64,
    pub interval: WeightInterval,
}

/// Smooth weight derivative sigma e^{sigma zeta} / (1 + e^{sigma zeta});
/// tends to 0 at minus infinity and to sigma at plus infinity.
pub(crate) fn weight_shift(sigma: f64, zeta: f64) -> f64 {
    let x = sigma * zeta;
    if x >= 500.0 {
        return sigma;
    }
    let e = x.exp();
    sigma * e / (1.0 + e)
}

/// log(1 + e^x) without overflow for large positive x.
pub(crate) fn ln1pexp(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Checks the weight against the admissible interval and wraps the profile.
/// sigma = 0 is allowed as an unweighted diagnostic; any positive sigma must
/// lie strictly inside the interval.
pub fn build_system(profile: &FrontProfile, sigma: f64) -> Result<EvansSystem<'_>, EvansError> {
    if profile.regime == FrontRegime::Kpp {
        return Err(EvansError::Invalid {
            op: "build_system",
            msg: "scalar KPP profiles are handled by the kpp module".into(),
        });
    }
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(EvansError::Invalid {
            op: "build_system",
            msg: format!("weight sigma must be finite and nonnegative, got {sigma}"),
        });
    }
    let interval = spectrum::weight_interval(&profile.params).map_err(|e| EvansError::Invalid {
        op: "build_system",
        msg: e.to_string(),
    })?;
    if sigma > 0.0 && !interval.contains(sigma) {
        return Err(EvansError::Invalid {
            op: "build_system",
            msg: format!(
                "sigma = {sigma} outside the admissible interval ({:.12}, {:.12})",
                interval.sigma_lo, interval.sigma_hi
            ),
        });
    }
    Ok(EvansSystem {
        profile,
        sigma,
        interval,
    })
}

/// Unweighted first-order coefficient matrix of the eigenvalue problem at
/// front state (u, w). Four: state (p, p', q, q'); Three: state (p, q, q').
fn interior_matrix(p: &ModelParams, regime: FrontRegime, u: f64, w: f64, lambda: C64) -> CMat {
    let (fu, fw, gu, gw) = crate::front::eval_jac(p, u, w);
    match regime {
        FrontRegime::Four => {
            let mut m = CMat::zeros(4, 4);
            m.set(0, 1, C64::new(1.0, 0.0));
            m.set(1, 0, (lambda - fu / p.delta) / p.epsilon);
            m.set(1, 1, C64::new(-p.c / p.epsilon, 0.0));
            m.set(1, 2, C64::new(-fw / (p.epsilon * p.delta), 0.0));
            m.set(3, 0, C64::new(-gu, 0.0));
            m.set(2, 3, C64::new(1.0, 0.0));
            m.set(3, 2, lambda - gw);
            m.set(3, 3, C64::new(-p.c, 0.0));
            m
        }
        FrontRegime::Three => {
            let mut m = CMat::zeros(3, 3);
            m.set(0, 0, (lambda - fu / p.delta) / p.c);
            m.set(0, 1, C64::new(-fw / (p.c * p.delta), 0.0));
            m.set(1, 2, C64::new(1.0, 0.0));
            m.set(2, 0, C64::new(-gu, 0.0));
            m.set(2, 1, lambda - gw);
            m.set(2, 2, C64::new(-p.c, 0.0));
            m
        }
        FrontRegime::Kpp => unreachable!("build_system rejects KPP profiles"),
    }
}

impl EvansSystem<'_> {
    pub fn dim(&self) -> usize {
        self.profile.regime.dim()
    }

    /// Lambda^2 dimension of the transported minus-side object.
    pub fn lifted_dim(&self) -> usize {
        match self.profile.regime {
            FrontRegime::Four => 6,
            _ => 3,
        }
    }

    /// Weighted coefficient matrix at position zeta.
    pub fn coefficient(&self, zeta: f64, lambda: C64) -> CMat {
        let (u, w) = self.profile.eval_uw(zeta);
        let mut m = interior_matrix(&self.profile.params, self.profile.regime, u, w, lambda);
        let s = weight_shift(self.sigma, zeta);
        m.shift_diag(C64::new(-s, 0.0));
        m
    }

    /// Asymptotic coefficient matrix; the weight shift is sigma at the plus
    /// end and zero at the minus end.
    pub fn asymptotic(&self, plus: bool, lambda: C64) -> CMat {
        let p = &self.profile.params;
        let (u, w) = if plus {
            (1.0, 0.0)
        } else {
            (p.alpha, 1.0 - p.alpha * p.alpha)
        };
        let mut m = interior_matrix(p, self.profile.regime, u, w, lambda);
        if plus {
            m.shift_diag(C64::new(-self.sigma, 0.0));
        }
        m
    }

    /// Spatial eigenvalues at the plus end in closed form. The prey-only
    /// state decouples the w equation (g_u vanishes there), so the matrix is
    /// block triangular and double roots are detected exactly.
    fn plus_eigenvalues(&self, lambda: C64) -> Vec<C64> {
        let p = &self.profile.params;
        let (fu, _, _, gw) = crate::front::eval_jac(p, 1.0, 0.0);
        let sig = C64::new(self.sigma, 0.0);
        let c = C64::new(p.c, 0.0);
        let mut out = Vec::with_capacity(self.dim());
        let disc_w = c * c + (lambda - gw) * 4.0;
        let root_w = disc_w.sqrt();
        out.push((-c - root_w) / 2.0 + sig);
        out.push((-c + root_w) / 2.0 + sig);
        match self.profile.regime {
            FrontRegime::Four => {
                let disc_u = c * c + (lambda - fu / p.delta) * (4.0 * p.epsilon);
                let root_u = disc_u.sqrt();
                out.push((-c - root_u) / (2.0 * p.epsilon) + sig);
                out.push((-c + root_u) / (2.0 * p.epsilon) + sig);
            }
            FrontRegime::Three => {
                out.push((lambda - fu / p.delta) / p.c + sig);
            }
            FrontRegime::Kpp => unreachable!(),
        }
        out
    }

    fn expected_counts(&self) -> (usize, usize) {
        match self.profile.regime {
            FrontRegime::Four => (2, 2),
            _ => (2, 1),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SplittingReport {
    pub unstable_minus: usize,
    pub stable_plus: usize,
    /// Counts match the expected consistent splitting for this regime.
    pub ok: bool,
    /// Re(lambda) is at or right of the closed-form threshold that
    /// guarantees consistent splitting.
    pub conda_ok: bool,
}

const DEGENERACY_TOL: f64 = 1e-10;

fn splitting_with_eigs(
    system: &EvansSystem,
    lambda: C64,
) -> Result<(SplittingReport, (Vec<C64>, CMat), (Vec<C64>, CMat)), EvansError> {
    let p = &system.profile.params;
    let am = system.asymptotic(false, lambda);
    let ap = system.asymptotic(true, lambda);
    let em = eig(&am).map_err(|source| EvansError::Numerics {
        op: "splitting",
        source,
    })?;
    let ep = eig(&ap).map_err(|source| EvansError::Numerics {
        op: "splitting",
        source,
    })?;
    let plus_exact = system.plus_eigenvalues(lambda);
    for mu in em.0.iter().chain(plus_exact.iter()) {
        if mu.re.abs() < DEGENERACY_TOL {
            return Err(EvansError::SplittingDegenerate {
                lambda,
                mu_re_abs: mu.re.abs(),
            });
        }
    }
    let unstable_minus = em.0.iter().filter(|v| v.re > 0.0).count();
    let stable_plus = plus_exact.iter().filter(|v| v.re < 0.0).count();
    let expected = system.expected_counts();
    let ok = (unstable_minus, stable_plus) == expected;
    let mut thresh = (1.0 - p.alpha) / (p.eta + 1.0) - p.c * p.c / 4.0;
    if p.epsilon > 0.0 {
        thresh = thresh.max(-1.0 / p.delta - p.c * p.c / (4.0 * p.epsilon));
    }
    let report = SplittingReport {
        unstable_minus,
        stable_plus,
        ok,
        conda_ok: lambda.re >= thresh,
    };
    Ok((report, em, ep))
}

/// Asymptotic hyperbolicity and splitting counts at one spectral parameter.
pub fn splitting(system: &EvansSystem, lambda: C64) -> Result<SplittingReport, EvansError> {
    splitting_with_eigs(system, lambda).map(|(rep, _, _)| rep)
}

fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Real reference functional for the Kato-style normalization: the real part
/// of the raw object at the reference parameter, scaled to unit 2-norm.
/// Eigensolvers return vectors with arbitrary global phase, so the object is
/// first rotated by -arg(sum v_i^2)/2, which maximizes the real-part norm and
/// keeps the margin at or above 1/sqrt(2) for any nonzero input.
pub(crate) fn kato_reference(v: &[C64], lambda: C64) -> Result<Vec<f64>, EvansError> {
    let s = v.iter().map(|z| z * z).fold(C64::new(0.0, 0.0), |a, b| a + b);
    let rot = C64::from_polar(1.0, -0.5 * s.arg());
    let re: Vec<f64> = v.iter().map(|z| (z * rot).re).collect();
    let nr = re.iter().map(|x| x * x).sum::<f64>().sqrt();
    let margin = nr / norm2(v);
    if !(margin >= 1e-8) {
        return Err(EvansError::Normalization { lambda, margin });
    }
    Ok(re.iter().map(|x| x / nr).collect())
}

/// Complex-linear pairing with the reference functional (no conjugation, so
/// analyticity in lambda is preserved).
pub(crate) fn kato_apply(v: &[C64], r: &[f64]) -> C64 {
    v.iter()
        .zip(r.iter())
        .fold(C64::new(0.0, 0.0), |acc, (z, x)| acc + z * *x)
}

/// Scales the raw object so the reference functional evaluates to 1.
/// Returns the functional value that was divided out.
pub(crate) fn kato_scale(v: &mut [C64], r: &[f64], lambda: C64) -> Result<C64, EvansError> {
    let ell = kato_apply(v, r);
    let margin = ell.norm() / norm2(v);
    if !(margin >= 1e-8) {
        return Err(EvansError::Normalization { lambda, margin });
    }
    for z in v.iter_mut() {
        *z /= ell;
    }
    Ok(ell)
}

/// Integrates y' = (M(zeta) - mu I) y between span.0 and span.1.
pub(crate) fn transport_vector<M: Fn(f64) -> CMat>(
    mat: M,
    init: &[C64],
    mu: C64,
    span: (f64, f64),
    tol: f64,
) -> Result<Vec<C64>, EvansError> {
    let field = |t: f64, y: &[C64], dy: &mut [C64]| {
        let mut m = mat(t);
        m.shift_diag(mu);
        m.matvec(y, dy);
    };
    let sol = integrate_ivp_opts(field, init, span, tol, false).map_err(|source| {
        EvansError::Numerics {
            op: "transport",
            source,
        }
    })?;
    Ok(sol.final_state().to_vec())
}

/// Same as `transport_vector` but on the second-compound lift of M.
fn transport_lifted<M: Fn(f64) -> CMat>(
    mat: M,
    dim: usize,
    init: &[C64],
    mu: C64,
    span: (f64, f64),
    tol: f64,
) -> Result<Vec<C64>, EvansError> {
    let field = |t: f64, y: &[C64], dy: &mut [C64]| {
        let a = mat(t);
        let mut m = if dim == 4 {
            wedge2(&a).expect("coefficient matrix is 4x4")
        } else {
            wedge2_3(&a).expect("coefficient matrix is 3x3")
        };
        m.shift_diag(mu);
        m.matvec(y, dy);
    };
    let sol = integrate_ivp_opts(field, init, span, tol, false).map_err(|source| {
        EvansError::Numerics {
            op: "transport",
            source,
        }
    })?;
    Ok(sol.final_state().to_vec())
}

/// Polar transport of a 2-column frame: Omega' = (I - Omega Omega*) A Omega
/// with log-scale g' = tr(Omega* A Omega) - mu. Returns the frame columns
/// and g at the end of the span.
fn transport_polar_pair<M: Fn(f64) -> CMat>(
    mat: M,
    dim: usize,
    q1: &[C64],
    q2: &[C64],
    g0: C64,
    mu: C64,
    span: (f64, f64),
    tol: f64,
) -> Result<(Vec<C64>, Vec<C64>, C64), EvansError> {
    let mut init = Vec::with_capacity(2 * dim + 1);
    init.extend_from_slice(q1);
    init.extend_from_slice(q2);
    init.push(g0);
    let field = |t: f64, y: &[C64], dy: &mut [C64]| {
        let a = mat(t);
        let o1 = &y[0..dim];
        let o2 = &y[dim..2 * dim];
        let mut a1 = vec![C64::new(0.0, 0.0); dim];
        let mut a2 = vec![C64::new(0.0, 0.0); dim];
        a.matvec(o1, &mut a1);
        a.matvec(o2, &mut a2);
        let dot = |x: &[C64], y: &[C64]| -> C64 {
            x.iter()
                .zip(y.iter())
                .fold(C64::new(0.0, 0.0), |acc, (a, b)| acc + a.conj() * b)
        };
        let s11 = dot(o1, &a1);
        let s12 = dot(o1, &a2);
        let s21 = dot(o2, &a1);
        let s22 = dot(o2, &a2);
        for k in 0..dim {
            dy[k] = a1[k] - o1[k] * s11 - o2[k] * s21;
            dy[dim + k] = a2[k] - o1[k] * s12 - o2[k] * s22;
        }
        dy[2 * dim] = s11 + s22 - mu;
    };
    let sol = integrate_ivp_opts(field, &init, span, tol, false).map_err(|source| {
        EvansError::Numerics {
            op: "transport-polar",
            source,
        }
    })?;
    let yf = sol.final_state();
    Ok((yf[0..dim].to_vec(), yf[dim..2 * dim].to_vec(), yf[2 * dim]))
}

/// Single-vector polar transport, used for the one-dimensional stable bundle
/// of the reduced system at the plus end.
fn transport_polar_single<M: Fn(f64) -> CMat>(
    mat: M,
    dim: usize,
    q: &[C64],
    g0: C64,
    mu: C64,
    span: (f64, f64),
    tol: f64,
) -> Result<(Vec<C64>, C64), EvansError> {
    let mut init = q.to_vec();
    init.push(g0);
    let field = |t: f64, y: &[C64], dy: &mut [C64]| {
        let a = mat(t);
        let o = &y[0..dim];
        let mut ao = vec![C64::new(0.0, 0.0); dim];
        a.matvec(o, &mut ao);
        let s = o
            .iter()
            .zip(ao.iter())
            .fold(C64::new(0.0, 0.0), |acc, (a, b)| acc + a.conj() * b);
        for k in 0..dim {
            dy[k] = ao[k] - o[k] * s;
        }
        dy[dim] = s - mu;
    };
    let sol = integrate_ivp_opts(field, &init, span, tol, false).map_err(|source| {
        EvansError::Numerics {
            op: "transport-polar",
            source,
        }
    })?;
    let yf = sol.final_state();
    Ok((yf[0..dim].to_vec(), yf[dim]))
}

/// Modified Gram-Schmidt of a 2-column set; returns (q1, q2, det R) with
/// det R real positive.
fn orthonormalize_pair(x1: &[C64], x2: &[C64]) -> (Vec<C64>, Vec<C64>, f64) {
    let r11 = norm2(x1);
    let q1: Vec<C64> = x1.iter().map(|z| z / r11).collect();
    let r12 = q1
        .iter()
        .zip(x2.iter())
        .fold(C64::new(0.0, 0.0), |acc, (a, b)| acc + a.conj() * b);
    let x2t: Vec<C64> = x2
        .iter()
        .zip(q1.iter())
        .map(|(b, a)| b - a * r12)
        .collect();
    let r22 = norm2(&x2t);
    let q2: Vec<C64> = x2t.iter().map(|z| z / r22).collect();
    (q1, q2, r11 * r22)
}

#[derive(Clone, Copy, Debug)]
pub struct EvalOptions {
    /// Positive real reference parameter fixing the normalization section.
    pub lambda_ref: f64,
    /// Transport integration tolerance.
    pub tol: f64,
    /// Integration half-length; defaults to the profile half-length.
    pub half_length: Option<f64>,
    pub method: EvansMethod,
    /// Pairing position zeta_0; nonzero values only for the full system,
    /// where the interior trace integral has a closed form.
    pub matching_point: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            lambda_ref: 1.0,
            tol: 1e-10,
            half_length: None,
            method: EvansMethod::Compound,
            matching_point: 0.0,
        }
    }
}

/// Evaluator with a fixed normalization section. All values produced by one
/// evaluator are analytically comparable; winding runs must reuse a single
/// evaluator for exactly that reason.
pub struct EvansEvaluator<'a> {
    system: &'a EvansSystem<'a>,
    opts: EvalOptions,
    l: f64,
    r_minus: Vec<f64>,
    r_plus: Vec<f64>,
}

impl<'a> EvansEvaluator<'a> {
    pub fn new(system: &'a EvansSystem<'a>, opts: EvalOptions) -> Result<Self, EvansError> {
        if !(opts.lambda_ref > 0.0) || !opts.lambda_ref.is_finite() {
            return Err(EvansError::Invalid {
                op: "evaluator",
                msg: format!("lambda_ref must be positive, got {}", opts.lambda_ref),
            });
        }
        let l = match opts.half_length {
            Some(v) if v > 0.0 => v,
            Some(v) => {
                return Err(EvansError::Invalid {
                    op: "evaluator",
                    msg: format!("half-length must be positive, got {v}"),
                })
            }
            None => system.profile.half_length,
        };
        if opts.matching_point != 0.0 && system.profile.regime != FrontRegime::Four {
            return Err(EvansError::Invalid {
                op: "evaluator",
                msg: "nonzero matching point needs the full system; the reduced interior trace has no closed form".into(),
            });
        }
        if opts.matching_point.abs() >= l {
            return Err(EvansError::Invalid {
                op: "evaluator",
                msg: format!(
                    "matching point {} outside the integration domain (+-{l})",
                    opts.matching_point
                ),
            });
        }
        let lref = C64::new(opts.lambda_ref, 0.0);
        let (rep, em, ep) = splitting_with_eigs(system, lref)?;
        if !rep.ok {
            return Err(EvansError::SplittingCounts {
                lambda: lref,
                unstable_minus: rep.unstable_minus,
                stable_plus: rep.stable_plus,
                expected: system.expected_counts(),
            });
        }
        let (raw_minus, _, raw_plus, _) = raw_objects(system, &em, &ep);
        let r_minus = kato_reference(&raw_minus, lref)?;
        let r_plus = kato_reference(&raw_plus, lref)?;
        Ok(EvansEvaluator {
            system,
            opts,
            l,
            r_minus,
            r_plus,
        })
    }

    pub fn half_length(&self) -> f64 {
        self.l
    }

    /// Evans function value at one spectral parameter.
    pub fn eval(&self, lambda: C64) -> Result<C64, EvansError> {
        let system = self.system;
        let (rep, em, ep) = splitting_with_eigs(system, lambda)?;
        if !rep.ok {
            return Err(EvansError::SplittingCounts {
                lambda,
                unstable_minus: rep.unstable_minus,
                stable_plus: rep.stable_plus,
                expected: system.expected_counts(),
            });
        }
        let dim = system.dim();
        let z0 = self.opts.matching_point;
        let tol = self.opts.tol;
        let mat = |zeta: f64| system.coefficient(zeta, lambda);
        let (mut raw_m, mu_m, mut raw_p, mu_p) = raw_objects(system, &em, &ep);

        let pairing = match self.opts.method {
            EvansMethod::Compound => {
                let ell_m = kato_scale(&mut raw_m, &self.r_minus, lambda)?;
                let ell_p = kato_scale(&mut raw_p, &self.r_plus, lambda)?;
                let _ = (ell_m, ell_p);
                let vm = transport_lifted(mat, dim, &raw_m, mu_m, (-self.l, z0), tol)?;
                match system.profile.regime {
                    FrontRegime::Four => {
                        let vp = transport_lifted(mat, dim, &raw_p, mu_p, (self.l, z0), tol)?;
                        pairing4(&vm, &vp)
                    }
                    FrontRegime::Three => {
                        let vp = transport_vector(mat, &raw_p, mu_p, (self.l, z0), tol)?;
                        pairing3(&vm, &vp)
                    }
                    FrontRegime::Kpp => unreachable!(),
                }
            }
            EvansMethod::Polar => {
                let ell_m = kato_apply(&raw_m, &self.r_minus);
                check_margin(&raw_m, ell_m, lambda)?;
                let ell_p = kato_apply(&raw_p, &self.r_plus);
                check_margin(&raw_p, ell_p, lambda)?;
                let x1 = em.1.col(dim - 2);
                let x2 = em.1.col(dim - 1);
                let (q1, q2, detr) = orthonormalize_pair(&x1, &x2);
                let g0m = C64::new(detr.ln(), 0.0) - ell_m.ln();
                let (o1, o2, gm) =
                    transport_polar_pair(mat, dim, &q1, &q2, g0m, mu_m, (-self.l, z0), tol)?;
                match system.profile.regime {
                    FrontRegime::Four => {
                        let y1 = ep.1.col(0);
                        let y2 = ep.1.col(1);
                        let (p1, p2, detr_p) = orthonormalize_pair(&y1, &y2);
                        let g0p = C64::new(detr_p.ln(), 0.0) - ell_p.ln();
                        let (w1, w2, gp) = transport_polar_pair(
                            mat,
                            dim,
                            &p1,
                            &p2,
                            g0p,
                            mu_p,
                            (self.l, z0),
                            tol,
                        )?;
                        let zm = wedge_vec4(&o1, &o2);
                        let zp = wedge_vec4(&w1, &w2);
                        pairing4(&zm, &zp) * (gm + gp).exp()
                    }
                    FrontRegime::Three => {
                        let y = ep.1.col(0);
                        let ny = norm2(&y);
                        let q: Vec<C64> = y.iter().map(|z| z / ny).collect();
                        let g0p = C64::new(ny.ln(), 0.0) - ell_p.ln();
                        let (wv, gp) =
                            transport_polar_single(mat, dim, &q, g0p, mu_p, (self.l, z0), tol)?;
                        let zm = wedge_vec3(&o1, &o2);
                        pairing3(&zm, &wv) * (gm + gp).exp()
                    }
                    FrontRegime::Kpp => unreachable!(),
                }
            }
        };

        if z0 == 0.0 {
            return Ok(pairing);
        }
        // Interior trace integral from 0 to z0 for the full system:
        // tr A~ = (-c/eps - c) + 4 s(zeta), and s has antiderivative
        // log(1 + e^{sigma zeta}).
        let p = &system.profile.params;
        let sig = system.sigma;
        let tr_int =
            (-p.c / p.epsilon - p.c) * z0 + 4.0 * (ln1pexp(sig * z0) - 2.0f64.ln());
        let correction = (-(C64::new(tr_int, 0.0) - (mu_m + mu_p) * z0)).exp();
        Ok(pairing * correction)
    }
}

fn check_margin(v: &[C64], ell: C64, lambda: C64) -> Result<(), EvansError> {
    let margin = ell.norm() / norm2(v);
    if !(margin >= 1e-8) {
        return Err(EvansError::Normalization { lambda, margin });
    }
    Ok(())
}

/// Raw (un-normalized) transported objects at both ends: the wedge of the
/// two most unstable minus-side eigenvectors, and on the plus side either
/// the wedge of the two most stable eigenvectors (full system) or the single
/// most stable eigenvector (reduced system). Also their eigenvalue shifts.
fn raw_objects(
    system: &EvansSystem,
    em: &(Vec<C64>, CMat),
    ep: &(Vec<C64>, CMat),
) -> (Vec<C64>, C64, Vec<C64>, C64) {
    let dim = system.dim();
    let x1 = em.1.col(dim - 2);
    let x2 = em.1.col(dim - 1);
    let mu_m = em.0[dim - 2] + em.0[dim - 1];
    match system.profile.regime {
        FrontRegime::Four => {
            let y1 = ep.1.col(0);
            let y2 = ep.1.col(1);
            let mu_p = ep.0[0] + ep.0[1];
            (
                wedge_vec4(&x1, &x2).to_vec(),
                mu_m,
                wedge_vec4(&y1, &y2).to_vec(),
                mu_p,
            )
        }
        FrontRegime::Three => {
            let y = ep.1.col(0);
            let mu_p = ep.0[0];
            (wedge_vec3(&x1, &x2).to_vec(), mu_m, y, mu_p)
        }
        FrontRegime::Kpp => unreachable!(),
    }
}

/// Closed counterclockwise boundary of the right half-disc of the given
/// radius: straight segment +iR down through 0 to -iR, then the arc through
/// +R back to +iR. Sample counts are split by arclength; the first and last
/// points coincide.
#[derive(Clone, Debug)]
pub struct Contour {
    pub radius: f64,
    pub n_min: usize,
    pub points: Vec<C64>,
}

pub fn build_contour(radius: f64, n_min: usize) -> Result<Contour, EvansError> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(EvansError::Invalid {
            op: "build_contour",
            msg: format!("radius must be positive and finite, got {radius}"),
        });
    }
    if n_min < 64 {
        return Err(EvansError::Invalid {
            op: "build_contour",
            msg: format!("need at least 64 samples, got {n_min}"),
        });
    }
    let total_len = 2.0 + std::f64::consts::PI;
    let mut n_seg = ((n_min as f64) * 2.0 / total_len).ceil() as usize;
    if n_seg % 2 == 1 {
        n_seg += 1;
    }
    n_seg = n_seg.max(4);
    let mut n_arc = ((n_min as f64) * std::f64::consts::PI / total_len).ceil() as usize;
    if n_arc % 2 == 1 {
        n_arc += 1;
    }
    n_arc = n_arc.max(4);
    let mut points = Vec::with_capacity(n_seg + n_arc + 1);
    for k in 0..=n_seg {
        let t = 1.0 - 2.0 * (k as f64) / (n_seg as f64);
        points.push(C64::new(0.0, radius * t));
    }
    for j in 1..n_arc {
        let theta = -std::f64::consts::FRAC_PI_2
            + std::f64::consts::PI * (j as f64) / (n_arc as f64);
        points.push(C64::new(radius * theta.cos(), radius * theta.sin()));
    }
    // close the loop exactly; cos(pi/2) is not zero in floating point
    points.push(C64::new(0.0, radius));
    Ok(Contour {
        radius,
        n_min,
        points,
    })
}

#[derive(Clone, Debug)]
pub struct EvansResult {
    /// (lambda, E(lambda)) along the full closed contour, counterclockwise
    /// from +iR; lower-half values are conjugate mirrors of computed ones.
    pub values: Vec<(C64, C64)>,
    /// Accumulated argument change along the upper half path from +R to 0.
    pub total_arg: f64,
    pub winding: i32,
    pub refinements: usize,
    pub max_phase_jump: f64,
}

const MIN_EVANS_ABS: f64 = 1e-280;
const MAX_REFINEMENTS: usize = 20_000;
const BISECTION_DEPTH: u32 = 12;

/// Winds E around the contour by sampling the upper half path from +R along
/// the arc to +iR and down the segment to 0, accumulating principal phase
/// increments and bisecting in parameter space until every increment is
/// below pi/2. Real-axis symmetry supplies the lower half.
pub fn winding<F>(mut eval: F, contour: &Contour) -> Result<EvansResult, EvansError>
where
    F: FnMut(C64) -> Result<C64, EvansError>,
{
    let r = contour.radius;
    let tau_mid = std::f64::consts::FRAC_PI_2;
    let tau_end = tau_mid + 1.0;
    let lam = |tau: f64| -> C64 {
        if tau <= tau_mid {
            C64::new(r * tau.cos(), r * tau.sin())
        } else {
            C64::new(0.0, r * (1.0 - (tau - tau_mid)))
        }
    };
    let n_up = (contour.n_min / 2).max(48);
    let init_gap = tau_end / (n_up as f64);
    let min_gap = init_gap / f64::powi(2.0, BISECTION_DEPTH as i32);

    let check_abs = |tau: f64, e: C64| -> Result<C64, EvansError> {
        if !e.is_finite() || e.norm() < MIN_EVANS_ABS {
            return Err(EvansError::UnresolvedWinding {
                msg: format!(
                    "Evans value {e} too close to zero on the contour at lambda = {}",
                    lam(tau)
                ),
            });
        }
        Ok(e)
    };

    let mut pts: Vec<(f64, C64)> = Vec::with_capacity(n_up + 1);
    for k in 0..=n_up {
        let tau = tau_end * (k as f64) / (n_up as f64);
        let e = check_abs(tau, eval(lam(tau))?)?;
        pts.push((tau, e));
    }

    let mut total = 0.0f64;
    let mut max_jump = 0.0f64;
    let mut refinements = 0usize;
    let mut i = 0usize;
    while i + 1 < pts.len() {
        let dphi = (pts[i + 1].1 / pts[i].1).arg();
        if dphi.abs() >= std::f64::consts::FRAC_PI_2 {
            let gap = pts[i + 1].0 - pts[i].0;
            if gap <= min_gap || refinements >= MAX_REFINEMENTS {
                return Err(EvansError::UnresolvedWinding {
                    msg: format!(
                        "phase jump {dphi:.3} not resolved near lambda = {} after {refinements} refinements",
                        lam(pts[i].0)
                    ),
                });
            }
            let tau = 0.5 * (pts[i].0 + pts[i + 1].0);
            let e = check_abs(tau, eval(lam(tau))?)?;
            pts.insert(i + 1, (tau, e));
            refinements += 1;
            continue;
        }
        total += dphi;
        if dphi.abs() > max_jump {
            max_jump = dphi.abs();
        }
        i += 1;
    }

    let e_right = pts.first().expect("nonempty").1;
    let e_zero = pts.last().expect("nonempty").1;
    for (name, e) in [("lambda = R", e_right), ("lambda = 0", e_zero)] {
        if e.im.abs() > 1e-8 * e.norm() {
            return Err(EvansError::UnresolvedWinding {
                msg: format!("Evans value not real at the real endpoint {name}: {e}"),
            });
        }
    }
    let ratio = total / std::f64::consts::PI;
    let winding = ratio.round() as i32;
    if (ratio - f64::from(winding)).abs() > 0.05 {
        return Err(EvansError::UnresolvedWinding {
            msg: format!("upper-path argument {total:.6} is not an integer multiple of pi"),
        });
    }

    // Assemble the full contour values counterclockwise, starting and ending
    // at the topmost computed sample: top, segment down through 0, conjugate
    // mirror of the segment down to near -iR, conjugate mirror of the arc
    // back through +R, then the arc up to the top again.
    let arc: Vec<(C64, C64)> = pts
        .iter()
        .filter(|(tau, _)| *tau <= tau_mid)
        .map(|&(tau, e)| (lam(tau), e))
        .collect();
    let seg: Vec<(C64, C64)> = pts
        .iter()
        .filter(|(tau, _)| *tau > tau_mid)
        .map(|&(tau, e)| (lam(tau), e))
        .collect();
    let top = *arc.last().expect("arc part is nonempty");
    let mut full: Vec<(C64, C64)> = Vec::with_capacity(2 * pts.len() + 2);
    full.push(top);
    full.extend(seg.iter().cloned());
    full.extend(seg.iter().rev().skip(1).map(|&(l, e)| (l.conj(), e.conj())));
    full.extend(arc.iter().rev().map(|&(l, e)| (l.conj(), e.conj())));
    full.extend(arc.iter().skip(1).cloned());

    Ok(EvansResult {
        values: full,
        total_arg: total,
        winding,
        refinements,
        max_phase_jump: max_jump,
    })
}
