//! Traveling-front computation by Hermite-Simpson collocation with
//! projection boundary conditions, continued in (delta, epsilon) from the
//! scalar KPP limit, plus the profile bookkeeping the Evans machinery needs:
//! off-node interpolation, defect measurement, front-bound certification,
//! Jacobian sup norms, and columnar serialization.

use crate::bounds::SupNorms;
use crate::kpp;
use crate::model::{Check, ModelError, ModelParams};
use crate::numerics::banded::{BandedError, BandedMatrix};
use crate::numerics::eig::eig;
use crate::numerics::linsolve::inverse;
use crate::numerics::{CMat, C64};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FrontError {
    #[error("front/{op}: {msg}")]
    Invalid { op: &'static str, msg: String },
    #[error("front/decay_rate_plus: speed c = {c} does not exceed min_speed = {min_speed:.6}; the decay rate is complex")]
    SubcriticalSpeed { c: f64, min_speed: f64 },
    #[error("front/solve_front: continuation failed at stage {stage} after {iters} Newton iterations (residual {residual:.3e})")]
    Continuation {
        stage: String,
        iters: usize,
        residual: f64,
    },
    #[error("front/solve_front: boundary projection at the {end} end expects {expected} rows, eigendecomposition produced {got}")]
    BoundaryRank {
        end: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("front/solve_front: banded linear solve failed at stage {stage}: {source}")]
    Linear {
        stage: String,
        source: BandedError,
    },
    #[error("front/sup_norms: sup f_u = {value:.6e} exceeds the admissibility envelope -alpha^2 + 0.1 = {limit:.6e}")]
    FuEnvelope { value: f64, limit: f64 },
    #[error("front/serialization: {msg}")]
    Serde { msg: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("front/{op}: {source}")]
    Numerics {
        op: &'static str,
        source: crate::numerics::NumericsError,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrontRegime {
    /// epsilon > 0: full 4-dimensional first-order traveling-wave system.
    Four,
    /// epsilon = 0, delta > 0: 3-dimensional system (u, w, w').
    Three,
    /// epsilon = delta = 0: scalar KPP equation in (w, w').
    Kpp,
}

impl FrontRegime {
    pub fn dim(&self) -> usize {
        match self {
            FrontRegime::Four => 4,
            FrontRegime::Three => 3,
            FrontRegime::Kpp => 2,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FrontRegime::Four => "four",
            FrontRegime::Three => "three",
            FrontRegime::Kpp => "kpp",
        }
    }
}

/// Decay rate of both front components toward the prey-only state:
/// (-c + sqrt(c^2 - 4(1-alpha)/(1+eta))) / 2, always negative above min_speed.
pub fn decay_rate_plus(p: &ModelParams) -> Result<f64, FrontError> {
    let ms = p.min_speed();
    if p.c <= ms {
        return Err(FrontError::SubcriticalSpeed {
            c: p.c,
            min_speed: ms,
        });
    }
    Ok(0.5 * (-p.c + (p.c * p.c - 4.0 * (1.0 - p.alpha) / (1.0 + p.eta)).sqrt()))
}

/// Default truncation half-length: generous multiple of the slowest decay.
pub fn default_half_length(p: &ModelParams) -> Result<f64, FrontError> {
    let rate = decay_rate_plus(p)?;
    Ok((12.0 / rate.abs()).max(50.0))
}

#[derive(Clone, Copy, Debug)]
pub struct FrontOptions {
    /// Domain half-length; None picks max(50, 12/|decay_rate_plus|).
    pub half_length: Option<f64>,
    pub n_nodes: usize,
    pub tol: f64,
    pub max_newton: usize,
    /// First delta continuation value when the target is above it.
    pub delta_start: f64,
    /// Geometric ratio between consecutive delta steps.
    pub delta_ratio: f64,
    /// Epsilon continuation starts at target/2^eps_halvings and doubles.
    pub eps_halvings: u32,
}

impl Default for FrontOptions {
    fn default() -> Self {
        FrontOptions {
            half_length: None,
            n_nodes: 2001,
            tol: 1e-8,
            max_newton: 25,
            delta_start: 1e-3,
            delta_ratio: 2.5,
            eps_halvings: 4,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FrontProfile {
    pub params: ModelParams,
    pub regime: FrontRegime,
    pub half_length: f64,
    pub nodes: Vec<f64>,
    pub u: Vec<f64>,
    pub up: Vec<f64>,
    pub w: Vec<f64>,
    pub wp: Vec<f64>,
    /// Field-derived second derivatives, used by the quintic interpolant.
    pub upp: Vec<f64>,
    pub wpp: Vec<f64>,
    pub residual: f64,
    pub endpoint_err_left: f64,
    pub endpoint_err_right: f64,
    pub decay_rate_plus: f64,
}

fn eval_fg(p: &ModelParams, u: f64, w: f64) -> (f64, f64) {
    p.reaction(u, w).unwrap_or((f64::NAN, f64::NAN))
}

pub(crate) fn eval_jac(p: &ModelParams, u: f64, w: f64) -> (f64, f64, f64, f64) {
    match p.jacobian(u, w) {
        Ok(j) => (j.f_u, j.f_w, j.g_u, j.g_w),
        Err(_) => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
    }
}

/// First-order traveling-wave field for the active regime.
/// Four: y = (u, u', w, w'); Three: y = (u, w, w'); Kpp: y = (w, w').
fn tw_field(p: &ModelParams, regime: FrontRegime, y: &[f64], out: &mut [f64]) {
    match regime {
        FrontRegime::Four => {
            let (f, g) = eval_fg(p, y[0], y[2]);
            out[0] = y[1];
            out[1] = -(p.c * y[1] + f / p.delta) / p.epsilon;
            out[2] = y[3];
            out[3] = -p.c * y[3] - g;
        }
        FrontRegime::Three => {
            let (f, g) = eval_fg(p, y[0], y[1]);
            out[0] = -f / (p.c * p.delta);
            out[1] = y[2];
            out[2] = -p.c * y[2] - g;
        }
        FrontRegime::Kpp => {
            out[0] = y[1];
            out[1] = -p.c * y[1] - kpp::reaction_raw(p, y[0]);
        }
    }
}

/// Row-major dim x dim Jacobian of `tw_field` with respect to the state.
fn tw_field_jacobian(p: &ModelParams, regime: FrontRegime, y: &[f64], out: &mut [f64]) {
    match regime {
        FrontRegime::Four => {
            let (fu, fw, gu, gw) = eval_jac(p, y[0], y[2]);
            let ed = p.epsilon * p.delta;
            out.copy_from_slice(&[
                0.0, 1.0, 0.0, 0.0,
                -fu / ed, -p.c / p.epsilon, -fw / ed, 0.0,
                0.0, 0.0, 0.0, 1.0,
                -gu, 0.0, -gw, -p.c,
            ]);
        }
        FrontRegime::Three => {
            let (fu, fw, gu, gw) = eval_jac(p, y[0], y[1]);
            let cd = p.c * p.delta;
            out.copy_from_slice(&[
                -fu / cd, -fw / cd, 0.0,
                0.0, 0.0, 1.0,
                -gu, -gw, -p.c,
            ]);
        }
        FrontRegime::Kpp => {
            out.copy_from_slice(&[0.0, 1.0, -kpp::reaction_deriv_raw(p, y[0]), -p.c]);
        }
    }
}

/// Equilibrium anchor states for the collocation boundary conditions.
fn anchors(p: &ModelParams, regime: FrontRegime) -> (Vec<f64>, Vec<f64>) {
    let mw = 1.0 - p.alpha * p.alpha;
    match regime {
        FrontRegime::Four => (vec![p.alpha, 0.0, mw, 0.0], vec![1.0, 0.0, 0.0, 0.0]),
        FrontRegime::Three => (vec![p.alpha, mw, 0.0], vec![1.0, 0.0, 0.0]),
        FrontRegime::Kpp => (vec![mw, 0.0], vec![0.0, 0.0]),
    }
}

/// Left-kill-stable / right-kill-unstable row counts per regime.
fn expected_bc_counts(regime: FrontRegime) -> (usize, usize) {
    match regime {
        FrontRegime::Four => (2, 1),
        FrontRegime::Three => (1, 1),
        FrontRegime::Kpp => (1, 0),
    }
}

/// Rows of the inverse eigenvector matrix selecting the stable (or unstable)
/// spectral components of a real matrix; complex pairs yield two real rows.
fn projection_rows(m: &[f64], dim: usize, stable: bool) -> Result<Vec<Vec<f64>>, FrontError> {
    let mut cm = CMat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            cm.set(i, j, C64::new(m[i * dim + j], 0.0));
        }
    }
    let (vals, vecs) = eig(&cm).map_err(|source| FrontError::Numerics {
        op: "projection_rows",
        source,
    })?;
    let vinv = inverse(&vecs).map_err(|source| FrontError::Numerics {
        op: "projection_rows",
        source,
    })?;
    let scale = vals.iter().map(|v| v.norm()).fold(1e-30, f64::max);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut used_pairs: Vec<(f64, f64)> = Vec::new();
    for (i, lam) in vals.iter().enumerate() {
        let wanted = if stable { lam.re < 0.0 } else { lam.re > 0.0 };
        if !wanted {
            continue;
        }
        let row: Vec<C64> = vinv.row(i);
        if lam.im.abs() <= 1e-8 * scale {
            rows.push(normalize_row(row.iter().map(|v| v.re).collect()));
        } else {
            let key = (lam.re, lam.im.abs());
            if used_pairs
                .iter()
                .any(|&(r, im)| (r - key.0).abs() <= 1e-8 * scale && (im - key.1).abs() <= 1e-8 * scale)
            {
                continue;
            }
            used_pairs.push(key);
            rows.push(normalize_row(row.iter().map(|v| v.re).collect()));
            rows.push(normalize_row(row.iter().map(|v| v.im).collect()));
        }
    }
    Ok(rows)
}

fn normalize_row(mut row: Vec<f64>) -> Vec<f64> {
    let m = row.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if m > 0.0 {
        for v in &mut row {
            *v /= m;
        }
    }
    row
}

/// Boundary-condition data for one collocation solve.
struct BcSet {
    left_rows: Vec<Vec<f64>>,
    left_anchor: Vec<f64>,
    right_rows: Vec<Vec<f64>>,
    right_anchor: Vec<f64>,
    phase_comp: usize,
    phase_value: f64,
}

fn build_bcs(p: &ModelParams, regime: FrontRegime) -> Result<BcSet, FrontError> {
    let dim = regime.dim();
    let (left_anchor, right_anchor) = anchors(p, regime);
    let mut jl = vec![0.0; dim * dim];
    let mut jr = vec![0.0; dim * dim];
    tw_field_jacobian(p, regime, &left_anchor, &mut jl);
    tw_field_jacobian(p, regime, &right_anchor, &mut jr);
    let (n_left, n_right) = expected_bc_counts(regime);
    let left_rows = projection_rows(&jl, dim, true)?;
    if left_rows.len() != n_left {
        return Err(FrontError::BoundaryRank {
            end: "left",
            expected: n_left,
            got: left_rows.len(),
        });
    }
    let right_rows = projection_rows(&jr, dim, false)?;
    if right_rows.len() != n_right {
        return Err(FrontError::BoundaryRank {
            end: "right",
            expected: n_right,
            got: right_rows.len(),
        });
    }
    let phase_comp = match regime {
        FrontRegime::Four => 2,
        FrontRegime::Three => 1,
        FrontRegime::Kpp => 0,
    };
    Ok(BcSet {
        left_rows,
        left_anchor,
        right_rows,
        right_anchor,
        phase_comp,
        phase_value: 0.5 * (1.0 - p.alpha * p.alpha),
    })
}

/// Hermite-Simpson residual of the full nonlinear system, ordered so the
/// Jacobian stays banded: left BC rows, interval blocks with the phase row
/// spliced in after the block that ends at the middle node, right BC rows.
#[allow(clippy::too_many_arguments)]
fn assemble_residual(
    p: &ModelParams,
    regime: FrontRegime,
    bc: &BcSet,
    nodes: &[f64],
    y: &[f64],
    node_f: &mut [f64],
    out: &mut [f64],
) {
    let d = regime.dim();
    let n = nodes.len();
    let mid = n / 2;
    let n_left = bc.left_rows.len();
    let total = n * d;

    for i in 0..n {
        tw_field(p, regime, &y[i * d..(i + 1) * d], &mut node_f[i * d..(i + 1) * d]);
    }

    for (j, row) in bc.left_rows.iter().enumerate() {
        out[j] = (0..d).map(|k| row[k] * (y[k] - bc.left_anchor[k])).sum();
    }

    let mut ym = vec![0.0; d];
    let mut fm = vec![0.0; d];
    for i in 0..n - 1 {
        let h = nodes[i + 1] - nodes[i];
        let yi = &y[i * d..(i + 1) * d];
        let yi1 = &y[(i + 1) * d..(i + 2) * d];
        let fi = &node_f[i * d..(i + 1) * d];
        let fi1 = &node_f[(i + 1) * d..(i + 2) * d];
        for k in 0..d {
            ym[k] = 0.5 * (yi[k] + yi1[k]) + h / 8.0 * (fi[k] - fi1[k]);
        }
        tw_field(p, regime, &ym, &mut fm);
        let base = n_left + i * d + usize::from(i >= mid);
        for k in 0..d {
            out[base + k] = yi1[k] - yi[k] - h / 6.0 * (fi[k] + 4.0 * fm[k] + fi1[k]);
        }
    }

    out[n_left + mid * d] = y[mid * d + bc.phase_comp] - bc.phase_value;

    let rbase = total - bc.right_rows.len();
    for (j, row) in bc.right_rows.iter().enumerate() {
        out[rbase + j] = (0..d)
            .map(|k| row[k] * (y[(n - 1) * d + k] - bc.right_anchor[k]))
            .sum();
    }
}

/// dR/dy_i = -I - h/6 (J_i + 4 J_m (I/2 + h/8 J_i)),
/// dR/dy_{i+1} = I - h/6 (J_{i+1} + 4 J_m (I/2 - h/8 J_{i+1})).
fn interval_blocks(
    d: usize,
    h: f64,
    ji: &[f64],
    jm: &[f64],
    ji1: &[f64],
    left: &mut [f64],
    right: &mut [f64],
) {
    let mut tmp = vec![0.0; d * d];
    // left block
    for r in 0..d {
        for c in 0..d {
            let mut inner = if r == c { 0.5 } else { 0.0 };
            inner += 0.0; // J_m applied next
            tmp[r * d + c] = inner + h / 8.0 * ji[r * d + c];
        }
    }
    for r in 0..d {
        for c in 0..d {
            let mut jm_tmp = 0.0;
            for k in 0..d {
                jm_tmp += jm[r * d + k] * tmp[k * d + c];
            }
            let ident = if r == c { 1.0 } else { 0.0 };
            left[r * d + c] = -ident - h / 6.0 * (ji[r * d + c] + 4.0 * jm_tmp);
        }
    }
    // right block
    for r in 0..d {
        for c in 0..d {
            let inner = if r == c { 0.5 } else { 0.0 };
            tmp[r * d + c] = inner - h / 8.0 * ji1[r * d + c];
        }
    }
    for r in 0..d {
        for c in 0..d {
            let mut jm_tmp = 0.0;
            for k in 0..d {
                jm_tmp += jm[r * d + k] * tmp[k * d + c];
            }
            let ident = if r == c { 1.0 } else { 0.0 };
            right[r * d + c] = ident - h / 6.0 * (ji1[r * d + c] + 4.0 * jm_tmp);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble_jacobian(
    p: &ModelParams,
    regime: FrontRegime,
    bc: &BcSet,
    nodes: &[f64],
    y: &[f64],
    node_f: &[f64],
    stage: &str,
) -> Result<BandedMatrix, FrontError> {
    let d = regime.dim();
    let n = nodes.len();
    let mid = n / 2;
    let n_left = bc.left_rows.len();
    let total = n * d;
    let band = 2 * d + 2;
    let mut a = BandedMatrix::zeros(total, band, band);
    let oob = |source: BandedError| FrontError::Linear {
        stage: stage.to_string(),
        source,
    };

    for (j, row) in bc.left_rows.iter().enumerate() {
        for k in 0..d {
            a.add(j, k, row[k]).map_err(oob)?;
        }
    }

    let mut node_j = vec![0.0; n * d * d];
    for i in 0..n {
        let mut buf = vec![0.0; d * d];
        tw_field_jacobian(p, regime, &y[i * d..(i + 1) * d], &mut buf);
        node_j[i * d * d..(i + 1) * d * d].copy_from_slice(&buf);
    }

    let mut ym = vec![0.0; d];
    let mut jm = vec![0.0; d * d];
    let mut bl = vec![0.0; d * d];
    let mut br = vec![0.0; d * d];
    for i in 0..n - 1 {
        let h = nodes[i + 1] - nodes[i];
        let yi = &y[i * d..(i + 1) * d];
        let yi1 = &y[(i + 1) * d..(i + 2) * d];
        let fi = &node_f[i * d..(i + 1) * d];
        let fi1 = &node_f[(i + 1) * d..(i + 2) * d];
        for k in 0..d {
            ym[k] = 0.5 * (yi[k] + yi1[k]) + h / 8.0 * (fi[k] - fi1[k]);
        }
        tw_field_jacobian(p, regime, &ym, &mut jm);
        let ji = &node_j[i * d * d..(i + 1) * d * d];
        let ji1 = &node_j[(i + 1) * d * d..(i + 2) * d * d];
        interval_blocks(d, h, ji, &jm, ji1, &mut bl, &mut br);
        let base = n_left + i * d + usize::from(i >= mid);
        for r in 0..d {
            for c in 0..d {
                a.add(base + r, i * d + c, bl[r * d + c]).map_err(oob)?;
                a.add(base + r, (i + 1) * d + c, br[r * d + c]).map_err(oob)?;
            }
        }
    }

    a.add(n_left + mid * d, mid * d + bc.phase_comp, 1.0).map_err(oob)?;

    let rbase = total - bc.right_rows.len();
    for (j, row) in bc.right_rows.iter().enumerate() {
        for k in 0..d {
            a.add(rbase + j, (n - 1) * d + k, row[k]).map_err(oob)?;
        }
    }
    Ok(a)
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

/// Damped Newton on the collocation system; `y` is updated in place.
fn solve_collocation(
    p: &ModelParams,
    regime: FrontRegime,
    bc: &BcSet,
    nodes: &[f64],
    y: &mut [f64],
    tol: f64,
    max_newton: usize,
    stage: &str,
) -> Result<(f64, usize), FrontError> {
    let d = regime.dim();
    let n = nodes.len();
    let total = n * d;
    let n_left = bc.left_rows.len();
    let n_right = bc.right_rows.len();
    if n_left + n_right != d - 1 {
        return Err(FrontError::BoundaryRank {
            end: "both",
            expected: d - 1,
            got: n_left + n_right,
        });
    }
    let mut node_f = vec![0.0; total];
    let mut res = vec![0.0; total];
    let mut trial = vec![0.0; total];
    let mut trial_f = vec![0.0; total];
    let mut trial_res = vec![0.0; total];

    assemble_residual(p, regime, bc, nodes, y, &mut node_f, &mut res);
    let mut fnorm = norm_inf(&res);

    for iter in 0..max_newton {
        if fnorm <= tol {
            return Ok((fnorm, iter));
        }
        let a = assemble_jacobian(p, regime, bc, nodes, y, &node_f, stage)?;
        let lu = a.factor().map_err(|source| FrontError::Linear {
            stage: stage.to_string(),
            source,
        })?;
        let mut dx: Vec<f64> = res.iter().map(|v| -v).collect();
        lu.solve(&mut dx);

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            for k in 0..total {
                trial[k] = y[k] + t * dx[k];
            }
            assemble_residual(p, regime, bc, nodes, &trial, &mut trial_f, &mut trial_res);
            let fnew = norm_inf(&trial_res);
            if fnew < (1.0 - 0.25 * t) * fnorm + 1e-15 {
                y.copy_from_slice(&trial);
                node_f.copy_from_slice(&trial_f);
                res.copy_from_slice(&trial_res);
                fnorm = fnew;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(FrontError::Continuation {
                stage: stage.to_string(),
                iters: iter + 1,
                residual: fnorm,
            });
        }
    }
    if fnorm <= tol {
        Ok((fnorm, max_newton))
    } else {
        Err(FrontError::Continuation {
            stage: stage.to_string(),
            iters: max_newton,
            residual: fnorm,
        })
    }
}

/// One full collocation solve at fixed parameters, used by the continuation
/// driver and by the standalone KPP front solver.
pub(crate) fn solve_stage(
    p: &ModelParams,
    regime: FrontRegime,
    nodes: &[f64],
    y: &mut [f64],
    tol: f64,
    max_newton: usize,
    stage: &str,
) -> Result<(f64, usize), FrontError> {
    let bc = build_bcs(p, regime)?;
    solve_collocation(p, regime, &bc, nodes, y, tol, max_newton, stage)
}

fn delta_path(start: f64, ratio: f64, target: f64) -> Vec<f64> {
    if target <= 0.0 {
        return Vec::new();
    }
    let mut path = Vec::new();
    if (target / start - 1.0).abs() < 1e-12 {
        return vec![target];
    }
    if target > start {
        let mut v = start;
        while v * ratio < target {
            path.push(v);
            v *= ratio;
        }
        path.push(v);
        path.push(target);
    } else {
        let mut v = start;
        while v / ratio > target {
            path.push(v);
            v /= ratio;
        }
        path.push(v);
        path.push(target);
    }
    path
}

fn eps_path(target: f64, halvings: u32) -> Vec<f64> {
    (0..=halvings)
        .rev()
        .map(|k| target / f64::powi(2.0, k as i32))
        .collect()
}

/// KPP seed: logistic ramp through the phase condition at the middle node.
fn kpp_seed(p: &ModelParams, nodes: &[f64]) -> Vec<f64> {
    let mw = 1.0 - p.alpha * p.alpha;
    let k = 0.5;
    let mut y = vec![0.0; nodes.len() * 2];
    for (i, &z) in nodes.iter().enumerate() {
        let e = (k * z).clamp(-500.0, 500.0).exp();
        y[2 * i] = mw / (1.0 + e);
        y[2 * i + 1] = -mw * k * e / ((1.0 + e) * (1.0 + e));
    }
    y
}

/// Computes the traveling front by continuation: scalar KPP limit, then
/// geometric delta steps, then geometric epsilon steps up to the target.
pub fn solve_front(p: &ModelParams, opts: &FrontOptions) -> Result<FrontProfile, FrontError> {
    if opts.n_nodes < 200 {
        return Err(FrontError::Invalid {
            op: "solve_front",
            msg: format!("n_nodes must be at least 200, got {}", opts.n_nodes),
        });
    }
    if !(opts.tol > 0.0) {
        return Err(FrontError::Invalid {
            op: "solve_front",
            msg: format!("tolerance must be positive, got {}", opts.tol),
        });
    }
    if p.epsilon > 0.0 && p.delta == 0.0 {
        return Err(FrontError::Invalid {
            op: "solve_front",
            msg: "epsilon > 0 requires delta > 0".into(),
        });
    }
    let rate = decay_rate_plus(p)?;
    let l = match opts.half_length {
        Some(v) if v > 0.0 => v,
        Some(v) => {
            return Err(FrontError::Invalid {
                op: "solve_front",
                msg: format!("half-length must be positive, got {v}"),
            })
        }
        None => default_half_length(p)?,
    };
    let n = opts.n_nodes;
    let h = 2.0 * l / (n - 1) as f64;
    let nodes: Vec<f64> = (0..n).map(|i| -l + h * i as f64).collect();

    let target_regime = if p.epsilon > 0.0 {
        FrontRegime::Four
    } else if p.delta > 0.0 {
        FrontRegime::Three
    } else {
        FrontRegime::Kpp
    };

    // stage 1: scalar KPP limit
    let pk = ModelParams {
        delta: 0.0,
        epsilon: 0.0,
        ..*p
    };
    let mut y2 = kpp_seed(p, &nodes);
    solve_stage(&pk, FrontRegime::Kpp, &nodes, &mut y2, opts.tol, opts.max_newton, "kpp")?;
    if target_regime == FrontRegime::Kpp {
        return Ok(finish_profile(p, FrontRegime::Kpp, l, nodes, y2, rate));
    }

    // stage 2: three-dimensional system along the delta path
    let mut y3 = vec![0.0; n * 3];
    for i in 0..n {
        y3[3 * i] = (1.0 - y2[2 * i]).max(0.0).sqrt();
        y3[3 * i + 1] = y2[2 * i];
        y3[3 * i + 2] = y2[2 * i + 1];
    }
    for dv in delta_path(opts.delta_start, opts.delta_ratio, p.delta) {
        let pd = ModelParams {
            delta: dv,
            epsilon: 0.0,
            ..*p
        };
        let stage = format!("delta={dv:.6e}");
        solve_stage(&pd, FrontRegime::Three, &nodes, &mut y3, opts.tol, opts.max_newton, &stage)?;
    }
    if target_regime == FrontRegime::Three {
        return Ok(finish_profile(p, FrontRegime::Three, l, nodes, y3, rate));
    }

    // stage 3: full system along the epsilon path
    let p3 = ModelParams {
        epsilon: 0.0,
        ..*p
    };
    let mut y4 = vec![0.0; n * 4];
    for i in 0..n {
        let (f, _) = eval_fg(&p3, y3[3 * i], y3[3 * i + 1]);
        y4[4 * i] = y3[3 * i];
        y4[4 * i + 1] = -f / (p.c * p.delta);
        y4[4 * i + 2] = y3[3 * i + 1];
        y4[4 * i + 3] = y3[3 * i + 2];
    }
    for ev in eps_path(p.epsilon, opts.eps_halvings) {
        let pe = ModelParams { epsilon: ev, ..*p };
        let stage = format!("epsilon={ev:.6e}");
        solve_stage(&pe, FrontRegime::Four, &nodes, &mut y4, opts.tol, opts.max_newton, &stage)?;
    }
    Ok(finish_profile(p, FrontRegime::Four, l, nodes, y4, rate))
}

/// Unpacks the stage solution into the four stored columns, derives the
/// curvature columns from the field, and measures residual and endpoint gaps.
fn finish_profile(
    p: &ModelParams,
    regime: FrontRegime,
    l: f64,
    nodes: Vec<f64>,
    y: Vec<f64>,
    rate: f64,
) -> FrontProfile {
    let n = nodes.len();
    let d = regime.dim();
    let mut u = vec![0.0; n];
    let mut up = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut wp = vec![0.0; n];
    let mut fbuf = vec![0.0; d];
    for i in 0..n {
        let yi = &y[i * d..(i + 1) * d];
        tw_field(p, regime, yi, &mut fbuf);
        match regime {
            FrontRegime::Four => {
                u[i] = yi[0];
                up[i] = yi[1];
                w[i] = yi[2];
                wp[i] = yi[3];
            }
            FrontRegime::Three => {
                u[i] = yi[0];
                up[i] = fbuf[0];
                w[i] = yi[1];
                wp[i] = yi[2];
            }
            FrontRegime::Kpp => {
                let s = (1.0 - yi[0]).max(1e-300).sqrt();
                u[i] = s;
                up[i] = -yi[1] / (2.0 * s);
                w[i] = yi[0];
                wp[i] = yi[1];
            }
        }
    }
    let mut profile = FrontProfile {
        params: *p,
        regime,
        half_length: l,
        nodes,
        u,
        up,
        w,
        wp,
        upp: vec![0.0; n],
        wpp: vec![0.0; n],
        residual: 0.0,
        endpoint_err_left: 0.0,
        endpoint_err_right: 0.0,
        decay_rate_plus: rate,
    };
    fill_curvature(&mut profile);
    profile.residual = front_residual(&profile);
    let (la, ra) = anchors(p, FrontRegime::Four);
    let first = [profile.u[0], profile.up[0], profile.w[0], profile.wp[0]];
    let last = [
        profile.u[n - 1],
        profile.up[n - 1],
        profile.w[n - 1],
        profile.wp[n - 1],
    ];
    profile.endpoint_err_left = first
        .iter()
        .zip(la.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    profile.endpoint_err_right = last
        .iter()
        .zip(ra.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    profile
}

/// Second derivatives from the traveling-wave equations (for Kpp, from the
/// nullcline relation), so the quintic interpolant has curvature data.
fn fill_curvature(profile: &mut FrontProfile) {
    let p = &profile.params;
    let n = profile.nodes.len();
    for i in 0..n {
        let (ui, wi) = (profile.u[i], profile.w[i]);
        match profile.regime {
            FrontRegime::Four => {
                let (f, g) = eval_fg(p, ui, wi);
                profile.upp[i] = -(p.c * profile.up[i] + f / p.delta) / p.epsilon;
                profile.wpp[i] = -p.c * profile.wp[i] - g;
            }
            FrontRegime::Three => {
                let (fu, fw, _, _) = eval_jac(p, ui, wi);
                let (_, g) = eval_fg(p, ui, wi);
                profile.upp[i] = -(fu * profile.up[i] + fw * profile.wp[i]) / (p.c * p.delta);
                profile.wpp[i] = -p.c * profile.wp[i] - g;
            }
            FrontRegime::Kpp => {
                let wpp = -p.c * profile.wp[i] - kpp::reaction_raw(p, wi);
                profile.wpp[i] = wpp;
                let s = ui.max(1e-300);
                profile.upp[i] =
                    -wpp / (2.0 * s) - profile.wp[i] * profile.wp[i] / (4.0 * s * s * s);
            }
        }
    }
}

/// Two-point quintic Hermite basis evaluation: value and first derivative.
pub(crate) fn quintic(
    h: f64,
    t: f64,
    y0: f64,
    d0: f64,
    c0: f64,
    y1: f64,
    d1: f64,
    c1: f64,
) -> (f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h00 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h10 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h20 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h01 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let h11 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h21 = 0.5 * (t3 - 2.0 * t4 + t5);
    let value = y0 * h00 + h * d0 * h10 + h * h * c0 * h20 + y1 * h01 + h * d1 * h11 + h * h * c1 * h21;
    let g00 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let g10 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let g20 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
    let g01 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
    let g11 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let g21 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
    let deriv = (y0 * g00 + h * d0 * g10 + h * h * c0 * g20 + y1 * g01 + h * d1 * g11 + h * h * c1 * g21) / h;
    (value, deriv)
}

impl FrontProfile {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    fn step(&self) -> f64 {
        self.nodes[1] - self.nodes[0]
    }

    fn interval_of(&self, zeta: f64) -> usize {
        let h = self.step();
        let idx = ((zeta - self.nodes[0]) / h).floor() as isize;
        idx.clamp(0, self.nodes.len() as isize - 2) as usize
    }

    /// Quintic-Hermite interpolated (u, u', w, w'); clamped to the endpoint
    /// node values outside the computed domain.
    pub fn eval(&self, zeta: f64) -> [f64; 4] {
        let n = self.nodes.len();
        if zeta <= self.nodes[0] {
            return [self.u[0], self.up[0], self.w[0], self.wp[0]];
        }
        if zeta >= self.nodes[n - 1] {
            return [self.u[n - 1], self.up[n - 1], self.w[n - 1], self.wp[n - 1]];
        }
        let i = self.interval_of(zeta);
        let h = self.nodes[i + 1] - self.nodes[i];
        let t = (zeta - self.nodes[i]) / h;
        let (uv, ud) = quintic(
            h, t, self.u[i], self.up[i], self.upp[i], self.u[i + 1], self.up[i + 1], self.upp[i + 1],
        );
        let (wv, wd) = quintic(
            h, t, self.w[i], self.wp[i], self.wpp[i], self.w[i + 1], self.wp[i + 1], self.wpp[i + 1],
        );
        [uv, ud, wv, wd]
    }

    /// Interpolated (u, w) only, the pair the Evans coefficients need.
    pub fn eval_uw(&self, zeta: f64) -> (f64, f64) {
        let v = self.eval(zeta);
        (v[0], v[2])
    }

    /// State vector of the active regime at node `i`.
    fn node_state(&self, i: usize) -> Vec<f64> {
        match self.regime {
            FrontRegime::Four => vec![self.u[i], self.up[i], self.w[i], self.wp[i]],
            FrontRegime::Three => vec![self.u[i], self.w[i], self.wp[i]],
            FrontRegime::Kpp => vec![self.w[i], self.wp[i]],
        }
    }
}

/// Maximum Hermite-Simpson collocation defect of the stored node values,
/// recomputed from fresh field evaluations. A converged solve keeps this at
/// the Newton tolerance; corrupting any node raises it immediately.
pub fn front_residual(profile: &FrontProfile) -> f64 {
    let p = &profile.params;
    let regime = profile.regime;
    let d = regime.dim();
    let n = profile.nodes.len();
    let mut worst = 0.0f64;
    let mut fi = vec![0.0; d];
    let mut fi1 = vec![0.0; d];
    let mut ym = vec![0.0; d];
    let mut fm = vec![0.0; d];
    for i in 0..n - 1 {
        let h = profile.nodes[i + 1] - profile.nodes[i];
        let yi = profile.node_state(i);
        let yi1 = profile.node_state(i + 1);
        tw_field(p, regime, &yi, &mut fi);
        tw_field(p, regime, &yi1, &mut fi1);
        for k in 0..d {
            ym[k] = 0.5 * (yi[k] + yi1[k]) + h / 8.0 * (fi[k] - fi1[k]);
        }
        tw_field(p, regime, &ym, &mut fm);
        for k in 0..d {
            let defect = (yi1[k] - yi[k] - h / 6.0 * (fi[k] + 4.0 * fm[k] + fi1[k])).abs();
            if defect > worst {
                worst = defect;
            }
        }
    }
    worst
}

#[derive(Clone, Debug, Serialize)]
pub struct FrontBoundsReport {
    pub checks: Vec<Check>,
    pub tail_slope: Option<f64>,
}

impl FrontBoundsReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Certifies the front-bound estimates: component ranges with the o(delta) +
/// o(epsilon) slack, endpoint attainment, and the right-tail decay rate.
pub fn check_front_bounds(profile: &FrontProfile) -> FrontBoundsReport {
    let p = &profile.params;
    let mw = 1.0 - p.alpha * p.alpha;
    let slack = 0.05;
    let mut checks = Vec::new();

    let (wmin, wmax) = profile
        .w
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    checks.push(Check {
        name: "w-range",
        pass: wmin > -1e-6 && wmax <= mw + slack,
        detail: format!("w in [{wmin:.6e}, {wmax:.6e}], ceiling {:.6e}", mw + slack),
    });

    let (umin, umax) = profile
        .u
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    checks.push(Check {
        name: "u-range",
        pass: umin > p.alpha - slack && umax <= 1.0 + 1e-6,
        detail: format!(
            "u in [{umin:.6e}, {umax:.6e}], floor {:.6e}",
            p.alpha - slack
        ),
    });

    checks.push(Check {
        name: "endpoint-left",
        pass: profile.endpoint_err_left <= 1e-4,
        detail: format!("gap {:.3e}", profile.endpoint_err_left),
    });
    checks.push(Check {
        name: "endpoint-right",
        pass: profile.endpoint_err_right <= 1e-4,
        detail: format!("gap {:.3e}", profile.endpoint_err_right),
    });

    let fu_max = profile
        .u
        .iter()
        .zip(profile.w.iter())
        .map(|(&u, &w)| eval_jac(p, u, w).0)
        .fold(f64::NEG_INFINITY, f64::max);
    let fu_limit = -p.alpha * p.alpha + 0.1;
    checks.push(Check {
        name: "f-u-envelope",
        pass: fu_max < fu_limit,
        detail: format!("max f_u {fu_max:.6e}, envelope {fu_limit:.6e}"),
    });

    let tail_slope = fit_tail_slope(profile);
    let rate = profile.decay_rate_plus;
    match tail_slope {
        Some(slope) => {
            let rel = (slope - rate).abs() / rate.abs();
            checks.push(Check {
                name: "tail-slope",
                pass: rel <= 0.2,
                detail: format!("fit {slope:.6e} vs rate {rate:.6e} (rel dev {rel:.3})"),
            });
        }
        None => checks.push(Check {
            name: "tail-slope",
            pass: false,
            detail: "too few usable tail samples for a log-linear fit".into(),
        }),
    }

    FrontBoundsReport { checks, tail_slope }
}

/// Least-squares slope of ln w over the right tail (second half of the
/// domain, clipped to strictly positive w away from roundoff).
fn fit_tail_slope(profile: &FrontProfile) -> Option<f64> {
    let l = profile.half_length;
    let pts: Vec<(f64, f64)> = profile
        .nodes
        .iter()
        .zip(profile.w.iter())
        .filter(|(&z, &w)| z >= 0.5 * l && z <= l - 1.0 && w > 1e-250)
        .map(|(&z, &w)| (z, w.ln()))
        .collect();
    if pts.len() < 8 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Supremum norms of the reaction-Jacobian entries along the profile plus the
/// signed maximum of f_u. Admissible fronts keep f_u below -alpha^2 + 0.1;
/// the slack absorbs the oscillatory tail near the coexistence state, where
/// small alpha lets f_u cross zero by a few thousandths.
pub fn sup_norms(profile: &FrontProfile) -> Result<(SupNorms, f64), FrontError> {
    let p = &profile.params;
    let mut sups = SupNorms {
        f_u: 0.0,
        f_w: 0.0,
        g_u: 0.0,
        g_w: 0.0,
    };
    let mut fu_max = f64::NEG_INFINITY;
    for i in 0..profile.nodes.len() {
        let (fu, fw, gu, gw) = eval_jac(p, profile.u[i], profile.w[i]);
        if !fu.is_finite() {
            return Err(FrontError::Invalid {
                op: "sup_norms",
                msg: format!("profile leaves the model domain at node {i}"),
            });
        }
        sups.f_u = sups.f_u.max(fu.abs());
        sups.f_w = sups.f_w.max(fw.abs());
        sups.g_u = sups.g_u.max(gu.abs());
        sups.g_w = sups.g_w.max(gw.abs());
        fu_max = fu_max.max(fu);
    }
    let limit = -p.alpha * p.alpha + 0.1;
    if fu_max >= limit {
        return Err(FrontError::FuEnvelope {
            value: fu_max,
            limit,
        });
    }
    Ok((sups, fu_max))
}

/// Pointwise residual of the lambda = 0 linearized system evaluated on the
/// numerically differentiated profile (the translation mode). The highest
/// derivative in each equation comes from five-point finite differences of
/// the stored columns, so the identity is measured, not assumed.
pub fn translation_mode_residual(profile: &FrontProfile) -> f64 {
    let p = &profile.params;
    let n = profile.nodes.len();
    if n < 5 {
        return f64::INFINITY;
    }
    let h = profile.step();
    let fd = |col: &[f64], i: usize| -> f64 {
        (col[i - 2] - 8.0 * col[i - 1] + 8.0 * col[i + 1] - col[i + 2]) / (12.0 * h)
    };
    let mut worst = 0.0f64;
    for i in 2..n - 2 {
        let (fu, fw, gu, gw) = eval_jac(p, profile.u[i], profile.w[i]);
        let pv = profile.up[i];
        let qv = profile.wp[i];
        let q1 = profile.wpp[i];
        let q2 = fd(&profile.wpp, i);
        let rw = match profile.regime {
            FrontRegime::Kpp => {
                let v = kpp::reaction_deriv_raw(p, profile.w[i]);
                q2 + p.c * q1 + v * qv
            }
            _ => q2 + p.c * q1 + gu * pv + gw * qv,
        };
        worst = worst.max(rw.abs());
        match profile.regime {
            FrontRegime::Four => {
                let p1 = profile.upp[i];
                let p2 = fd(&profile.upp, i);
                let ru = p.epsilon * p2 + p.c * p1 + (fu * pv + fw * qv) / p.delta;
                worst = worst.max(ru.abs());
            }
            FrontRegime::Three => {
                let p1 = fd(&profile.up, i);
                let ru = p.c * p1 + (fu * pv + fw * qv) / p.delta;
                worst = worst.max(ru.abs());
            }
            FrontRegime::Kpp => {}
        }
    }
    worst
}

#[derive(Serialize, Deserialize)]
struct ProfileHeader {
    alpha: f64,
    eta: f64,
    delta: f64,
    epsilon: f64,
    c: f64,
    half_length: f64,
    residual: f64,
    endpoint_err_left: f64,
    endpoint_err_right: f64,
    decay_rate_plus: f64,
    regime: FrontRegime,
}

/// Columnar serialization: one JSON header line, then one
/// "zeta u u' w w'" row per node at 17 significant digits.
pub fn write_profile(profile: &FrontProfile) -> String {
    let header = ProfileHeader {
        alpha: profile.params.alpha,
        eta: profile.params.eta,
        delta: profile.params.delta,
        epsilon: profile.params.epsilon,
        c: profile.params.c,
        half_length: profile.half_length,
        residual: profile.residual,
        endpoint_err_left: profile.endpoint_err_left,
        endpoint_err_right: profile.endpoint_err_right,
        decay_rate_plus: profile.decay_rate_plus,
        regime: profile.regime,
    };
    let mut out = serde_json::to_string(&header).expect("header serialization is infallible");
    out.push('\n');
    for i in 0..profile.nodes.len() {
        let _ = writeln!(
            out,
            "{:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
            profile.nodes[i], profile.u[i], profile.up[i], profile.w[i], profile.wp[i]
        );
    }
    out
}

/// Inverse of `write_profile`; curvature columns are rebuilt from the field.
pub fn read_profile(text: &str) -> Result<FrontProfile, FrontError> {
    let mut lines = text.lines();
    let header_line = lines.next().ok_or_else(|| FrontError::Serde {
        msg: "empty profile text".into(),
    })?;
    let header: ProfileHeader =
        serde_json::from_str(header_line).map_err(|e| FrontError::Serde {
            msg: format!("bad header line: {e}"),
        })?;
    let params = ModelParams::new(
        header.alpha,
        header.eta,
        header.delta,
        header.epsilon,
        header.c,
    )?;
    let mut nodes = Vec::new();
    let mut u = Vec::new();
    let mut up = Vec::new();
    let mut w = Vec::new();
    let mut wp = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_ascii_whitespace();
        let mut next = || -> Result<f64, FrontError> {
            it.next()
                .ok_or_else(|| FrontError::Serde {
                    msg: format!("row {} has fewer than 5 columns", ln + 2),
                })?
                .parse::<f64>()
                .map_err(|e| FrontError::Serde {
                    msg: format!("row {}: {e}", ln + 2),
                })
        };
        nodes.push(next()?);
        u.push(next()?);
        up.push(next()?);
        w.push(next()?);
        wp.push(next()?);
    }
    if nodes.len() < 2 {
        return Err(FrontError::Serde {
            msg: "profile needs at least two rows".into(),
        });
    }
    let n = nodes.len();
    let mut profile = FrontProfile {
        params,
        regime: header.regime,
        half_length: header.half_length,
        nodes,
        u,
        up,
        w,
        wp,
        upp: vec![0.0; n],
        wpp: vec![0.0; n],
        residual: header.residual,
        endpoint_err_left: header.endpoint_err_left,
        endpoint_err_right: header.endpoint_err_right,
        decay_rate_plus: header.decay_rate_plus,
    };
    fill_curvature(&mut profile);
    Ok(profile)
}
