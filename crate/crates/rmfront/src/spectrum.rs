//! Closed-form essential-spectrum geometry: boundary curves of the
//! linearization at the rest states for epsilon > 0, epsilon = 0, and the
//! KPP limit, the discriminant roots where the oscillatory branches attach,
//! the spectral gap, and the admissible exponential-weight interval.

use crate::model::ModelParams;
use crate::numerics::C64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("spectrum/{op}: {msg}")]
    Invalid { op: &'static str, msg: String },
    #[error(
        "spectrum/disc_roots: discriminant has no real positive roots \
         (delta smallness condition fails: delta = {delta}, ceiling = {ceiling:.6})"
    )]
    NoRealRoots { delta: f64, ceiling: f64 },
    #[error("spectrum/weight_interval: empty interval (sigma_lo {lo:.6} >= sigma_hi {hi:.6})")]
    EmptyInterval { lo: f64, hi: f64 },
    #[error("spectrum/weight_interval: speed c = {c} does not exceed min_speed = {min_speed:.6}")]
    SubcriticalSpeed { c: f64, min_speed: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchLabel {
    PlusFirst,
    PlusSecond,
    MinusLemma3Upper,
    MinusLemma3Lower,
    MinusLemma4Root1,
    MinusLemma4Root2,
    KppFirst,
    KppSecond,
}

impl BranchLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            BranchLabel::PlusFirst => "plus-first",
            BranchLabel::PlusSecond => "plus-second",
            BranchLabel::MinusLemma3Upper => "minus-lemma3-upper",
            BranchLabel::MinusLemma3Lower => "minus-lemma3-lower",
            BranchLabel::MinusLemma4Root1 => "minus-lemma4-root1",
            BranchLabel::MinusLemma4Root2 => "minus-lemma4-root2",
            BranchLabel::KppFirst => "kpp-first",
            BranchLabel::KppSecond => "kpp-second",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpectralCurve {
    pub label: BranchLabel,
    /// Ordered (k, lambda) samples.
    pub samples: Vec<(f64, C64)>,
    pub k_range: (f64, f64),
}

impl SpectralCurve {
    pub fn max_re(&self) -> f64 {
        self.samples
            .iter()
            .map(|(_, l)| l.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightRegime {
    /// epsilon is small enough that the fast-decay constraint is inactive.
    KppeReduced,
    /// both constraints compete; the binding one decides sigma_hi.
    General,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct WeightInterval {
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub regime: WeightRegime,
}

impl WeightInterval {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.sigma_lo + self.sigma_hi)
    }

    pub fn contains(&self, sigma: f64) -> bool {
        sigma > self.sigma_lo && sigma < self.sigma_hi
    }
}

/// Plus-side (prey-only state) essential-spectrum boundary curves:
/// lambda(k) = (-eps k^2 - 1/delta) + i c k  and
/// lambda(k) = (-k^2 + (1-alpha)/(eta+1)) + i c k.
pub fn ess_curves_plus(p: &ModelParams, k_grid: &[f64]) -> [SpectralCurve; 2] {
    let range = grid_range(k_grid);
    let first = k_grid
        .iter()
        .map(|&k| {
            (
                k,
                C64::new(-p.epsilon * k * k - 1.0 / p.delta, p.c * k),
            )
        })
        .collect();
    let second = k_grid
        .iter()
        .map(|&k| {
            (
                k,
                C64::new(
                    -k * k + (1.0 - p.alpha) / (p.eta + 1.0),
                    p.c * k,
                ),
            )
        })
        .collect();
    [
        SpectralCurve {
            label: BranchLabel::PlusFirst,
            samples: first,
            k_range: range,
        },
        SpectralCurve {
            label: BranchLabel::PlusSecond,
            samples: second,
            k_range: range,
        },
    ]
}

/// Coefficients of the minus-side discriminant as a quadratic in K = k^2:
/// Delta(k) = -(1-eps)^2 K^2 + p1 K - q0.
fn disc_coeffs(p: &ModelParams) -> (f64, f64, f64) {
    let a = p.alpha;
    let d = p.delta;
    let e = p.epsilon;
    let a2 = -(1.0 - e) * (1.0 - e);
    let p1 = 4.0 * (1.0 - e) * a * a / (d * (1.0 + a));
    let q0 = 4.0 * a * (a.powi(3) * (a + p.eta) - d * (1.0 - a * a) * (1.0 + a))
        / (d * d * (1.0 + a) * (1.0 + a) * (p.eta + a));
    (a2, p1, q0)
}

/// Minus-side discriminant Delta(k) deciding between oscillatory (Lemma-3)
/// and real-root (Lemma-4) branches.
pub fn disc_eval(p: &ModelParams, k: f64) -> f64 {
    let (a2, p1, q0) = disc_coeffs(p);
    let kk = k * k;
    a2 * kk * kk + p1 * kk - q0
}

/// The two positive roots (k1, k2) of Delta(k) = 0, with 0 < k1 < k2 and
/// Delta > 0 strictly inside (k1, k2).
pub fn disc_roots(p: &ModelParams) -> Result<(f64, f64), SpectrumError> {
    if p.epsilon >= 1.0 {
        return Err(SpectrumError::Invalid {
            op: "disc_roots",
            msg: format!("epsilon must lie in [0,1), got {}", p.epsilon),
        });
    }
    let (a2, p1, q0) = disc_coeffs(p);
    if q0 <= 0.0 {
        return Err(SpectrumError::NoRealRoots {
            delta: p.delta,
            ceiling: p.delta_ceiling(),
        });
    }
    // -(1-eps)^2 K^2 + p1 K - q0 = 0
    let disc2 = p1 * p1 + 4.0 * a2 * q0;
    if disc2 < 0.0 {
        return Err(SpectrumError::NoRealRoots {
            delta: p.delta,
            ceiling: p.delta_ceiling(),
        });
    }
    let s = disc2.sqrt();
    let denom = -2.0 * a2; // positive
    let k_small = (p1 - s) / denom;
    let k_large = (p1 + s) / denom;
    if k_small <= 0.0 {
        return Err(SpectrumError::NoRealRoots {
            delta: p.delta,
            ceiling: p.delta_ceiling(),
        });
    }
    Ok((k_small.sqrt(), k_large.sqrt()))
}

/// Coefficients (B, C) of the Lemma-4 real-part quadratic
/// lambda_r^2 + B(k) lambda_r + C(k) = 0.
fn lemma4_coeffs(p: &ModelParams, k: f64) -> (f64, f64) {
    let a = p.alpha;
    let d = p.delta;
    let e = p.epsilon;
    let kk = k * k;
    let b = (e + 1.0) * kk + 2.0 * a * a / (d * (1.0 + a));
    let c = e * kk * kk + 2.0 * a * a * kk / (d * (1.0 + a))
        + a * (1.0 - a) / ((p.eta + a) * d);
    (b, c)
}

/// Common real part of the Lemma-3 oscillatory branches.
fn lemma3_re(p: &ModelParams, k: f64) -> f64 {
    -(p.epsilon + 1.0) * k * k / 2.0 - p.alpha * p.alpha / ((p.alpha + 1.0) * p.delta)
}

/// Cosine-clustered grid on [lo, hi] (endpoints included, denser near both).
/// The count is forced odd so the interval midpoint is always sampled; on the
/// symmetric Lemma-4 interval that midpoint is k = 0, where the gap sits.
fn clustered_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(3) | 1;
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            let s = 0.5 - 0.5 * (std::f64::consts::PI * t).cos();
            lo + (hi - lo) * s
        })
        .collect()
}

/// Minus-side (coexistence state) essential-spectrum boundary curves.
/// Lemma-3 branches live on (k1,k2) and its reflection; Lemma-4 branches on
/// the complementary set. All real parts are strictly negative under the
/// delta smallness condition.
pub fn ess_curves_minus(
    p: &ModelParams,
    n_samples: usize,
) -> Result<[SpectralCurve; 4], SpectrumError> {
    let (k1, k2) = disc_roots(p)?;
    let n = n_samples.max(8);
    let quarter = n / 4;

    // Lemma-3: sample (k1,k2), reflect to (-k2,-k1)
    let pos = clustered_grid(k1, k2, quarter.max(4));
    let mut l3_ks: Vec<f64> = pos.iter().map(|&k| -k).rev().collect();
    l3_ks.extend(pos.iter().copied());
    let mut upper = Vec::with_capacity(l3_ks.len());
    let mut lower = Vec::with_capacity(l3_ks.len());
    for &k in &l3_ks {
        let re = lemma3_re(p, k);
        let delta_k = disc_eval(p, k).max(0.0);
        let half = 0.5 * delta_k.sqrt();
        upper.push((k, C64::new(re, p.c * k + half)));
        lower.push((k, C64::new(re, p.c * k - half)));
    }

    // Lemma-4: complement [-k1, k1] plus the outer tails
    let k_out = 2.0 * k2;
    let inner = clustered_grid(-k1, k1, quarter.max(4));
    let tail_hi = clustered_grid(k2, k_out, (quarter / 2).max(4));
    let tail_lo: Vec<f64> = tail_hi.iter().map(|&k| -k).rev().collect();
    let mut l4_ks = tail_lo;
    l4_ks.extend(inner.iter().copied());
    l4_ks.extend(tail_hi.iter().copied());
    let mut root1 = Vec::with_capacity(l4_ks.len());
    let mut root2 = Vec::with_capacity(l4_ks.len());
    for &k in &l4_ks {
        let (b, c) = lemma4_coeffs(p, k);
        let disc = (b * b - 4.0 * c).max(0.0);
        let s = disc.sqrt();
        let hi = (-b + s) / 2.0;
        let lo = (-b - s) / 2.0;
        root1.push((k, C64::new(hi, p.c * k)));
        root2.push((k, C64::new(lo, p.c * k)));
    }

    Ok([
        SpectralCurve {
            label: BranchLabel::MinusLemma3Upper,
            samples: upper,
            k_range: (-k2, k2),
        },
        SpectralCurve {
            label: BranchLabel::MinusLemma3Lower,
            samples: lower,
            k_range: (-k2, k2),
        },
        SpectralCurve {
            label: BranchLabel::MinusLemma4Root1,
            samples: root1,
            k_range: (-k_out, k_out),
        },
        SpectralCurve {
            label: BranchLabel::MinusLemma4Root2,
            samples: root2,
            k_range: (-k_out, k_out),
        },
    ])
}

/// Rightmost point of the minus-side essential spectrum: the larger Lemma-4
/// root at k=0 (strictly negative under the delta smallness condition).
pub fn spectral_gap(p: &ModelParams) -> Result<f64, SpectrumError> {
    if p.epsilon >= 1.0 {
        return Err(SpectrumError::Invalid {
            op: "spectral_gap",
            msg: format!("epsilon must lie in [0,1), got {}", p.epsilon),
        });
    }
    let a = p.alpha;
    let d = p.delta;
    let eta = p.eta;
    let inner = a * (eta + a) * (a.powi(3) * (a + eta) - d * (1.0 - a * a) * (1.0 + a));
    if inner < 0.0 {
        return Err(SpectrumError::NoRealRoots {
            delta: d,
            ceiling: p.delta_ceiling(),
        });
    }
    Ok((-a * a * (eta + a) + inner.sqrt()) / (d * (1.0 + a) * (eta + a)))
}

/// Fast-mode decay threshold at the prey-only state:
/// q2+ = (c + sqrt(c^2 + 4 eps/delta)) / (2 eps); infinite when eps = 0.
pub fn fast_decay_threshold(p: &ModelParams) -> f64 {
    if p.epsilon == 0.0 {
        f64::INFINITY
    } else {
        (p.c + (p.c * p.c + 4.0 * p.epsilon / p.delta).sqrt()) / (2.0 * p.epsilon)
    }
}

/// Admissible exponential-weight interval (sigma_lo, sigma_hi): weights in it
/// shift the plus-side spectrum strictly into the left half-plane while
/// preserving the consistent splitting.
pub fn weight_interval(p: &ModelParams) -> Result<WeightInterval, SpectrumError> {
    let ms = p.min_speed();
    if p.c <= ms {
        return Err(SpectrumError::SubcriticalSpeed {
            c: p.c,
            min_speed: ms,
        });
    }
    let rad = (p.c * p.c - 4.0 * (1.0 - p.alpha) / (p.eta + 1.0)).sqrt();
    let sigma_lo = 0.5 * (p.c - rad);
    let sigma2 = 0.5 * (p.c + rad);
    let q2p = fast_decay_threshold(p);
    let (sigma_hi, regime) = if sigma2 <= q2p {
        (sigma2, WeightRegime::KppeReduced)
    } else {
        (q2p, WeightRegime::General)
    };
    if sigma_lo >= sigma_hi {
        return Err(SpectrumError::EmptyInterval {
            lo: sigma_lo,
            hi: sigma_hi,
        });
    }
    Ok(WeightInterval {
        sigma_lo,
        sigma_hi,
        regime,
    })
}

/// Weighted plus-side curves for weight exponent sigma:
/// lambda(k) = (-eps k^2 + sigma(eps sigma - c) - 1/delta) + i(c - 2 eps sigma)k
/// and lambda(k) = (-k^2 + sigma(sigma - c) + (1-alpha)/(eta+1)) + i(c - 2 sigma)k.
pub fn weighted_curves_plus(
    p: &ModelParams,
    sigma: f64,
    k_grid: &[f64],
) -> Result<[SpectralCurve; 2], SpectrumError> {
    if !(sigma > 0.0) {
        return Err(SpectrumError::Invalid {
            op: "weighted_curves_plus",
            msg: format!("sigma must be positive, got {sigma}"),
        });
    }
    let range = grid_range(k_grid);
    let e = p.epsilon;
    let first = k_grid
        .iter()
        .map(|&k| {
            (
                k,
                C64::new(
                    -e * k * k + sigma * (e * sigma - p.c) - 1.0 / p.delta,
                    (p.c - 2.0 * e * sigma) * k,
                ),
            )
        })
        .collect();
    let second = k_grid
        .iter()
        .map(|&k| {
            (
                k,
                C64::new(
                    -k * k + sigma * (sigma - p.c) + (1.0 - p.alpha) / (p.eta + 1.0),
                    (p.c - 2.0 * sigma) * k,
                ),
            )
        })
        .collect();
    Ok([
        SpectralCurve {
            label: BranchLabel::PlusFirst,
            samples: first,
            k_range: range,
        },
        SpectralCurve {
            label: BranchLabel::PlusSecond,
            samples: second,
            k_range: range,
        },
    ])
}

/// KPP-limit essential-spectrum curves:
/// lambda = -k^2 + ick + (1-alpha)/(eta+1) and
/// lambda = -k^2 + ick - (1-alpha^2)/(2 alpha (alpha+eta)).
pub fn kpp_ess_curves(p: &ModelParams, k_grid: &[f64]) -> [SpectralCurve; 2] {
    let range = grid_range(k_grid);
    let v1 = (1.0 - p.alpha) / (p.eta + 1.0);
    let v2 = -(1.0 - p.alpha * p.alpha) / (2.0 * p.alpha * (p.alpha + p.eta));
    let first = k_grid
        .iter()
        .map(|&k| (k, C64::new(-k * k + v1, p.c * k)))
        .collect();
    let second = k_grid
        .iter()
        .map(|&k| (k, C64::new(-k * k + v2, p.c * k)))
        .collect();
    [
        SpectralCurve {
            label: BranchLabel::KppFirst,
            samples: first,
            k_range: range,
        },
        SpectralCurve {
            label: BranchLabel::KppSecond,
            samples: second,
            k_range: range,
        },
    ]
}

/// 2x2 dispersion determinant of the linearization at the coexistence state
/// for Fourier mode k: the minus-side curves are precisely its zero set.
pub fn minus_determinant(p: &ModelParams, k: f64, lambda: C64) -> C64 {
    let a = p.alpha;
    let j = p
        .jacobian(a, 1.0 - a * a)
        .expect("coexistence state is interior");
    let ick = C64::new(0.0, p.c * k);
    let m11 = C64::new(-p.epsilon * k * k, 0.0) + ick + j.f_u / p.delta - lambda;
    let m12 = C64::new(j.f_w / p.delta, 0.0);
    let m21 = C64::new(j.g_u, 0.0);
    let m22 = C64::new(-k * k, 0.0) + ick + j.g_w - lambda;
    m11 * m22 - m12 * m21
}

/// Default symmetric sampling grid for curve export.
pub fn default_k_grid(k_max: f64, n: usize) -> Vec<f64> {
    let n = n.max(3) | 1; // odd count so k=0 is included exactly
    (0..n)
        .map(|i| -k_max + 2.0 * k_max * i as f64 / (n - 1) as f64)
        .collect()
}

fn grid_range(k_grid: &[f64]) -> (f64, f64) {
    let lo = k_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = k_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}
