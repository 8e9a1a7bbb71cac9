//! Complex eigenvalue solver for matrices up to 6x6: Householder reduction to
//! Hessenberg form, explicit shifted QR iteration with Wilkinson shifts and
//! Givens rotations, followed by inverse iteration for right eigenvectors.
//! See Golub & Van Loan, Matrix Computations, ch. 7 for the scheme.

use super::linsolve::clu_factor;
use super::{C64, CMat, NumericsError};

const MAX_SWEEPS: usize = 400;

/// Reduce a square matrix to upper Hessenberg form in place (similarity).
fn hessenberg(a: &mut CMat) {
    let n = a.rows;
    if n < 3 {
        return;
    }
    for k in 0..(n - 2) {
        let mut norm2 = 0.0f64;
        for i in (k + 1)..n {
            norm2 += a.get(i, k).norm_sqr();
        }
        let x0 = a.get(k + 1, k);
        let norm = norm2.sqrt();
        if norm <= 1e-300 {
            continue;
        }
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        // v = x + phase*|x|*e1, reflection P = I - 2 v v^H / (v^H v)
        let mut v = [C64::new(0.0, 0.0); 6];
        for i in (k + 1)..n {
            v[i] = a.get(i, k);
        }
        v[k + 1] += phase * norm;
        let mut vnorm2 = 0.0f64;
        for item in v.iter().take(n).skip(k + 1) {
            vnorm2 += item.norm_sqr();
        }
        if vnorm2 <= 1e-300 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // A <- P A
        for j in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for i in (k + 1)..n {
                s += v[i].conj() * a.get(i, j);
            }
            s *= beta;
            for i in (k + 1)..n {
                let upd = a.get(i, j) - v[i] * s;
                a.set(i, j, upd);
            }
        }
        // A <- A P
        for i in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for j in (k + 1)..n {
                s += a.get(i, j) * v[j];
            }
            s *= beta;
            for j in (k + 1)..n {
                let upd = a.get(i, j) - s * v[j].conj();
                a.set(i, j, upd);
            }
        }
        for i in (k + 2)..n {
            a.set(i, k, C64::new(0.0, 0.0));
        }
    }
}

/// Eigenvalue of the 2x2 [[a,b],[c,d]] closest to d (Wilkinson shift).
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - 4.0 * det).sqrt();
    let r1 = (tr + disc) / 2.0;
    let r2 = (tr - disc) / 2.0;
    if (r1 - d).norm() <= (r2 - d).norm() {
        r1
    } else {
        r2
    }
}

/// Complex Givens rotation zeroing b: returns (c, s) with c real, such that
/// [c, s; -conj(s), c] * [a; b] = [r; 0].
fn givens(a: C64, b: C64) -> (f64, C64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if an == 0.0 {
        return (0.0, C64::new(1.0, 0.0));
    }
    let r = an.hypot(bn);
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

/// Eigenvalues of an upper Hessenberg matrix by shifted QR with deflation.
fn qr_eigenvalues(h: &mut CMat) -> Result<Vec<C64>, NumericsError> {
    let n = h.rows;
    let mut eigs = vec![C64::new(0.0, 0.0); n];
    let mut hi = n; // active block is rows/cols [0, hi)
    let mut sweeps = 0usize;
    let mut stalled = 0usize;
    while hi > 0 {
        if hi == 1 {
            eigs[0] = h.get(0, 0);
            break;
        }
        // deflate any negligible subdiagonal inside the active block
        for i in 0..(hi - 1) {
            let tol = f64::EPSILON * (h.get(i, i).norm() + h.get(i + 1, i + 1).norm());
            if h.get(i + 1, i).norm() <= tol.max(1e-300) {
                h.set(i + 1, i, C64::new(0.0, 0.0));
            }
        }
        if h.get(hi - 1, hi - 2).norm() == 0.0 {
            eigs[hi - 1] = h.get(hi - 1, hi - 1);
            hi -= 1;
            stalled = 0;
            continue;
        }
        // lowest unreduced start of the trailing block
        let mut lo = hi - 1;
        while lo > 0 && h.get(lo, lo - 1).norm() != 0.0 {
            lo -= 1;
        }
        sweeps += 1;
        stalled += 1;
        if sweeps > MAX_SWEEPS {
            return Err(NumericsError::EigNoConvergence(MAX_SWEEPS));
        }
        let mu = if stalled % 16 == 15 {
            // exceptional shift to break symmetric stalls
            let m = h.get(hi - 1, hi - 2).norm() + if hi >= 3 { h.get(hi - 2, hi - 3).norm() } else { 0.0 };
            C64::new(m, 0.0) + h.get(hi - 1, hi - 1)
        } else {
            wilkinson_shift(
                h.get(hi - 2, hi - 2),
                h.get(hi - 2, hi - 1),
                h.get(hi - 1, hi - 2),
                h.get(hi - 1, hi - 1),
            )
        };
        // explicit shifted QR sweep on the block [lo, hi)
        let mut rot = [(1.0f64, C64::new(0.0, 0.0)); 6];
        for i in lo..hi {
            h.set(i, i, h.get(i, i) - mu);
        }
        for k in lo..(hi - 1) {
            let (c, s) = givens(h.get(k, k), h.get(k + 1, k));
            rot[k] = (c, s);
            for j in k..hi {
                let hk = h.get(k, j);
                let hk1 = h.get(k + 1, j);
                h.set(k, j, c * hk + s * hk1);
                h.set(k + 1, j, -s.conj() * hk + c * hk1);
            }
        }
        for k in lo..(hi - 1) {
            let (c, s) = rot[k];
            let top = if k + 2 <= hi { k + 2 } else { hi };
            for i in lo..top.min(hi) {
                let hk = h.get(i, k);
                let hk1 = h.get(i, k + 1);
                h.set(i, k, c * hk + s.conj() * hk1);
                h.set(i, k + 1, -s * hk + c * hk1);
            }
        }
        for i in lo..hi {
            h.set(i, i, h.get(i, i) + mu);
        }
    }
    Ok(eigs)
}

fn splitmix(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
}

/// Right eigenvector for a computed eigenvalue by inverse iteration.
fn eigenvector(a: &CMat, lambda: C64, scale: f64) -> Vec<C64> {
    let n = a.rows;
    let mut seed = 0x5DEECE66Du64;
    let mut x: Vec<C64> = (0..n)
        .map(|_| C64::new(splitmix(&mut seed) + 1.0, splitmix(&mut seed)))
        .collect();
    let mut shift = lambda;
    let mut bump = 1e-13 * scale.max(1.0);
    let factors = loop {
        let mut m = *a;
        m.shift_diag(shift);
        match clu_factor(&m) {
            Ok(f) => break Some(f),
            Err(_) => {
                shift = lambda + C64::new(bump, bump);
                bump *= 100.0;
                if bump > 1.0e-3 * scale.max(1.0) {
                    break None;
                }
            }
        }
    };
    let Some(f) = factors else {
        // fall back to the start vector; caller's residual check will flag it
        return x;
    };
    for _ in 0..3 {
        f.solve(&mut x);
        let norm: f64 = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            break;
        }
        for v in x.iter_mut() {
            *v /= norm;
        }
    }
    // fix the phase: largest component real positive
    let mut imax = 0;
    let mut best = 0.0;
    for (i, v) in x.iter().enumerate() {
        if v.norm() > best {
            best = v.norm();
            imax = i;
        }
    }
    if best > 0.0 {
        let phase = x[imax] / best;
        for v in x.iter_mut() {
            *v /= phase;
        }
    }
    x
}

/// Eigenvalues (sorted by ascending real part, ties by imaginary part) and
/// matching right eigenvectors as the columns of the returned matrix.
pub fn eig(m: &CMat) -> Result<(Vec<C64>, CMat), NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::InvalidInput {
            op: "eig",
            msg: format!("matrix is {}x{}, need square", m.rows, m.cols),
        });
    }
    if !m.all_finite() {
        return Err(NumericsError::InvalidInput {
            op: "eig",
            msg: "non-finite entries".to_string(),
        });
    }
    let n = m.rows;
    if n == 0 {
        return Err(NumericsError::InvalidInput {
            op: "eig",
            msg: "empty matrix".to_string(),
        });
    }
    let mut h = *m;
    hessenberg(&mut h);
    let mut eigs = qr_eigenvalues(&mut h)?;
    eigs.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    let scale = m.norm_max();
    let mut vecs = CMat::zeros(n, n);
    for (j, &lam) in eigs.iter().enumerate() {
        let v = eigenvector(m, lam, scale);
        for i in 0..n {
            vecs.set(i, j, v[i]);
        }
    }
    Ok((eigs, vecs))
}

/// Eigenvalues only; same ordering contract as `eig`.
pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::InvalidInput {
            op: "eig",
            msg: format!("matrix is {}x{}, need square", m.rows, m.cols),
        });
    }
    let mut h = *m;
    hessenberg(&mut h);
    let mut eigs = qr_eigenvalues(&mut h)?;
    eigs.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    Ok(eigs)
}
