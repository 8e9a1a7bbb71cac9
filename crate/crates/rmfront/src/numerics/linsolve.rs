//! Dense complex LU factorization with partial pivoting, sized for the 6x6
//! matrices the spectral machinery produces. Provides linear solves, matrix
//! inversion (for projection boundary-condition rows) and determinants (for
//! the orthogonalization cross-check).

use super::{C64, CMat, NumericsError, MAX_DIM};

pub struct CluFactors {
    n: usize,
    lu: CMat,
    piv: [usize; MAX_DIM],
}

/// Factor a square complex matrix as P*A = L*U with partial pivoting.
pub fn clu_factor(a: &CMat) -> Result<CluFactors, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::InvalidInput {
            op: "clu_factor",
            msg: format!("matrix is {}x{}, need square", a.rows, a.cols),
        });
    }
    let n = a.rows;
    let mut lu = *a;
    let mut piv = [0usize; MAX_DIM];
    let scale = a.norm_max().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let mut p = k;
        let mut best = lu.get(k, k).norm();
        for i in (k + 1)..n {
            let v = lu.get(i, k).norm();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best < 1e-300 * scale.max(1.0) {
            return Err(NumericsError::Singular {
                op: "clu_factor",
                pivot: best,
                index: k,
            });
        }
        piv[k] = p;
        if p != k {
            for j in 0..n {
                let t = lu.get(k, j);
                lu.set(k, j, lu.get(p, j));
                lu.set(p, j, t);
            }
        }
        let d = lu.get(k, k);
        for i in (k + 1)..n {
            let m = lu.get(i, k) / d;
            lu.set(i, k, m);
            for j in (k + 1)..n {
                let v = lu.get(i, j) - m * lu.get(k, j);
                lu.set(i, j, v);
            }
        }
    }
    Ok(CluFactors { n, lu, piv })
}

impl CluFactors {
    /// Solve A x = b in place.
    pub fn solve(&self, b: &mut [C64]) {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        for k in 0..n {
            b.swap(k, self.piv[k]);
            for i in (k + 1)..n {
                let m = self.lu.get(i, k);
                let bk = b[k];
                b[i] -= m * bk;
            }
        }
        for k in (0..n).rev() {
            for j in (k + 1)..n {
                let bj = b[j];
                b[k] -= self.lu.get(k, j) * bj;
            }
            b[k] /= self.lu.get(k, k);
        }
    }

    pub fn det(&self) -> C64 {
        let mut d = C64::new(1.0, 0.0);
        for k in 0..self.n {
            d *= self.lu.get(k, k);
            if self.piv[k] != k {
                d = -d;
            }
        }
        d
    }
}

/// Solve A X = B column by column.
pub fn solve_many(a: &CMat, b: &CMat) -> Result<CMat, NumericsError> {
    let f = clu_factor(a)?;
    let mut out = CMat::zeros(b.rows, b.cols);
    let mut col = vec![C64::new(0.0, 0.0); b.rows];
    for j in 0..b.cols {
        for i in 0..b.rows {
            col[i] = b.get(i, j);
        }
        f.solve(&mut col);
        for i in 0..b.rows {
            out.set(i, j, col[i]);
        }
    }
    Ok(out)
}

pub fn inverse(a: &CMat) -> Result<CMat, NumericsError> {
    solve_many(a, &CMat::identity(a.rows))
}

pub fn det(a: &CMat) -> Result<C64, NumericsError> {
    match clu_factor(a) {
        Ok(f) => Ok(f.det()),
        Err(NumericsError::Singular { .. }) => Ok(C64::new(0.0, 0.0)),
        Err(e) => Err(e),
    }
}
