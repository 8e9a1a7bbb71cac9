//! Real banded LU factorization with partial pivoting, in the LAPACK band
//! storage convention (kl extra super-rows reserved for pivoting fill). The
//! collocation Newton systems are banded with half-bandwidth 2*dim+2, so a
//! dense solve would be quadratic waste at the node counts involved.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BandedError {
    #[error("banded solve: zero pivot in column {0}")]
    ZeroPivot(usize),
    #[error("banded matrix: entry ({row},{col}) outside bandwidth kl={kl}, ku={ku}")]
    OutOfBand {
        row: usize,
        col: usize,
        kl: usize,
        ku: usize,
    },
}

/// Band matrix of order n with kl subdiagonals and ku superdiagonals.
/// Storage holds kl extra superdiagonals for elimination fill; entry (i, j)
/// lives at data[j * ldab + (kl + ku + i - j)].
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            ldab,
            data: vec![0.0; ldab * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ldab + (self.kl + self.ku + i - j)
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) -> Result<(), BandedError> {
        if i >= self.n || j >= self.n || i + self.ku < j || j + self.kl < i {
            return Err(BandedError::OutOfBand {
                row: i,
                col: j,
                kl: self.kl,
                ku: self.ku,
            });
        }
        let at = self.idx(i, j);
        self.data[at] = v;
        Ok(())
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) -> Result<(), BandedError> {
        if i >= self.n || j >= self.n || i + self.ku < j || j + self.kl < i {
            return Err(BandedError::OutOfBand {
                row: i,
                col: j,
                kl: self.kl,
                ku: self.ku,
            });
        }
        let at = self.idx(i, j);
        self.data[at] += v;
        Ok(())
    }

    /// In-place LU with partial pivoting; returns the pivot row per column.
    /// After factorization the fill occupies the reserved kl super-rows.
    pub fn factor(mut self) -> Result<BandedLu, BandedError> {
        let n = self.n;
        let kl = self.kl;
        let ku = self.ku;
        let kv = kl + ku;
        let mut piv = vec![0usize; n];
        for j in 0..n {
            let reach = kl.min(n - 1 - j);
            let mut p = 0usize;
            let mut best = 0.0f64;
            for i in 0..=reach {
                let v = self.data[self.idx(j + i, j)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(BandedError::ZeroPivot(j));
            }
            piv[j] = j + p;
            let row_span = (kv).min(n - 1 - j);
            if p != 0 {
                for col in j..=(j + row_span) {
                    let a = self.idx(j, col);
                    let b = self.idx(j + p, col);
                    self.data.swap(a, b);
                }
            }
            let d = self.data[self.idx(j, j)];
            for i in 1..=reach {
                let at = self.idx(j + i, j);
                let m = self.data[at] / d;
                self.data[at] = m;
                if m != 0.0 {
                    for col in (j + 1)..=(j + row_span) {
                        let up = self.data[self.idx(j, col)];
                        if up != 0.0 {
                            let lo = self.idx(j + i, col);
                            self.data[lo] -= m * up;
                        }
                    }
                }
            }
        }
        Ok(BandedLu {
            m: self,
            piv,
        })
    }
}

pub struct BandedLu {
    m: BandedMatrix,
    piv: Vec<usize>,
}

impl BandedLu {
    /// Solve A x = b in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.m.n;
        let kl = self.m.kl;
        let kv = kl + self.m.ku;
        debug_assert_eq!(b.len(), n);
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                b.swap(j, p);
            }
            let reach = kl.min(n - 1 - j);
            let bj = b[j];
            for i in 1..=reach {
                b[j + i] -= self.m.data[self.m.idx(j + i, j)] * bj;
            }
        }
        for j in (0..n).rev() {
            let lo = j.saturating_sub(kv);
            b[j] /= self.m.data[self.m.idx(j, j)];
            let bj = b[j];
            for i in lo..j {
                b[i] -= self.m.data[self.m.idx(i, j)] * bj;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dense reference solve by Gaussian elimination for validation.
    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut x = b.to_vec();
        for k in 0..n {
            let mut p = k;
            for i in (k + 1)..n {
                if m[i][k].abs() > m[p][k].abs() {
                    p = i;
                }
            }
            m.swap(k, p);
            x.swap(k, p);
            for i in (k + 1)..n {
                let f = m[i][k] / m[k][k];
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
                x[i] -= f * x[k];
            }
        }
        for k in (0..n).rev() {
            for j in (k + 1)..n {
                let t = m[k][j] * x[j];
                x[k] -= t;
            }
            x[k] /= m[k][k];
        }
        x
    }

    #[test]
    fn banded_matches_dense() {
        let n = 40;
        let kl = 3;
        let ku = 2;
        let mut bm = BandedMatrix::zeros(n, kl, ku);
        let mut dense = vec![vec![0.0; n]; n];
        // deterministic pseudo-random fill
        let mut state = 0x12345678u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / (u32::MAX as f64) - 0.5
        };
        for i in 0..n {
            for j in 0..n {
                if i + ku >= j && j + kl >= i {
                    let v = next() + if i == j { 4.0 } else { 0.0 };
                    bm.set(i, j, v).unwrap();
                    dense[i][j] = v;
                }
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let xd = dense_solve(&dense, &b);
        let lu = bm.factor().unwrap();
        let mut xb = b.clone();
        lu.solve(&mut xb);
        for i in 0..n {
            assert!((xd[i] - xb[i]).abs() < 1e-10, "mismatch at {i}");
        }
    }

    #[test]
    fn pivoting_handles_small_diagonal() {
        // leading diagonal entry is zero; without pivoting this would fail
        let mut bm = BandedMatrix::zeros(3, 1, 1);
        bm.set(0, 0, 0.0).unwrap();
        bm.set(0, 1, 2.0).unwrap();
        bm.set(1, 0, 1.0).unwrap();
        bm.set(1, 1, 1.0).unwrap();
        bm.set(1, 2, 1.0).unwrap();
        bm.set(2, 1, 3.0).unwrap();
        bm.set(2, 2, 1.0).unwrap();
        let lu = bm.factor().unwrap();
        // A = [[0,2,0],[1,1,1],[0,3,1]], b = A * [1,2,3]
        let mut b = vec![4.0, 6.0, 9.0];
        lu.solve(&mut b);
        assert!((b[0] - 1.0).abs() < 1e-12);
        assert!((b[1] - 2.0).abs() < 1e-12);
        assert!((b[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_band_rejected() {
        let mut bm = BandedMatrix::zeros(10, 1, 1);
        assert!(bm.set(0, 5, 1.0).is_err());
    }
}
