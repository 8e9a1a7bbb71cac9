//! Small-scale numerical kernel: complex dense linear algebra up to 6x6,
//! banded real linear algebra for collocation systems, polynomial roots,
//! adaptive explicit ODE integration over complex states, and the second
//! exterior power lift.

pub mod banded;
pub mod eig;
pub mod ivp;
pub mod linsolve;
pub mod poly;
pub mod wedge;

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

pub const MAX_DIM: usize = 6;

/// Dense complex matrix with fixed 6x6 capacity. All model-side matrices are
/// at most 6x6, so a stack-allocated backing array avoids heap churn inside
/// ODE right-hand sides.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    a: [[C64; MAX_DIM]; MAX_DIM],
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows <= MAX_DIM && cols <= MAX_DIM, "matrix capacity is 6x6");
        CMat {
            rows,
            cols,
            a: [[C64::new(0.0, 0.0); MAX_DIM]; MAX_DIM],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m.a[i][i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let nr = rows.len();
        let nc = rows[0].len();
        let mut m = CMat::zeros(nr, nc);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), nc, "ragged rows");
            for (j, v) in r.iter().enumerate() {
                m.a[i][j] = *v;
            }
        }
        m
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let nr = rows.len();
        let nc = rows[0].len();
        let mut m = CMat::zeros(nr, nc);
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                m.a[i][j] = C64::new(*v, 0.0);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.a[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.a[i][j] = v;
    }

    #[inline]
    pub fn add_assign_at(&mut self, i: usize, j: usize, v: C64) {
        self.a[i][j] += v;
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> CMat {
        let mut t = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.a[j][i] = self.a[i][j];
            }
        }
        t
    }

    pub fn conj_transpose(&self) -> CMat {
        let mut t = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.a[j][i] = self.a[i][j].conj();
            }
        }
        t
    }

    pub fn matvec(&self, x: &[C64], out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for i in 0..self.rows {
            let mut s = C64::new(0.0, 0.0);
            for j in 0..self.cols {
                s += self.a[i][j] * x[j];
            }
            out[i] = s;
        }
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows);
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let v = self.a[i][k];
                if v == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out.a[i][j] += v * other.a[k][j];
                }
            }
        }
        out
    }

    /// Subtract z from the diagonal in place.
    pub fn shift_diag(&mut self, z: C64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self.a[i][i] -= z;
        }
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self.a[i][j]).collect()
    }

    pub fn row(&self, i: usize) -> Vec<C64> {
        (0..self.cols).map(|j| self.a[i][j]).collect()
    }

    /// max-abs entry, used for scale-relative tolerances
    pub fn norm_max(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                m = m.max(self.a[i][j].norm());
            }
        }
        m
    }

    pub fn all_finite(&self) -> bool {
        for i in 0..self.rows {
            for j in 0..self.cols {
                if !self.a[i][j].re.is_finite() || !self.a[i][j].im.is_finite() {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("numerics/{op}: invalid input: {msg}")]
    InvalidInput { op: &'static str, msg: String },
    #[error("numerics/{op}: singular system (pivot {pivot:.3e} at index {index})")]
    Singular {
        op: &'static str,
        pivot: f64,
        index: usize,
    },
    #[error("numerics/eig: QR iteration failed to converge within {0} sweeps")]
    EigNoConvergence(usize),
    #[error("numerics/integrate_ivp: step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("numerics/integrate_ivp: non-finite state at t = {t:.6e}")]
    NonFiniteState { t: f64 },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_identity() {
        let mut m = CMat::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                m.set(i, j, C64::new((i * 3 + j) as f64, 1.0));
            }
        }
        let id = CMat::identity(3);
        assert_eq!(m.matmul(&id), m);
        assert_eq!(id.matmul(&m), m);
    }

    #[test]
    fn conj_transpose_involution() {
        let m = CMat::from_rows(&[
            &[C64::new(1.0, 2.0), C64::new(0.0, -1.0)],
            &[C64::new(3.0, 0.0), C64::new(-2.0, 5.0)],
        ]);
        assert_eq!(m.conj_transpose().conj_transpose(), m);
    }
}
