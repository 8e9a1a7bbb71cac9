//! Complex polynomials up to degree 6: evaluation, derivative, companion
//! matrix, and root finding via QR on the companion matrix (already upper
//! Hessenberg) with one Newton polish per root.

use super::eig::eigenvalues;
use super::{C64, CMat, NumericsError};

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    /// Coefficients in ascending degree order.
    coeffs: Vec<C64>,
}

impl Polynomial {
    /// Build from ascending-degree coefficients, trimming trailing zeros.
    pub fn new(coeffs: Vec<C64>) -> Self {
        let mut c = coeffs;
        while c.len() > 1 && c.last().map(|z| z.norm()) == Some(0.0) {
            c.pop();
        }
        Polynomial { coeffs: c }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Polynomial::new(coeffs.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|z| z.norm() == 0.0)
    }

    pub fn eval(&self, x: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::new(vec![C64::new(0.0, 0.0)]);
        }
        let d: Vec<C64> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * (k as f64))
            .collect();
        Polynomial::new(d)
    }

    /// Monic companion matrix (upper Hessenberg: subdiagonal ones, negated
    /// scaled coefficients in the last column).
    pub fn companion(&self) -> Result<CMat, NumericsError> {
        let n = self.degree();
        if n == 0 || self.is_zero() {
            return Err(NumericsError::InvalidInput {
                op: "poly_roots",
                msg: "degenerate polynomial".to_string(),
            });
        }
        let lead = self.coeffs[n];
        let mut m = CMat::zeros(n, n);
        for i in 1..n {
            m.set(i, i - 1, C64::new(1.0, 0.0));
        }
        for i in 0..n {
            m.set(i, n - 1, -self.coeffs[i] / lead);
        }
        Ok(m)
    }

    /// All `degree` roots (with multiplicity), sorted by ascending real part.
    pub fn roots(&self) -> Result<Vec<C64>, NumericsError> {
        let n = self.degree();
        if n == 0 || self.is_zero() {
            return Err(NumericsError::InvalidInput {
                op: "poly_roots",
                msg: "degenerate polynomial".to_string(),
            });
        }
        if n == 1 {
            return Ok(vec![-self.coeffs[0] / self.coeffs[1]]);
        }
        let comp = self.companion()?;
        let mut roots = eigenvalues(&comp)?;
        let dp = self.derivative();
        for r in roots.iter_mut() {
            // one Newton step; skip if the derivative is tiny (multiple root)
            let d = dp.eval(*r);
            let p = self.eval(*r);
            if d.norm() > 1e-12 * self.coeff_scale() {
                let step = p / d;
                if step.norm() < 1.0 + r.norm() {
                    *r -= step;
                }
            }
        }
        roots.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap()
                .then(a.im.partial_cmp(&b.im).unwrap())
        });
        Ok(roots)
    }

    fn coeff_scale(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max)
            .max(1.0)
    }
}

/// Roots of a polynomial given by ascending-degree coefficients.
pub fn poly_roots(p: &Polynomial) -> Result<Vec<C64>, NumericsError> {
    p.roots()
}
