//! Thomas algorithm with a reusable factorization.
//!
//! The implicit diffusion step solves the same tridiagonal system on every
//! `(ν, θ)` row, so the elimination coefficients are computed once per time
//! step and shared read-only across workers.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    lower: Vec<f64>,
    /// Reciprocal of the eliminated diagonal.
    inv_pivot: Vec<f64>,
    /// Eliminated super-diagonal `c'_i`.
    upper: Vec<f64>,
}

impl TridiagonalLu {
    /// Factors the matrix with sub-diagonal `lower[i]` (row `i`, column
    /// `i − 1`; `lower[0]` unused), diagonal `diag` and super-diagonal
    /// `upper[i]` (row `i`, column `i + 1`; last entry unused).
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        if n == 0 || lower.len() != n || upper.len() != n {
            return Err(Error::Numerical(
                "tridiagonal bands must have equal, non-zero length",
            ));
        }
        let mut inv_pivot = Vec::with_capacity(n);
        let mut c = Vec::with_capacity(n);
        let mut prev_c = 0.0;
        for i in 0..n {
            let pivot = diag[i] - if i > 0 { lower[i] * prev_c } else { 0.0 };
            if !pivot.is_finite() || pivot.abs() < f64::MIN_POSITIVE {
                return Err(Error::Numerical("zero pivot in tridiagonal solve"));
            }
            let inv = 1.0 / pivot;
            prev_c = upper[i] * inv;
            inv_pivot.push(inv);
            c.push(prev_c);
        }
        Ok(Self {
            lower: lower.to_vec(),
            inv_pivot,
            upper: c,
        })
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(rhs.len(), n);
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper[i] * rhs[i + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn matvec(lower: &[f64], diag: &[f64], upper: &[f64], x: &[f64]) -> Vec<f64> {
        let n = diag.len();
        (0..n)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    #[test]
    fn solves_diagonally_dominant_system() {
        let n = 40;
        let lower: Vec<f64> = (0..n).map(|i| -0.3 - 0.01 * i as f64).collect();
        let upper: Vec<f64> = (0..n).map(|i| -0.5 + 0.005 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + (i % 3) as f64).collect();
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = matvec(&lower, &diag, &upper, &x);
        TridiagonalLu::new(&lower, &diag, &upper)
            .unwrap()
            .solve_in_place(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let r = TridiagonalLu::new(&[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0]);
        assert!(r.is_err());
        assert!(TridiagonalLu::new(&[], &[], &[]).is_err());
    }

    #[test]
    fn single_unknown() {
        let lu = TridiagonalLu::new(&[0.0], &[4.0], &[0.0]).unwrap();
        let mut b = vec![2.0];
        lu.solve_in_place(&mut b);
        assert_eq!(b[0], 0.5);
    }
}
