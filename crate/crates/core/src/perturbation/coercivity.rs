//! Numerical estimate of the coercivity constant `λ₀` in
//! `⟨−L₀f, f⟩ ≥ (λ₀/m) ‖(I − P₀) f‖²_μ`.
//!
//! `L₀` acts on each frequency slice separately and annihilates `√M_k` on
//! every slice, so the quotient is minimized slice by slice over the
//! complement of `√M_k`. With a single frequency node this complement is
//! exactly the range of `I − P₀`. On each slice the minimum is the smallest
//! eigenvalue of the generalized symmetric problem `A x = λ B x`, where
//! `A = −m L₀` and `B` is the Gram matrix of the μ-norm.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::norms::weighted_mu_norm_sq;
use super::operators::l0_stencil;
use super::suite::random_field;
use crate::error::{Error, Result};
use crate::model::MaxwellianCache;

#[derive(Debug, Clone, PartialEq)]
pub struct CoercivityEstimate {
    /// Minimum of the Rayleigh quotient over all admissible discrete fields.
    pub lambda0: f64,
    /// Smallest quotient among the sampled random fields and low modes;
    /// never below `lambda0`.
    pub sampled_min: f64,
    /// Quotient at `f = χ₁`, equal to `1/‖χ₁‖²_μ` for the exact operator.
    pub chi1_quotient: f64,
    pub trials: usize,
}

/// Dense `−m L₀` on one slice (same stencil as [`super::apply_l0`]).
fn l0_matrix(cache: &MaxwellianCache, k: usize) -> DMatrix<f64> {
    let m = cache.params().m;
    let n = cache.n_omega();
    let (diag, off) = l0_stencil(cache);
    let mut mat = DMatrix::zeros(n, n);
    for j in 0..n {
        mat[(j, j)] = -m * diag[k * n + j];
        if j + 1 < n {
            mat[(j, j + 1)] = -m * off;
            mat[(j + 1, j)] = -m * off;
        }
    }
    mat
}

/// Gram matrix of `Σ α v² + β (D v)²` with the derivative of
/// [`super::d_omega`].
fn mu_gram(cache: &MaxwellianCache, k: usize) -> DMatrix<f64> {
    let n = cache.n_omega();
    let h = cache.d_omega();
    let mut d = DMatrix::zeros(n, n);
    let mut unit = alloc::vec![0.0; n];
    let mut col = alloc::vec![0.0; n];
    for j in 0..n {
        unit[j] = 1.0;
        super::norms::d_omega(&unit, h, &mut col);
        d.set_column(j, &DVector::from_column_slice(&col));
        unit[j] = 0.0;
    }
    let alpha = DVector::from_column_slice(&cache.alpha()[k * n..(k + 1) * n]);
    let mut gram = d.transpose() * &d * cache.beta();
    for j in 0..n {
        gram[(j, j)] += alpha[j];
    }
    gram
}

/// Orthonormal basis (as columns) of the complement of `q` via a
/// Householder reflection.
fn complement_basis(q: &[f64]) -> DMatrix<f64> {
    let n = q.len();
    let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (p, _) =
        q.iter().enumerate().fold(
            (0, 0.0),
            |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) },
        );
    let mut v = DVector::from_iterator(n, q.iter().map(|x| x / norm));
    v[p] += v[p].signum();
    let vv = v.dot(&v);
    let h = DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / vv);
    let cols: Vec<_> = (0..n)
        .filter(|&j| j != p)
        .map(|j| h.column(j).into_owned())
        .collect();
    DMatrix::from_columns(&cols)
}

fn slice_minimum(cache: &MaxwellianCache, k: usize) -> Result<f64> {
    let n = cache.n_omega();
    let q = complement_basis(&cache.sqrt_maxwellian()[k * n..(k + 1) * n]);
    let a = q.transpose() * l0_matrix(cache, k) * &q;
    let b = q.transpose() * mu_gram(cache, k) * &q;
    let chol = b.cholesky().ok_or(Error::Numerical(
        "mu-norm Gram matrix is not positive definite",
    ))?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or(Error::Numerical("singular Cholesky factor"))?;
    let c = &l_inv * a * l_inv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    Ok(eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min))
}

/// Quotient `m ⟨−L₀h, h⟩ / ‖(I − P₀^k) h‖²_μ` for a function on one
/// `(ν, ω)` plane, with the projection taken slice by slice.
fn plane_quotient(cache: &MaxwellianCache, plane: &[f64]) -> f64 {
    let n = cache.n_omega();
    let sqrt_m = cache.sqrt_maxwellian();
    let mut projected = plane.to_vec();
    for k in 0..cache.n_nu() {
        let s = &sqrt_m[k * n..(k + 1) * n];
        let c = s
            .iter()
            .zip(&plane[k * n..(k + 1) * n])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / s.iter().map(|a| a * a).sum::<f64>();
        for j in 0..n {
            projected[k * n + j] -= c * s[j];
        }
    }
    let mut num = 0.0;
    for k in 0..cache.n_nu() {
        let a = l0_matrix(cache, k);
        let x = DVector::from_column_slice(&projected[k * n..(k + 1) * n]);
        num += x.dot(&(&a * &x));
    }
    num * cache.d_omega() / weighted_mu_norm_sq(&projected, cache)
}

/// Estimates `λ₀` and cross-checks it with `trials` random fields and the
/// first Hermite-type modes.
pub fn coercivity_rayleigh(
    cache: &MaxwellianCache,
    trials: usize,
    seed: u64,
) -> Result<CoercivityEstimate> {
    if trials < 10 {
        return Err(Error::InsufficientData {
            needed: 10,
            got: trials,
        });
    }
    let mut lambda0 = f64::INFINITY;
    for k in 0..cache.n_nu() {
        lambda0 = lambda0.min(slice_minimum(cache, k)?);
    }
    if !(lambda0 > 0.0) {
        return Err(Error::DiscretizationFailure { quotient: lambda0 });
    }

    let p = cache.params();
    let scale = (p.m / p.sigma).sqrt();
    let n = cache.n_omega();
    // θ-independent single-slice grid on the same ω window, for drawing fields
    let grid = crate::grid::PhaseSpaceGrid::with_half_width(
        8,
        n,
        0.5 * n as f64 * cache.d_omega(),
        &crate::model::FrequencyDistribution::dirac(0.0)?,
    )?;
    let chi1_quotient = plane_quotient(cache, cache.chi1());
    let mut sampled_min = chi1_quotient;
    let mut check = |q: f64| -> Result<()> {
        if !(q > 0.0) {
            return Err(Error::DiscretizationFailure { quotient: q });
        }
        sampled_min = sampled_min.min(q);
        Ok(())
    };
    check(chi1_quotient)?;
    // ω̃^d √M for d = 2, 3, 4
    for d in 2..=4 {
        let plane: Vec<f64> = cache
            .sqrt_maxwellian()
            .iter()
            .zip(cache.relative_omega())
            .map(|(s, r)| s * (r * scale).powi(d))
            .collect();
        check(plane_quotient(cache, &plane))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        // one independent draw per frequency slice
        let plane: Vec<f64> = (0..cache.n_nu())
            .flat_map(|_| random_field(&grid, cache, &mut rng).row(0, 0).to_vec())
            .collect();
        check(plane_quotient(cache, &plane))?;
    }
    Ok(CoercivityEstimate {
        lambda0,
        sampled_min,
        chi1_quotient,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::super::testutil::setup;
    use super::*;

    #[test]
    fn chi1_quotient_matches_its_mu_norm() {
        let (_, cache) = setup(1.0, 1.0, 8, 256);
        let est = coercivity_rayleigh(&cache, 10, 1).unwrap();
        let fine = coercivity_rayleigh(&setup(1.0, 1.0, 8, 512).1, 10, 1).unwrap();
        let (e1, e2) = (
            est.chi1_quotient - 4.0 / 19.0,
            fine.chi1_quotient - 4.0 / 19.0,
        );
        assert!(e1.abs() < 1e-3 * 4.0 / 19.0, "{}", est.chi1_quotient);
        assert!((e1 / e2 - 4.0).abs() < 0.3, "{}", e1 / e2);
        assert!(est.lambda0 > 0.0);
        assert!(est.lambda0 <= est.sampled_min + 1e-12);
    }

    #[test]
    fn estimate_is_grid_and_parameter_stable() {
        let base = coercivity_rayleigh(&setup(1.0, 1.0, 8, 128).1, 10, 1)
            .unwrap()
            .lambda0;
        let fine = coercivity_rayleigh(&setup(1.0, 1.0, 8, 256).1, 10, 1)
            .unwrap()
            .lambda0;
        assert!((base / fine - 1.0).abs() < 0.05);
        let other = coercivity_rayleigh(&setup(0.5, 2.0, 8, 128).1, 10, 1)
            .unwrap()
            .lambda0;
        assert!((base / other - 1.0).abs() < 0.05);
    }

    #[test]
    fn too_few_trials() {
        let (_, cache) = setup(1.0, 1.0, 8, 64);
        assert!(matches!(
            coercivity_rayleigh(&cache, 5, 0),
            Err(Error::InsufficientData { .. })
        ));
    }
}
