use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::{check_cache, PerturbationField};
use crate::error::{Error, Result};
use crate::model::MaxwellianCache;
use crate::parallel;

/// Sixth-order central first-derivative weights for offsets 1, 2, 3.
const D1: [f64; 3] = [45.0 / 60.0, -9.0 / 60.0, 1.0 / 60.0];

/// First derivative of one ω-row with the sixth-order central stencil.
/// Values outside the window are taken as zero, which matches the decay of
/// perturbations at `±W`.
pub fn d_omega(row: &[f64], h: f64, out: &mut [f64]) {
    let n = row.len() as isize;
    let at = |j: isize| {
        if (0..n).contains(&j) {
            row[j as usize]
        } else {
            0.0
        }
    };
    for j in 0..n {
        let mut acc = 0.0;
        for (o, w) in D1.iter().enumerate() {
            let o = o as isize + 1;
            acc += w * (at(j + o) - at(j - o));
        }
        out[j as usize] = acc / h;
    }
}

/// Derivative along θ (periodic) of every column of one frequency slice.
fn d_theta_slice(slice: &[f64], n_theta: usize, n_omega: usize, h: f64) -> Vec<f64> {
    let mut out = vec![0.0; slice.len()];
    for i in 0..n_theta {
        for (o, w) in D1.iter().enumerate() {
            let o = o + 1;
            let ip = (i + o) % n_theta;
            let im = (i + n_theta - o % n_theta) % n_theta;
            for j in 0..n_omega {
                out[i * n_omega + j] += w * (slice[ip * n_omega + j] - slice[im * n_omega + j]) / h;
            }
        }
    }
    out
}

fn d_omega_field(values: &[f64], n_omega: usize, h: f64) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    parallel::for_each_row(&mut out, n_omega, |row, o| {
        d_omega(&values[row * n_omega..(row + 1) * n_omega], h, o)
    });
    out
}

fn d_theta_field(values: &[f64], n_nu: usize, n_theta: usize, n_omega: usize, h: f64) -> Vec<f64> {
    let len = n_theta * n_omega;
    (0..n_nu)
        .flat_map(|k| d_theta_slice(&values[k * len..(k + 1) * len], n_theta, n_omega, h))
        .collect()
}

fn sum_sq(values: &[f64], n_omega: usize) -> f64 {
    parallel::row_sum(values.len() / n_omega, |row| {
        values[row * n_omega..(row + 1) * n_omega]
            .iter()
            .map(|v| v * v)
            .sum()
    })
}

/// `Σ f g dθ dω` over the whole grid.
pub fn l2_inner(f: &PerturbationField, g: &PerturbationField) -> f64 {
    let n = f.grid().n_omega();
    let (a, b) = (f.values(), g.values());
    parallel::row_sum(a.len() / n, |row| {
        a[row * n..(row + 1) * n]
            .iter()
            .zip(&b[row * n..(row + 1) * n])
            .map(|(x, y)| x * y)
            .sum()
    }) * f.grid().cell_volume()
}

pub fn l2_norm(f: &PerturbationField) -> f64 {
    (sum_sq(f.values(), f.grid().n_omega()) * f.grid().cell_volume()).sqrt()
}

/// `‖h‖²_μ = ∫ α h² + β (∂ω h)² dω dν` for a function on one `(ν, ω)` plane.
pub fn weighted_mu_norm_sq(plane: &[f64], cache: &MaxwellianCache) -> f64 {
    let n = cache.n_omega();
    let h = cache.d_omega();
    let mut deriv = vec![0.0; n];
    let mut total = 0.0;
    for k in 0..cache.n_nu() {
        let row = &plane[k * n..(k + 1) * n];
        let alpha = &cache.alpha()[k * n..(k + 1) * n];
        d_omega(row, h, &mut deriv);
        total += row
            .iter()
            .zip(alpha)
            .zip(&deriv)
            .map(|((v, a), d)| a * v * v + cache.beta() * d * d)
            .sum::<f64>();
    }
    total * h
}

/// `∫ ‖f(θ)‖²_μ dθ` over the whole grid.
pub fn field_mu_norm_sq(f: &PerturbationField, cache: &MaxwellianCache) -> Result<f64> {
    let grid = f.grid();
    check_cache(grid, cache)?;
    let n = grid.n_omega();
    let h = grid.d_omega();
    let beta = cache.beta();
    let total = parallel::row_sum(grid.n_rows(), |row| {
        let (k, _) = grid.row_coords(row);
        let r = &f.values()[row * n..(row + 1) * n];
        let alpha = &cache.alpha()[k * n..(k + 1) * n];
        let mut deriv = vec![0.0; n];
        d_omega(r, h, &mut deriv);
        r.iter()
            .zip(alpha)
            .zip(&deriv)
            .map(|((v, a), d)| a * v * v + beta * d * d)
            .sum()
    });
    Ok(total * grid.cell_volume())
}

/// `‖f‖_{H^s} = (Σ_{a+b ≤ s} ‖∂θ^a ∂ω^b f‖²)^{1/2}` for `s ≤ 2`, with
/// sixth-order central differences.
pub fn hs_norm(f: &PerturbationField, s: u32) -> Result<f64> {
    if s > 2 {
        return Err(Error::InvalidParameter {
            name: "s",
            value: f64::from(s),
            reason: "Sobolev norms are provided for s <= 2",
        });
    }
    let grid = f.grid();
    let (n_nu, n_theta, n_omega) = (grid.n_nu(), grid.n_theta(), grid.n_omega());
    let (ht, hw) = (grid.d_theta(), grid.d_omega());
    let v = f.values();
    let mut total = sum_sq(v, n_omega);
    if s >= 1 {
        let ft = d_theta_field(v, n_nu, n_theta, n_omega, ht);
        let fw = d_omega_field(v, n_omega, hw);
        total += sum_sq(&ft, n_omega) + sum_sq(&fw, n_omega);
        if s == 2 {
            let ftt = d_theta_field(&ft, n_nu, n_theta, n_omega, ht);
            let ftw = d_omega_field(&ft, n_omega, hw);
            let fww = d_omega_field(&fw, n_omega, hw);
            total += sum_sq(&ftt, n_omega) + sum_sq(&ftw, n_omega) + sum_sq(&fww, n_omega);
        }
    }
    Ok((total * grid.cell_volume()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::super::testutil::setup;
    use super::*;
    use core::f64::consts::TAU;

    #[test]
    fn chi0_mu_norm_is_nine_quarters() {
        for (m, sigma) in [(1.0, 1.0), (0.5, 2.0), (4.0, 0.5)] {
            let (_, cache) = setup(m, sigma, 8, 256);
            let v = weighted_mu_norm_sq(cache.chi0(), &cache);
            assert!((v - 2.25).abs() < 1e-6, "{m} {sigma}: {v}");
            let v1 = weighted_mu_norm_sq(cache.chi1(), &cache);
            assert!((v1 - 4.75).abs() < 1e-6, "{v1}");
        }
    }

    #[test]
    fn zero_and_l2_consistency() {
        let (grid, cache) = setup(1.0, 1.0, 16, 64);
        let z = PerturbationField::zeros(&grid);
        assert_eq!(field_mu_norm_sq(&z, &cache).unwrap(), 0.0);
        assert_eq!(hs_norm(&z, 2).unwrap(), 0.0);
        let f = PerturbationField::separable(&grid, cache.chi1(), |t| 1.0 + t.sin());
        assert!((hs_norm(&f, 0).unwrap() - l2_norm(&f)).abs() < 1e-14);
        assert!(hs_norm(&f, 3).is_err());
    }

    #[test]
    fn derivative_norms_of_a_separable_field() {
        // f = χ₀ cos θ: ‖f‖² = π, ‖∂θ f‖² = π, ‖∂ω f‖² = π (m/σ)/4
        let (grid, cache) = setup(1.0, 1.0, 64, 256);
        let f = PerturbationField::separable(&grid, cache.chi0(), |t| t.cos());
        let h1 = hs_norm(&f, 1).unwrap();
        let expected = (TAU / 2.0 * (2.0 + 0.25)).sqrt();
        assert!((h1 - expected).abs() < 1e-6, "{h1} {expected}");
    }
}
