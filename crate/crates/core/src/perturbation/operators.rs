use alloc::vec;
use alloc::vec::Vec;

use super::norms::d_omega;
use super::{check_cache, PerturbationField};
use crate::error::Result;
use crate::kinetic::coupling_from_values;
use crate::model::MaxwellianCache;
use crate::parallel;

/// `L₀ h = (σ/m²) ∂²ω h + (1/2m)(1 − (m/2σ)(ω−ν)²) h`.
///
/// The second derivative uses the three-point stencil with mirrored ghost
/// cells at `±W`, so the discrete operator is a symmetric matrix on each row.
pub fn apply_l0(f: &PerturbationField, cache: &MaxwellianCache) -> Result<PerturbationField> {
    let grid = f.grid();
    check_cache(grid, cache)?;
    let n = grid.n_omega();
    let mut out = vec![0.0; grid.len()];
    let stencil = l0_stencil(cache);
    parallel::for_each_row(&mut out, n, |row, o| {
        let (k, _) = grid.row_coords(row);
        let u = &f.values()[row * n..(row + 1) * n];
        let (diag, off) = (&stencil.0[k * n..(k + 1) * n], stencil.1);
        for j in 0..n {
            let mut v = diag[j] * u[j];
            if j > 0 {
                v += off * u[j - 1];
            }
            if j + 1 < n {
                v += off * u[j + 1];
            }
            o[j] = v;
        }
    });
    PerturbationField::new(grid.clone(), out)
}

/// Diagonal (per plane point) and the common off-diagonal of the `L₀` matrix.
pub(crate) fn l0_stencil(cache: &MaxwellianCache) -> (Vec<f64>, f64) {
    let p = cache.params();
    let n = cache.n_omega();
    let c = p.diffusion() / (cache.d_omega() * cache.d_omega());
    let (half_inv_m, a) = (0.5 / p.m, p.m / (2.0 * p.sigma));
    let diag = cache
        .relative_omega()
        .iter()
        .enumerate()
        .map(|(q, r)| {
            let j = q % n;
            let neighbours = usize::from(j > 0) + usize::from(j + 1 < n);
            half_inv_m * (1.0 - a * r * r) - c * neighbours as f64
        })
        .collect();
    (diag, c)
}

/// `S[√M f](θ_i)`, the coupling field of the density perturbation.
pub fn coupling_of_perturbation(
    f: &PerturbationField,
    cache: &MaxwellianCache,
) -> Result<Vec<f64>> {
    let grid = f.grid();
    check_cache(grid, cache)?;
    let n = grid.n_omega();
    let n_theta = grid.n_theta();
    let sqrt_m = cache.sqrt_maxwellian();
    let weighted: Vec<f64> = f
        .values()
        .iter()
        .enumerate()
        .map(|(idx, v)| v * sqrt_m[(idx / (n_theta * n)) * n + idx % n])
        .collect();
    Ok(coupling_from_values(grid, &weighted))
}

/// `L₁ f = (κ/σ)(ω−ν)√M S[√M f]`.
pub fn apply_l1(f: &PerturbationField, cache: &MaxwellianCache) -> Result<PerturbationField> {
    let grid = f.grid();
    let s = coupling_of_perturbation(f, cache)?;
    let p = cache.params();
    let c = p.kappa / p.sigma;
    let n = grid.n_omega();
    let (rel, sqrt_m) = (cache.relative_omega(), cache.sqrt_maxwellian());
    let mut out = vec![0.0; grid.len()];
    parallel::for_each_row(&mut out, n, |row, o| {
        let (k, i) = grid.row_coords(row);
        let plane = k * n..(k + 1) * n;
        for ((o, r), w) in o.iter_mut().zip(&rel[plane.clone()]).zip(&sqrt_m[plane]) {
            *o = c * r * w * s[i];
        }
    });
    PerturbationField::new(grid.clone(), out)
}

/// `N(g, f) = (κ/2σ) S[√M g](ω−ν) f − (κ/m) S[√M g] ∂ω f`.
pub fn apply_n(
    g: &PerturbationField,
    f: &PerturbationField,
    cache: &MaxwellianCache,
) -> Result<PerturbationField> {
    let grid = f.grid();
    let s = coupling_of_perturbation(g, cache)?;
    let p = cache.params();
    let (c1, c2) = (p.kappa / (2.0 * p.sigma), p.kappa / p.m);
    let n = grid.n_omega();
    let h = grid.d_omega();
    let rel = cache.relative_omega();
    let mut out = vec![0.0; grid.len()];
    parallel::for_each_row(&mut out, n, |row, o| {
        let (k, i) = grid.row_coords(row);
        let u = &f.values()[row * n..(row + 1) * n];
        d_omega(u, h, o);
        for j in 0..n {
            o[j] = c1 * s[i] * rel[k * n + j] * u[j] - c2 * s[i] * o[j];
        }
    });
    PerturbationField::new(grid.clone(), out)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::setup;
    use super::super::{l2_norm, project, random_field};
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn eigen_defects(n_omega: usize) -> (f64, f64) {
        let (grid, cache) = setup(1.0, 1.0, 8, n_omega);
        let chi0 = PerturbationField::separable(&grid, cache.chi0(), |_| 1.0);
        let chi1 = PerturbationField::separable(&grid, cache.chi1(), |_| 1.0);
        let d0 = l2_norm(&apply_l0(&chi0, &cache).unwrap()) / l2_norm(&chi0);
        let d1 = l2_norm(&apply_l0(&chi1, &cache).unwrap().add_scaled(1.0, &chi1)) / l2_norm(&chi1);
        (d0, d1)
    }

    #[test]
    fn eigenrelations_are_second_order() {
        let (a0, a1) = eigen_defects(256);
        let (b0, b1) = eigen_defects(512);
        assert!(a0 < 1e-3 && a1 < 1e-3, "{a0} {a1}");
        assert!((a0 / b0 - 4.0).abs() < 0.2, "{}", a0 / b0);
        assert!((a1 / b1 - 4.0).abs() < 0.2, "{}", a1 / b1);
    }

    #[test]
    fn kernel_contains_per_slice_maxwellians() {
        let p = crate::model::ModelParams::new(1.0, 0.5, 1.0).unwrap();
        let g = crate::model::FrequencyDistribution::discrete(
            alloc::vec![-1.0, 1.0],
            alloc::vec![0.4, 0.6],
        )
        .unwrap();
        let grid = crate::grid::PhaseSpaceGrid::new(8, 256, &p, &g).unwrap();
        let cache = MaxwellianCache::new(&grid, &p).unwrap();
        let plane: Vec<f64> = cache
            .sqrt_maxwellian()
            .iter()
            .enumerate()
            .map(|(q, s)| if q < 256 { 3.0 * s } else { -s })
            .collect();
        let f = PerturbationField::separable(&grid, &plane, |_| 1.0);
        assert!(l2_norm(&apply_l0(&f, &cache).unwrap()) < 1e-3 * l2_norm(&f));
    }

    #[test]
    fn homogeneous_fields_have_no_coupling_terms() {
        let (grid, cache) = setup(1.0, 2.0, 16, 64);
        let f = PerturbationField::separable(&grid, cache.chi1(), |_| 0.3);
        let tol = 1e-14 * f.max_abs();
        assert!(apply_l1(&f, &cache).unwrap().max_abs() <= tol);
        assert!(apply_n(&f, &f, &cache).unwrap().max_abs() <= tol);
    }

    #[test]
    fn l1_ranges_in_chi1() {
        let (grid, cache) = setup(1.0, 2.0, 16, 128);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let f = random_field(&grid, &cache, &mut rng);
            let l1 = apply_l1(&f, &cache).unwrap();
            let micro = project(&l1, &cache).unwrap().micro_part;
            assert!(l2_norm(&micro) <= 1e-8 * l2_norm(&f));
        }
    }
}
