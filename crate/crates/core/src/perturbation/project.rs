use alloc::vec::Vec;

use super::{check_cache, PerturbationField};
use crate::error::Result;
use crate::model::MaxwellianCache;
use crate::parallel;

/// `f₀(θ) = ⟨χ₀, f⟩`, `f₁(θ) = ⟨χ₁, f⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroCoefficients {
    pub f0: Vec<f64>,
    pub f1: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub coefficients: MacroCoefficients,
    /// `P f = f₀ χ₀ + f₁ χ₁`.
    pub macro_part: PerturbationField,
    /// `(I − P) f`.
    pub micro_part: PerturbationField,
}

/// `⟨w, f⟩(θ_i)` for a plane function `w`, one value per θ cell.
pub(crate) fn plane_coefficients(f: &PerturbationField, w: &[f64], d_omega: f64) -> Vec<f64> {
    let grid = f.grid();
    let n = grid.n_omega();
    parallel::map_collect(grid.n_theta(), |i| {
        (0..grid.n_nu())
            .map(|k| {
                f.row(k, i)
                    .iter()
                    .zip(&w[k * n..(k + 1) * n])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .sum::<f64>()
            * d_omega
    })
}

/// `Σ_i c_i(θ) w_i(ν, ω)` on the full grid.
pub(crate) fn combine(f: &PerturbationField, terms: &[(&[f64], &[f64])]) -> PerturbationField {
    let grid = f.grid();
    let n = grid.n_omega();
    let mut values = alloc::vec![0.0; grid.len()];
    parallel::for_each_row(&mut values, n, |row, out| {
        let (k, i) = grid.row_coords(row);
        for (coef, plane) in terms {
            let c = coef[i];
            for (o, w) in out.iter_mut().zip(&plane[k * n..(k + 1) * n]) {
                *o += c * w;
            }
        }
    });
    PerturbationField {
        grid: grid.clone(),
        values,
    }
}

pub fn project(f: &PerturbationField, cache: &MaxwellianCache) -> Result<Projection> {
    check_cache(f.grid(), cache)?;
    let dw = cache.d_omega();
    let f0 = plane_coefficients(f, cache.chi0(), dw);
    let f1 = plane_coefficients(f, cache.chi1(), dw);
    let macro_part = combine(f, &[(&f0, cache.chi0()), (&f1, cache.chi1())]);
    let micro_part = f.add_scaled(-1.0, &macro_part);
    Ok(Projection {
        coefficients: MacroCoefficients { f0, f1 },
        macro_part,
        micro_part,
    })
}

#[cfg(test)]
mod tests {
    use super::super::testutil::setup;
    use super::super::{l2_norm, random_field};
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chi1_is_a_basis_member() {
        let (grid, cache) = setup(1.0, 1.0, 8, 256);
        let f = PerturbationField::separable(&grid, cache.chi1(), |_| 1.0);
        let p = project(&f, &cache).unwrap();
        for i in 0..grid.n_theta() {
            assert!((p.coefficients.f1[i] - 1.0).abs() < 1e-12);
            assert!(p.coefficients.f0[i].abs() < 1e-14);
        }
        assert!(l2_norm(&p.micro_part) < 1e-12);
    }

    #[test]
    fn idempotence_and_orthogonality() {
        let (grid, cache) = setup(2.0, 1.0, 16, 128);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let f = random_field(&grid, &cache, &mut rng);
            let p = project(&f, &cache).unwrap();
            let pp = project(&p.macro_part, &cache).unwrap();
            assert!(l2_norm(&pp.macro_part.add_scaled(-1.0, &p.macro_part)) < 1e-12 * l2_norm(&f));
            let q = project(&p.micro_part, &cache).unwrap();
            for i in 0..grid.n_theta() {
                assert!(q.coefficients.f0[i].abs() < 1e-12);
                assert!(q.coefficients.f1[i].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn f0_matches_direct_quadrature() {
        // f = √M (ω−ν)²: ⟨χ₀, f⟩ = √(2π) ∫ (ω−ν)² M dω = √(2π) σ/(2π m)
        let (grid, cache) = setup(1.0, 3.0, 8, 256);
        let plane: Vec<f64> = cache
            .sqrt_maxwellian()
            .iter()
            .zip(cache.relative_omega())
            .map(|(s, d)| s * d * d)
            .collect();
        let f = PerturbationField::separable(&grid, &plane, |_| 1.0);
        let p = project(&f, &cache).unwrap();
        let direct: f64 = (0..grid.n_omega())
            .map(|j| {
                let d = grid.relative_omega(j);
                let m = crate::model::maxwellian_profile(cache.params(), d, 0.0);
                (core::f64::consts::TAU).sqrt() * d * d * m * grid.d_omega()
            })
            .sum();
        let analytic = (core::f64::consts::TAU).sqrt() * 3.0 / core::f64::consts::TAU;
        assert!((p.coefficients.f0[0] - direct).abs() < 1e-13);
        assert!((direct - analytic).abs() < 1e-10);
    }
}
