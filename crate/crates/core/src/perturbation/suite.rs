use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::project::{combine, plane_coefficients};
use super::{apply_l0, apply_l1, l2_inner, l2_norm, project, PerturbationField};
use crate::error::Result;
use crate::grid::PhaseSpaceGrid;
use crate::model::MaxwellianCache;

/// Random test field: a sum of two products of a θ trigonometric polynomial
/// (modes 0..=4) and, per frequency slice, a polynomial of degree ≤ 4 in
/// `ω̃ = (ω−ν)√(m/σ)` times `exp(−ω̃²/4)`. Coefficients are uniform in
/// `[−1, 1]`.
pub fn random_field<R: Rng>(
    grid: &PhaseSpaceGrid,
    cache: &MaxwellianCache,
    rng: &mut R,
) -> PerturbationField {
    let p = cache.params();
    let scale = (p.m / p.sigma).sqrt();
    let n = grid.n_omega();
    let mut total = PerturbationField::zeros(grid);
    for _ in 0..2 {
        let a: [f64; 5] = core::array::from_fn(|_| rng.random_range(-1.0..=1.0));
        let b: [f64; 5] = core::array::from_fn(|_| rng.random_range(-1.0..=1.0));
        let theta: Vec<f64> = (0..grid.n_theta())
            .map(|i| {
                let t = grid.theta(i);
                (0..5)
                    .map(|m| a[m] * (m as f64 * t).cos() + b[m] * (m as f64 * t).sin())
                    .sum()
            })
            .collect();
        let mut plane = Vec::with_capacity(grid.n_nu() * n);
        for _ in 0..grid.n_nu() {
            let c: [f64; 5] = core::array::from_fn(|_| rng.random_range(-1.0..=1.0));
            for j in 0..n {
                let w = grid.relative_omega(j) * scale;
                let poly = c.iter().rev().fold(0.0, |acc, ci| acc * w + ci);
                plane.push(poly * (-0.25 * w * w).exp());
            }
        }
        let part = combine(&total, &[(&theta, &plane)]);
        total = total.add_scaled(1.0, &part);
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub trials: usize,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Largest relative defect of each operator identity over `trials` random
/// fields (plus the basis functions themselves). Every defect is
/// normalized by `‖f‖` (or `‖f‖‖g‖` for bilinear checks).
pub fn operator_identity_suite(
    grid: &PhaseSpaceGrid,
    cache: &MaxwellianCache,
    trials: usize,
    seed: u64,
) -> Result<IdentityReport> {
    let m = cache.params().m;
    let dw = cache.d_omega();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fields: Vec<PerturbationField> = (0..trials)
        .map(|_| random_field(grid, cache, &mut rng))
        .collect();
    let chi0 = PerturbationField::separable(grid, cache.chi0(), |_| 1.0);
    let chi1 = PerturbationField::separable(grid, cache.chi1(), |_| 1.0);

    let mut worst = [0.0_f64; 11];
    let eig0 = l2_norm(&apply_l0(&chi0, cache)?) / l2_norm(&chi0);
    let eig1 = l2_norm(&apply_l0(&chi1, cache)?.add_scaled(1.0 / m, &chi1)) / l2_norm(&chi1);
    fields.push(chi0);
    fields.push(chi1);

    let l0: Vec<PerturbationField> = fields
        .iter()
        .map(|f| apply_l0(f, cache))
        .collect::<Result<_>>()?;
    for (idx, f) in fields.iter().enumerate() {
        let nf = l2_norm(f);
        let g = &fields[(idx + 1) % fields.len()];
        let adj = (l2_inner(&l0[idx], g) - l2_inner(f, &l0[(idx + 1) % fields.len()])).abs()
            / (nf * l2_norm(g));
        let dissipation = -l2_inner(&l0[idx], f) / (nf * nf);

        let pr = project(f, cache)?;
        let pp = project(&pr.macro_part, cache)?;
        let idem = l2_norm(&pp.macro_part.add_scaled(-1.0, &pr.macro_part)) / nf;

        let p1f = combine(f, &[(&pr.coefficients.f1, cache.chi1())]);
        let p0p1 = plane_coefficients(&p1f, cache.chi0(), dw)
            .iter()
            .fold(0.0_f64, |a, v| a.max(v.abs()))
            / nf;
        let micro = &pr.micro_part;
        let orth = plane_coefficients(micro, cache.chi0(), dw)
            .iter()
            .chain(&plane_coefficients(micro, cache.chi1(), dw))
            .fold(0.0_f64, |a, v| a.max(v.abs()))
            / nf;

        let l1 = apply_l1(f, cache)?;
        let range = l2_norm(&project(&l1, cache)?.micro_part) / nf;

        let l0pf = apply_l0(&pr.macro_part, cache)?;
        let pl0 = project(&l0[idx], cache)?;
        let commute = l2_norm(&l0pf.add_scaled(-1.0, &pl0.macro_part)) / nf;
        let f1chi1 = combine(f, &[(&pr.coefficients.f1, cache.chi1())]);
        let eigen = l2_norm(&l0pf.add_scaled(1.0 / m, &f1chi1)) / nf;
        let p0l0 = l2_norm(&combine(f, &[(&pl0.coefficients.f0, cache.chi0())])) / nf;

        let row = [
            adj,
            -dissipation,
            idem,
            p0p1,
            orth,
            range,
            commute,
            eigen,
            p0l0,
            0.0,
            0.0,
        ];
        for (w, v) in worst.iter_mut().zip(row) {
            *w = w.max(v);
        }
    }
    worst[9] = eig0;
    worst[10] = eig1;

    let tolerances: [(&str, f64); 11] = [
        ("self_adjointness", 1e-10),
        // √M is a kernel of L₀ only up to O(dω²), so −L₀ may dip slightly
        // below zero along it
        ("dissipativity", 1e-3),
        ("projection_idempotence", 1e-12),
        ("p0_p1_orthogonality", 1e-12),
        ("micro_orthogonality", 1e-12),
        ("l1_range_in_chi1", 1e-8),
        ("l0_p_commutation", 1e-3),
        ("l0_pf_eigenrelation", 1e-3),
        ("p0_l0_vanishes", 1e-3),
        ("l0_chi0_vanishes", 1e-3),
        ("l0_chi1_eigenrelation", 1e-3),
    ];
    let checks = tolerances
        .iter()
        .zip(worst)
        .map(|(&(name, tolerance), measured)| IdentityCheck {
            name,
            // dissipativity reports the most negative ⟨−L₀f, f⟩/‖f‖², clamped at 0
            measured: if name == "dissipativity" {
                measured.max(0.0)
            } else {
                measured
            },
            tolerance,
            pass: measured <= tolerance,
        })
        .collect();
    Ok(IdentityReport { trials, checks })
}

#[cfg(test)]
mod tests {
    use super::super::testutil::setup;
    use super::*;

    #[test]
    fn suite_passes_on_a_moderate_grid() {
        let (grid, cache) = setup(1.0, 1.0, 16, 256);
        let report = operator_identity_suite(&grid, &cache, 6, 7).unwrap();
        for c in &report.checks {
            assert!(c.pass, "{c:?}");
        }
        let again = operator_identity_suite(&grid, &cache, 6, 7).unwrap();
        assert_eq!(report, again);
    }
}
