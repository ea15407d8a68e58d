//! Residual of the macroscopic system satisfied by `f₀ = ⟨χ₀, f⟩` and
//! `f₁ = ⟨χ₁, f⟩`:
//!
//! ```text
//! ∂t f₀ + √(σ/m) ∂θ f₁ + ν̄ ∂θ f₀ + ∂θ⟨ν χ₀, (I−P) f⟩ = 0
//! ∂t f₁ + √(σ/m) ∂θ f₀ + ν̄ ∂θ f₁ + f₁/m − κ S/√(2πmσ) − κ S f₀/√(mσ)
//!       + ∂θ⟨ν χ₁, (I−P) f⟩ + ∂θ⟨(ω−ν) χ₁, (I−P) f⟩ = 0
//! ```
//!
//! where `S = S[√M f]` and `ν̄ = Σ w_k ν_k`. For identical oscillators at
//! `ν = 0` the `ν` terms vanish.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::project::plane_coefficients;
use super::{coupling_of_perturbation, project, PerturbationField};
use crate::error::{Error, Result};
use crate::model::MaxwellianCache;

/// `L∞` residual of each equation over interior snapshots and all θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroResiduals {
    pub f0: f64,
    pub f1: f64,
}

struct Sample {
    f0: Vec<f64>,
    f1: Vec<f64>,
    /// `⟨ν χ₀, (I−P) f⟩`
    micro0: Vec<f64>,
    /// `⟨ω χ₁, (I−P) f⟩ = ⟨(ν + (ω−ν)) χ₁, (I−P) f⟩`
    micro1: Vec<f64>,
    s: Vec<f64>,
}

fn sample(f: &PerturbationField, cache: &MaxwellianCache) -> Result<Sample> {
    let grid = f.grid();
    let pr = project(f, cache)?;
    let n = grid.n_omega();
    let (chi0, chi1, rel) = (cache.chi0(), cache.chi1(), cache.relative_omega());
    let nu_chi0: Vec<f64> = (0..chi0.len())
        .map(|q| grid.nu()[q / n] * chi0[q])
        .collect();
    let omega_chi1: Vec<f64> = (0..chi1.len())
        .map(|q| (grid.nu()[q / n] + rel[q]) * chi1[q])
        .collect();
    let dw = cache.d_omega();
    Ok(Sample {
        micro0: plane_coefficients(&pr.micro_part, &nu_chi0, dw),
        micro1: plane_coefficients(&pr.micro_part, &omega_chi1, dw),
        s: coupling_of_perturbation(f, cache)?,
        f0: pr.coefficients.f0,
        f1: pr.coefficients.f1,
    })
}

/// Evaluates both equations on perturbation snapshots at uniform spacing
/// `dt_diag` with centered differences in t and θ.
pub fn f0f1_system_residual(
    snapshots: &[PerturbationField],
    dt_diag: f64,
    cache: &MaxwellianCache,
) -> Result<MacroResiduals> {
    if snapshots.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: snapshots.len(),
        });
    }
    if !(dt_diag > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt_diag",
            value: dt_diag,
            reason: "snapshot spacing must be positive",
        });
    }
    let grid = snapshots[0].grid();
    let p = cache.params();
    let c = (p.sigma / p.m).sqrt();
    let nu_bar: f64 = grid
        .nu()
        .iter()
        .zip(grid.weights())
        .map(|(n, w)| n * w)
        .sum();
    let k_lin = p.kappa / (core::f64::consts::TAU * p.m * p.sigma).sqrt();
    let k_quad = p.kappa / (p.m * p.sigma).sqrt();
    let samples: Vec<Sample> = snapshots
        .iter()
        .map(|f| sample(f, cache))
        .collect::<Result<_>>()?;
    let n = grid.n_theta();
    let h = grid.d_theta();
    let mut res = MacroResiduals { f0: 0.0, f1: 0.0 };
    for t in 1..samples.len() - 1 {
        let (prev, cur, next) = (&samples[t - 1], &samples[t], &samples[t + 1]);
        for i in 0..n {
            let (ip, im) = ((i + 1) % n, (i + n - 1) % n);
            let dth = |v: &[f64]| (v[ip] - v[im]) / (2.0 * h);
            let r0 = (next.f0[i] - prev.f0[i]) / (2.0 * dt_diag)
                + c * dth(&cur.f1)
                + nu_bar * dth(&cur.f0)
                + dth(&cur.micro0);
            let r1 = (next.f1[i] - prev.f1[i]) / (2.0 * dt_diag)
                + c * dth(&cur.f0)
                + nu_bar * dth(&cur.f1)
                + cur.f1[i] / p.m
                - k_lin * cur.s[i]
                - k_quad * cur.s[i] * cur.f0[i]
                + dth(&cur.micro1);
            res.f0 = res.f0.max(r0.abs());
            res.f1 = res.f1.max(r1.abs());
        }
    }
    Ok(res)
}
