//! Macro–micro analysis around the Maxwellian.
//!
//! A kinetic state is written `F = M + √M f`. The perturbation obeys
//!
//! ```text
//! ∂t f + ω ∂θ f = L₀ f + L₁ f + N(f, f)
//! ```
//!
//! with the linear Fokker–Planck part `L₀`, the linearized coupling `L₁`
//! and the quadratic remainder `N`. Inner products `⟨a, b⟩` are taken over
//! `(ω, ν)` at fixed θ; the frequency weights are part of `M`, so
//! `⟨a, b⟩ = Σ_k Σ_j a b dω`. `χ₀ = √(2π)√M` and `χ₁ = √(2πm/σ)(ω−ν)√M`
//! are orthonormal, and `P f = f₀ χ₀ + f₁ χ₁` with `f_i = ⟨χ_i, f⟩`.

mod coercivity;
mod decay;
mod macro_system;
mod norms;
mod operators;
mod project;
mod suite;

pub use coercivity::{coercivity_rayleigh, CoercivityEstimate};
pub use decay::{decay_fit, is_non_increasing, DecayFit, DecayFitResult};
pub use macro_system::{f0f1_system_residual, MacroResiduals};
pub use norms::{d_omega, field_mu_norm_sq, hs_norm, l2_inner, l2_norm, weighted_mu_norm_sq};
pub use operators::{apply_l0, apply_l1, apply_n, coupling_of_perturbation};
pub use project::{project, MacroCoefficients, Projection};
pub use suite::{operator_identity_suite, random_field, IdentityCheck, IdentityReport};

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::PhaseSpaceGrid;
use crate::kinetic::KineticState;
use crate::model::MaxwellianCache;

/// Perturbation `f` on the kinetic grid, `(ν, θ, ω)` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationField {
    grid: PhaseSpaceGrid,
    values: Vec<f64>,
}

impl PerturbationField {
    pub fn new(grid: PhaseSpaceGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &PhaseSpaceGrid) -> Self {
        Self {
            grid: grid.clone(),
            values: alloc::vec![0.0; grid.len()],
        }
    }

    /// `plane(ν, ω) · θ_factor(θ)`.
    pub fn separable(
        grid: &PhaseSpaceGrid,
        plane: &[f64],
        theta_factor: impl Fn(f64) -> f64,
    ) -> Self {
        let n = grid.n_omega();
        let mut values = Vec::with_capacity(grid.len());
        for k in 0..grid.n_nu() {
            for i in 0..grid.n_theta() {
                let c = theta_factor(grid.theta(i));
                values.extend(plane[k * n..(k + 1) * n].iter().map(|p| p * c));
            }
        }
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Row `(k, i)`.
    pub fn row(&self, k: usize, i: usize) -> &[f64] {
        let start = self.grid.index(k, i, 0);
        &self.values[start..start + self.grid.n_omega()]
    }

    /// Element-wise `self + c · other`.
    pub fn add_scaled(&self, c: f64, other: &Self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|a| c * a).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

fn check_cache(grid: &PhaseSpaceGrid, cache: &MaxwellianCache) -> Result<()> {
    if cache.n_nu() != grid.n_nu() || cache.n_omega() != grid.n_omega() {
        return Err(Error::ShapeMismatch {
            expected: grid.n_nu() * grid.n_omega(),
            got: cache.plane_len(),
        });
    }
    Ok(())
}

/// `f = (F − M)/√M`.
pub fn to_perturbation(state: &KineticState, cache: &MaxwellianCache) -> Result<PerturbationField> {
    to_perturbation_from(state, cache.maxwellian(), cache)
}

/// `f = (F − base)/√M` for a reference equilibrium `base` given on one
/// `(ν, ω)` plane (for instance the discrete equilibrium of the scheme).
pub fn to_perturbation_from(
    state: &KineticState,
    base: &[f64],
    cache: &MaxwellianCache,
) -> Result<PerturbationField> {
    let grid = state.grid();
    check_cache(grid, cache)?;
    if base.len() != cache.plane_len() {
        return Err(Error::ShapeMismatch {
            expected: cache.plane_len(),
            got: base.len(),
        });
    }
    let (n_theta, n_omega) = (grid.n_theta(), grid.n_omega());
    let sqrt_m = cache.sqrt_maxwellian();
    let values = state
        .values()
        .iter()
        .enumerate()
        .map(|(idx, f)| {
            let j = idx % n_omega;
            let k = idx / (n_theta * n_omega);
            let p = k * n_omega + j;
            (f - base[p]) / sqrt_m[p]
        })
        .collect();
    PerturbationField::new(grid.clone(), values)
}

/// `F = M + √M f`.
pub fn from_perturbation(
    field: &PerturbationField,
    cache: &MaxwellianCache,
) -> Result<KineticState> {
    let grid = field.grid();
    check_cache(grid, cache)?;
    let (n_theta, n_omega) = (grid.n_theta(), grid.n_omega());
    let (m, sqrt_m) = (cache.maxwellian(), cache.sqrt_maxwellian());
    let values = field
        .values()
        .iter()
        .enumerate()
        .map(|(idx, f)| {
            let p = (idx / (n_theta * n_omega)) * n_omega + idx % n_omega;
            m[p] + sqrt_m[p] * f
        })
        .collect();
    KineticState::new(grid.clone(), values, 0.0)
}
