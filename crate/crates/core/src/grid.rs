//! Uniform `(ν, θ, ω)` phase-space grid.
//!
//! θ cells are centered at `θ_i = i·dθ` on the periodic circle. For each
//! frequency node `ν_k` the ω window is `[ν_k − W, ν_k + W]`, split into
//! `n_omega` cells centered at `ν_k − W + (j + ½)·dω`. Values are stored
//! row-major in `(ν, θ, ω)` order.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{FrequencyDistribution, ModelParams};

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid {
    n_theta: usize,
    n_omega: usize,
    half_width: f64,
    d_theta: f64,
    d_omega: f64,
    nu: Vec<f64>,
    weights: Vec<f64>,
}

impl PhaseSpaceGrid {
    /// Half-width of the ω window in units of the thermal speed `√(σ/m)`.
    pub const HALF_WIDTH_THERMAL: f64 = 10.0;

    /// Grid with the standard window `W = 10·√(σ/m)`.
    pub fn new(
        n_theta: usize,
        n_omega: usize,
        params: &ModelParams,
        g: &FrequencyDistribution,
    ) -> Result<Self> {
        params.require_diffusion()?;
        Self::with_half_width(
            n_theta,
            n_omega,
            Self::HALF_WIDTH_THERMAL * params.thermal_speed(),
            g,
        )
    }

    pub fn with_half_width(
        n_theta: usize,
        n_omega: usize,
        half_width: f64,
        g: &FrequencyDistribution,
    ) -> Result<Self> {
        if n_theta < 8 || !n_theta.is_multiple_of(2) {
            return Err(Error::InvalidGrid("n_theta must be even and at least 8"));
        }
        if n_omega < 32 || !n_omega.is_multiple_of(2) {
            return Err(Error::InvalidGrid("n_omega must be even and at least 32"));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid("omega half-width must be positive"));
        }
        Ok(Self {
            n_theta,
            n_omega,
            half_width,
            d_theta: 2.0 * PI / n_theta as f64,
            d_omega: 2.0 * half_width / n_omega as f64,
            nu: g.nodes().to_vec(),
            weights: g.weights().to_vec(),
        })
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_omega(&self) -> usize {
        self.n_omega
    }

    pub fn n_nu(&self) -> usize {
        self.nu.len()
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn d_theta(&self) -> f64 {
        self.d_theta
    }

    pub fn d_omega(&self) -> f64 {
        self.d_omega
    }

    pub fn cell_volume(&self) -> f64 {
        self.d_theta * self.d_omega
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.nu.len() * self.n_theta * self.n_omega
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of `(ν, θ)` rows.
    pub fn n_rows(&self) -> usize {
        self.nu.len() * self.n_theta
    }

    #[inline]
    pub fn index(&self, k: usize, i: usize, j: usize) -> usize {
        (k * self.n_theta + i) * self.n_omega + j
    }

    /// Splits a row index into `(k, i)`.
    #[inline]
    pub fn row_coords(&self, row: usize) -> (usize, usize) {
        (row / self.n_theta, row % self.n_theta)
    }

    #[inline]
    pub fn theta(&self, i: usize) -> f64 {
        i as f64 * self.d_theta
    }

    /// ω at cell center `j` of slice `k`.
    #[inline]
    pub fn omega(&self, k: usize, j: usize) -> f64 {
        self.nu[k] + self.relative_omega(j)
    }

    /// `ω − ν_k` at cell center `j` (identical for every slice).
    #[inline]
    pub fn relative_omega(&self, j: usize) -> f64 {
        -self.half_width + (j as f64 + 0.5) * self.d_omega
    }

    /// `ω − ν_k` at the face between cells `j − 1` and `j`.
    #[inline]
    pub fn relative_omega_face(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.d_omega
    }

    /// Largest `|ω|` present on the grid.
    pub fn omega_max(&self) -> f64 {
        self.nu
            .iter()
            .map(|nu| nu.abs() + self.half_width - 0.5 * self.d_omega)
            .fold(0.0, f64::max)
    }

    /// A copy with both resolutions multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let g = FrequencyDistribution::discrete(self.nu.clone(), self.weights.clone())?;
        Self::with_half_width(
            self.n_theta * factor,
            self.n_omega * factor,
            self.half_width,
            &g,
        )
    }
}
