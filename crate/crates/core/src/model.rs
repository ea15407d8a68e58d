//! Physical parameters, natural-frequency laws and the Maxwellian equilibrium.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::PhaseSpaceGrid;

/// Inertia `m`, coupling `kappa` and noise `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub m: f64,
    pub kappa: f64,
    pub sigma: f64,
}

impl ModelParams {
    pub fn new(m: f64, kappa: f64, sigma: f64) -> Result<Self> {
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::InvalidParameter {
                name: "m",
                value: m,
                reason: "inertia must be finite and strictly positive",
            });
        }
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "kappa",
                value: kappa,
                reason: "coupling must be finite and non-negative",
            });
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: sigma,
                reason: "noise must be finite and non-negative",
            });
        }
        Ok(Self { m, kappa, sigma })
    }

    /// Kinetic quantities need a non-degenerate ω-diffusion.
    pub fn require_diffusion(&self) -> Result<()> {
        if self.sigma > 0.0 {
            Ok(())
        } else {
            Err(Error::DegenerateDiffusion)
        }
    }

    /// Diffusion coefficient `σ/m²` of the kinetic equation.
    pub fn diffusion(&self) -> f64 {
        self.sigma / (self.m * self.m)
    }

    /// Standard deviation `√(σ/m)` of the equilibrium frequency spread.
    pub fn thermal_speed(&self) -> f64 {
        (self.sigma / self.m).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyKind {
    Dirac,
    Discrete,
    GaussianQuadrature,
}

/// Natural-frequency law `g(ν)` stored as quadrature nodes and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyDistribution {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    kind: FrequencyKind,
}

impl FrequencyDistribution {
    pub const WEIGHT_SUM_TOL: f64 = 1e-12;

    /// Identical oscillators, all with natural frequency `nu0`.
    pub fn dirac(nu0: f64) -> Result<Self> {
        if !nu0.is_finite() {
            return Err(Error::InvalidDistribution("dirac location must be finite"));
        }
        Ok(Self {
            nodes: alloc::vec![nu0],
            weights: alloc::vec![1.0],
            kind: FrequencyKind::Dirac,
        })
    }

    pub fn discrete(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::InvalidDistribution(
                "nodes and weights must be non-empty and of equal length",
            ));
        }
        if nodes.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDistribution("nodes must be finite"));
        }
        if weights.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
            return Err(Error::InvalidDistribution(
                "weights must be strictly positive",
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > Self::WEIGHT_SUM_TOL {
            return Err(Error::InvalidDistribution("weights must sum to one"));
        }
        let kind = if nodes.len() == 1 {
            FrequencyKind::Dirac
        } else {
            FrequencyKind::Discrete
        };
        Ok(Self {
            nodes,
            weights,
            kind,
        })
    }

    /// Gauss–Hermite discretization of `N(mean, std²)` with `n` nodes.
    pub fn gaussian(mean: f64, std: f64, n: usize) -> Result<Self> {
        if !(mean.is_finite() && std.is_finite() && std > 0.0) {
            return Err(Error::InvalidDistribution(
                "gaussian law needs a finite mean and positive std",
            ));
        }
        if n == 0 {
            return Err(Error::InvalidDistribution(
                "gaussian law needs at least one node",
            ));
        }
        let (x, w) = gauss_hermite(n)?;
        let scale = core::f64::consts::SQRT_2 * std;
        let norm = PI.sqrt();
        let mut nodes: Vec<f64> = x.iter().map(|&xi| mean + scale * xi).collect();
        let mut weights: Vec<f64> = w.iter().map(|&wi| wi / norm).collect();
        // renormalize away the last few ulps so the weight-sum invariant holds
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        nodes.reverse();
        weights.reverse();
        Ok(Self {
            nodes,
            weights,
            kind: FrequencyKind::GaussianQuadrature,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> FrequencyKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫ ν g(ν) dν`.
    pub fn mean(&self) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(n, w)| n * w)
            .sum()
    }

    /// `‖g‖²_ν = ∫ (1 + ν²) g(ν) dν`.
    pub fn nu_norm_sq(&self) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(n, w)| (1.0 + n * n) * w)
            .sum()
    }

    /// Weight of the node located at `nu`, or 0 when `nu` is not a node.
    pub fn weight_at(&self, nu: f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .find(|(n, _)| (**n - nu).abs() <= 1e-12 * (1.0 + nu.abs()))
            .map_or(0.0, |(_, w)| *w)
    }

    /// Node index for a uniform variate `u ∈ [0, 1)` (inverse CDF).
    pub fn node_for_uniform(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (k, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return k;
            }
        }
        self.weights.len() - 1
    }
}

/// Gauss–Hermite nodes and weights for the weight `e^{-x²}` (Newton iteration
/// on the orthonormal Hermite recurrence). Nodes are returned in descending
/// order; the weights sum to `√π`.
fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0_f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 * (1.0 + z.abs()) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numerical(
                "Gauss-Hermite Newton iteration did not converge",
            ));
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    Ok((x, w))
}

/// Unweighted Maxwellian profile `(1/2π)√(m/2πσ) exp(−(m/2σ)(ω−ν)²)`.
///
/// Caller guarantees `sigma > 0`.
pub fn maxwellian_profile(params: &ModelParams, omega: f64, nu: f64) -> f64 {
    let a = params.m / (2.0 * params.sigma);
    let d = omega - nu;
    (params.m / (2.0 * PI * params.sigma)).sqrt() / (2.0 * PI) * (-a * d * d).exp()
}

/// Maxwellian `M(ω, ν)` including the weight of `g` at the node `ν`.
pub fn maxwellian(
    params: &ModelParams,
    g: &FrequencyDistribution,
    omega: f64,
    nu: f64,
) -> Result<f64> {
    params.require_diffusion()?;
    Ok(maxwellian_profile(params, omega, nu) * g.weight_at(nu))
}

/// `∫ (ω−ν)^{2ℓ} M dω dν = ((2ℓ−1)!!/2π)(σ/m)^ℓ` for a unit-mass frequency law.
pub fn gaussian_moment(params: &ModelParams, l: u32) -> Result<f64> {
    if l > 4 {
        return Err(Error::InvalidParameter {
            name: "l",
            value: l as f64,
            reason: "moments are provided up to order 2l = 8",
        });
    }
    let double_factorial: f64 = (1..=l).map(|i| (2 * i - 1) as f64).product();
    Ok(double_factorial / (2.0 * PI) * (params.sigma / params.m).powi(l as i32))
}

/// Terms of the noise threshold `max{mκ², κ, 1/m, m‖g‖²_ν}` and the ratio of
/// `σ` against it. The multiplicative constant of the threshold is unknown,
/// so the ratio is reported rather than a verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConditionReport {
    pub inertia_coupling: f64,
    pub coupling: f64,
    pub inverse_inertia: f64,
    pub frequency_spread: f64,
    pub threshold: f64,
    pub ratio: f64,
}

pub fn noise_condition_margin(
    params: &ModelParams,
    g: &FrequencyDistribution,
) -> NoiseConditionReport {
    let inertia_coupling = params.m * params.kappa * params.kappa;
    let coupling = params.kappa;
    let inverse_inertia = 1.0 / params.m;
    let frequency_spread = params.m * g.nu_norm_sq();
    let threshold = inertia_coupling
        .max(coupling)
        .max(inverse_inertia)
        .max(frequency_spread);
    NoiseConditionReport {
        inertia_coupling,
        coupling,
        inverse_inertia,
        frequency_spread,
        threshold,
        ratio: params.sigma / threshold,
    }
}

/// Per-`(ν_k, ω_j)` equilibrium data shared by the perturbation layer.
#[derive(Debug, Clone)]
pub struct MaxwellianCache {
    params: ModelParams,
    n_nu: usize,
    n_omega: usize,
    d_omega: f64,
    m: Vec<f64>,
    sqrt_m: Vec<f64>,
    chi0: Vec<f64>,
    chi1: Vec<f64>,
    alpha: Vec<f64>,
    /// `ω − ν` at each node.
    rel: Vec<f64>,
}

impl MaxwellianCache {
    pub fn new(grid: &PhaseSpaceGrid, params: &ModelParams) -> Result<Self> {
        params.require_diffusion()?;
        let (n_nu, n_omega) = (grid.n_nu(), grid.n_omega());
        let len = n_nu * n_omega;
        let mut cache = Self {
            params: *params,
            n_nu,
            n_omega,
            d_omega: grid.d_omega(),
            m: Vec::with_capacity(len),
            sqrt_m: Vec::with_capacity(len),
            chi0: Vec::with_capacity(len),
            chi1: Vec::with_capacity(len),
            alpha: Vec::with_capacity(len),
            rel: Vec::with_capacity(len),
        };
        let c1 = (2.0 * PI * params.m / params.sigma).sqrt();
        let c0 = (2.0 * PI).sqrt();
        for k in 0..n_nu {
            let (nu, w) = (grid.nu()[k], grid.weights()[k]);
            for j in 0..n_omega {
                let omega = grid.omega(k, j);
                let d = omega - nu;
                let mv = maxwellian_profile(params, omega, nu) * w;
                let sq = mv.sqrt();
                cache.m.push(mv);
                cache.sqrt_m.push(sq);
                cache.chi0.push(c0 * sq);
                cache.chi1.push(c1 * d * sq);
                cache.alpha.push(1.0 + params.m / params.sigma * d * d);
                cache.rel.push(d);
            }
        }
        Ok(cache)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn n_nu(&self) -> usize {
        self.n_nu
    }

    pub fn n_omega(&self) -> usize {
        self.n_omega
    }

    pub fn d_omega(&self) -> f64 {
        self.d_omega
    }

    /// Length of one `(ν, ω)` plane.
    pub fn plane_len(&self) -> usize {
        self.n_nu * self.n_omega
    }

    pub fn maxwellian(&self) -> &[f64] {
        &self.m
    }

    pub fn sqrt_maxwellian(&self) -> &[f64] {
        &self.sqrt_m
    }

    pub fn chi0(&self) -> &[f64] {
        &self.chi0
    }

    pub fn chi1(&self) -> &[f64] {
        &self.chi1
    }

    /// μ-norm weight `α = 1 + (m/σ)(ω−ν)²`.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// μ-norm weight `β = σ/m`.
    pub fn beta(&self) -> f64 {
        self.params.sigma / self.params.m
    }

    /// `ω − ν` per node.
    pub fn relative_omega(&self) -> &[f64] {
        &self.rel
    }

    /// Discrete `⟨a, b⟩` over one `(ν, ω)` plane.
    pub fn plane_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * self.d_omega
    }
}
