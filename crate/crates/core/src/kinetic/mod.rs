//! Mean-field kinetic equation
//!
//! ```text
//! ∂t F + ∂θ(ω F) + ∂ω(A[F] F) = (σ/m²) ∂²ω F,
//! A[F] = (1/m)(−ω + ν + κ S[F]),   S[F](θ) = ∫ sin(θ* − θ) F dθ* dω* dν*
//! ```
//!
//! on a [`PhaseSpaceGrid`]. Cell values are integrated with the midpoint rule,
//! so the mass of a state is `Σ F · dθ · dω`. The time integrator lives in
//! [`scheme`].

mod scheme;

pub use scheme::{
    discrete_equilibrium, stationarity_residual, step_imex, ImexStepper, Limiter, ResidualNorms,
};

use alloc::vec::Vec;
use core::f64::consts::TAU;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::PhaseSpaceGrid;
use crate::model::{maxwellian_profile, ModelParams};
use crate::parallel;
use crate::particle::{PhaseLaw, VelocityLaw};

/// Gridded density `F(ν_k, θ_i, ω_j)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticState {
    grid: PhaseSpaceGrid,
    values: Vec<f64>,
    pub t: f64,
}

impl KineticState {
    pub fn new(grid: PhaseSpaceGrid, values: Vec<f64>, t: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values, t })
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

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Row `(k, i)`: the ω-profile of slice `k` at phase `θ_i`.
    pub fn row(&self, k: usize, i: usize) -> &[f64] {
        let n = self.grid.n_omega();
        let start = self.grid.index(k, i, 0);
        &self.values[start..start + n]
    }

    pub fn total_mass(&self) -> f64 {
        self.slice_masses().iter().sum()
    }

    /// `Σ_{θ,ω} F dθ dω` for each frequency node.
    pub fn slice_masses(&self) -> Vec<f64> {
        let n = self.grid.n_omega();
        let rows = row_sums(&self.values, n, |_, _| 1.0);
        let vol = self.grid.cell_volume();
        rows.chunks(self.grid.n_theta())
            .map(|slice| slice.iter().sum::<f64>() * vol)
            .collect()
    }

    /// Largest deviation of a slice mass from its weight `w_k`.
    pub fn marginal_error(&self) -> f64 {
        self.slice_masses()
            .iter()
            .zip(self.grid.weights())
            .map(|(s, w)| (s - w).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Index of the first non-finite value, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.values.iter().position(|v| !v.is_finite())
    }

    /// Total momentum `M₁ = Σ ω F dθ dω`.
    pub fn momentum(&self) -> f64 {
        let grid = &self.grid;
        let rows = row_sums(&self.values, grid.n_omega(), |row, j| {
            let (k, _) = grid.row_coords(row);
            grid.omega(k, j)
        });
        rows.iter().sum::<f64>() * grid.cell_volume()
    }

    /// θ-marginal `ρ(θ_i) = Σ_{k,j} F dω`.
    pub fn theta_marginal(&self) -> Vec<f64> {
        theta_marginal(&self.grid, &self.values)
    }

    /// First Fourier mode `K₁ = Σ e^{iθ} F dθ dω` as `(re, im)`.
    pub fn first_mode(&self) -> (f64, f64) {
        first_mode(&self.grid, &self.values)
    }

    /// Order parameter `r = |K₁| / mass`.
    pub fn order_parameter(&self) -> f64 {
        let (re, im) = self.first_mode();
        let mass = self.total_mass();
        if mass > 0.0 {
            (re * re + im * im).sqrt() / mass
        } else {
            0.0
        }
    }

    /// Mass in `bins` equal phase bins, bin `b` covering `[b, b+1)·2π/bins`.
    /// Cell `i` spans `θ_i ± dθ/2` and is split between bins by overlap.
    pub fn theta_histogram(&self, bins: usize) -> Vec<f64> {
        let bins = bins.max(1);
        let rho = self.theta_marginal();
        let d_theta = self.grid.d_theta();
        let width = TAU / bins as f64;
        let mut out = alloc::vec![0.0; bins];
        for (i, &r) in rho.iter().enumerate() {
            let lo = (i as f64 - 0.5) * d_theta;
            let hi = lo + d_theta;
            let first = (lo / width).floor() as i64;
            let last = (hi / width).ceil() as i64;
            for b in first..last {
                let overlap = (hi.min((b + 1) as f64 * width) - lo.max(b as f64 * width)).max(0.0);
                out[b.rem_euclid(bins as i64) as usize] += r * overlap;
            }
        }
        out
    }
}

/// Per-row sums `Σ_j F[row, j] · weight(row, j)`, one entry per row.
fn row_sums<W>(values: &[f64], n_omega: usize, weight: W) -> Vec<f64>
where
    W: Fn(usize, usize) -> f64 + Send + Sync,
{
    parallel::map_collect(values.len() / n_omega, |row| {
        values[row * n_omega..(row + 1) * n_omega]
            .iter()
            .enumerate()
            .map(|(j, v)| v * weight(row, j))
            .sum()
    })
}

pub(crate) fn theta_marginal(grid: &PhaseSpaceGrid, values: &[f64]) -> Vec<f64> {
    let rows = row_sums(values, grid.n_omega(), |_, _| 1.0);
    let (n_nu, n_theta) = (grid.n_nu(), grid.n_theta());
    (0..n_theta)
        .map(|i| (0..n_nu).map(|k| rows[k * n_theta + i]).sum::<f64>() * grid.d_omega())
        .collect()
}

/// `K₁ = Σ e^{iθ} F dθ dω` of an arbitrary grid function.
pub fn first_mode(grid: &PhaseSpaceGrid, values: &[f64]) -> (f64, f64) {
    first_mode_of_density(&theta_marginal(grid, values))
}

/// `Σ e^{iθ_i} ρ_i dθ` on the uniform periodic grid with `ρ.len()` cells.
///
/// `Σ e^{iθ_i}` vanishes on the grid, so the mean of `ρ` is removed first;
/// a uniform density then yields exactly zero instead of round-off.
pub fn first_mode_of_density(rho: &[f64]) -> (f64, f64) {
    let n = rho.len();
    let d_theta = TAU / n as f64;
    let mean = rho.iter().sum::<f64>() / n as f64;
    rho.iter().enumerate().fold((0.0, 0.0), |(re, im), (i, r)| {
        let th = i as f64 * d_theta;
        let d = (r - mean) * d_theta;
        (re + th.cos() * d, im + th.sin() * d)
    })
}

/// `S(θ_i) = Im(K₁ e^{−iθ_i})` from a θ-density.
pub fn coupling_from_density(rho: &[f64]) -> Vec<f64> {
    let (re, im) = first_mode_of_density(rho);
    let d_theta = TAU / rho.len() as f64;
    (0..rho.len())
        .map(|i| {
            let th = i as f64 * d_theta;
            im * th.cos() - re * th.sin()
        })
        .collect()
}

/// `S(θ_i) = Im(K₁ e^{−iθ_i})` for an arbitrary grid function.
pub fn coupling_from_values(grid: &PhaseSpaceGrid, values: &[f64]) -> Vec<f64> {
    coupling_from_density(&theta_marginal(grid, values))
}

/// Tabulated coupling field `S[F](θ_i)`.
pub fn coupling_field_kinetic(state: &KineticState) -> Vec<f64> {
    coupling_from_values(&state.grid, &state.values)
}

/// Initial data. Every profile is rescaled slice by slice so that the mass
/// of slice `k` equals `w_k`.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `M(ω − shift, ν)`.
    Maxwellian { shift: f64 },
    /// `M(ω − shift, ν)·(1 + amplitude·cos(mode·θ))`.
    PhaseBump {
        amplitude: f64,
        mode: u32,
        shift: f64,
    },
    /// `w_k · p(θ) · q(ω − ν_k)` from particle initial laws.
    Product {
        phase: PhaseLaw,
        velocity: VelocityLaw,
    },
    /// Raw values in `(ν, θ, ω)` order.
    Tabulated(Vec<f64>),
}

/// Factors applied per slice by the normalization pass.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationReport {
    pub factors: Vec<f64>,
}

/// Builds the initial state and normalizes every slice to its weight.
pub fn init_from_profile(
    grid: &PhaseSpaceGrid,
    profile: &Profile,
    params: &ModelParams,
) -> Result<(KineticState, NormalizationReport)> {
    let (n_theta, n_omega) = (grid.n_theta(), grid.n_omega());
    let values = match profile {
        Profile::Maxwellian { shift } => {
            params.require_diffusion()?;
            let plane = maxwellian_plane(grid, params, *shift);
            modulate(grid, &plane, 0.0, 0)
        }
        Profile::PhaseBump {
            amplitude,
            mode,
            shift,
        } => {
            params.require_diffusion()?;
            let plane = maxwellian_plane(grid, params, *shift);
            modulate(grid, &plane, *amplitude, *mode)
        }
        Profile::Product { phase, velocity } => {
            let mut values = Vec::with_capacity(grid.len());
            for k in 0..grid.n_nu() {
                let w = grid.weights()[k];
                for i in 0..n_theta {
                    let p = phase
                        .density(grid.theta(i))
                        .ok_or(Error::InvalidDistribution(
                            "point phase laws have no kinetic density",
                        ))?;
                    for j in 0..n_omega {
                        let q = velocity.density(grid.relative_omega(j)).ok_or(
                            Error::InvalidDistribution(
                                "point frequency laws have no kinetic density",
                            ),
                        )?;
                        values.push(w * p * q);
                    }
                }
            }
            values
        }
        Profile::Tabulated(values) => values.clone(),
    };
    let mut state = KineticState::new(grid.clone(), values, 0.0)?;
    let report = normalize_slices(&mut state)?;
    Ok((state, report))
}

/// `M(ω − shift, ν_k)·w_k` tabulated on one `(ν, ω)` plane.
pub fn maxwellian_plane(grid: &PhaseSpaceGrid, params: &ModelParams, shift: f64) -> Vec<f64> {
    let mut plane = Vec::with_capacity(grid.n_nu() * grid.n_omega());
    for k in 0..grid.n_nu() {
        for j in 0..grid.n_omega() {
            let nu = grid.nu()[k];
            plane
                .push(maxwellian_profile(params, grid.omega(k, j) - shift, nu) * grid.weights()[k]);
        }
    }
    plane
}

/// `base(ν, ω)·(1 + amplitude·cos(mode·θ))` on the full grid.
pub fn modulate(grid: &PhaseSpaceGrid, base: &[f64], amplitude: f64, mode: u32) -> Vec<f64> {
    let n_omega = grid.n_omega();
    let mut values = Vec::with_capacity(grid.len());
    for k in 0..grid.n_nu() {
        let slice = &base[k * n_omega..(k + 1) * n_omega];
        for i in 0..grid.n_theta() {
            let factor = 1.0 + amplitude * (f64::from(mode) * grid.theta(i)).cos();
            values.extend(slice.iter().map(|b| b * factor));
        }
    }
    values
}

/// Rescales each slice to mass `w_k`. Factors within 1e-12 of one are not
/// applied, so data that is already normalized passes through bit-exact.
pub fn normalize_slices(state: &mut KineticState) -> Result<NormalizationReport> {
    let masses = state.slice_masses();
    let slice_len = state.grid.n_theta() * state.grid.n_omega();
    let mut factors = Vec::with_capacity(masses.len());
    for (k, (&mass, &w)) in masses.iter().zip(state.grid.weights()).enumerate() {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidProfile { slice: k, mass });
        }
        let factor = w / mass;
        if (factor - 1.0).abs() > 1e-12 {
            state.values[k * slice_len..(k + 1) * slice_len]
                .iter_mut()
                .for_each(|v| *v *= factor);
        }
        factors.push(factor);
    }
    Ok(NormalizationReport { factors })
}

/// Time-stepping schedule for [`run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSchedule {
    pub t_end: f64,
    /// Upper bound on the step; the actual step divides `t_end` evenly.
    pub dt: f64,
    /// Observe every this many steps (and always at the first and last).
    pub record_every: usize,
}

impl RunSchedule {
    /// Number of steps and the uniform step size actually used.
    pub fn steps(&self) -> (usize, f64) {
        if self.t_end <= 0.0 {
            return (0, self.dt);
        }
        let n = (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_end / n as f64)
    }
}

/// Advances `state` to `t_end`, handing every recorded state to `observe`.
/// On failure `state` holds the last successfully computed step.
pub fn run<O>(
    state: &mut KineticState,
    stepper: &mut ImexStepper,
    schedule: &RunSchedule,
    mut observe: O,
) -> Result<()>
where
    O: FnMut(&KineticState) -> Result<()>,
{
    let (n, dt) = schedule.steps();
    let every = schedule.record_every.max(1);
    let t0 = state.t;
    observe(state)?;
    for s in 1..=n {
        stepper.step(state, dt)?;
        // avoid accumulating round-off in t
        state.t = t0 + s as f64 * dt;
        if s % every == 0 || s == n {
            observe(state)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FrequencyDistribution;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit() -> ModelParams {
        ModelParams::new(1.0, 1.0, 1.0).unwrap()
    }

    fn dirac_grid(n_theta: usize, n_omega: usize) -> PhaseSpaceGrid {
        let g = FrequencyDistribution::dirac(0.0).unwrap();
        PhaseSpaceGrid::new(n_theta, n_omega, &unit(), &g).unwrap()
    }

    #[test]
    fn maxwellian_profile_keeps_marginals() {
        let g = FrequencyDistribution::gaussian(0.0, 1.0, 4).unwrap();
        let grid = PhaseSpaceGrid::new(16, 64, &unit(), &g).unwrap();
        let (state, report) =
            init_from_profile(&grid, &Profile::Maxwellian { shift: 0.0 }, &unit()).unwrap();
        assert!(state.marginal_error() < 1e-12);
        for f in report.factors {
            assert!((f - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_bump_keeps_slice_mass() {
        let grid = dirac_grid(16, 64);
        let bump = Profile::PhaseBump {
            amplitude: 0.1,
            mode: 1,
            shift: 0.0,
        };
        let (state, report) = init_from_profile(&grid, &bump, &unit()).unwrap();
        assert!((report.factors[0] - 1.0).abs() < 1e-12);
        assert!((state.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tabulated_profile_is_rescaled() {
        let grid = dirac_grid(8, 32);
        let v = 2.0 / (TAU * 2.0 * grid.half_width());
        let (state, report) =
            init_from_profile(&grid, &Profile::Tabulated(vec![v; grid.len()]), &unit()).unwrap();
        assert!((report.factors[0] - 0.5).abs() < 1e-12);
        assert!((state.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_profile_is_rejected() {
        let grid = dirac_grid(8, 32);
        let r = init_from_profile(&grid, &Profile::Tabulated(vec![0.0; grid.len()]), &unit());
        assert!(matches!(r, Err(Error::InvalidProfile { slice: 0, .. })));
        let r = init_from_profile(&grid, &Profile::Tabulated(vec![0.0; 3]), &unit());
        assert!(matches!(r, Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn homogeneous_state_has_no_coupling() {
        let grid = dirac_grid(16, 64);
        let (state, _) =
            init_from_profile(&grid, &Profile::Maxwellian { shift: 0.0 }, &unit()).unwrap();
        assert!(coupling_field_kinetic(&state).iter().all(|&s| s == 0.0));
        assert!(state.order_parameter() < 1e-15);
    }

    #[test]
    fn point_mass_coupling() {
        let grid = dirac_grid(16, 32);
        let mut values = vec![0.0; grid.len()];
        values[grid.index(0, 0, 5)] = 1.0 / grid.cell_volume();
        let state = KineticState::new(grid.clone(), values, 0.0).unwrap();
        for (i, s) in coupling_field_kinetic(&state).iter().enumerate() {
            assert!((s + grid.theta(i).sin()).abs() < 1e-14);
        }
        assert!((state.order_parameter() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn coupling_matches_brute_force_kernel() {
        let grid = dirac_grid(16, 32);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let values: Vec<f64> = (0..grid.len()).map(|_| rng.random::<f64>()).collect();
        let state = KineticState::new(grid.clone(), values.clone(), 0.0).unwrap();
        let reduced = coupling_field_kinetic(&state);
        for (i, s) in reduced.iter().enumerate() {
            let mut direct = 0.0;
            for ii in 0..grid.n_theta() {
                for j in 0..grid.n_omega() {
                    direct += (grid.theta(ii) - grid.theta(i)).sin()
                        * values[grid.index(0, ii, j)]
                        * grid.cell_volume();
                }
            }
            assert!((s - direct).abs() < 1e-13, "{s} vs {direct}");
        }
    }

    #[test]
    fn histogram_preserves_mass() {
        let grid = dirac_grid(64, 32);
        let bump = Profile::PhaseBump {
            amplitude: 0.5,
            mode: 1,
            shift: 0.0,
        };
        let (state, _) = init_from_profile(&grid, &bump, &unit()).unwrap();
        let h = state.theta_histogram(32);
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // the bump peaks at θ = 0, split evenly between the first and last bin
        assert!((h[0] - h[31]).abs() < 1e-12);
        assert!(h[0] > h[16]);
    }

    #[test]
    fn schedule_steps() {
        let s = RunSchedule {
            t_end: 1.0,
            dt: 0.3,
            record_every: 1,
        };
        assert_eq!(s.steps().0, 4);
        assert!((s.steps().1 - 0.25).abs() < 1e-15);
        let z = RunSchedule { t_end: 0.0, ..s };
        assert_eq!(z.steps().0, 0);
    }
}
