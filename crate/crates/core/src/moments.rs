//! Macroscopic observables, local balance laws and the closed hydrodynamic
//! system.
//!
//! For identical oscillators with natural frequency `ν₀` the moments
//! `ρ = ∫F dω`, `ρu = ∫ωF dω`, `E = ½∫ω²F dω` satisfy
//!
//! ```text
//! ∂t ρ  + ∂θ(ρu)          = 0
//! ∂t ρu + ∂θ(ρu² + p)     = (1/m)(−ρu + ν₀ρ + κρS)
//! ∂t E  + ∂θ(½ρu³ + 3pu/2 + q) = (σ/m²)ρ − (1/m)(p + ρu²) + (1/m)(ν₀ + κS)ρu
//! ```
//!
//! with `p = ∫(ω−u)²F dω`, `q = ½∫(ω−u)³F dω` and `S` the coupling field of
//! `ρ`. Setting `q = 0` closes the system ([`HydroState`]).

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fit::{linear_fit, LinearFit};
use crate::kinetic::{coupling_from_density, KineticState};
use crate::model::ModelParams;
use crate::parallel;

/// Densities below this are treated as vacuum: derived fields are not
/// divided out there.
pub const RHO_FLOOR: f64 = 1e-14;

/// Macroscopic fields per θ cell. `u`, `e`, `p`, `q` are `NaN` where
/// `defined[i]` is false.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroFields {
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    /// Internal energy per unit mass, `e = p / (2ρ)`.
    pub e: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub defined: Vec<bool>,
}

impl MacroFields {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn momentum(&self) -> Vec<f64> {
        self.rho.iter().zip(&self.u).map(|(r, u)| r * u).collect()
    }
}

/// Raw moments `∫ω^n F dω`, n = 0..=3, summed over frequency slices.
fn raw_moments(state: &KineticState) -> [Vec<f64>; 4] {
    let grid = state.grid();
    let (n_theta, n_omega, n_nu) = (grid.n_theta(), grid.n_omega(), grid.n_nu());
    let per_row: Vec<[f64; 4]> = parallel::map_collect(grid.n_rows(), |row| {
        let (k, _) = grid.row_coords(row);
        let f = &state.values()[row * n_omega..(row + 1) * n_omega];
        let mut acc = [0.0; 4];
        for (j, v) in f.iter().enumerate() {
            let w = grid.omega(k, j);
            acc[0] += v;
            acc[1] += v * w;
            acc[2] += v * w * w;
            acc[3] += v * w * w * w;
        }
        acc
    });
    let dw = grid.d_omega();
    let mut out = [
        vec![0.0; n_theta],
        vec![0.0; n_theta],
        vec![0.0; n_theta],
        vec![0.0; n_theta],
    ];
    for k in 0..n_nu {
        for i in 0..n_theta {
            for (n, o) in out.iter_mut().enumerate() {
                o[i] += per_row[k * n_theta + i][n] * dw;
            }
        }
    }
    out
}

/// Macroscopic fields of `state`, marginalized over frequency slices.
/// Centered moments are accumulated directly from `(ω − u)` to avoid
/// cancellation.
pub fn compute_macro(state: &KineticState) -> MacroFields {
    let grid = state.grid();
    let (n_theta, n_omega, n_nu) = (grid.n_theta(), grid.n_omega(), grid.n_nu());
    let [rho, mom, _, _] = raw_moments(state);
    let dw = grid.d_omega();
    let fields: Vec<(f64, f64, f64, f64, bool)> = parallel::map_collect(n_theta, |i| {
        let r = rho[i];
        if !(r >= RHO_FLOOR) {
            return (f64::NAN, f64::NAN, f64::NAN, f64::NAN, false);
        }
        let u = mom[i] / r;
        let (mut p, mut q) = (0.0, 0.0);
        for k in 0..n_nu {
            let row = state.row(k, i);
            for (j, v) in row.iter().enumerate().take(n_omega) {
                let c = grid.omega(k, j) - u;
                p += v * c * c;
                q += v * c * c * c;
            }
        }
        let (p, q) = (p * dw, 0.5 * q * dw);
        (u, p / (2.0 * r), p, q, true)
    });
    let mut out = MacroFields {
        rho,
        u: Vec::with_capacity(n_theta),
        e: Vec::with_capacity(n_theta),
        p: Vec::with_capacity(n_theta),
        q: Vec::with_capacity(n_theta),
        defined: Vec::with_capacity(n_theta),
    };
    for (u, e, p, q, d) in fields {
        out.u.push(u);
        out.e.push(e);
        out.p.push(p);
        out.q.push(q);
        out.defined.push(d);
    }
    out
}

/// `L∞` residual of each balance law over interior samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceResiduals {
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
}

/// Evaluates the three balance laws on snapshots taken at uniform spacing
/// `dt_diag`, with centered differences in t and θ. Cells below
/// [`RHO_FLOOR`] are excluded.
pub fn balance_residuals(
    snapshots: &[KineticState],
    params: &ModelParams,
    dt_diag: f64,
) -> Result<BalanceResiduals> {
    if snapshots.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: snapshots.len(),
        });
    }
    let grid = snapshots[0].grid();
    if grid.n_nu() != 1 {
        return Err(Error::InvalidDistribution(
            "balance laws are evaluated for identical oscillators",
        ));
    }
    if !(dt_diag > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt_diag",
            value: dt_diag,
            reason: "snapshot spacing must be positive",
        });
    }
    let nu0 = grid.nu()[0];
    let (m, kappa, sigma) = (params.m, params.kappa, params.sigma);
    let moments: Vec<[Vec<f64>; 4]> = snapshots.iter().map(raw_moments).collect();
    let n = grid.n_theta();
    let h = grid.d_theta();
    let mut res = BalanceResiduals {
        mass: 0.0,
        momentum: 0.0,
        energy: 0.0,
    };
    for t in 1..snapshots.len() - 1 {
        let [rho, mom, m2, m3] = &moments[t];
        let (prev, next) = (&moments[t - 1], &moments[t + 1]);
        let s = coupling_from_density(rho);
        for i in 0..n {
            if rho[i] < RHO_FLOOR {
                continue;
            }
            let (ip, im) = ((i + 1) % n, (i + n - 1) % n);
            let dt_of = |c: usize| (next[c][i] - prev[c][i]) / (2.0 * dt_diag);
            let dth = |v: &[f64]| (v[ip] - v[im]) / (2.0 * h);
            let r_mass = dt_of(0) + dth(mom);
            let r_mom = dt_of(1) + dth(m2) - (-mom[i] + nu0 * rho[i] + kappa * rho[i] * s[i]) / m;
            let r_energy = 0.5 * dt_of(2) + 0.5 * dth(m3)
                - (sigma / (m * m) * rho[i] - m2[i] / m + (nu0 + kappa * s[i]) * mom[i] / m);
            res.mass = res.mass.max(r_mass.abs());
            res.momentum = res.momentum.max(r_mom.abs());
            res.energy = res.energy.max(r_energy.abs());
        }
    }
    Ok(res)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSample {
    pub t: f64,
    pub m0: f64,
    pub m1: f64,
}

/// `M₀(t)`, `M₁(t)` and the fitted decay rate of `|M₁|`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries {
    pub samples: Vec<MomentSample>,
    /// `None` when fewer than two samples have `|M₁| > 1e-10`.
    pub fit: Option<LinearFit>,
}

impl MomentSeries {
    pub fn from_samples(samples: Vec<MomentSample>) -> Result<Self> {
        if samples.len() < 10 {
            return Err(Error::InsufficientData {
                needed: 10,
                got: samples.len(),
            });
        }
        let (ts, logs): (Vec<f64>, Vec<f64>) = samples
            .iter()
            .filter(|s| s.m1.abs() > 1e-10)
            .map(|s| (s.t, s.m1.abs().ln()))
            .unzip();
        Ok(Self {
            fit: linear_fit(&ts, &logs),
            samples,
        })
    }

    /// Decay rate of `|M₁|` (negated log-slope).
    pub fn rate(&self) -> Option<f64> {
        self.fit.map(|f| -f.slope)
    }
}

/// Moment series of a kinetic trajectory.
pub fn m0_m1_series(trajectory: &[KineticState]) -> Result<MomentSeries> {
    MomentSeries::from_samples(
        trajectory
            .iter()
            .map(|s| MomentSample {
                t: s.t,
                m0: s.total_mass(),
                m1: s.momentum(),
            })
            .collect(),
    )
}

/// Conserved variables `(ρ, ρu, E = ρ(e + u²/2))` of the closed system.
#[derive(Debug, Clone, PartialEq)]
pub struct HydroState {
    pub rho: Vec<f64>,
    pub mom: Vec<f64>,
    pub energy: Vec<f64>,
    pub t: f64,
    /// Natural frequency of the (identical) oscillators.
    pub nu0: f64,
}

impl HydroState {
    /// Closure from kinetic macro fields; undefined cells are rejected.
    pub fn from_macro(fields: &MacroFields, nu0: f64, t: f64) -> Result<Self> {
        if let Some(cell) = fields.defined.iter().position(|d| !d) {
            return Err(Error::Vacuum {
                cell,
                rho: fields.rho[cell],
            });
        }
        let mom = fields.momentum();
        let energy = fields
            .rho
            .iter()
            .zip(&fields.u)
            .zip(&fields.p)
            .map(|((r, u), p)| 0.5 * (p + r * u * u))
            .collect();
        Ok(Self {
            rho: fields.rho.clone(),
            mom,
            energy,
            t,
            nu0,
        })
    }

    /// Uniform state `ρ = 1/2π`, `u = 0`, `p = ρσ/m`.
    pub fn equilibrium(n_theta: usize, params: &ModelParams, nu0: f64) -> Self {
        let rho = 1.0 / core::f64::consts::TAU;
        let p = rho * params.sigma / params.m;
        Self {
            rho: vec![rho; n_theta],
            mom: vec![rho * nu0; n_theta],
            energy: vec![0.5 * (p + rho * nu0 * nu0); n_theta],
            t: 0.0,
            nu0,
        }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn d_theta(&self) -> f64 {
        core::f64::consts::TAU / self.len() as f64
    }

    pub fn pressure(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| 2.0 * self.energy[i] - self.mom[i] * self.mom[i] / self.rho[i])
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.d_theta()
    }

    pub fn total_momentum(&self) -> f64 {
        self.mom.iter().sum::<f64>() * self.d_theta()
    }

    fn check_vacuum(&self) -> Result<()> {
        match self.rho.iter().position(|r| !(*r >= RHO_FLOOR)) {
            Some(cell) => Err(Error::Vacuum {
                cell,
                rho: self.rho[cell],
            }),
            None => Ok(()),
        }
    }

    /// Largest characteristic speed `|u| + √(3p/ρ)`.
    pub fn max_speed(&self) -> f64 {
        let p = self.pressure();
        (0..self.len())
            .map(|i| {
                let u = self.mom[i] / self.rho[i];
                u.abs() + (3.0 * p[i].max(0.0) / self.rho[i]).sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn suggested_dt(&self, cfl: f64) -> f64 {
        cfl * self.d_theta() / self.max_speed().max(f64::MIN_POSITIVE)
    }
}

/// Physical flux of the closed system.
#[inline]
fn euler_flux(rho: f64, mom: f64, energy: f64) -> [f64; 3] {
    let u = mom / rho;
    let p = 2.0 * energy - mom * u;
    [mom, mom * u + p, u * (energy + p)]
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Semi-discrete right-hand side: Rusanov fluxes on minmod-reconstructed
/// conserved variables plus synchronization sources.
fn hydro_rhs(state: &HydroState, params: &ModelParams) -> [Vec<f64>; 3] {
    let n = state.len();
    let h = state.d_theta();
    let vars = [&state.rho, &state.mom, &state.energy];
    let p = state.pressure();
    let speed: Vec<f64> = (0..n)
        .map(|i| (state.mom[i] / state.rho[i]).abs() + (3.0 * p[i].max(0.0) / state.rho[i]).sqrt())
        .collect();
    let slope = |c: usize, i: usize| {
        let v = vars[c];
        minmod(v[i] - v[(i + n - 1) % n], v[(i + 1) % n] - v[i])
    };
    // flux through the face between cells i−1 and i
    let face: Vec<[f64; 3]> = (0..n)
        .map(|i| {
            let l = (i + n - 1) % n;
            let ul: [f64; 3] = core::array::from_fn(|c| vars[c][l] + 0.5 * slope(c, l));
            let ur: [f64; 3] = core::array::from_fn(|c| vars[c][i] - 0.5 * slope(c, i));
            let (fl, fr) = (
                euler_flux(ul[0], ul[1], ul[2]),
                euler_flux(ur[0], ur[1], ur[2]),
            );
            let a = speed[l].max(speed[i]);
            core::array::from_fn(|c| 0.5 * (fl[c] + fr[c]) - 0.5 * a * (ur[c] - ul[c]))
        })
        .collect();
    let s = coupling_from_density(&state.rho);
    let (m, kappa, sigma, nu0) = (params.m, params.kappa, params.sigma, state.nu0);
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let next = (i + 1) % n;
        for c in 0..3 {
            out[c][i] = -(face[next][c] - face[i][c]) / h;
        }
        let (r, q, e) = (state.rho[i], state.mom[i], state.energy[i]);
        out[1][i] += (-q + nu0 * r + kappa * r * s[i]) / m;
        out[2][i] += sigma / (m * m) * r - 2.0 * e / m + (nu0 + kappa * s[i]) * q / m;
    }
    out
}

/// One SSP-RK2 finite-volume step of the closed hydrodynamic system.
pub fn step_hydro(state: &HydroState, params: &ModelParams, dt: f64) -> Result<HydroState> {
    state.check_vacuum()?;
    let max_dt = 0.9 * state.d_theta() / state.max_speed().max(f64::MIN_POSITIVE);
    if !(dt > 0.0 && dt <= max_dt) {
        return Err(Error::Cfl {
            dt,
            suggested: state.suggested_dt(0.4),
        });
    }
    let advance = |base: &HydroState, from: &HydroState, w: f64| -> HydroState {
        let r = hydro_rhs(from, params);
        let combine = |c: usize, b: &[f64], f: &[f64]| -> Vec<f64> {
            (0..b.len())
                .map(|i| (1.0 - w) * b[i] + w * (f[i] + dt * r[c][i]))
                .collect()
        };
        HydroState {
            rho: combine(0, &base.rho, &from.rho),
            mom: combine(1, &base.mom, &from.mom),
            energy: combine(2, &base.energy, &from.energy),
            t: base.t,
            nu0: base.nu0,
        }
    };
    let stage = advance(state, state, 1.0);
    stage.check_vacuum()?;
    let mut next = advance(state, &stage, 0.5);
    next.check_vacuum()?;
    if let Some(index) = next
        .mom
        .iter()
        .chain(&next.energy)
        .position(|v| !v.is_finite())
    {
        return Err(Error::Divergence { index });
    }
    next.t = state.t + dt;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PhaseSpaceGrid;
    use crate::kinetic::{init_from_profile, Profile};
    use crate::model::FrequencyDistribution;
    use core::f64::consts::TAU;

    fn maxwellian_state(shift: f64, scale: f64) -> KineticState {
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        let g = FrequencyDistribution::dirac(0.0).unwrap();
        let grid = PhaseSpaceGrid::new(16, 256, &p, &g).unwrap();
        let (s, _) = init_from_profile(&grid, &Profile::Maxwellian { shift }, &p).unwrap();
        let v = s.values().iter().map(|v| v * scale).collect();
        KineticState::new(grid, v, 0.0).unwrap()
    }

    #[test]
    fn maxwellian_macro_fields() {
        let f = compute_macro(&maxwellian_state(0.0, 1.0));
        for i in 0..f.len() {
            assert!((f.rho[i] - 1.0 / TAU).abs() < 1e-12);
            assert!(f.u[i].abs() < 1e-12);
            assert!((f.p[i] - 1.0 / TAU).abs() < 1e-10);
            assert!(f.q[i].abs() < 1e-12);
        }
    }

    #[test]
    fn homogeneity_and_translation() {
        let a = compute_macro(&maxwellian_state(0.0, 1.0));
        let b = compute_macro(&maxwellian_state(0.0, 2.0));
        let c = compute_macro(&maxwellian_state(0.7, 1.0));
        for i in 0..a.len() {
            assert!((b.rho[i] - 2.0 * a.rho[i]).abs() < 1e-14);
            assert!((b.p[i] - 2.0 * a.p[i]).abs() < 1e-13);
            assert!(b.u[i].abs() < 1e-12);
            assert!((c.u[i] - 0.7).abs() < 1e-10);
            assert!((c.p[i] - a.p[i]).abs() < 1e-10);
            assert!((c.q[i] - a.q[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn vacuum_cells_are_flagged() {
        let mut s = maxwellian_state(0.0, 1.0);
        let n = s.grid().n_omega();
        s.values_mut()[3 * n..4 * n]
            .iter_mut()
            .for_each(|v| *v = 0.0);
        let f = compute_macro(&s);
        assert!(!f.defined[3] && f.u[3].is_nan());
        assert!(f.defined[2]);
        assert!(HydroState::from_macro(&f, 0.0, 0.0).is_err());
    }

    #[test]
    fn equilibrium_balance_residuals_vanish() {
        let mut traj = vec![maxwellian_state(0.0, 1.0); 3];
        for (n, s) in traj.iter_mut().enumerate() {
            s.t = n as f64 * 0.1;
        }
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        let r = balance_residuals(&traj, &p, 0.1).unwrap();
        assert!(r.mass < 1e-14 && r.momentum < 1e-14, "{r:?}");
        assert!(r.energy < 1e-10, "{r:?}");
        assert!(matches!(
            balance_residuals(&traj[..2], &p, 0.1),
            Err(Error::InsufficientData { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn synthetic_m1_rate() {
        let samples = (0..20)
            .map(|n| {
                let t = n as f64 * 0.1;
                MomentSample {
                    t,
                    m0: 1.0,
                    m1: 0.7 * (-2.0 * t).exp(),
                }
            })
            .collect();
        let s = MomentSeries::from_samples(samples).unwrap();
        assert!((s.rate().unwrap() - 2.0).abs() < 1e-10);
        assert!(s.samples.iter().all(|x| x.m0 == 1.0));

        let flat = (0..20)
            .map(|n| MomentSample {
                t: n as f64,
                m0: 1.0,
                m1: 0.0,
            })
            .collect();
        assert!(MomentSeries::from_samples(flat).unwrap().fit.is_none());
    }

    #[test]
    fn uniform_hydro_state_is_stationary() {
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        let s = HydroState::equilibrium(64, &p, 0.0);
        let next = step_hydro(&s, &p, s.suggested_dt(0.4)).unwrap();
        for i in 0..64 {
            assert!((next.rho[i] - s.rho[i]).abs() < 1e-16);
            assert!(next.mom[i].abs() < 1e-16);
            assert!((next.energy[i] - s.energy[i]).abs() < 1e-16);
        }
    }

    #[test]
    fn hydro_mass_and_momentum_law() {
        let p = ModelParams::new(0.5, 1.0, 1.0).unwrap();
        let n = 128;
        let mut s = HydroState::equilibrium(n, &p, 0.0);
        for i in 0..n {
            let th = i as f64 * TAU / n as f64;
            s.rho[i] *= 1.0 + 0.1 * th.cos();
            s.mom[i] = 0.2 * s.rho[i];
            let pr = s.rho[i] * p.sigma / p.m;
            s.energy[i] = 0.5 * (pr + s.mom[i] * s.mom[i] / s.rho[i]);
        }
        let (m0, m1) = (s.total_mass(), s.total_momentum());
        let dt = 0.5 * s.suggested_dt(0.4);
        let steps = (1.0 / dt).ceil() as usize;
        let dt = 1.0 / steps as f64;
        for _ in 0..steps {
            s = step_hydro(&s, &p, dt).unwrap();
        }
        assert!((s.total_mass() - m0).abs() < 1e-12);
        let rate = -(s.total_momentum() / m1).ln();
        assert!((rate - 2.0).abs() < 0.04, "{rate}");
    }
}
