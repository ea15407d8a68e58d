//! N-oscillator Langevin system
//!
//! ```text
//! dθᵢ = ωᵢ dt
//! dωᵢ = (1/m)(−ωᵢ + νᵢ + (κ/N) Σⱼ sin(θⱼ − θᵢ)) dt + (√(2σ)/m) dBᵢ
//! ```
//!
//! integrated with Euler–Maruyama. The pairwise sum is evaluated through the
//! order parameter, `(κ/N) Σⱼ sin(θⱼ − θ) = κ r sin(φ − θ)`, so a step costs
//! O(N).
//!
//! Noise is drawn from counter-based ChaCha substreams keyed by
//! `(seed, step, chunk)`. Chunks have a fixed size, so trajectories are
//! bit-identical for any number of worker threads.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{FrequencyDistribution, ModelParams};

/// Particles per work chunk and per noise substream.
pub const CHUNK: usize = 4096;

/// Initial law of the phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseLaw {
    Uniform,
    WrappedGaussian { mean: f64, std: f64 },
    Point(f64),
}

/// Initial law of `ω − ν`, the frequency relative to the natural frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VelocityLaw {
    Gaussian { mean: f64, std: f64 },
    Point(f64),
}

impl PhaseLaw {
    /// Builds a law from its configuration tag. `center` is the mean phase
    /// (or the point location) and `spread` the wrapped-Gaussian std.
    pub fn from_tag(tag: &str, center: f64, spread: f64) -> Result<Self> {
        match tag {
            "uniform" => Ok(Self::Uniform),
            "wrapped-gaussian" => {
                if !(spread.is_finite() && spread > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "phase_std",
                        value: spread,
                        reason: "wrapped-gaussian spread must be positive",
                    });
                }
                Ok(Self::WrappedGaussian {
                    mean: center,
                    std: spread,
                })
            }
            "point" => Ok(Self::Point(center)),
            other => Err(Error::UnknownLaw(String::from(other))),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Uniform => rng.random::<f64>() * TAU,
            Self::WrappedGaussian { mean, std } => {
                let z: f64 = rng.sample(StandardNormal);
                wrap_phase(mean + std * z)
            }
            Self::Point(p) => wrap_phase(p),
        }
    }

    /// Density on `[0, 2π)`; `None` for the point law.
    pub fn density(&self, theta: f64) -> Option<f64> {
        match *self {
            Self::Uniform => Some(1.0 / TAU),
            Self::WrappedGaussian { mean, std } => {
                // images beyond ±(std·8 + 2π) are far below f64 resolution
                let reach = ((8.0 * std) / TAU).ceil() as i64 + 1;
                let norm = 1.0 / (std * TAU.sqrt());
                let mut acc = 0.0;
                for n in -reach..=reach {
                    let d = (theta - mean + n as f64 * TAU) / std;
                    acc += (-0.5 * d * d).exp();
                }
                Some(norm * acc)
            }
            Self::Point(_) => None,
        }
    }
}

impl VelocityLaw {
    pub fn from_tag(tag: &str, center: f64, spread: f64) -> Result<Self> {
        match tag {
            "gaussian" => {
                if !(spread.is_finite() && spread > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "omega_std",
                        value: spread,
                        reason: "gaussian spread must be positive",
                    });
                }
                Ok(Self::Gaussian {
                    mean: center,
                    std: spread,
                })
            }
            "point" => Ok(Self::Point(center)),
            other => Err(Error::UnknownLaw(String::from(other))),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Gaussian { mean, std } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + std * z
            }
            Self::Point(p) => p,
        }
    }

    /// Density in ω; `None` for the point law.
    pub fn density(&self, omega: f64) -> Option<f64> {
        match *self {
            Self::Gaussian { mean, std } => {
                let d = (omega - mean) / std;
                Some((-0.5 * d * d).exp() / (std * TAU.sqrt()))
            }
            Self::Point(_) => None,
        }
    }
}

/// Reduces a phase to `[0, 2π)`.
#[inline]
pub fn wrap_phase(theta: f64) -> f64 {
    let r = theta - TAU * (theta / TAU).floor();
    // can round up to exactly 2π for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub theta: Vec<f64>,
    pub omega: Vec<f64>,
    pub nu: Vec<f64>,
    pub t: f64,
    /// Number of steps taken; selects the noise substream.
    pub steps: u64,
}

impl ParticleEnsemble {
    pub fn new(theta: Vec<f64>, omega: Vec<f64>, nu: Vec<f64>, t: f64) -> Result<Self> {
        let n = theta.len();
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: 0.0,
                reason: "ensemble must contain at least one particle",
            });
        }
        if omega.len() != n || nu.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                got: omega.len().min(nu.len()),
            });
        }
        let theta = theta.into_iter().map(wrap_phase).collect();
        Ok(Self {
            theta,
            omega,
            nu,
            t,
            steps: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Advances one Euler–Maruyama step in place.
    pub fn advance(&mut self, params: &ModelParams, dt: f64, noise: &NoiseStream) -> Result<()> {
        let max_dt = params.m / 10.0;
        if !(dt > 0.0 && dt <= max_dt) {
            return Err(Error::StepSize { dt, max: max_dt });
        }
        let op = order_parameter(self);
        let inv_m = 1.0 / params.m;
        let coupling = params.kappa * op.r;
        let noise_amp = (2.0 * params.sigma).sqrt() * inv_m * dt.sqrt();
        let with_noise = params.sigma > 0.0;
        let step_index = self.steps;

        let update = |chunk: usize, theta: &mut [f64], omega: &mut [f64], nu: &[f64]| {
            let mut rng = noise.substream(step_index, chunk as u64);
            for ((th, om), &nu) in theta.iter_mut().zip(omega.iter_mut()).zip(nu) {
                let drift = inv_m * (-*om + nu + coupling * (op.phi - *th).sin());
                let kick = if with_noise {
                    let xi: f64 = rng.sample(StandardNormal);
                    noise_amp * xi
                } else {
                    0.0
                };
                let new_theta = *th + *om * dt;
                *om += drift * dt + kick;
                *th = wrap_phase(new_theta);
            }
        };

        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            self.theta
                .par_chunks_mut(CHUNK)
                .zip(self.omega.par_chunks_mut(CHUNK))
                .zip(self.nu.par_chunks(CHUNK))
                .enumerate()
                .for_each(|(c, ((th, om), nu))| update(c, th, om, nu));
        }
        #[cfg(not(feature = "parallel"))]
        {
            self.theta
                .chunks_mut(CHUNK)
                .zip(self.omega.chunks_mut(CHUNK))
                .zip(self.nu.chunks(CHUNK))
                .enumerate()
                .for_each(|(c, ((th, om), nu))| update(c, th, om, nu));
        }

        if let Some(index) = self
            .theta
            .iter()
            .zip(&self.omega)
            .position(|(a, b)| !(a.is_finite() && b.is_finite()))
        {
            return Err(Error::Divergence { index });
        }
        self.steps += 1;
        self.t += dt;
        Ok(())
    }
}

/// Deterministic source of per-step, per-chunk Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseStream {
    pub seed: u64,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    /// Generator for chunk `chunk` of step `step`: key = seed,
    /// stream = step, word offset = chunk · 2⁴⁰.
    pub fn substream(&self, step: u64, chunk: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(step);
        rng.set_word_pos(u128::from(chunk) << 40);
        rng
    }
}

/// Draws an ensemble of `n` oscillators; deterministic in `seed`.
pub fn sample_initial(
    n: usize,
    phase: PhaseLaw,
    velocity: VelocityLaw,
    g: &FrequencyDistribution,
    seed: u64,
) -> Result<ParticleEnsemble> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            reason: "ensemble must contain at least one particle",
        });
    }
    // stream u64::MAX is reserved for initialization; steps use streams 0, 1, ...
    let mut rng = NoiseStream::new(seed).substream(u64::MAX, 0);
    let mut theta = Vec::with_capacity(n);
    let mut omega = Vec::with_capacity(n);
    let mut nu = Vec::with_capacity(n);
    let single = g.len() == 1;
    for _ in 0..n {
        let k = if single {
            0
        } else {
            g.node_for_uniform(rng.random::<f64>())
        };
        let nu_k = g.nodes()[k];
        theta.push(phase.sample(&mut rng));
        // the frequency law is relative to the oscillator's natural frequency
        omega.push(nu_k + velocity.sample(&mut rng));
        nu.push(nu_k);
    }
    ParticleEnsemble::new(theta, omega, nu, 0.0)
}

/// `r e^{iφ} = (1/N) Σ e^{iθⱼ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderParameter {
    pub r: f64,
    pub phi: f64,
}

/// Fixed-order chunked sum of `(cos θ, sin θ)`.
fn circular_sum(theta: &[f64]) -> (f64, f64) {
    let partial = |chunk: &[f64]| {
        chunk
            .iter()
            .fold((0.0, 0.0), |(c, s), &t| (c + t.cos(), s + t.sin()))
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<(f64, f64)> = {
        use rayon::prelude::*;
        theta.par_chunks(CHUNK).map(partial).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<(f64, f64)> = theta.chunks(CHUNK).map(partial).collect();
    parts
        .into_iter()
        .fold((0.0, 0.0), |(c, s), (pc, ps)| (c + pc, s + ps))
}

pub fn order_parameter(ens: &ParticleEnsemble) -> OrderParameter {
    let n = ens.len() as f64;
    let (c, s) = circular_sum(&ens.theta);
    let (re, im) = (c / n, s / n);
    let r = (re * re + im * im).sqrt().min(1.0);
    let phi = if r > 0.0 {
        wrap_phase(im.atan2(re))
    } else {
        0.0
    };
    OrderParameter { r, phi }
}

/// Mean-field torque `κ r sin(φ − θ)` felt by an oscillator at phase `θ`.
pub fn coupling_field(op: &OrderParameter, kappa: f64, theta: f64) -> f64 {
    kappa * op.r * (op.phi - theta).sin()
}

/// Euler–Maruyama step returning the advanced ensemble.
pub fn step(
    ens: &ParticleEnsemble,
    params: &ModelParams,
    dt: f64,
    noise: &NoiseStream,
) -> Result<ParticleEnsemble> {
    let mut next = ens.clone();
    next.advance(params, dt, noise)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalMoments {
    /// Mass, 1 by normalization.
    pub m0: f64,
    /// Mean frequency `(1/N) Σ ωᵢ`.
    pub m1: f64,
}

pub fn empirical_moments(ens: &ParticleEnsemble) -> EmpiricalMoments {
    let sum: f64 = ens
        .omega
        .chunks(CHUNK)
        .map(|c| c.iter().sum::<f64>())
        .fold(0.0, |a, b| a + b);
    EmpiricalMoments {
        m0: 1.0,
        m1: sum / ens.len() as f64,
    }
}

/// Fraction of particles per phase bin; bin `b` covers `[b, b+1)·2π/bins`.
pub fn phase_histogram(ens: &ParticleEnsemble, bins: usize) -> Vec<f64> {
    let mut counts = alloc::vec![0usize; bins.max(1)];
    let width = TAU / counts.len() as f64;
    for &t in &ens.theta {
        let b = ((t / width) as usize).min(counts.len() - 1);
        counts[b] += 1;
    }
    let n = ens.len() as f64;
    counts.into_iter().map(|c| c as f64 / n).collect()
}

/// Mean phase of a bin, used when reporting histograms.
pub fn bin_center(b: usize, bins: usize) -> f64 {
    (b as f64 + 0.5) * 2.0 * PI / bins as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ens(theta: Vec<f64>) -> ParticleEnsemble {
        let n = theta.len();
        ParticleEnsemble::new(theta, vec![0.0; n], vec![0.0; n], 0.0).unwrap()
    }

    #[test]
    fn degenerate_laws_give_zero_state() {
        let g = FrequencyDistribution::dirac(0.0).unwrap();
        let e = sample_initial(4, PhaseLaw::Point(0.0), VelocityLaw::Point(0.0), &g, 1).unwrap();
        assert_eq!(e.theta, vec![0.0; 4]);
        assert_eq!(e.omega, vec![0.0; 4]);
        assert_eq!(e.nu, vec![0.0; 4]);
    }

    #[test]
    fn unknown_law_tag() {
        assert_eq!(
            PhaseLaw::from_tag("cauchy", 0.0, 1.0),
            Err(Error::UnknownLaw("cauchy".into()))
        );
        assert!(VelocityLaw::from_tag("laplace", 0.0, 1.0).is_err());
        assert!(PhaseLaw::from_tag("wrapped-gaussian", 0.0, 0.0).is_err());
        assert_eq!(
            PhaseLaw::from_tag("uniform", 0.0, 0.0),
            Ok(PhaseLaw::Uniform)
        );
    }

    #[test]
    fn same_seed_same_ensemble() {
        let g = FrequencyDistribution::gaussian(0.0, 1.0, 5).unwrap();
        let law = VelocityLaw::Gaussian {
            mean: 0.0,
            std: 1.0,
        };
        let a = sample_initial(1000, PhaseLaw::Uniform, law, &g, 42).unwrap();
        let b = sample_initial(1000, PhaseLaw::Uniform, law, &g, 42).unwrap();
        let c = sample_initial(1000, PhaseLaw::Uniform, law, &g, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.theta, c.theta);
        assert!(a.theta.iter().all(|t| (0.0..TAU).contains(t)));
    }

    #[test]
    fn dirac_sampling() {
        let g = FrequencyDistribution::dirac(0.0).unwrap();
        let e = sample_initial(100_000, PhaseLaw::Uniform, VelocityLaw::Point(0.0), &g, 3).unwrap();
        assert!(e.nu.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn discrete_frequency_sampling_follows_weights() {
        let g = FrequencyDistribution::discrete(vec![-1.0, 1.0], vec![0.2, 0.8]).unwrap();
        let e = sample_initial(50_000, PhaseLaw::Uniform, VelocityLaw::Point(0.0), &g, 9).unwrap();
        let frac = e.nu.iter().filter(|&&v| v == 1.0).count() as f64 / 50_000.0;
        assert!((frac - 0.8).abs() < 0.01, "{frac}");
    }

    #[test]
    fn coherent_state() {
        let op = order_parameter(&ens(vec![1.3; 17]));
        assert!((op.r - 1.0).abs() < 1e-15);
        assert!((op.phi - 1.3).abs() < 1e-14);
    }

    #[test]
    fn equispaced_state_is_incoherent() {
        let theta = (0..8).map(|j| j as f64 * TAU / 8.0).collect();
        assert!(order_parameter(&ens(theta)).r < 1e-14);
    }

    #[test]
    fn two_particle_order_parameter_and_field() {
        let e = ens(vec![0.0, PI / 2.0]);
        let op = order_parameter(&e);
        assert!((op.r - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((op.phi - PI / 4.0).abs() < 1e-15);
        // brute force: (1/2)(sin 0 + sin π/2)
        assert!((coupling_field(&op, 1.0, 0.0) - 0.5).abs() < 1e-15);
        assert_eq!(
            coupling_field(&OrderParameter { r: 0.0, phi: 0.0 }, 3.0, 1.0),
            0.0
        );
        assert_eq!(coupling_field(&op, 2.0, op.phi), 0.0);
    }

    #[test]
    fn step_size_guard() {
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        let e = ens(vec![0.0; 3]);
        let noise = NoiseStream::new(0);
        assert!(matches!(
            step(&e, &p, 0.0, &noise),
            Err(Error::StepSize { .. })
        ));
        assert!(matches!(
            step(&e, &p, 0.2, &noise),
            Err(Error::StepSize { .. })
        ));
        assert!(step(&e, &p, 0.1, &noise).is_ok());
    }

    #[test]
    fn divergence_names_first_index() {
        let p = ModelParams::new(1.0, 0.0, 0.0).unwrap();
        let mut e = ens(vec![0.0; 4]);
        e.omega[2] = f64::INFINITY;
        e.omega[3] = f64::NAN;
        assert_eq!(
            step(&e, &p, 0.01, &NoiseStream::new(0)),
            Err(Error::Divergence { index: 2 })
        );
    }

    #[test]
    fn relaxation_without_noise_or_coupling() {
        // ω(t) = ν + (ω₀ − ν) e^{−t/m}; at t = 1: 2(1 − e^{−1})
        let p = ModelParams::new(1.0, 0.0, 0.0).unwrap();
        let mut e = ParticleEnsemble::new(vec![0.0], vec![0.0], vec![2.0], 0.0).unwrap();
        let dt = 1e-3;
        for _ in 0..1000 {
            e.advance(&p, dt, &NoiseStream::new(0)).unwrap();
        }
        let exact = 2.0 * (1.0 - (-1.0_f64).exp());
        assert!((e.omega[0] - exact).abs() <= 2.0 * dt, "{}", e.omega[0]);
        assert_eq!(e.nu, vec![2.0]);
    }

    #[test]
    fn histogram_sums_to_one() {
        let g = FrequencyDistribution::dirac(0.0).unwrap();
        let e = sample_initial(999, PhaseLaw::Uniform, VelocityLaw::Point(0.0), &g, 5).unwrap();
        let h = phase_histogram(&e, 32);
        assert_eq!(h.len(), 32);
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn moments_examples() {
        let mut e = ens(vec![0.0; 5]);
        e.omega = vec![3.0; 5];
        assert_eq!(empirical_moments(&e).m1, 3.0);
        let mut e = ens(vec![0.0; 2]);
        e.omega = vec![-1.0, 1.0];
        assert_eq!(empirical_moments(&e), EmpiricalMoments { m0: 1.0, m1: 0.0 });
    }

    #[test]
    fn wrapped_gaussian_density_normalized() {
        let law = PhaseLaw::WrappedGaussian {
            mean: 0.3,
            std: 2.5,
        };
        let n = 2000;
        let h = TAU / n as f64;
        let total: f64 = (0..n).map(|i| law.density(i as f64 * h).unwrap() * h).sum();
        assert!((total - 1.0).abs() < 1e-12, "{total}");
        assert!(PhaseLaw::Point(0.0).density(0.0).is_none());
    }
}
