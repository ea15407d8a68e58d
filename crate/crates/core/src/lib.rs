//! Numerical core for the inertial Kuramoto–Sakaguchi model.
//!
//! The crate covers three views of the same dynamics:
//!
//! * [`particle`]: the N-oscillator Langevin system integrated with
//!   Euler–Maruyama, with the mean-field force evaluated through the order
//!   parameter.
//! * [`kinetic`]: a conservative IMEX finite-volume solver for the
//!   Vlasov–Fokker–Planck equation on a `(ν, θ, ω)` grid.
//! * [`perturbation`] and [`moments`]: the macro–micro analysis layer around
//!   the Maxwellian equilibrium, balance-law residuals and the closed
//!   hydrodynamic model.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. The `parallel` feature distributes row-local work over rayon;
//! every reduction runs in a fixed order so results do not depend on the
//! number of worker threads.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose so NaN is rejected as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod fit;
pub mod grid;
pub mod kinetic;
pub mod model;
pub mod moments;
pub mod particle;
pub mod perturbation;
pub mod tridiag;

mod parallel;

pub use error::{Error, Result};
pub use grid::PhaseSpaceGrid;
pub use model::{FrequencyDistribution, FrequencyKind, MaxwellianCache, ModelParams};
