use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("degenerate diffusion: sigma must be strictly positive for kinetic quantities")]
    DegenerateDiffusion,

    #[error("invalid frequency distribution: {0}")]
    InvalidDistribution(&'static str),

    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),

    #[error("unknown law `{0}`")]
    UnknownLaw(String),

    #[error("field length {got} does not match grid size {expected}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("time step {dt} outside admissible range (0, {max}]")]
    StepSize { dt: f64, max: f64 },

    #[error("time step {dt} violates the advective CFL bound; suggested dt = {suggested}")]
    Cfl { dt: f64, suggested: f64 },

    #[error("non-finite state detected at index {index}")]
    Divergence { index: usize },

    #[error("initial profile integrates to {mass} on frequency slice {slice}")]
    InvalidProfile { slice: usize, mass: f64 },

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("vacuum formation in hydrodynamic cell {cell} (rho = {rho})")]
    Vacuum { cell: usize, rho: f64 },

    #[error("non-positive Rayleigh quotient {quotient}: discretization failure")]
    DiscretizationFailure { quotient: f64 },

    #[error("numerical failure: {0}")]
    Numerical(&'static str),
}
