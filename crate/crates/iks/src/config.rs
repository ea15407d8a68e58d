//! Run configuration: a TOML document with one section per concern.
//!
//! Every key has a default, so an empty file is a complete configuration
//! once the mode is known. Unknown keys, type mismatches and constraint
//! violations are reported with the full dotted key.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use iks_core::kinetic::Limiter;
use iks_core::particle::{PhaseLaw, VelocityLaw};
use iks_core::{FrequencyDistribution, ModelParams};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// Dotted key, or `<input>` for syntax errors.
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Particles,
    Kinetic,
    Hydro,
    Verify,
    DecayStudy,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Particles => "particles",
            Mode::Kinetic => "kinetic",
            Mode::Hydro => "hydro",
            Mode::Verify => "verify",
            Mode::DecayStudy => "decay-study",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub seed: u64,
    pub params: ParamsSection,
    pub frequency: FrequencySection,
    pub grid: GridSection,
    pub initial: InitialSection,
    pub time: TimeSection,
    pub particles: ParticlesSection,
    pub kinetic: KineticSection,
    pub perturbation: PerturbationSection,
    pub verify: VerifySection,
    pub decay_study: DecayStudySection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSection {
    pub m: f64,
    pub kappa: f64,
    pub sigma: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self {
            m: 1.0,
            kappa: 1.0,
            sigma: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrequencyKind {
    Dirac,
    Discrete,
    Gaussian,
}

/// Natural-frequency law `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrequencySection {
    pub kind: FrequencyKind,
    /// Location of the Dirac law.
    pub nu0: f64,
    /// Nodes and weights of a discrete law.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Gaussian law, discretized by Gauss-Hermite quadrature.
    pub mean: f64,
    pub std: f64,
    pub n_nodes: usize,
}

impl Default for FrequencySection {
    fn default() -> Self {
        Self {
            kind: FrequencyKind::Dirac,
            nu0: 0.0,
            nodes: Vec::new(),
            weights: Vec::new(),
            mean: 0.0,
            std: 1.0,
            n_nodes: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n_theta: usize,
    pub n_omega: usize,
    /// ω half-width around each ν; defaults to `10·√(σ/m)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n_theta: 32,
            n_omega: 128,
            half_width: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Maxwellian,
    PhaseBump,
    Product,
}

/// Initial data. Kinetic and hydro runs use `profile`; particle runs and the
/// `product` profile use the phase and velocity laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub profile: ProfileKind,
    /// `M(ω − shift)·(1 + amplitude·cos(mode·θ))`.
    pub amplitude: f64,
    pub mode: u32,
    pub shift: f64,
    pub phase: String,
    pub phase_center: f64,
    pub phase_std: f64,
    /// Law of `ω − ν`.
    pub velocity: String,
    pub velocity_center: f64,
    pub velocity_std: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            profile: ProfileKind::PhaseBump,
            amplitude: 0.1,
            mode: 1,
            shift: 0.0,
            phase: "wrapped-gaussian".into(),
            phase_center: std::f64::consts::PI,
            phase_std: 0.6,
            velocity: "gaussian".into(),
            velocity_center: 0.0,
            velocity_std: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub t_end: f64,
    /// Upper bound on the step; defaults to the CFL suggestion (kinetic,
    /// hydro) or `min(0.01, m/10)` (particles).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub cfl: f64,
    /// Spacing of diagnostics rows in time units.
    pub diag_every: f64,
    /// Spacing of binary snapshots; no snapshots when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<f64>,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            t_end: 10.0,
            dt: None,
            cfl: 0.4,
            diag_every: 0.1,
            snapshot_every: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParticlesSection {
    pub n: usize,
}

impl Default for ParticlesSection {
    fn default() -> Self {
        Self { n: 50_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimiterKind {
    Tvb,
    Minmod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KineticSection {
    pub limiter: LimiterKind,
    pub tvb_threshold: f64,
}

impl Default for KineticSection {
    fn default() -> Self {
        Self {
            limiter: LimiterKind::Tvb,
            tvb_threshold: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// Fixed point of the discrete step map.
    Discrete,
    /// The analytic Maxwellian sampled on the grid.
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationSection {
    pub reference: Reference,
    /// Fraction of the diagnostics samples excluded from the decay fit.
    pub transient: f64,
}

impl Default for PerturbationSection {
    fn default() -> Self {
        Self {
            reference: Reference::Discrete,
            transient: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub n_theta: usize,
    pub n_omega: usize,
    pub trials: usize,
    pub coercivity_trials: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            n_theta: 16,
            n_omega: 256,
            trials: 50,
            coercivity_trials: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    Sigma,
    Kappa,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Sigma => "sigma",
            SweepParam::Kappa => "kappa",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayStudySection {
    pub sweep: SweepParam,
    pub values: Vec<f64>,
}

impl Default for DecayStudySection {
    fn default() -> Self {
        Self {
            sweep: SweepParam::Sigma,
            values: vec![2.0, 5.0, 10.0, 20.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub histogram_bins: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            histogram_bins: 32,
        }
    }
}

/// Settings given as dedicated command-line flags; they take precedence
/// over both the file and `--set`.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Parses `text`, applies `key=value` overrides and validates the result.
pub fn parse_config(
    text: &str,
    overrides: &[String],
    cli: &CliOverrides,
) -> Result<RunConfig, ConfigError> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        ConfigError::new("<input>", e.message().trim().to_string())
    })?;
    for entry in overrides {
        let (key, value) = entry.split_once('=').ok_or_else(|| {
            ConfigError::new(entry.trim(), "override must have the form key=value")
        })?;
        set_dotted(&mut table, key.trim(), parse_value(value.trim()))?;
    }
    if let Some(mode) = cli.mode {
        table.insert("mode".into(), toml::Value::String(mode.as_str().into()));
    }
    if let Some(seed) = cli.seed {
        let seed =
            i64::try_from(seed).map_err(|_| ConfigError::new("seed", "seed must be below 2^63"))?;
        table.insert("seed".into(), toml::Value::Integer(seed));
    }
    if let Some(out) = &cli.out {
        set_dotted(
            &mut table,
            "output.dir",
            toml::Value::String(out.to_string_lossy().into_owned()),
        )?;
    }
    let cfg: RunConfig =
        serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let message = inner.message().trim().to_string();
            let key = match message
                .strip_prefix("unknown field `")
                .and_then(|m| m.split('`').next())
            {
                Some(field) if path == "." => field.to_string(),
                _ => path,
            };
            ConfigError::new(key, message)
        })?;
    validate(&cfg)?;
    Ok(cfg)
}

/// Value of an override: any TOML value, or a bare string.
fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), ConfigError> {
    let parts: Vec<&str> = key.split('.').map(str::trim).collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::new(key, "empty key segment"));
    }
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    let mut current = table;
    for (depth, part) in parents.iter().enumerate() {
        let entry = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        current = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::new(parts[..=depth].join("."), "not a section"))?;
    }
    current.insert(last.to_string(), value);
    Ok(())
}

fn require(ok: bool, key: &str, message: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::new(key, message))
    }
}

fn positive(v: f64, key: &str) -> Result<(), ConfigError> {
    require(v.is_finite() && v > 0.0, key, "must be finite and > 0")
}

fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    let mode = cfg.mode.ok_or_else(|| {
        ConfigError::new("mode", "no mode given; pass a subcommand or set `mode`")
    })?;
    positive(cfg.params.m, "params.m")?;
    require(
        cfg.params.kappa.is_finite() && cfg.params.kappa >= 0.0,
        "params.kappa",
        "must be finite and >= 0",
    )?;
    require(
        cfg.params.sigma.is_finite() && cfg.params.sigma >= 0.0,
        "params.sigma",
        "must be finite and >= 0",
    )?;
    let sweeps_sigma = mode == Mode::DecayStudy && cfg.decay_study.sweep == SweepParam::Sigma;
    if mode != Mode::Particles && !sweeps_sigma {
        require(
            cfg.params.sigma > 0.0,
            "params.sigma",
            "kinetic, hydro and verify runs need sigma > 0",
        )?;
    }
    frequency_law(cfg)?;
    if mode == Mode::Hydro {
        require(
            cfg.frequency.kind == FrequencyKind::Dirac,
            "frequency.kind",
            "the hydrodynamic model is closed for identical oscillators only",
        )?;
    }
    for (v, key, min) in [
        (cfg.grid.n_theta, "grid.n_theta", 8),
        (cfg.grid.n_omega, "grid.n_omega", 32),
        (cfg.verify.n_theta, "verify.n_theta", 8),
        (cfg.verify.n_omega, "verify.n_omega", 32),
    ] {
        require(
            v >= min && v % 2 == 0,
            key,
            &format!("must be even and >= {min}"),
        )?;
    }
    if let Some(w) = cfg.grid.half_width {
        positive(w, "grid.half_width")?;
    }
    let amp = cfg.initial.amplitude;
    require(
        amp.is_finite() && amp.abs() <= 1.0,
        "initial.amplitude",
        "must lie in [-1, 1] so the profile stays non-negative",
    )?;
    require(
        cfg.initial.shift.is_finite(),
        "initial.shift",
        "must be finite",
    )?;
    phase_law(cfg)?;
    velocity_law(cfg)?;
    require(
        cfg.time.t_end.is_finite() && cfg.time.t_end >= 0.0,
        "time.t_end",
        "must be finite and >= 0",
    )?;
    if let Some(dt) = cfg.time.dt {
        positive(dt, "time.dt")?;
    }
    require(
        cfg.time.cfl > 0.0 && cfg.time.cfl <= 0.9,
        "time.cfl",
        "must lie in (0, 0.9]",
    )?;
    positive(cfg.time.diag_every, "time.diag_every")?;
    if let Some(s) = cfg.time.snapshot_every {
        positive(s, "time.snapshot_every")?;
    }
    require(cfg.particles.n >= 1, "particles.n", "must be >= 1")?;
    positive(cfg.kinetic.tvb_threshold, "kinetic.tvb_threshold")?;
    require(
        (0.0..1.0).contains(&cfg.perturbation.transient),
        "perturbation.transient",
        "must lie in [0, 1)",
    )?;
    require(cfg.verify.trials >= 1, "verify.trials", "must be >= 1")?;
    require(
        cfg.verify.coercivity_trials >= 10,
        "verify.coercivity_trials",
        "must be >= 10",
    )?;
    require(
        !cfg.decay_study.values.is_empty(),
        "decay_study.values",
        "must list at least one value",
    )?;
    for v in &cfg.decay_study.values {
        match cfg.decay_study.sweep {
            SweepParam::Sigma => positive(*v, "decay_study.values")?,
            SweepParam::Kappa => require(
                v.is_finite() && *v >= 0.0,
                "decay_study.values",
                "coupling values must be >= 0",
            )?,
        }
    }
    require(
        cfg.output.histogram_bins >= 1,
        "output.histogram_bins",
        "must be >= 1",
    )?;
    Ok(())
}

impl RunConfig {
    /// The validated mode.
    pub fn mode(&self) -> Mode {
        self.mode.expect("validated configs carry a mode")
    }

    pub fn model_params(&self) -> Result<ModelParams, ConfigError> {
        ModelParams::new(self.params.m, self.params.kappa, self.params.sigma)
            .map_err(|e| ConfigError::new("params", e.to_string()))
    }

    pub fn limiter(&self) -> Limiter {
        match self.kinetic.limiter {
            LimiterKind::Tvb => Limiter::TvbMinmod {
                threshold: self.kinetic.tvb_threshold,
            },
            LimiterKind::Minmod => Limiter::Minmod,
        }
    }

    /// The resolved configuration as TOML text.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }
}

pub fn frequency_law(cfg: &RunConfig) -> Result<FrequencyDistribution, ConfigError> {
    let f = &cfg.frequency;
    match f.kind {
        FrequencyKind::Dirac => FrequencyDistribution::dirac(f.nu0)
            .map_err(|e| ConfigError::new("frequency.nu0", e.to_string())),
        FrequencyKind::Discrete => {
            FrequencyDistribution::discrete(f.nodes.clone(), f.weights.clone())
                .map_err(|e| ConfigError::new("frequency.weights", e.to_string()))
        }
        FrequencyKind::Gaussian => {
            require(
                (1..=64).contains(&f.n_nodes),
                "frequency.n_nodes",
                "must lie in 1..=64",
            )?;
            FrequencyDistribution::gaussian(f.mean, f.std, f.n_nodes)
                .map_err(|e| ConfigError::new("frequency.std", e.to_string()))
        }
    }
}

pub fn phase_law(cfg: &RunConfig) -> Result<PhaseLaw, ConfigError> {
    let i = &cfg.initial;
    PhaseLaw::from_tag(&i.phase, i.phase_center, i.phase_std).map_err(|e| {
        let key = if matches!(e, iks_core::Error::UnknownLaw(_)) {
            "initial.phase"
        } else {
            "initial.phase_std"
        };
        ConfigError::new(key, e.to_string())
    })
}

pub fn velocity_law(cfg: &RunConfig) -> Result<VelocityLaw, ConfigError> {
    let i = &cfg.initial;
    VelocityLaw::from_tag(&i.velocity, i.velocity_center, i.velocity_std).map_err(|e| {
        let key = if matches!(e, iks_core::Error::UnknownLaw(_)) {
            "initial.velocity"
        } else {
            "initial.velocity_std"
        };
        ConfigError::new(key, e.to_string())
    })
}
