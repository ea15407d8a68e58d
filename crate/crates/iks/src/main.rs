use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use iks::config::{parse_config, CliOverrides, Mode};
use iks::run::{run_mode, RunError};

/// Simulate inertial Kuramoto oscillators with noise: particles, the
/// kinetic equation, a hydrodynamic closure and operator checks.
#[derive(Parser)]
#[command(name = "iks", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the mode named in the config file
    Run(Common),
    /// Stochastic particle system
    Particles(Common),
    /// Kinetic equation on the phase-space grid
    Kinetic(Common),
    /// Closed moment system
    Hydro(Common),
    /// Discrete operator identities and coercivity
    Verify(Common),
    /// Perturbation decay over a parameter sweep
    DecayStudy(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set params.sigma=2`
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, common) = match cli.command {
        Command::Run(c) => (None, c),
        Command::Particles(c) => (Some(Mode::Particles), c),
        Command::Kinetic(c) => (Some(Mode::Kinetic), c),
        Command::Hydro(c) => (Some(Mode::Hydro), c),
        Command::Verify(c) => (Some(Mode::Verify), c),
        Command::DecayStudy(c) => (Some(Mode::DecayStudy), c),
    };
    match execute(mode, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.downcast_ref::<RunError>().map_or(2, RunError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn execute(mode: Option<Mode>, common: Common) -> anyhow::Result<()> {
    let text = match &common.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| {
            RunError::Config(iks::config::ConfigError {
                key: "--config".into(),
                message: format!("cannot read {}: {e}", path.display()),
            })
        })?,
        None => String::new(),
    };
    let cli = CliOverrides {
        mode,
        seed: common.seed,
        out: common.out,
    };
    let cfg = parse_config(&text, &common.overrides, &cli).map_err(RunError::Config)?;
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    let summary = run_mode(&cfg)?;
    println!(
        "{} run finished: {}",
        cfg.mode().as_str(),
        cfg.output.dir.join("summary.json").display()
    );
    if summary.get("all_pass") == Some(&serde_json::Value::Bool(false)) {
        eprintln!("some identity checks failed");
    }
    Ok(())
}
