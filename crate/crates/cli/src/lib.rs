//! `omcat`: configuration, file formats and command orchestration on top of
//! [`omcat_core`].
//!
//! Exit codes: 0 success, 1 usage or config error, 2 physics failure (for
//! example an unstable drive), 3 an approximation used outside its regime.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::Value;

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;

use config::{ParityChoice, SweepAxis};
pub use error::CliError;

/// Environment variable overriding the default output directory.
pub const OUT_DIR_ENV: &str = "OMCAT_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "omcat-out";

#[derive(Debug, Parser)]
#[command(name = "omcat", version, about = "Mechanical cat states from squeezing and phonon subtraction")]
pub struct Cli {
    /// TOML config, or a previous run's manifest.json to replay it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory [env: OMCAT_OUT_DIR].
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps and phase-space grids.
    #[arg(long, global = true, default_value_t = 1, value_name = "N")]
    pub jobs: usize,
    /// Dotted-path override, e.g. `--set system.temperature=0.02`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Resolve the config and write the manifest of derived quantities only.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Treat validity and parity warnings as errors.
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady-state covariance, squeezing and Gaussian Wigner function.
    Squeeze,
    /// Squeezing along one parameter axis.
    Sweep {
        #[arg(long, value_enum)]
        axis: Option<SweepAxis>,
        #[arg(long)]
        start: Option<f64>,
        #[arg(long)]
        stop: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// Optimize G+/G- at every point.
        #[arg(long)]
        optimize: bool,
    },
    /// Herald k phonons removed from a squeezed state.
    Subtract {
        #[arg(long)]
        k: Option<usize>,
        /// cm.json or state.json; defaults to the configured steady state.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Fock-basis Wigner function of a state file.
    Wigner {
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Best cat-state fidelity of a state file.
    Fidelity {
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        #[arg(long, value_enum)]
        parity: Option<ParityChoice>,
        #[arg(long)]
        alpha_max: Option<f64>,
        #[arg(long)]
        phase_search: bool,
    },
    /// squeeze, then subtract k = 1, 2, then Wigner and fidelity.
    Pipeline,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Squeeze => "squeeze",
            Command::Sweep { .. } => "sweep",
            Command::Subtract { .. } => "subtract",
            Command::Wigner { .. } => "wigner",
            Command::Fidelity { .. } => "fidelity",
            Command::Pipeline => "pipeline",
        }
    }

    /// Subcommand flags as config overrides, applied after `--set`.
    fn overrides(&self) -> Vec<(&'static str, Value)> {
        let mut v = Vec::new();
        let mut push = |key, value: Option<Value>| {
            if let Some(value) = value {
                v.push((key, value));
            }
        };
        match self {
            Command::Sweep {
                axis,
                start,
                stop,
                points,
                optimize,
            } => {
                push("sweep.axis", axis.map(|a| Value::from(a.key())));
                push("sweep.start", start.map(Value::from));
                push("sweep.stop", stop.map(Value::from));
                push("sweep.points", points.map(Value::from));
                push("sweep.optimize", optimize.then_some(Value::Bool(true)));
            }
            Command::Subtract { k, .. } => push("subtract.k", k.map(Value::from)),
            Command::Wigner { half_width, points, .. } => {
                push("numerics.grid_half_width", half_width.map(Value::from));
                push("numerics.grid_points", points.map(Value::from));
            }
            Command::Fidelity {
                parity,
                alpha_max,
                phase_search,
                ..
            } => {
                push("fidelity.parity", parity.map(|p| serde_json::to_value(p).unwrap_or(Value::Null)));
                push("fidelity.alpha_max", alpha_max.map(Value::from));
                push("fidelity.phase_search", phase_search.then_some(Value::Bool(true)));
            }
            Command::Squeeze | Command::Pipeline => {}
        }
        v
    }
}

fn output_dir(cli_out: Option<&Path>, cfg: &config::RunConfig) -> PathBuf {
    if let Some(dir) = cli_out {
        return dir.to_path_buf();
    }
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()) {
        return PathBuf::from(dir);
    }
    cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Resolves the configuration and runs one subcommand. The manifest is
/// written whenever the config resolves, also on failure.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let mut tree = config::load_tree(cli.config.as_deref())?;
    for assignment in &cli.set {
        config::apply_set(&mut tree, assignment)?;
    }
    for (key, value) in cli.command.overrides() {
        config::set_path(&mut tree, key, value)?;
    }
    let cfg = config::resolve(&tree)?;
    if cli.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;

    let out = formats::OutputDir::create(output_dir(cli.out.as_deref(), &cfg))?;
    let resolved = serde_json::to_value(&cfg)?;
    let mut ctx = commands::Context {
        manifest: manifest::RunManifest::start(cli.command.name(), resolved, cli.dry_run, cli.jobs),
        cfg,
        strict: cli.strict,
        dry_run: cli.dry_run,
        out,
    };
    let result = pool.install(|| match &cli.command {
        Command::Squeeze => commands::squeeze(&mut ctx),
        Command::Sweep { .. } => commands::sweep(&mut ctx),
        Command::Subtract { input, .. } => commands::subtract(&mut ctx, input.as_deref()),
        Command::Wigner { input, .. } => commands::wigner(&mut ctx, input),
        Command::Fidelity { input, .. } => commands::fidelity(&mut ctx, input),
        Command::Pipeline => commands::pipeline(&mut ctx),
    });
    ctx.manifest.finish(result.as_ref().err().map(|e| e.to_string()));
    let written = ctx.write_manifest();
    result.and(written)
}
