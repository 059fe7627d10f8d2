//! Command-line driver: `solve`, `optimize`, `simulate`, `sweep`, `map` and
//! `validate`, each writing its artifacts to `<out>/<subcommand>/<timestamp>/`
//! and printing a one-line summary.
//!
//! Exit codes: 0 on success, 1 on usage or parameter errors, 2 when
//! `validate` finds a simulation/closed-form disagreement.

mod commands;
pub mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{ConfigLayer, Format, Mode, OutputLayer, ParamsLayer, PolicyKind, PolicyLayer, RunConfig, SimLayer, SolverLayer, SweepLayer};

pub use output::TIMESTAMP_ENV;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config file {}: {message}", path.display())]
    Config { path: PathBuf, message: String },
    #[error(transparent)]
    Model(#[from] sleepsense::Error),
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Parser)]
#[command(name = "sleepsense", version, about = "Age-of-information / energy tradeoff toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the discounted problem by value iteration and read off thresholds.
    Solve(Flags),
    /// Optimize the two-threshold policy from the closed forms.
    Optimize(Flags),
    /// Simulate a policy and report its empirical averages.
    Simulate(Flags),
    /// Sweep the energy weight and compare against the baselines.
    Sweep(Flags),
    /// Render the solved action map.
    Map(Flags),
    /// Compare simulation against the closed forms (exit 2 on disagreement).
    Validate(Flags),
}

#[derive(Debug, Clone, Args)]
struct Flags {
    /// JSON or TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Channel erasure probability, in (0, 1).
    #[arg(long)]
    p: Option<f64>,
    /// Energy of one sensing action.
    #[arg(long)]
    es: Option<f64>,
    /// Energy of one transmission.
    #[arg(long)]
    et: Option<f64>,
    /// Weight on average energy.
    #[arg(long)]
    omega: Option<f64>,
    /// Discount factor used by value iteration.
    #[arg(long)]
    alpha: Option<f64>,

    #[arg(long)]
    i_max: Option<usize>,
    #[arg(long)]
    j_max: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Grid rows/columns at the edge ignored when reading thresholds.
    #[arg(long)]
    margin: Option<usize>,

    /// Slots per batch, warmup included.
    #[arg(long)]
    slots: Option<u64>,
    #[arg(long)]
    warmup: Option<u64>,
    /// Base seed (falls back to the AOI_SEED environment variable).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    batches: Option<u32>,

    /// Policy to simulate or validate.
    #[arg(long, value_enum)]
    policy: Option<PolicyKind>,
    #[arg(long)]
    theta_t: Option<u32>,
    #[arg(long)]
    theta_r: Option<u32>,
    /// Cap on total transmissions per packet for truncated ARQ.
    #[arg(long)]
    m: Option<u32>,

    /// Explicit comma-separated omega grid.
    #[arg(long, value_delimiter = ',')]
    omegas: Option<Vec<f64>>,
    #[arg(long)]
    omega_min: Option<f64>,
    #[arg(long)]
    omega_max: Option<f64>,
    #[arg(long)]
    omega_count: Option<usize>,
    /// Policies compared in a sweep.
    #[arg(long, value_enum, value_delimiter = ',')]
    sweep_policies: Option<Vec<PolicyKind>>,
    /// Truncated-ARQ caps compared in a sweep.
    #[arg(long, value_delimiter = ',')]
    m_values: Option<Vec<u32>>,
    /// Also simulate every threshold policy of a sweep.
    #[arg(long)]
    validation: bool,

    /// Root output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Artifact formats to write.
    #[arg(long, value_enum, value_delimiter = ',')]
    formats: Option<Vec<Format>>,
}

impl Flags {
    fn layer(&self) -> ConfigLayer {
        ConfigLayer {
            params: ParamsLayer {
                p: self.p,
                e_s: self.es,
                e_t: self.et,
                omega: self.omega,
                alpha: self.alpha,
            },
            solver: SolverLayer {
                i_max: self.i_max,
                j_max: self.j_max,
                tol: self.tol,
                max_iter: self.max_iter,
                mode: self.mode,
                margin: self.margin,
            },
            sim: SimLayer {
                slots: self.slots,
                warmup: self.warmup,
                seed: self.seed,
                batches: self.batches,
            },
            policy: PolicyLayer {
                kind: self.policy,
                theta_t: self.theta_t,
                theta_r: self.theta_r,
                m: self.m,
            },
            sweep: SweepLayer {
                omegas: self.omegas.clone(),
                omega_min: self.omega_min,
                omega_max: self.omega_max,
                omega_count: self.omega_count,
                policies: self.sweep_policies.clone(),
                m_values: self.m_values.clone(),
                validation: self.validation.then_some(true),
            },
            output: OutputLayer {
                directory: self.out.clone(),
                formats: self.formats.clone(),
            },
        }
    }

    fn resolve(&self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => ConfigLayer::load(path)?,
            None => ConfigLayer::default(),
        };
        RunConfig::resolve(self.layer().over(file))
    }
}

/// Result of a successful run.
pub(crate) enum Outcome {
    Done,
    ValidationFailed,
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (name, flags) = match &cli.command {
        Command::Solve(f) => ("solve", f),
        Command::Optimize(f) => ("optimize", f),
        Command::Simulate(f) => ("simulate", f),
        Command::Sweep(f) => ("sweep", f),
        Command::Map(f) => ("map", f),
        Command::Validate(f) => ("validate", f),
    };
    let result = flags.resolve().and_then(|cfg| {
        cfg.system_params()?;
        match &cli.command {
            Command::Solve(_) => commands::solve(name, &cfg),
            Command::Optimize(_) => commands::optimize(name, &cfg),
            Command::Simulate(_) => commands::simulate(name, &cfg),
            Command::Sweep(_) => commands::sweep(name, &cfg),
            Command::Map(_) => commands::map(name, &cfg),
            Command::Validate(_) => commands::validate(name, &cfg),
        }
    });
    match result {
        Ok(Outcome::Done) => 0,
        Ok(Outcome::ValidationFailed) => 2,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
