//! Layered run configuration: command-line flags over a config file over
//! documented defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sleepsense::experiments::default_omega_grid;
use sleepsense::experiments::log_grid;
use sleepsense::mdp::{SolveMode, SolverConfig, DEFAULT_MARGIN};
use sleepsense::params::SystemParams;
use sleepsense::sim::SimConfig;

use crate::CliError;

/// Environment variable supplying the seed when neither a flag nor the config
/// file sets one.
pub const SEED_ENV: &str = "AOI_SEED";

pub const DEFAULT_P: f64 = 0.2;
pub const DEFAULT_E_S: f64 = 1.0;
pub const DEFAULT_E_T: f64 = 1.0;
pub const DEFAULT_OMEGA: f64 = 2.0;
pub const DEFAULT_ALPHA: f64 = 0.999;
pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum PolicyKind {
    SingleThreshold,
    TruncatedArq,
    TwoThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Mode {
    Reduced,
    Extended,
}

impl From<Mode> for SolveMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Reduced => SolveMode::Reduced,
            Mode::Extended => SolveMode::Extended,
        }
    }
}

impl From<SolveMode> for Mode {
    fn from(m: SolveMode) -> Self {
        match m {
            SolveMode::Reduced => Mode::Reduced,
            SolveMode::Extended => Mode::Extended,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

macro_rules! layer {
    ($name:ident { $($field:ident : $ty:ty),* $(,)? }) => {
        #[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            $(pub $field: Option<$ty>,)*
        }

        impl $name {
            /// Field-wise `self` where set, `lower` otherwise.
            pub fn over(self, lower: Self) -> Self {
                Self { $($field: self.$field.or(lower.$field),)* }
            }
        }
    };
}

layer!(ParamsLayer { p: f64, e_s: f64, e_t: f64, omega: f64, alpha: f64 });
layer!(SolverLayer { i_max: usize, j_max: usize, tol: f64, max_iter: usize, mode: Mode, margin: usize });
layer!(SimLayer { slots: u64, warmup: u64, seed: u64, batches: u32 });
layer!(PolicyLayer { kind: PolicyKind, theta_t: u32, theta_r: u32, m: u32 });
layer!(SweepLayer {
    omegas: Vec<f64>,
    omega_min: f64,
    omega_max: f64,
    omega_count: usize,
    policies: Vec<PolicyKind>,
    m_values: Vec<u32>,
    validation: bool,
});
layer!(OutputLayer { directory: PathBuf, formats: Vec<Format> });

/// One configuration layer: a config file, or the command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigLayer {
    pub params: ParamsLayer,
    pub solver: SolverLayer,
    pub sim: SimLayer,
    pub policy: PolicyLayer,
    pub sweep: SweepLayer,
    pub output: OutputLayer,
}

impl ConfigLayer {
    pub fn over(self, lower: Self) -> Self {
        // an omega grid is taken whole from one layer
        let own_grid = self.sweep.omegas.is_some()
            || self.sweep.omega_min.is_some()
            || self.sweep.omega_max.is_some()
            || self.sweep.omega_count.is_some();
        let mut lower_sweep = lower.sweep;
        if own_grid {
            lower_sweep.omegas = None;
            lower_sweep.omega_min = None;
            lower_sweep.omega_max = None;
            lower_sweep.omega_count = None;
        }
        Self {
            params: self.params.over(lower.params),
            solver: self.solver.over(lower.solver),
            sim: self.sim.over(lower.sim),
            policy: self.policy.over(lower.policy),
            sweep: self.sweep.over(lower_sweep),
            output: self.output.over(lower.output),
        }
    }

    /// Reads a JSON or TOML file, chosen by extension (`.json`, `.toml`);
    /// other extensions are tried as JSON, then TOML.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        let parsed = match ext {
            "json" => serde_json::from_str(&text).map_err(|e| e.to_string()),
            "toml" => toml::from_str(&text).map_err(|e| e.to_string()),
            _ => serde_json::from_str(&text)
                .or_else(|_| toml::from_str(&text))
                .map_err(|e: toml::de::Error| e.to_string()),
        };
        parsed.map_err(|message| CliError::Config {
            path: path.to_path_buf(),
            message,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsSection {
    pub p: f64,
    pub e_s: f64,
    pub e_t: f64,
    pub omega: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSection {
    pub i_max: usize,
    pub j_max: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub mode: Mode,
    /// Rows and columns next to the grid edge ignored when reading thresholds.
    pub margin: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySection {
    pub kind: PolicyKind,
    /// Unset thresholds are replaced by the optimized ones.
    pub theta_t: Option<u32>,
    pub theta_r: Option<u32>,
    /// Cap on total transmissions of a packet under truncated ARQ.
    pub m: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSection {
    pub omegas: Vec<f64>,
    pub policies: Vec<PolicyKind>,
    pub m_values: Vec<u32>,
    pub validation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

/// Fully resolved configuration; serialized verbatim into every `meta` block
/// and accepted back as a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: ParamsSection,
    pub solver: SolverSection,
    pub sim: SimConfig,
    pub policy: PolicySection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

fn seed_from_env() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            CliError::Usage(format!("environment variable {SEED_ENV} must be an unsigned integer, got {v:?}"))
        }),
        Err(_) => Ok(None),
    }
}

impl RunConfig {
    /// Applies defaults to the merged layer.
    pub fn resolve(layer: ConfigLayer) -> Result<Self, CliError> {
        let solver_default = SolverConfig::default();
        let sim_default = SimConfig::default();
        let ConfigLayer {
            params,
            solver,
            sim,
            policy,
            sweep,
            output,
        } = layer;
        let seed = match sim.seed {
            Some(s) => s,
            None => seed_from_env()?.unwrap_or(sim_default.seed),
        };
        let omegas = match sweep.omegas {
            Some(list) => list,
            None if sweep.omega_min.is_none() && sweep.omega_max.is_none() && sweep.omega_count.is_none() => {
                default_omega_grid()
            }
            None => log_grid(
                sweep.omega_min.unwrap_or(0.5),
                sweep.omega_max.unwrap_or(100.0),
                sweep.omega_count.unwrap_or(24),
            ),
        };
        Ok(Self {
            params: ParamsSection {
                p: params.p.unwrap_or(DEFAULT_P),
                e_s: params.e_s.unwrap_or(DEFAULT_E_S),
                e_t: params.e_t.unwrap_or(DEFAULT_E_T),
                omega: params.omega.unwrap_or(DEFAULT_OMEGA),
                alpha: params.alpha.unwrap_or(DEFAULT_ALPHA),
            },
            solver: SolverSection {
                i_max: solver.i_max.unwrap_or(solver_default.i_max),
                j_max: solver.j_max.unwrap_or(solver_default.j_max),
                tol: solver.tol.unwrap_or(solver_default.tol),
                max_iter: solver.max_iter.unwrap_or(solver_default.max_iter),
                mode: solver.mode.unwrap_or(solver_default.mode.into()),
                margin: solver.margin.unwrap_or(DEFAULT_MARGIN),
            },
            sim: SimConfig {
                slots: sim.slots.unwrap_or(sim_default.slots),
                warmup: sim.warmup.unwrap_or(sim_default.warmup),
                seed,
                batches: sim.batches.unwrap_or(sim_default.batches),
            },
            policy: PolicySection {
                kind: policy.kind.unwrap_or(PolicyKind::TwoThreshold),
                theta_t: policy.theta_t,
                theta_r: policy.theta_r,
                m: policy.m.unwrap_or(2),
            },
            sweep: SweepSection {
                omegas,
                policies: sweep.policies.unwrap_or_else(|| {
                    vec![PolicyKind::TwoThreshold, PolicyKind::SingleThreshold, PolicyKind::TruncatedArq]
                }),
                m_values: sweep.m_values.unwrap_or_else(|| (1..=10).collect()),
                validation: sweep.validation.unwrap_or(false),
            },
            output: OutputSection {
                directory: output.directory.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
                formats: output.formats.unwrap_or_else(|| vec![Format::Csv, Format::Json, Format::Svg]),
            },
        })
    }

    pub fn system_params(&self) -> Result<SystemParams, CliError> {
        let p = &self.params;
        Ok(SystemParams::with_alpha(p.p, p.e_s, p.e_t, p.omega, p.alpha)?)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            i_max: s.i_max,
            j_max: s.j_max,
            tol: s.tol,
            max_iter: s.max_iter,
            mode: s.mode.into(),
        }
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }
}
