use serde::{Deserialize, Serialize};

use super::{simulate, PolicySpec, SimConfig};
use crate::error::{Error, Result};
use crate::optimizer::{closed_form_metrics, PerfMetrics, TwoThresholdPolicy};
use crate::params::SystemParams;

/// `|z|` above this counts as disagreement.
pub const Z_FAIL: f64 = 4.0;

/// Shortest measurement window (slots per batch after warmup) accepted for
/// a comparison.
pub const MIN_WINDOW: u64 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub closed_form: f64,
    pub simulated: f64,
    pub stderr: f64,
    pub z: f64,
    pub relative_error: f64,
}

impl MetricComparison {
    fn new(closed_form: f64, simulated: f64, stderr: f64) -> Self {
        let diff = simulated - closed_form;
        let z = if stderr > 0.0 {
            diff / stderr
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Self {
            closed_form,
            simulated,
            stderr,
            z,
            relative_error: diff.abs() / closed_form.abs(),
        }
    }

    pub fn passed(&self) -> bool {
        self.z.abs() <= Z_FAIL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub policy: TwoThresholdPolicy,
    pub closed_form: PerfMetrics,
    pub simulated: PerfMetrics,
    pub aoi: MetricComparison,
    pub energy: MetricComparison,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.aoi.passed() && self.energy.passed()
    }
}

/// Simulates `policy` and scores the averages against their closed forms.
pub fn empirical_vs_closed_form(
    policy: TwoThresholdPolicy,
    params: &SystemParams,
    config: &SimConfig,
) -> Result<ComparisonReport> {
    config.validate()?;
    if config.window() < MIN_WINDOW {
        return Err(Error::InvalidSimConfig(format!(
            "measurement window of {} slots is too short for a comparison (need >= {MIN_WINDOW})",
            config.window()
        )));
    }
    let closed = closed_form_metrics(policy, params)?;
    let sim = simulate(&PolicySpec::TwoThreshold(policy), params, config)?.metrics;
    Ok(ComparisonReport {
        policy,
        closed_form: closed,
        simulated: sim,
        aoi: MetricComparison::new(closed.avg_aoi, sim.avg_aoi, sim.stderr_aoi),
        energy: MetricComparison::new(closed.avg_energy, sim.avg_energy, sim.stderr_energy),
    })
}
