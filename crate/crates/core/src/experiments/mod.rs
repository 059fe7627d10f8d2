//! Sweeps over the energy weight, baseline comparisons and policy maps.
//!
//! Everything here is deterministic in its inputs: sweep points are computed
//! in parallel but assembled in a fixed order, and simulated points reuse the
//! seeded simulator.

mod output;
pub mod svg;

pub use output::{sweep_csv, sweep_json, CSV_HEADER};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{
    extract_structure, grid_csv, value_iteration, ExtractedStructure, PolicyGrid, SolverConfig,
    ValueGrid,
};
use crate::optimizer::{
    closed_form_metrics, optimize, optimize_single_threshold, PerfMetrics, Provenance,
    TwoThresholdPolicy,
};
use crate::params::SystemParams;
use crate::sim::{simulate, PolicySpec, SimConfig};

/// Channel and energy model without the weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseParams {
    pub p: f64,
    pub e_s: f64,
    pub e_t: f64,
}

impl BaseParams {
    pub fn with_omega(&self, omega: f64) -> Result<SystemParams> {
        SystemParams::new(self.p, self.e_s, self.e_t, omega)
    }
}

/// Policies evaluated at every swept weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepPolicy {
    /// Optimized two-threshold policy.
    TwoThreshold,
    /// Best sense-and-transmit-only policy.
    SingleThreshold,
    /// Truncated ARQ for each cap on total transmissions.
    TruncatedArq { m_values: Vec<u32> },
}

impl SweepPolicy {
    pub fn default_set() -> Vec<SweepPolicy> {
        vec![
            SweepPolicy::TwoThreshold,
            SweepPolicy::SingleThreshold,
            SweepPolicy::TruncatedArq {
                m_values: (1..=10).collect(),
            },
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: BaseParams,
    /// Strictly increasing, positive.
    pub omegas: Vec<f64>,
    pub policies: Vec<SweepPolicy>,
    /// Also simulate the threshold policies at every point.
    pub validation: bool,
    /// Settings for every simulated point (truncated ARQ and validation).
    pub sim: SimConfig,
}

impl SweepSpec {
    pub fn new(base: BaseParams, omegas: Vec<f64>) -> Self {
        Self {
            base,
            omegas,
            policies: SweepPolicy::default_set(),
            validation: false,
            sim: SimConfig {
                slots: 200_000,
                ..SimConfig::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.omegas.is_empty() {
            return Err(Error::InvalidSweep("omega grid is empty".into()));
        }
        if self.omegas.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidSweep("omega values must be finite and > 0".into()));
        }
        if !self.omegas.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidSweep("omega values must be strictly increasing".into()));
        }
        for policy in &self.policies {
            if let SweepPolicy::TruncatedArq { m_values } = policy {
                if m_values.is_empty() || m_values.contains(&0) {
                    return Err(Error::InvalidSweep("truncated ARQ needs M values >= 1".into()));
                }
            }
        }
        self.base.with_omega(self.omegas[0])?;
        self.sim.validate()
    }
}

/// `count` log-spaced weights from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|k| {
                    if k + 1 == count {
                        hi
                    } else {
                        (a + (b - a) * k as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// 24 log-spaced weights in `[0.5, 100]`.
pub fn default_omega_grid() -> Vec<f64> {
    log_grid(0.5, 100.0, 24)
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub omega: f64,
    pub policy: String,
    pub theta_t: Option<u32>,
    pub theta_r: Option<u32>,
    #[serde(rename = "M")]
    pub m: Option<u32>,
    pub avg_aoi: f64,
    pub avg_energy: f64,
    pub weighted_cost: f64,
    pub stderr_aoi: f64,
    pub stderr_energy: f64,
    pub provenance: Provenance,
}

impl TradeoffPoint {
    fn new(omega: f64, policy: &str, thresholds: Option<(u32, u32)>, m: Option<u32>, metrics: &PerfMetrics) -> Self {
        let metrics = metrics.reweighted(omega);
        Self {
            omega,
            policy: policy.to_string(),
            theta_t: thresholds.map(|t| t.0),
            theta_r: thresholds.map(|t| t.1),
            m,
            avg_aoi: metrics.avg_aoi,
            avg_energy: metrics.avg_energy,
            weighted_cost: metrics.weighted_cost,
            stderr_aoi: metrics.stderr_aoi,
            stderr_energy: metrics.stderr_energy,
            provenance: metrics.provenance,
        }
    }

    pub fn stderr_weighted(&self) -> f64 {
        self.stderr_aoi + self.omega * self.stderr_energy
    }
}

pub const LABEL_TWO: &str = "two_threshold";
pub const LABEL_SINGLE: &str = "single_threshold";
pub const LABEL_ARQ: &str = "truncated_arq";

/// Evaluates every policy of `spec` at every weight, sorted by `omega`, then
/// policy label, `M`, and provenance.
pub fn sweep_tradeoff(spec: &SweepSpec) -> Result<Vec<TradeoffPoint>> {
    spec.validate()?;
    let first = spec.base.with_omega(spec.omegas[0])?;

    // truncated-ARQ averages do not depend on the weight
    let arq_ms: Vec<u32> = spec
        .policies
        .iter()
        .filter_map(|p| match p {
            SweepPolicy::TruncatedArq { m_values } => Some(m_values.clone()),
            _ => None,
        })
        .flatten()
        .collect();
    let arq: Vec<(u32, PerfMetrics)> = arq_ms
        .par_iter()
        .map(|&m| -> Result<(u32, PerfMetrics)> {
            let metrics = if m == 1 {
                closed_form_metrics(TwoThresholdPolicy::ZERO_WAIT, &first)?
            } else {
                let spec_m = PolicySpec::TruncatedArq { max_transmissions: m };
                simulate(&spec_m, &first, &spec.sim)?.metrics
            };
            Ok((m, metrics))
        })
        .collect::<Result<_>>()?;

    let per_omega: Vec<Vec<TradeoffPoint>> = spec
        .omegas
        .par_iter()
        .map(|&omega| points_at(spec, omega, &arq))
        .collect::<Result<_>>()?;

    let mut points: Vec<TradeoffPoint> = per_omega.into_iter().flatten().collect();
    points.sort_by(|a, b| {
        a.omega
            .total_cmp(&b.omega)
            .then_with(|| a.policy.cmp(&b.policy))
            .then(a.m.cmp(&b.m))
            .then(a.provenance.cmp(&b.provenance))
    });
    Ok(points)
}

fn points_at(spec: &SweepSpec, omega: f64, arq: &[(u32, PerfMetrics)]) -> Result<Vec<TradeoffPoint>> {
    let params = spec.base.with_omega(omega)?;
    let mut rows = Vec::new();
    for policy in &spec.policies {
        match policy {
            SweepPolicy::TwoThreshold => {
                let (pol, metrics) = optimize(&params)?;
                let th = Some((pol.theta_t, pol.theta_r));
                rows.push(TradeoffPoint::new(omega, LABEL_TWO, th, None, &metrics));
                if spec.validation {
                    let sim = simulate(&PolicySpec::TwoThreshold(pol), &params, &spec.sim)?;
                    rows.push(TradeoffPoint::new(omega, LABEL_TWO, th, None, &sim.metrics));
                }
            }
            SweepPolicy::SingleThreshold => {
                let (theta, metrics) = optimize_single_threshold(&params)?;
                let th = Some((1, theta));
                rows.push(TradeoffPoint::new(omega, LABEL_SINGLE, th, None, &metrics));
                if spec.validation {
                    let sim = simulate(&PolicySpec::SingleThreshold(theta), &params, &spec.sim)?;
                    rows.push(TradeoffPoint::new(omega, LABEL_SINGLE, th, None, &sim.metrics));
                }
            }
            SweepPolicy::TruncatedArq { m_values } => {
                for &(m, metrics) in arq.iter().filter(|(m, _)| m_values.contains(m)) {
                    rows.push(TradeoffPoint::new(omega, LABEL_ARQ, None, Some(m), &metrics));
                }
            }
        }
    }
    Ok(rows)
}

/// Minimum weighted cost `F*(omega)` of the optimal two-threshold policy.
pub fn weighted_cost_curve(base: &BaseParams, omegas: &[f64]) -> Result<Vec<(f64, f64)>> {
    omegas
        .iter()
        .map(|&omega| {
            let (_, m) = optimize(&base.with_omega(omega)?)?;
            Ok((omega, m.weighted_cost))
        })
        .collect()
}

/// Solved and rendered action table.
#[derive(Debug, Clone)]
pub struct PolicyMap {
    pub values: ValueGrid,
    pub policy: PolicyGrid,
    pub structure: ExtractedStructure,
    pub csv: String,
    pub svg: String,
}

/// Solves the discounted problem on a grid and renders the action map with
/// the extracted thresholds annotated.
pub fn policy_map(params: &SystemParams, solver: &SolverConfig, margin: usize) -> Result<PolicyMap> {
    let (values, policy) = value_iteration(params, solver)?;
    let structure = extract_structure(&policy, margin)?;
    let csv = grid_csv(&values, &policy);
    let svg = svg::policy_map_svg(&policy, &structure, params, margin);
    Ok(PolicyMap {
        values,
        policy,
        structure,
        csv,
        svg,
    })
}

/// A labelled age/energy curve for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffCurve {
    pub label: String,
    /// `(avg_energy, avg_aoi)` pairs.
    pub points: Vec<(f64, f64)>,
}

/// Closed-form curves of `policy` out of a sweep, one per label (and `M` for
/// truncated ARQ).
pub fn curves_from_points(points: &[TradeoffPoint], prefix: &str) -> Vec<TradeoffCurve> {
    let mut curves: Vec<TradeoffCurve> = Vec::new();
    for pt in points.iter().filter(|p| p.provenance != Provenance::Simulated || p.policy == LABEL_ARQ) {
        let label = match pt.m {
            Some(m) => format!("{prefix}{} M={m}", pt.policy),
            None => format!("{prefix}{}", pt.policy),
        };
        let xy = (pt.avg_energy, pt.avg_aoi);
        match curves.iter_mut().find(|c| c.label == label) {
            Some(c) => {
                if !c.points.contains(&xy) {
                    c.points.push(xy)
                }
            }
            None => curves.push(TradeoffCurve {
                label,
                points: vec![xy],
            }),
        }
    }
    curves
}

/// Two-threshold tradeoff curves for `p` in `{0.1, 0.3, 0.5}` with unit
/// energies, plus the single-threshold baseline for each.
pub fn tradeoff_by_channel(omegas: &[f64]) -> Result<Vec<TradeoffCurve>> {
    let mut curves = Vec::new();
    for p in [0.1, 0.3, 0.5] {
        let mut spec = SweepSpec::new(BaseParams { p, e_s: 1.0, e_t: 1.0 }, omegas.to_vec());
        spec.policies = vec![SweepPolicy::TwoThreshold, SweepPolicy::SingleThreshold];
        curves.extend(curves_from_points(&sweep_tradeoff(&spec)?, &format!("p={p} ")));
    }
    Ok(curves)
}

/// Two-threshold tradeoff curves at `p = 0.3` with `e_s + e_t = 2` and
/// `e_s / e_t` in `{1/3, 1, 3}`, plus the (ratio-independent) single-threshold
/// baseline.
pub fn tradeoff_by_energy_split(omegas: &[f64]) -> Result<Vec<TradeoffCurve>> {
    let mut curves = Vec::new();
    for (e_s, e_t, name) in [(0.5, 1.5, "1/3"), (1.0, 1.0, "1"), (1.5, 0.5, "3")] {
        let mut spec = SweepSpec::new(BaseParams { p: 0.3, e_s, e_t }, omegas.to_vec());
        spec.policies = vec![SweepPolicy::TwoThreshold];
        curves.extend(curves_from_points(&sweep_tradeoff(&spec)?, &format!("Es/Et={name} ")));
    }
    let mut spec = SweepSpec::new(BaseParams { p: 0.3, e_s: 1.0, e_t: 1.0 }, omegas.to_vec());
    spec.policies = vec![SweepPolicy::SingleThreshold];
    curves.extend(curves_from_points(&sweep_tradeoff(&spec)?, ""));
    Ok(curves)
}
