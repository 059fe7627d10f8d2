//! Seeded slot-by-slot Monte-Carlo simulation.
//!
//! Each batch owns a ChaCha8 stream: the generator is seeded with
//! `ChaCha8Rng::seed_from_u64(seed)` and batch `b` reads stream `b`
//! (`set_stream(b)`). One channel-failure indicator is drawn per slot whether
//! or not the slot transmits, so policies compared under the same seed see
//! the same channel realization. Batches run in parallel and are reduced in
//! batch order, making results bit-identical for equal inputs.

mod validate;

pub use validate::{empirical_vs_closed_form, ComparisonReport, MetricComparison, Z_FAIL};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{step, Action, AoIState, PolicyGrid};
use crate::optimizer::{PerfMetrics, Provenance, TwoThresholdPolicy};
use crate::params::{validate_channel, SystemParams};

/// A decision rule the simulator can run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicySpec {
    TwoThreshold(TwoThresholdPolicy),
    /// Per-row thresholds `theta(1..theta_r)` below `theta_r`: retransmit
    /// while `i < theta(j)`, sleep otherwise. Above, as `TwoThreshold`.
    GeneralThreshold {
        row_thresholds: Vec<u32>,
        theta_t: u32,
        theta_r: u32,
    },
    /// Sense and transmit whenever `j >= theta`, sleep otherwise.
    SingleThreshold(u32),
    /// Never sleeps; a packet is sent at most `max_transmissions` times in
    /// total (first transmission included) before a fresh one is sensed.
    TruncatedArq { max_transmissions: u32 },
    /// Lookup in a solved action table, indices clamped into the grid.
    Table(PolicyGrid),
}

impl PolicySpec {
    /// Truncated ARQ allowing `m` retransmissions after the first attempt.
    pub fn truncated_arq_retransmissions(m: u32) -> Self {
        PolicySpec::TruncatedArq {
            max_transmissions: m + 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PolicySpec::TwoThreshold(p) => TwoThresholdPolicy::new(p.theta_t, p.theta_r).map(|_| ()),
            PolicySpec::GeneralThreshold {
                row_thresholds,
                theta_t,
                theta_r,
            } => {
                TwoThresholdPolicy::new(*theta_t, *theta_r)?;
                if row_thresholds.len() + 1 != *theta_r as usize {
                    return Err(Error::InvalidPolicy(format!(
                        "expected {} row thresholds, got {}",
                        theta_r - 1,
                        row_thresholds.len()
                    )));
                }
                if !row_thresholds.windows(2).all(|w| w[0] <= w[1])
                    || row_thresholds.iter().any(|&t| t < 1 || t > *theta_t)
                {
                    return Err(Error::InvalidPolicy(
                        "row thresholds must be non-decreasing within 1..=theta_t".into(),
                    ));
                }
                Ok(())
            }
            PolicySpec::SingleThreshold(theta) if *theta < 1 => {
                Err(Error::InvalidPolicy("single threshold must be >= 1".into()))
            }
            PolicySpec::TruncatedArq { max_transmissions } if *max_transmissions < 1 => {
                Err(Error::InvalidPolicy("truncated ARQ needs M >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PolicySpec::TwoThreshold(_) => "two_threshold",
            PolicySpec::GeneralThreshold { .. } => "general_threshold",
            PolicySpec::SingleThreshold(_) => "single_threshold",
            PolicySpec::TruncatedArq { .. } => "truncated_arq",
            PolicySpec::Table(_) => "table",
        }
    }
}

/// Per-packet bookkeeping carried by policies that look past the ages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketMemory {
    /// Transmissions of the stored packet so far.
    pub transmissions: u32,
    /// The stored packet has reached the receiver (or none exists yet).
    pub delivered: bool,
}

impl Default for PacketMemory {
    fn default() -> Self {
        Self {
            transmissions: 0,
            delivered: true,
        }
    }
}

impl PacketMemory {
    pub fn record(&mut self, action: Action, success: bool) {
        match action {
            Action::Sleep => {}
            Action::Retransmit => {
                self.transmissions += 1;
                self.delivered |= success;
            }
            Action::SenseTransmit => {
                self.transmissions = 1;
                self.delivered = success;
            }
            Action::SenseOnly => {
                self.transmissions = 0;
                self.delivered = false;
            }
        }
    }
}

/// Action taken by `policy` in `state`.
pub fn decide(policy: &PolicySpec, state: AoIState, memory: &PacketMemory) -> Action {
    let AoIState { i, j } = state;
    match policy {
        PolicySpec::TwoThreshold(TwoThresholdPolicy { theta_t, theta_r }) => {
            if j < *theta_r {
                Action::Sleep
            } else if i < *theta_t {
                Action::Retransmit
            } else {
                Action::SenseTransmit
            }
        }
        PolicySpec::GeneralThreshold {
            row_thresholds,
            theta_t,
            theta_r,
        } => {
            if j < *theta_r {
                if i < row_thresholds[(j - 1) as usize] {
                    Action::Retransmit
                } else {
                    Action::Sleep
                }
            } else if i < *theta_t {
                Action::Retransmit
            } else {
                Action::SenseTransmit
            }
        }
        PolicySpec::SingleThreshold(theta) => {
            if j >= *theta {
                Action::SenseTransmit
            } else {
                Action::Sleep
            }
        }
        PolicySpec::TruncatedArq { max_transmissions } => {
            if memory.delivered || memory.transmissions >= *max_transmissions {
                Action::SenseTransmit
            } else {
                Action::Retransmit
            }
        }
        PolicySpec::Table(grid) => grid.get_clamped(i, j),
    }
}

/// One simulated slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub state: AoIState,
    pub action: Action,
    /// Channel outcome drawn for this slot (meaningful only if transmitting).
    pub success: bool,
    pub next: AoIState,
}

/// Infinite iterator over the slots of one seeded run starting at `(1, 1)`.
#[derive(Debug, Clone)]
pub struct SamplePath<'a> {
    policy: &'a PolicySpec,
    p: f64,
    rng: ChaCha8Rng,
    state: AoIState,
    memory: PacketMemory,
}

impl<'a> SamplePath<'a> {
    pub fn new(policy: &'a PolicySpec, p: f64, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            policy,
            p,
            rng,
            state: AoIState::INITIAL,
            memory: PacketMemory::default(),
        }
    }
}

impl Iterator for SamplePath<'_> {
    type Item = Slot;

    fn next(&mut self) -> Option<Slot> {
        let state = self.state;
        let action = decide(self.policy, state, &self.memory);
        let success = !self.rng.random_bool(self.p);
        let next = step(state, action, success);
        debug_assert!(
            !(action.transmits() && success) || next.j == next.i,
            "delivered packet must align receiver and transmitter ages"
        );
        self.memory.record(action, success);
        self.state = next;
        Some(Slot {
            state,
            action,
            success,
            next,
        })
    }
}

/// Horizon and replication settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Slots per batch, warmup included.
    pub slots: u64,
    /// Leading slots of each batch excluded from the averages.
    pub warmup: u64,
    pub seed: u64,
    pub batches: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            slots: 1_000_000,
            warmup: 10_000,
            seed: 0,
            batches: 10,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.slots == 0 {
            return Err(Error::InvalidSimConfig("slots must be >= 1".into()));
        }
        if self.warmup >= self.slots {
            return Err(Error::InvalidSimConfig(format!(
                "warmup ({}) must be smaller than slots ({})",
                self.warmup, self.slots
            )));
        }
        if self.batches == 0 {
            return Err(Error::InvalidSimConfig("batches must be >= 1".into()));
        }
        Ok(())
    }

    pub fn window(&self) -> u64 {
        self.slots - self.warmup
    }
}

/// Per-action tallies, in action-index order.
pub type ActionCounts = [u64; 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub avg_aoi: f64,
    pub avg_energy: f64,
    pub action_counts: ActionCounts,
    /// `visit_histogram[j - 1]`: measured slots that started with AoIR `j`.
    pub visit_histogram: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub metrics: PerfMetrics,
    pub action_counts: ActionCounts,
    pub visit_histogram: Vec<u64>,
    pub batches: Vec<BatchResult>,
}

fn run_batch(policy: &PolicySpec, params: &SystemParams, config: &SimConfig, batch: u32) -> BatchResult {
    let mut age_sum: u64 = 0;
    let mut energy_sum = 0.0;
    let mut counts = [0u64; 4];
    let mut hist: Vec<u64> = Vec::new();
    let path = SamplePath::new(policy, params.p, config.seed, u64::from(batch));
    for slot in path.take(config.slots as usize).skip(config.warmup as usize) {
        let j = slot.state.j;
        age_sum += u64::from(j);
        energy_sum += slot.action.energy(params.e_s, params.e_t);
        counts[slot.action.index()] += 1;
        let idx = (j - 1) as usize;
        if idx >= hist.len() {
            hist.resize(idx + 1, 0);
        }
        hist[idx] += 1;
    }
    let n = config.window() as f64;
    BatchResult {
        // half-slot term of the sawtooth area
        avg_aoi: age_sum as f64 / n + 0.5,
        avg_energy: energy_sum / n,
        action_counts: counts,
        visit_histogram: hist,
    }
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs `config.batches` independent replications and reports batch-mean
/// metrics with standard errors across batches.
///
/// With a single batch the standard error is estimated from ten equal
/// sub-windows of that batch instead.
pub fn simulate(policy: &PolicySpec, params: &SystemParams, config: &SimConfig) -> Result<SimResult> {
    validate_channel(params.p)?;
    params.validate()?;
    policy.validate()?;
    config.validate()?;

    let batches: Vec<BatchResult> = if config.batches == 1 {
        vec![run_batch(policy, params, config, 0)]
    } else {
        (0..config.batches)
            .into_par_iter()
            .map(|b| run_batch(policy, params, config, b))
            .collect()
    };

    let (aoi, energy, se_aoi, se_energy) = if config.batches == 1 {
        single_batch_stderr(policy, params, config, &batches[0])
    } else {
        let (aoi, se_aoi) = mean_and_stderr(&batches.iter().map(|b| b.avg_aoi).collect::<Vec<_>>());
        let (energy, se_energy) =
            mean_and_stderr(&batches.iter().map(|b| b.avg_energy).collect::<Vec<_>>());
        (aoi, energy, se_aoi, se_energy)
    };

    let mut action_counts = [0u64; 4];
    let mut visit_histogram: Vec<u64> = Vec::new();
    for b in &batches {
        for (total, c) in action_counts.iter_mut().zip(b.action_counts) {
            *total += c;
        }
        if b.visit_histogram.len() > visit_histogram.len() {
            visit_histogram.resize(b.visit_histogram.len(), 0);
        }
        for (total, c) in visit_histogram.iter_mut().zip(&b.visit_histogram) {
            *total += c;
        }
    }

    Ok(SimResult {
        metrics: PerfMetrics {
            avg_aoi: aoi,
            avg_energy: energy,
            weighted_cost: aoi + params.omega * energy,
            provenance: Provenance::Simulated,
            stderr_aoi: se_aoi,
            stderr_energy: se_energy,
        },
        action_counts,
        visit_histogram,
        batches,
    })
}

fn single_batch_stderr(
    policy: &PolicySpec,
    params: &SystemParams,
    config: &SimConfig,
    batch: &BatchResult,
) -> (f64, f64, f64, f64) {
    const SUB: u64 = 10;
    let len = config.window() / SUB;
    if len == 0 {
        return (batch.avg_aoi, batch.avg_energy, 0.0, 0.0);
    }
    let mut aoi = Vec::with_capacity(SUB as usize);
    let mut energy = Vec::with_capacity(SUB as usize);
    let path = SamplePath::new(policy, params.p, config.seed, 0).skip(config.warmup as usize);
    let mut it = path;
    for _ in 0..SUB {
        let (mut a, mut e) = (0u64, 0.0);
        for slot in it.by_ref().take(len as usize) {
            a += u64::from(slot.state.j);
            e += slot.action.energy(params.e_s, params.e_t);
        }
        aoi.push(a as f64 / len as f64 + 0.5);
        energy.push(e / len as f64);
    }
    let (_, se_a) = mean_and_stderr(&aoi);
    let (_, se_e) = mean_and_stderr(&energy);
    (batch.avg_aoi, batch.avg_energy, se_a, se_e)
}

/// Whether `state` lies in the recurrent set of the two-threshold policy:
/// the diagonal up to `theta_r`, or `(i, theta_r + k theta_t + i)` with
/// `1 <= i <= theta_t`.
pub fn in_recurrent_set(policy: TwoThresholdPolicy, state: AoIState) -> bool {
    let TwoThresholdPolicy { theta_t, theta_r } = policy;
    let AoIState { i, j } = state;
    if i == j && i <= theta_r {
        return true;
    }
    i >= 1 && i <= theta_t && j >= theta_r + i && (j - theta_r - i) % theta_t == 0
}
