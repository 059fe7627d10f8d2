//! Closed-form evaluation and optimization of two-threshold policies.
//!
//! Under the policy `(theta_t, theta_r)` the sensor sleeps while the receiver
//! age is below `theta_r`; once it is not, it retransmits the stored packet
//! while that packet is younger than `theta_t` and senses a fresh one
//! otherwise. With `q = p^theta_t` and `d = theta_r (1 - q) + theta_t q`:
//!
//! ```text
//! avg_aoi    = theta_t / 2 + theta_r (theta_r - theta_t) (1 - q) / (2 d) + 1 / (1 - p)
//! avg_energy = ((1 - q) / (1 - p) * e_t + e_s) / d
//! ```
//!
//! For fixed `theta_t` the weighted cost is unimodal in `theta_r` with its
//! continuous minimizer at `sqrt(A^2 + theta_t A + 2 omega B) - A`, where
//! `A = theta_t q / (1 - q)` and `B = e_t / (1 - p) + e_s / (1 - q)`, so the
//! best integer `theta_r` is the floor or ceiling of that point (but never
//! below `theta_t`). The outer search over `theta_t` is bounded by
//! [`line_search_cap`].

mod stationary;

pub use stationary::StationaryDistribution;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{validate_channel, SystemParams};

/// Sleep below `theta_r`; at or above it, retransmit while `i < theta_t`,
/// sense-and-transmit otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TwoThresholdPolicy {
    pub theta_t: u32,
    pub theta_r: u32,
}

impl TwoThresholdPolicy {
    pub fn new(theta_t: u32, theta_r: u32) -> Result<Self> {
        if theta_t < 1 || theta_t > theta_r {
            return Err(Error::InvalidPolicy(format!(
                "two-threshold policy needs 1 <= theta_t <= theta_r, got ({theta_t}, {theta_r})"
            )));
        }
        Ok(Self { theta_t, theta_r })
    }

    /// Always sense and transmit.
    pub const ZERO_WAIT: TwoThresholdPolicy = TwoThresholdPolicy {
        theta_t: 1,
        theta_r: 1,
    };
}

impl fmt::Display for TwoThresholdPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "theta_t={} theta_r={}", self.theta_t, self.theta_r)
    }
}

/// Where a set of metrics came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Simulated,
    Grid,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::ClosedForm => "closed_form",
            Provenance::Simulated => "simulated",
            Provenance::Grid => "grid",
        })
    }
}

/// Long-run averages of a policy. `avg_aoi` includes the half-slot term of
/// the sawtooth area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfMetrics {
    pub avg_aoi: f64,
    pub avg_energy: f64,
    pub weighted_cost: f64,
    pub provenance: Provenance,
    pub stderr_aoi: f64,
    pub stderr_energy: f64,
}

impl PerfMetrics {
    pub fn closed_form(avg_aoi: f64, avg_energy: f64, omega: f64) -> Self {
        Self {
            avg_aoi,
            avg_energy,
            weighted_cost: avg_aoi + omega * avg_energy,
            provenance: Provenance::ClosedForm,
            stderr_aoi: 0.0,
            stderr_energy: 0.0,
        }
    }

    /// Standard error of `weighted_cost`, treating the two estimates as
    /// perfectly correlated (an upper bound).
    pub fn stderr_weighted(&self, omega: f64) -> f64 {
        self.stderr_aoi + omega * self.stderr_energy
    }

    /// Same averages re-weighted for a different `omega`.
    pub fn reweighted(&self, omega: f64) -> Self {
        Self {
            weighted_cost: self.avg_aoi + omega * self.avg_energy,
            ..*self
        }
    }
}

/// `p^n` evaluated as `exp(n ln p)`, flushed to zero below `1e-300`.
pub(crate) fn pow_p(p: f64, n: u32) -> f64 {
    let v = (f64::from(n) * p.ln()).exp();
    if v < 1e-300 {
        0.0
    } else {
        v
    }
}

/// Average age and energy of a two-threshold policy.
pub fn closed_form_metrics(policy: TwoThresholdPolicy, params: &SystemParams) -> Result<PerfMetrics> {
    validate_channel(params.p)?;
    let (aoi, energy) = closed_form_raw(policy, params.p, params.e_s, params.e_t);
    Ok(PerfMetrics::closed_form(aoi, energy, params.omega))
}

pub(crate) fn closed_form_raw(policy: TwoThresholdPolicy, p: f64, e_s: f64, e_t: f64) -> (f64, f64) {
    let (tt, tr) = (f64::from(policy.theta_t), f64::from(policy.theta_r));
    let q = pow_p(p, policy.theta_t);
    let d = tr * (1.0 - q) + tt * q;
    let aoi = tt / 2.0 + tr * (tr - tt) * (1.0 - q) / (2.0 * d) + 1.0 / (1.0 - p);
    let energy = ((1.0 - q) / (1.0 - p) * e_t + e_s) / d;
    (aoi, energy)
}

/// Stationary law of the recurrent chain under `policy`.
pub fn stationary_distribution(
    policy: TwoThresholdPolicy,
    params: &SystemParams,
) -> Result<StationaryDistribution> {
    StationaryDistribution::new(policy, params)
}

/// Weighted cost `avg_aoi + omega * avg_energy` of a two-threshold policy.
pub fn weighted_cost(policy: TwoThresholdPolicy, params: &SystemParams) -> f64 {
    let (aoi, energy) = closed_form_raw(policy, params.p, params.e_s, params.e_t);
    aoi + params.omega * energy
}

/// Continuous minimizer of the weighted cost over `theta_r` for fixed
/// `theta_t` (before clamping to `theta_t`).
pub fn theta_r_zero_point(theta_t: u32, params: &SystemParams) -> f64 {
    let tt = f64::from(theta_t);
    let q = pow_p(params.p, theta_t);
    let a = tt * q / (1.0 - q);
    let b = params.e_t / (1.0 - params.p) + params.e_s / (1.0 - q);
    (a * a + tt * a + 2.0 * params.omega * b).sqrt() - a
}

/// Best `theta_r` for a given `theta_t`; ties go to the smaller value.
pub fn optimal_theta_r(theta_t: u32, params: &SystemParams) -> Result<u32> {
    params.validate()?;
    if theta_t < 1 {
        return Err(Error::InvalidPolicy("theta_t must be >= 1".into()));
    }
    Ok(best_theta_r(theta_t, params).0)
}

fn best_theta_r(theta_t: u32, params: &SystemParams) -> (u32, f64) {
    let z = theta_r_zero_point(theta_t, params);
    let clamp = |x: f64| -> u32 {
        if x <= f64::from(theta_t) {
            theta_t
        } else if x >= f64::from(u32::MAX) {
            u32::MAX
        } else {
            x as u32
        }
    };
    let lo = clamp(z.floor());
    let hi = clamp(z.ceil());
    let f_lo = weighted_cost(TwoThresholdPolicy { theta_t, theta_r: lo }, params);
    let f_hi = weighted_cost(TwoThresholdPolicy { theta_t, theta_r: hi }, params);
    if f_hi < f_lo {
        (hi, f_hi)
    } else {
        (lo, f_lo)
    }
}

/// Upper end `C` of the `theta_t` line search:
/// `max(50, ceil(2 sqrt(2 omega (e_t / (1 - p) + e_s))))`.
pub fn line_search_cap(params: &SystemParams) -> u32 {
    let tail = 2.0 * (2.0 * params.omega * (params.e_t / (1.0 - params.p) + params.e_s)).sqrt();
    let tail = tail.ceil();
    if tail > 50.0 {
        tail.min(f64::from(u32::MAX / 2)) as u32
    } else {
        50
    }
}

/// Total order used to pick among candidates: by cost, then smaller
/// `theta_t`, then smaller `theta_r`.
fn candidate_order(a: &(TwoThresholdPolicy, f64), b: &(TwoThresholdPolicy, f64)) -> Ordering {
    a.1.total_cmp(&b.1)
        .then(a.0.theta_t.cmp(&b.0.theta_t))
        .then(a.0.theta_r.cmp(&b.0.theta_r))
}

/// Optimal two-threshold policy for `params` with its closed-form metrics.
pub fn optimize(params: &SystemParams) -> Result<(TwoThresholdPolicy, PerfMetrics)> {
    params.validate()?;
    let cap = line_search_cap(params);
    let best = (1..=cap)
        .map(|theta_t| {
            let (theta_r, f) = best_theta_r(theta_t, params);
            (TwoThresholdPolicy { theta_t, theta_r }, f)
        })
        .min_by(candidate_order)
        .expect("cap >= 50");
    let metrics = closed_form_metrics(best.0, params)?;
    Ok((best.0, metrics))
}

/// Best sense-and-transmit-only policy (`theta_t = 1`) found by scanning
/// `theta` in `1..=C`, where `C` is [`line_search_cap`] evaluated for the
/// bundled energy model (all energy charged per transmission).
pub fn optimize_single_threshold(params: &SystemParams) -> Result<(u32, PerfMetrics)> {
    params.validate()?;
    let bundled = SystemParams {
        e_t: params.e_t + params.e_s,
        e_s: 0.0,
        ..*params
    };
    let cap = line_search_cap(&bundled);
    let (theta, _) = (1..=cap)
        .map(|theta| (theta, weighted_cost(TwoThresholdPolicy { theta_t: 1, theta_r: theta }, params)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .expect("cap >= 50");
    let metrics = closed_form_metrics(TwoThresholdPolicy { theta_t: 1, theta_r: theta }, params)?;
    Ok((theta, metrics))
}
