use serde::{Deserialize, Serialize};

use super::{pow_p, TwoThresholdPolicy};
use crate::error::Result;
use crate::params::{validate_channel, SystemParams};

/// Stationary law of the recurrent chain of a two-threshold policy.
///
/// Every recurrent state has a distinct receiver age, so the chain is indexed
/// by `j` alone:
///
/// * `j <= theta_t`: `pi_0 (1 - p^j) / (1 - p^theta_t)`
/// * `theta_t < j <= theta_r`: `pi_0`
/// * `j > theta_r`: `pi_0 p^(j - theta_r)`
///
/// The tail is geometric and kept in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub policy: TwoThresholdPolicy,
    pub p: f64,
    pub pi0: f64,
    /// `theta_r`: from here on the mass decays geometrically with ratio `p`.
    pub tail_start: u32,
}

impl StationaryDistribution {
    pub fn new(policy: TwoThresholdPolicy, params: &SystemParams) -> Result<Self> {
        validate_channel(params.p)?;
        let q = pow_p(params.p, policy.theta_t);
        let d = f64::from(policy.theta_r) * (1.0 - q) + f64::from(policy.theta_t) * q;
        Ok(Self {
            policy,
            p: params.p,
            pi0: (1.0 - q) / d,
            tail_start: policy.theta_r,
        })
    }

    /// Probability of the recurrent state with receiver age `j` (zero for
    /// `j = 0`).
    pub fn pi(&self, j: u32) -> f64 {
        let TwoThresholdPolicy { theta_t, theta_r } = self.policy;
        if j == 0 {
            0.0
        } else if j <= theta_t {
            self.pi0 * (1.0 - pow_p(self.p, j)) / (1.0 - pow_p(self.p, theta_t))
        } else if j <= theta_r {
            self.pi0
        } else {
            self.pi0 * pow_p(self.p, j - theta_r)
        }
    }

    /// Mass of `j > theta_r`: `pi_0 p / (1 - p)`.
    pub fn tail_mass(&self) -> f64 {
        self.pi0 * self.p / (1.0 - self.p)
    }

    /// Exact total mass: explicit head plus geometric tail.
    pub fn total_mass(&self) -> f64 {
        (1..=self.tail_start).map(|j| self.pi(j)).sum::<f64>() + self.tail_mass()
    }

    /// `sum_j j pi_j`, with the tail `sum_{k>=1} (theta_r + k) pi_0 p^k` in
    /// closed form.
    pub fn mean_age(&self) -> f64 {
        let head: f64 = (1..=self.tail_start).map(|j| f64::from(j) * self.pi(j)).sum();
        let p = self.p;
        let tail = self.pi0 * (f64::from(self.tail_start) * p / (1.0 - p) + p / ((1.0 - p) * (1.0 - p)));
        head + tail
    }

    /// Average energy from the stationary law: a fresh packet is sensed in
    /// states `j = theta_r + m theta_t` and the stored one is resent in the
    /// `theta_t - 1` states after each of them. The sums over `m` are run
    /// until the terms stop contributing.
    pub fn mean_energy(&self, e_s: f64, e_t: f64) -> f64 {
        let TwoThresholdPolicy { theta_t, theta_r } = self.policy;
        let mut total = 0.0;
        for m in 0u32.. {
            let base = theta_r + m * theta_t;
            let lead = self.pi(base);
            total += (e_t + e_s) * lead;
            total += (1..theta_t).map(|n| e_t * self.pi(base + n)).sum::<f64>();
            if lead < 1e-20 * self.pi0 || base > u32::MAX / 2 {
                break;
            }
        }
        total
    }
}
