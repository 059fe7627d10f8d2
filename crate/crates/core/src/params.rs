use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Default discount factor used when the discounted problem stands in for the
/// average-cost one.
pub const DEFAULT_ALPHA: f64 = 0.999;

/// Channel, energy and weighting parameters of the status-update system.
///
/// `p` is the per-slot channel error probability, `e_s` and `e_t` the sensing
/// and transmit energies, `omega` the weight on energy in the scalarized
/// objective `age + omega * energy`, and `alpha` the discount factor used only
/// by the discounted value-iteration solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub p: f64,
    pub e_s: f64,
    pub e_t: f64,
    pub omega: f64,
    pub alpha: f64,
}

impl SystemParams {
    /// Builds and validates a parameter set with the default discount factor.
    pub fn new(p: f64, e_s: f64, e_t: f64, omega: f64) -> Result<Self> {
        Self::with_alpha(p, e_s, e_t, omega, DEFAULT_ALPHA)
    }

    pub fn with_alpha(p: f64, e_s: f64, e_t: f64, omega: f64, alpha: f64) -> Result<Self> {
        let params = Self {
            p,
            e_s,
            e_t,
            omega,
            alpha,
        };
        params.validate()?;
        Ok(params)
    }

    /// Copy of `self` with a different energy weight.
    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        Self::with_alpha(self.p, self.e_s, self.e_t, omega, self.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        validate_channel(self.p)?;
        if !(self.e_s.is_finite() && self.e_s >= 0.0) {
            return Err(invalid("e_s", format!("must be finite and >= 0, got {}", self.e_s)));
        }
        if !(self.e_t.is_finite() && self.e_t >= 0.0) {
            return Err(invalid("e_t", format!("must be finite and >= 0, got {}", self.e_t)));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(invalid("omega", format!("must be finite and > 0, got {}", self.omega)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid("alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

pub(crate) fn validate_channel(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(invalid("p", format!("channel error probability must lie in (0, 1), got {p}")))
    }
}

/// `ceil(x)` with a small guard so that values like `2.0000000000000004`
/// coming out of a division do not round up to the next integer.
pub(crate) fn guarded_ceil(x: f64) -> u32 {
    let c = (x - 1e-12).ceil();
    if c < 1.0 {
        1
    } else {
        c as u32
    }
}
