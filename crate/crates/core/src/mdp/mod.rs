//! The status-update MDP: states, actions, transitions and stage costs, plus
//! the truncated-grid value-iteration solver built on them.
//!
//! A state is the pair `(i, j)` of ages at the start of a slot: `i` is the age
//! of the packet stored at the transmitter (AoIT) and `j` the age of the
//! freshest packet at the receiver (AoIR). At most one packet is sent per
//! slot; sensing refreshes the stored packet instantly.

mod lemmas;
mod solver;
mod structure;

pub use lemmas::{check_structural_lemmas, lemma_thresholds, suggested_margin, LemmaCheck, LemmaReport};
pub use solver::{
    grid_csv, value_iteration, Bellman, PolicyGrid, SolveMode, SolverConfig, ValueGrid,
    DEFAULT_MAX_ITER, DEFAULT_TOL,
};
pub use structure::{extract_structure, ExtractedStructure, DEFAULT_MARGIN};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Ages at a slot boundary. Reachable states satisfy `1 <= i <= j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AoIState {
    pub i: u32,
    pub j: u32,
}

impl AoIState {
    pub const INITIAL: AoIState = AoIState { i: 1, j: 1 };

    pub fn new(i: u32, j: u32) -> Result<Self> {
        let s = Self { i, j };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.i >= 1 && self.i <= self.j {
            Ok(())
        } else {
            Err(Error::InvalidState {
                i: self.i,
                j: self.j,
            })
        }
    }
}

impl fmt::Display for AoIState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

/// What the sensor does in a slot.
///
/// The reduced action set is `{Sleep, Retransmit, SenseTransmit}`, encoded as
/// `0, 1, 2` (the number of sense/transmit operations performed). `SenseOnly`
/// belongs to the four-action form and is only considered by
/// [`SolveMode::Extended`]; it is never optimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Sleep,
    Retransmit,
    SenseTransmit,
    SenseOnly,
}

impl Action {
    pub const REDUCED: [Action; 3] = [Action::Sleep, Action::Retransmit, Action::SenseTransmit];
    pub const EXTENDED: [Action; 4] = [
        Action::Sleep,
        Action::Retransmit,
        Action::SenseTransmit,
        Action::SenseOnly,
    ];

    /// Index used for encoding and argmin tie-breaking (lowest wins).
    pub fn index(self) -> usize {
        match self {
            Action::Sleep => 0,
            Action::Retransmit => 1,
            Action::SenseTransmit => 2,
            Action::SenseOnly => 3,
        }
    }

    pub fn from_index(idx: usize) -> Option<Action> {
        Action::EXTENDED.get(idx).copied()
    }

    /// `(s, t)`: whether the slot senses and whether it transmits.
    pub fn sense_transmit(self) -> (bool, bool) {
        match self {
            Action::Sleep => (false, false),
            Action::Retransmit => (false, true),
            Action::SenseTransmit => (true, true),
            Action::SenseOnly => (true, false),
        }
    }

    pub fn transmits(self) -> bool {
        self.sense_transmit().1
    }

    /// Energy consumed by this action.
    pub fn energy(self, e_s: f64, e_t: f64) -> f64 {
        let (s, t) = self.sense_transmit();
        let mut e = 0.0;
        if s {
            e += e_s;
        }
        if t {
            e += e_t;
        }
        e
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Action::Sleep => "sleep",
            Action::Retransmit => "retransmit",
            Action::SenseTransmit => "sense_transmit",
            Action::SenseOnly => "sense_only",
        };
        f.write_str(s)
    }
}

/// Next-slot state. `channel_success` is ignored by actions that do not
/// transmit.
pub fn transition(state: AoIState, action: Action, channel_success: bool) -> Result<AoIState> {
    state.validate()?;
    Ok(step(state, action, channel_success))
}

/// Unchecked transition, also valid on the extended lattice where `i > j`.
#[inline]
pub(crate) fn step(state: AoIState, action: Action, channel_success: bool) -> AoIState {
    let AoIState { i, j } = state;
    match (action, channel_success) {
        (Action::Sleep, _) | (Action::Retransmit, false) => AoIState { i: i + 1, j: j + 1 },
        (Action::Retransmit, true) => AoIState { i: i + 1, j: i + 1 },
        (Action::SenseOnly, _) | (Action::SenseTransmit, false) => AoIState { i: 1, j: j + 1 },
        (Action::SenseTransmit, true) => AoIState { i: 1, j: 1 },
    }
}

/// The successor distribution of `(state, action)` as `(next, probability)`
/// pairs. Outcomes leading to the same state are merged.
pub fn outcomes(state: AoIState, action: Action, p: f64) -> Result<Vec<(AoIState, f64)>> {
    state.validate()?;
    if !action.transmits() {
        return Ok(vec![(step(state, action, false), 1.0)]);
    }
    let fail = step(state, action, false);
    let ok = step(state, action, true);
    if fail == ok {
        Ok(vec![(fail, 1.0)])
    } else {
        Ok(vec![(fail, p), (ok, 1.0 - p)])
    }
}

/// Per-slot cost `j + omega * (s * e_s + t * e_t)`.
pub fn stage_cost(state: AoIState, action: Action, params: &SystemParams) -> Result<f64> {
    state.validate()?;
    params.validate()?;
    Ok(f64::from(state.j) + params.omega * action.energy(params.e_s, params.e_t))
}
