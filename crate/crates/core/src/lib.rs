//! Energy/age tradeoff for a sensor that can sleep, retransmit its stored
//! status packet, or sense and send a fresh one over a lossy slotted channel.
//!
//! The crate is organized around the pieces of that problem:
//!
//! * [`mdp`]: the Markov decision process, a truncated-grid value-iteration
//!   solver for its discounted version, threshold extraction from solved
//!   action tables and numerical checks of the value function's structure.
//! * [`optimizer`]: closed-form age and energy of two-threshold policies, the
//!   stationary law of their recurrent chain, and the line search that finds
//!   the optimal pair of thresholds.
//! * [`sim`]: a seeded Monte-Carlo simulator for two-threshold policies and
//!   the single-threshold and truncated-ARQ baselines.
//! * [`experiments`]: weight sweeps, tradeoff curves and policy maps written
//!   as CSV, JSON and SVG.
//!
//! ```
//! use sleepsense::{optimize, SystemParams};
//!
//! let params = SystemParams::new(0.2, 1.0, 1.0, 15.0)?;
//! let (policy, metrics) = optimize(&params)?;
//! assert_eq!((policy.theta_t, policy.theta_r), (3, 8));
//! assert!(metrics.avg_aoi > 1.5);
//! # Ok::<(), sleepsense::Error>(())
//! ```

pub mod error;
pub mod experiments;
pub mod mdp;
pub mod optimizer;
pub mod params;
pub mod sim;

pub use error::{Error, Result};
pub use mdp::{
    check_structural_lemmas, extract_structure, transition, stage_cost, value_iteration, Action,
    AoIState, ExtractedStructure, PolicyGrid, SolveMode, SolverConfig, ValueGrid,
};
pub use optimizer::{
    closed_form_metrics, optimal_theta_r, optimize, stationary_distribution, PerfMetrics,
    Provenance, StationaryDistribution, TwoThresholdPolicy,
};
pub use params::SystemParams;
pub use sim::{decide, simulate, PolicySpec, SimConfig, SimResult};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/value-iteration.md")]
    mod value_iteration {}
    #[doc = include_str!("../../../book/src/closed-forms.md")]
    mod closed_forms {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
}
