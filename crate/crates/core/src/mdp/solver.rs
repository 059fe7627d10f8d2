//! Discounted value iteration on a truncated `(i, j)` grid.
//!
//! The grid covers the extended lattice `1..=i_max x 1..=j_max` (including
//! cells with `i > j`, whose values never feed back into reachable states).
//! Ages saturate at the grid bounds: a successor with `i + 1 > i_max` or
//! `j + 1 > j_max` is clamped to the boundary cell.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Action;
use crate::error::{Error, Result};
use crate::params::SystemParams;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 200_000;

/// Grids with at least this many cells sweep rows in parallel.
const PARALLEL_CELLS: usize = 40_000;

/// Which actions the minimization ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    /// `{Sleep, Retransmit, SenseTransmit}`.
    #[default]
    Reduced,
    /// All four `(s, t)` combinations, including `SenseOnly`.
    Extended,
}

impl SolveMode {
    fn actions(self) -> &'static [Action] {
        match self {
            SolveMode::Reduced => &Action::REDUCED,
            SolveMode::Extended => &Action::EXTENDED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub i_max: usize,
    pub j_max: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub mode: SolveMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            i_max: 60,
            j_max: 60,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            mode: SolveMode::Reduced,
        }
    }
}

impl SolverConfig {
    pub fn grid(i_max: usize, j_max: usize) -> Self {
        Self {
            i_max,
            j_max,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.i_max < 1 || self.i_max > self.j_max || self.j_max > u32::MAX as usize {
            return Err(Error::InvalidGrid {
                i_max: self.i_max,
                j_max: self.j_max,
            });
        }
        if !(self.tol > 0.0) {
            return Err(crate::error::invalid("tol", format!("must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(crate::error::invalid("max_iter", "must be >= 1"));
        }
        Ok(())
    }
}

/// Converged (or last) value function of the discounted problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueGrid {
    /// Row-major by `i`: `values[(i - 1) * j_max + (j - 1)]`.
    pub values: Vec<f64>,
    pub i_max: usize,
    pub j_max: usize,
    pub alpha: f64,
    pub iterations: usize,
    pub residual: f64,
    /// Sup-norm change of every sweep, in order.
    pub residual_history: Vec<f64>,
}

impl ValueGrid {
    /// Value at 1-based `(i, j)`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i - 1) * self.j_max + (j - 1)]
    }
}

/// Greedy action table over the same grid as a [`ValueGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyGrid {
    pub actions: Vec<Action>,
    pub i_max: usize,
    pub j_max: usize,
    /// Q-values per cell in action-index order; `SenseOnly` is `+inf` in
    /// reduced mode.
    pub q_values: Option<Vec<[f64; 4]>>,
}

impl PolicyGrid {
    /// Grid built from a closure over 1-based `(i, j)`.
    pub fn from_fn(i_max: usize, j_max: usize, mut f: impl FnMut(usize, usize) -> Action) -> Self {
        let mut actions = Vec::with_capacity(i_max * j_max);
        for i in 1..=i_max {
            for j in 1..=j_max {
                actions.push(f(i, j));
            }
        }
        Self {
            actions,
            i_max,
            j_max,
            q_values: None,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Action {
        self.actions[(i - 1) * self.j_max + (j - 1)]
    }

    /// Lookup with both coordinates clamped into the grid.
    pub fn get_clamped(&self, i: u32, j: u32) -> Action {
        let i = (i as usize).clamp(1, self.i_max);
        let j = (j as usize).clamp(1, self.j_max);
        self.get(i, j)
    }

    /// Re-derives the greedy actions from stored Q-values.
    pub fn from_q_values(i_max: usize, j_max: usize, q: Vec<[f64; 4]>) -> Self {
        let actions = q.iter().map(|q| argmin_action(q)).collect();
        Self {
            actions,
            i_max,
            j_max,
            q_values: Some(q),
        }
    }
}

/// Lowest-index action among those attaining the minimum Q-value.
pub(crate) fn argmin_action(q: &[f64; 4]) -> Action {
    let mut best = 0;
    for k in 1..4 {
        if q[k] < q[best] {
            best = k;
        }
    }
    Action::from_index(best).expect("index < 4")
}

/// One Jacobi sweep operator `J_n = T J_{n-1}` on a fixed grid.
///
/// Exposed so callers can inspect intermediate iterates.
#[derive(Debug, Clone)]
pub struct Bellman {
    params: SystemParams,
    i_max: usize,
    j_max: usize,
    mode: SolveMode,
    current: Vec<f64>,
    next: Vec<f64>,
    iterations: usize,
}

impl Bellman {
    /// Starts from `J_0 = 0`.
    pub fn new(params: SystemParams, i_max: usize, j_max: usize, mode: SolveMode) -> Result<Self> {
        params.validate()?;
        SolverConfig {
            i_max,
            j_max,
            mode,
            ..SolverConfig::default()
        }
        .validate()?;
        Ok(Self {
            params,
            i_max,
            j_max,
            mode,
            current: vec![0.0; i_max * j_max],
            next: vec![0.0; i_max * j_max],
            iterations: 0,
        })
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn values(&self) -> &[f64] {
        &self.current
    }

    /// Q-values of cell `(i, j)` against the current iterate.
    #[inline]
    fn q_cell(&self, src: &[f64], i: usize, j: usize) -> [f64; 4] {
        let SystemParams {
            p,
            e_s,
            e_t,
            omega,
            alpha,
        } = self.params;
        let jm = self.j_max;
        let at = |i: usize, j: usize| src[(i - 1) * jm + (j - 1)];
        let ni = (i + 1).min(self.i_max);
        let nj = (j + 1).min(jm);
        let nd = (i + 1).min(jm);
        let age = j as f64;

        let stay = at(ni, nj);
        let q_sleep = age + alpha * stay;
        let q_retx = age + omega * e_t + alpha * (p * stay + (1.0 - p) * at(ni, nd));
        let fresh_fail = at(1, nj);
        let q_st = age + omega * (e_t + e_s) + alpha * (p * fresh_fail + (1.0 - p) * at(1, 1));
        let q_sense = match self.mode {
            SolveMode::Reduced => f64::INFINITY,
            SolveMode::Extended => age + omega * e_s + alpha * fresh_fail,
        };
        [q_sleep, q_retx, q_st, q_sense]
    }

    fn sweep_row(&self, src: &[f64], i: usize, row: &mut [f64]) -> f64 {
        let mut residual = 0.0f64;
        for (jj, out) in row.iter_mut().enumerate() {
            let j = jj + 1;
            let q = self.q_cell(src, i, j);
            let v = q[0].min(q[1]).min(q[2]).min(q[3]);
            residual = residual.max((v - src[(i - 1) * self.j_max + jj]).abs());
            *out = v;
        }
        residual
    }

    /// Applies one sweep and returns the sup-norm change.
    pub fn sweep(&mut self) -> f64 {
        let mut next = std::mem::take(&mut self.next);
        let src = &self.current;
        let jm = self.j_max;
        let residual = if self.i_max * self.j_max >= PARALLEL_CELLS {
            next.par_chunks_mut(jm)
                .enumerate()
                .map(|(k, row)| self.sweep_row(src, k + 1, row))
                .reduce(|| 0.0, f64::max)
        } else {
            next.chunks_mut(jm)
                .enumerate()
                .map(|(k, row)| self.sweep_row(src, k + 1, row))
                .fold(0.0, f64::max)
        };
        self.next = std::mem::replace(&mut self.current, next);
        self.iterations += 1;
        residual
    }

    /// Greedy policy with full Q-values against the current iterate.
    pub fn greedy(&self) -> PolicyGrid {
        let mut q = Vec::with_capacity(self.i_max * self.j_max);
        for i in 1..=self.i_max {
            for j in 1..=self.j_max {
                q.push(self.q_cell(&self.current, i, j));
            }
        }
        debug_assert!(self.mode.actions().len() >= 3);
        PolicyGrid::from_q_values(self.i_max, self.j_max, q)
    }

    /// Snapshot of the current iterate.
    pub fn value_grid(&self, residual: f64, residual_history: Vec<f64>) -> ValueGrid {
        ValueGrid {
            values: self.current.clone(),
            i_max: self.i_max,
            j_max: self.j_max,
            alpha: self.params.alpha,
            iterations: self.iterations,
            residual,
            residual_history,
        }
    }
}

/// Solves the discounted problem by value iteration from `J_0 = 0` until the
/// sup-norm change drops below `config.tol`.
///
/// Ties in the greedy policy go to the lowest action index
/// (`Sleep < Retransmit < SenseTransmit < SenseOnly`).
pub fn value_iteration(
    params: &SystemParams,
    config: &SolverConfig,
) -> Result<(ValueGrid, PolicyGrid)> {
    params.validate()?;
    config.validate()?;
    warn_if_grid_small(params, config);

    let mut bellman = Bellman::new(*params, config.i_max, config.j_max, config.mode)?;
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;
    while bellman.iterations() < config.max_iter {
        residual = bellman.sweep();
        history.push(residual);
        if residual < config.tol {
            let policy = bellman.greedy();
            return Ok((bellman.value_grid(residual, history), policy));
        }
    }
    Err(Error::NotConverged {
        iterations: bellman.iterations(),
        residual,
    })
}

fn warn_if_grid_small(params: &SystemParams, config: &SolverConfig) {
    if let Ok((policy, _)) = crate::optimizer::optimize(params) {
        if config.j_max < 2 * policy.theta_r as usize || config.i_max < 2 * policy.theta_t as usize {
            log::warn!(
                "grid {}x{} leaves less than 2x margin around the expected recurrent region \
                 (theta_t={}, theta_r={})",
                config.i_max,
                config.j_max,
                policy.theta_t,
                policy.theta_r
            );
        }
    }
}

/// Debug dump of a solved grid; header `i,j,value,action` with the action
/// written as its index.
pub fn grid_csv(values: &ValueGrid, policy: &PolicyGrid) -> String {
    let mut out = String::from("i,j,value,action\n");
    for i in 1..=values.i_max {
        for j in 1..=values.j_max {
            let _ = writeln!(out, "{},{},{},{}", i, j, values.get(i, j), policy.get(i, j).index());
        }
    }
    out
}
