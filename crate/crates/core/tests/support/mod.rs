//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls the closed forms or the optimizer: the stationary law
//! comes from a dense linear solve of the explicit chain, and the threshold
//! searches enumerate every candidate.

#![allow(dead_code)]

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sleepsense::optimizer::{weighted_cost, TwoThresholdPolicy};
use sleepsense::params::SystemParams;

/// Moments of the chain induced by a two-threshold policy.
#[derive(Debug, Clone, Copy)]
pub struct ChainMoments {
    pub avg_aoi: f64,
    pub avg_energy: f64,
    pub states: usize,
    /// Stationary mass in states whose receiver age sits at the cap.
    pub mass_at_cap: f64,
}

/// Action codes: 0 sleep, 1 retransmit, 2 sense-and-transmit.
fn rule(theta_t: u32, theta_r: u32, i: u32, j: u32) -> u8 {
    if j < theta_r {
        0
    } else if i < theta_t {
        1
    } else {
        2
    }
}

/// Successor states with probabilities, written out from the model
/// definition; receiver ages beyond `j_cap` saturate at `j_cap`.
fn successors(action: u8, i: u32, j: u32, p: f64, j_cap: u32) -> Vec<((u32, u32), f64)> {
    let cap = |j: u32| j.min(j_cap);
    match action {
        0 => vec![((i + 1, cap(j + 1)), 1.0)],
        1 => vec![((i + 1, cap(j + 1)), p), ((i + 1, cap(i + 1)), 1.0 - p)],
        _ => vec![((1, cap(j + 1)), p), ((1, 1), 1.0 - p)],
    }
}

/// Stationary moments by breadth-first enumeration from `(1, 1)` and a dense
/// LU solve of `pi P = pi, sum(pi) = 1`.
pub fn stationary_moments(theta_t: u32, theta_r: u32, p: f64, e_s: f64, e_t: f64, j_cap: u32) -> ChainMoments {
    let mut index: HashMap<(u32, u32), usize> = HashMap::new();
    let mut states = vec![(1u32, 1u32)];
    index.insert((1, 1), 0);
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut k = 0;
    while k < states.len() {
        let (i, j) = states[k];
        for (next, prob) in successors(rule(theta_t, theta_r, i, j), i, j, p, j_cap) {
            let n = states.len();
            let to = *index.entry(next).or_insert(n);
            if to == n {
                states.push(next);
            }
            edges.push((k, to, prob));
        }
        k += 1;
    }
    let n = states.len();
    // (P^T - I) pi = 0 with the last equation replaced by normalization
    let mut a = DMatrix::<f64>::zeros(n, n);
    for &(from, to, prob) in &edges {
        a[(to, from)] += prob;
    }
    for d in 0..n {
        a[(d, d)] -= 1.0;
    }
    for c in 0..n {
        a[(n - 1, c)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let pi = a.lu().solve(&b).expect("irreducible chain");
    let mut avg_j = 0.0;
    let mut energy = 0.0;
    let mut mass_at_cap = 0.0;
    for (s, &(i, j)) in states.iter().enumerate() {
        avg_j += pi[s] * f64::from(j);
        energy += pi[s]
            * match rule(theta_t, theta_r, i, j) {
                0 => 0.0,
                1 => e_t,
                _ => e_t + e_s,
            };
        if j == j_cap {
            mass_at_cap += pi[s];
        }
    }
    ChainMoments {
        // the per-slot age curve rises linearly within a slot
        avg_aoi: avg_j + 0.5,
        avg_energy: energy,
        states: n,
        mass_at_cap,
    }
}

/// Smallest-cost `theta_r` in `[theta_t, upper]`, ties to the smaller value.
pub fn brute_theta_r(theta_t: u32, params: &SystemParams, upper: u32) -> (u32, f64) {
    let mut best = (theta_t, f64::INFINITY);
    for r in theta_t..=upper.max(theta_t) {
        let f = weighted_cost(TwoThresholdPolicy::new(theta_t, r).unwrap(), params);
        if f < best.1 {
            best = (r, f);
        }
    }
    best
}

/// Exhaustive search over `theta_t in [1, max_t]`, `theta_r in [theta_t,
/// r_upper]`; ties go to smaller `theta_t`, then smaller `theta_r`.
pub fn exhaustive_optimum(params: &SystemParams, max_t: u32, r_upper: u32) -> (TwoThresholdPolicy, f64) {
    let mut best = (TwoThresholdPolicy::ZERO_WAIT, f64::INFINITY);
    for t in 1..=max_t {
        let (r, f) = brute_theta_r(t, params, r_upper);
        if f < best.1 {
            best = (TwoThresholdPolicy::new(t, r).unwrap(), f);
        }
    }
    best
}

/// Deterministic generator for randomized oracle comparisons.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random but well-conditioned parameter set.
pub fn random_params(rng: &mut ChaCha8Rng) -> SystemParams {
    let p = rng.random_range(0.02..0.9);
    let e_s = if rng.random_bool(0.15) { 0.0 } else { rng.random_range(0.05..5.0) };
    let e_t = rng.random_range(0.05..5.0);
    let omega = (rng.random_range(-1.0f64..2.0) * std::f64::consts::LN_10).exp();
    SystemParams::new(p, e_s, e_t, omega).unwrap()
}

/// A random `(theta_t, theta_r, p)` whose truncated chain at
/// `j_cap = 10 theta_r` carries negligible mass above the cap.
pub fn random_triple(rng: &mut ChaCha8Rng) -> (u32, u32, f64) {
    let p: f64 = rng.random_range(0.02..0.9);
    // p^(9 theta_r) < 1e-12 keeps the truncation error far below 1e-8
    let min_r = (12.0 * std::f64::consts::LN_10 / (9.0 * (1.0 / p).ln())).ceil().max(2.0) as u32;
    let theta_r = rng.random_range(min_r..=60.max(min_r));
    let theta_t = rng.random_range(1..=theta_r);
    (theta_t, theta_r, p)
}
