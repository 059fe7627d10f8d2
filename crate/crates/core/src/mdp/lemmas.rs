//! Numerical checks of the structural properties a solved value function is
//! known to satisfy: monotonicity, flatness in `i` past `i0`, the constant
//! `j`-increment past `j0`, and the ordering of the `i`-differences.

use serde::Serialize;

use super::{Action, PolicyGrid, ValueGrid};
use crate::params::{guarded_ceil, SystemParams};

/// One property checked over the grid interior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Number of cells (or cell pairs) examined.
    pub checked: usize,
    /// Largest violation seen, in the units of the property (0 if none).
    pub worst_violation: f64,
    /// First offending cell as 1-based `(i, j)`.
    pub first_failure: Option<(usize, usize)>,
}

impl LemmaCheck {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            passed: true,
            checked: 0,
            worst_violation: 0.0,
            first_failure: None,
        }
    }

    /// Records `violation` (positive means broken by that much).
    fn record(&mut self, violation: f64, cell: (usize, usize)) {
        self.checked += 1;
        if violation > 0.0 {
            if self.passed {
                self.first_failure = Some(cell);
            }
            self.passed = false;
            self.worst_violation = self.worst_violation.max(violation);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub i0: u32,
    pub j0: u32,
    pub margin: usize,
    pub tol: f64,
    pub checks: Vec<LemmaCheck>,
}

impl LemmaReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&LemmaCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// `(i0, j0)`: past `i0` the value is flat in `i`, past `j0` the sleep action
/// is never optimal and the `j`-increment is constant.
pub fn lemma_thresholds(params: &SystemParams) -> (u32, u32) {
    let denom = params.alpha * (1.0 - params.p);
    let i0 = guarded_ceil(params.omega * params.e_s / denom);
    let j0 = guarded_ceil(params.omega * (params.e_t + params.e_s) / denom);
    (i0, j0)
}

/// Border width for [`check_structural_lemmas`] at tolerance `tol`.
///
/// Truncating receiver ages at `j_max` perturbs values `d` cells away by
/// roughly `(alpha p)^d / (1 - alpha)`: reaching the edge from there takes
/// `d` consecutive failed slots once sleeping stops being optimal. The margin
/// makes that perturbation smaller than `tol`, plus a few cells of slack.
pub fn suggested_margin(params: &SystemParams, tol: f64) -> usize {
    let ap = params.alpha * params.p;
    let d = (tol * (1.0 - params.alpha)).ln() / ap.ln();
    (d.ceil().max(0.0) as usize + 5).max(super::DEFAULT_MARGIN)
}

pub fn check_structural_lemmas(
    values: &ValueGrid,
    policy: &PolicyGrid,
    params: &SystemParams,
    tol: f64,
    margin: usize,
) -> LemmaReport {
    let (i0, j0) = lemma_thresholds(params);
    let (i0u, j0u) = (i0 as usize, j0 as usize);
    let i_lim = values.i_max.saturating_sub(margin);
    let j_lim = values.j_max.saturating_sub(margin);
    let v = |i: usize, j: usize| values.get(i, j);
    let increment = 1.0 / (1.0 - params.alpha * params.p);

    let mut mono_j = LemmaCheck::new("monotone_in_j");
    let mut mono_i = LemmaCheck::new("monotone_in_i");
    let mut flat_i = LemmaCheck::new("flat_in_i");
    let mut flat_policy = LemmaCheck::new("policy_flat_in_i");
    let mut const_j = LemmaCheck::new("constant_j_increment");
    let mut no_sense_only = LemmaCheck::new("no_sense_only");
    let mut l_below_d = LemmaCheck::new("l_below_d");
    let mut d_nonincreasing = LemmaCheck::new("d_nonincreasing");

    for i in 1..=i_lim {
        for j in 1..=j_lim {
            if j < j_lim {
                let dj = v(i, j + 1) - v(i, j);
                mono_j.record((1.0 - tol) - dj, (i, j));
                if j >= j0u {
                    const_j.record((dj - increment).abs() - tol, (i, j));
                }
            }
            if i < i_lim {
                let di = v(i + 1, j) - v(i, j);
                mono_i.record(-tol - di, (i, j));
                if i >= i0u || i >= j {
                    flat_i.record(di.abs() - tol, (i, j));
                    let (a, b) = (policy.get(i, j), policy.get(i + 1, j));
                    let ok = a == b && matches!(a, Action::Sleep | Action::SenseTransmit);
                    flat_policy.record(if ok { 0.0 } else { 1.0 }, (i, j));
                }
            }
            if policy.get(i, j) == Action::SenseOnly {
                no_sense_only.record(1.0, (i, j));
            } else {
                no_sense_only.record(0.0, (i, j));
            }
        }
    }

    let diag_lim = i_lim.min(j_lim);
    let d = |i: usize| v(i + 1, i + 1) - v(i, i);
    for i in 1..diag_lim {
        if i + 1 < diag_lim {
            d_nonincreasing.record(d(i + 1) - d(i) - tol, (i, i));
        }
        for j in j0u.max(1)..=j_lim {
            let l = v(i + 1, j) - v(i, j);
            l_below_d.record(l - d(i) - tol, (i, j));
        }
    }

    LemmaReport {
        i0,
        j0,
        margin,
        tol,
        checks: vec![
            mono_j,
            mono_i,
            flat_i,
            flat_policy,
            const_j,
            no_sense_only,
            l_below_d,
            d_nonincreasing,
        ],
    }
}
