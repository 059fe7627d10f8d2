//! Reading the threshold shape back out of a solved action table.

use serde::{Deserialize, Serialize};

use super::{Action, PolicyGrid};
use crate::error::{Error, Result};

/// Cells this close to the truncation boundary are ignored by default.
pub const DEFAULT_MARGIN: usize = 5;

/// Thresholds recovered from a [`PolicyGrid`].
///
/// On the interior (cells with `i <= j`, at least `margin` cells away from
/// both truncation bounds) a conforming grid has the shape
///
/// * `j <  theta_r`: `Retransmit` for `i < per_row_thresholds[j - 1]`, `Sleep` otherwise;
/// * `j >= theta_r`: `Retransmit` for `i < theta_t`, `SenseTransmit` otherwise;
///
/// with `per_row_thresholds` non-decreasing and bounded by `theta_t <= theta_r`.
/// When `conforms` is false the thresholds are best-effort readings only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedStructure {
    pub theta_t: u32,
    pub theta_r: u32,
    /// `I(j)` for `j = 1..theta_r`.
    pub per_row_thresholds: Vec<u32>,
    pub conforms: bool,
}

/// Row summary: the first index of the "upper" action after a prefix of
/// `Retransmit`, and whether the rest of the row is uniformly that action.
fn split_row(row: &[Action], upper: Action) -> (u32, bool) {
    let prefix = row.iter().take_while(|&&a| a == Action::Retransmit).count();
    let clean = row[prefix..].iter().all(|&a| a == upper);
    ((prefix + 1) as u32, clean)
}

pub fn extract_structure(policy: &PolicyGrid, margin: usize) -> Result<ExtractedStructure> {
    if policy.i_max <= margin || policy.j_max <= margin {
        return Err(Error::GridTooSmall(format!(
            "{}x{} grid has no interior with margin {margin}",
            policy.i_max, policy.j_max
        )));
    }
    let i_lim = policy.i_max - margin;
    let j_lim = policy.j_max - margin;
    let row = |j: usize| -> Vec<Action> { (1..=j.min(i_lim)).map(|i| policy.get(i, j)).collect() };
    let has_sleep = |j: usize| row(j).contains(&Action::Sleep);

    // smallest j whose whole suffix of rows is sleep-free
    let mut theta_r = j_lim + 1;
    while theta_r > 1 && !has_sleep(theta_r - 1) {
        theta_r -= 1;
    }

    let lower_rows_clean = |upto: usize| {
        (1..upto).all(|j| {
            let r = row(j);
            let (_, clean) = split_row(&r, Action::Sleep);
            clean
        })
    };

    if theta_r > j_lim {
        if lower_rows_clean(j_lim + 1) {
            return Err(Error::GridTooSmall(format!(
                "every interior row up to j={j_lim} still sleeps; enlarge j_max"
            )));
        }
        return Ok(ExtractedStructure {
            theta_t: 1,
            theta_r: theta_r as u32,
            per_row_thresholds: Vec::new(),
            conforms: false,
        });
    }

    let mut conforms = true;
    let mut theta_t = None;
    for j in theta_r..=j_lim {
        let r = row(j);
        let (t, clean) = split_row(&r, Action::SenseTransmit);
        conforms &= clean;
        if t as usize > r.len() {
            // row is all Retransmit: its threshold lies beyond the i-bound
            if j <= i_lim {
                conforms = false;
            }
            continue;
        }
        match theta_t {
            None => theta_t = Some(t),
            Some(prev) if prev != t => conforms = false,
            Some(_) => {}
        }
    }
    let theta_t = theta_t.ok_or_else(|| {
        Error::GridTooSmall(format!(
            "no SenseTransmit found in rows j >= {theta_r} within i <= {i_lim}; enlarge i_max"
        ))
    })?;

    let mut per_row = Vec::with_capacity(theta_r - 1);
    for j in 1..theta_r {
        let r = row(j);
        let (t, clean) = split_row(&r, Action::Sleep);
        conforms &= clean;
        per_row.push(t);
    }
    conforms &= per_row.windows(2).all(|w| w[0] <= w[1]);
    conforms &= per_row.iter().all(|&t| t <= theta_t);
    conforms &= theta_t as usize <= theta_r;

    Ok(ExtractedStructure {
        theta_t,
        theta_r: theta_r as u32,
        per_row_thresholds: per_row,
        conforms,
    })
}
