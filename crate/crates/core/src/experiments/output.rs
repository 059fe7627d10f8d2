//! CSV and JSON serialization of sweep rows.

use std::fmt::Write;

use serde::Serialize;

use super::TradeoffPoint;

pub const CSV_HEADER: &str =
    "omega,policy,theta_t,theta_r,M,avg_aoi,avg_energy,weighted_cost,stderr_aoi,stderr_energy,provenance";

fn opt(v: Option<u32>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Rows as CSV with LF line endings; inapplicable fields are left empty.
pub fn sweep_csv(points: &[TradeoffPoint]) -> String {
    let mut out = String::with_capacity(64 * (points.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            p.omega,
            p.policy,
            opt(p.theta_t),
            opt(p.theta_r),
            opt(p.m),
            p.avg_aoi,
            p.avg_energy,
            p.weighted_cost,
            p.stderr_aoi,
            p.stderr_energy,
            p.provenance
        );
    }
    out
}

#[derive(Serialize)]
struct Document<'a, M: Serialize> {
    meta: &'a M,
    rows: &'a [TradeoffPoint],
}

/// Pretty-printed `{"meta": .., "rows": [..]}` document, newline-terminated.
pub fn sweep_json<M: Serialize>(points: &[TradeoffPoint], meta: &M) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(&Document { meta, rows: points })?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::Provenance;

    fn row(m: Option<u32>) -> TradeoffPoint {
        TradeoffPoint {
            omega: 2.0,
            policy: "truncated_arq".into(),
            theta_t: None,
            theta_r: None,
            m,
            avg_aoi: 1.25,
            avg_energy: 1.0,
            weighted_cost: 3.25,
            stderr_aoi: 0.0,
            stderr_energy: 0.0,
            provenance: Provenance::ClosedForm,
        }
    }

    #[test]
    fn csv_layout() {
        let csv = sweep_csv(&[row(Some(1))]);
        let lines: Vec<_> = csv.split('\n').collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "2,truncated_arq,,,1,1.25,1,3.25,0,0,closed_form");
        assert_eq!(lines[2], "");
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn json_has_meta_and_rows() {
        let meta = serde_json::json!({"seed": 7});
        let doc: serde_json::Value =
            serde_json::from_str(&sweep_json(&[row(None)], &meta).unwrap()).unwrap();
        assert_eq!(doc["meta"]["seed"], 7);
        assert_eq!(doc["rows"][0]["M"], serde_json::Value::Null);
        assert_eq!(doc["rows"][0]["provenance"], "closed_form");
    }
}
