//! One function per subcommand.

use serde_json::json;
use sleepsense::experiments::{
    curves_from_points, policy_map, svg, sweep_csv, sweep_json, sweep_tradeoff, tradeoff_by_channel,
    tradeoff_by_energy_split, weighted_cost_curve, BaseParams, SweepPolicy, SweepSpec, TradeoffCurve, LABEL_TWO,
};
use sleepsense::mdp::{check_structural_lemmas, extract_structure, suggested_margin, grid_csv, value_iteration, ExtractedStructure};
use sleepsense::optimizer::{
    closed_form_metrics, optimal_theta_r, optimize as optimize_policy, optimize_single_threshold, PerfMetrics, Provenance,
    TwoThresholdPolicy,
};
use sleepsense::params::SystemParams;
use sleepsense::sim::{self, empirical_vs_closed_form, PolicySpec};

use crate::config::{Format, PolicyKind, RunConfig};
use crate::output::RunDir;
use crate::{CliError, Outcome};

fn metrics_summary(m: &PerfMetrics) -> String {
    format!("F={:.6} avg_aoi={:.6} avg_energy={:.6}", m.weighted_cost, m.avg_aoi, m.avg_energy)
}

fn structure_summary(s: &ExtractedStructure, params: &SystemParams) -> Result<String, CliError> {
    let mut line = format!("theta_t={} theta_r={} conforms={}", s.theta_t, s.theta_r, s.conforms);
    if s.conforms {
        let m = closed_form_metrics(TwoThresholdPolicy::new(s.theta_t, s.theta_r)?, params)?;
        line.push(' ');
        line.push_str(&metrics_summary(&m));
    }
    Ok(line)
}

/// Lemma checks need a wider border than threshold reading: truncation
/// error decays geometrically away from the far edges.
fn lemma_margin(cfg: &RunConfig, params: &SystemParams) -> usize {
    suggested_margin(params, LEMMA_TOL).max(cfg.solver.margin)
}

const LEMMA_TOL: f64 = 1e-6;

pub(crate) fn solve(name: &str, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.system_params()?;
    let (values, policy) = value_iteration(&params, &cfg.solver_config())?;
    let structure = extract_structure(&policy, cfg.solver.margin)?;
    let lemmas = check_structural_lemmas(&values, &policy, &params, LEMMA_TOL, lemma_margin(cfg, &params));
    let dir = RunDir::create(name, cfg)?;
    if cfg.wants(Format::Csv) {
        dir.write("grid.csv", &grid_csv(&values, &policy))?;
    }
    if cfg.wants(Format::Json) {
        dir.write_json(
            "result.json",
            &json!({
                "structure": structure,
                "iterations": values.iterations,
                "residual": values.residual,
                "lemmas": lemmas,
            }),
        )?;
    }
    dir.announce();
    println!(
        "{} iterations={} lemmas={}",
        structure_summary(&structure, &params)?,
        values.iterations,
        if lemmas.all_passed() { "pass" } else { "fail" }
    );
    Ok(Outcome::Done)
}

pub(crate) fn map(name: &str, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.system_params()?;
    let map = policy_map(&params, &cfg.solver_config(), cfg.solver.margin)?;
    let dir = RunDir::create(name, cfg)?;
    if cfg.wants(Format::Svg) {
        dir.write("map.svg", &map.svg)?;
    }
    if cfg.wants(Format::Csv) {
        dir.write("grid.csv", &map.csv)?;
    }
    if cfg.wants(Format::Json) {
        dir.write_json(
            "result.json",
            &json!({ "structure": map.structure, "iterations": map.values.iterations }),
        )?;
    }
    dir.announce();
    println!("{}", structure_summary(&map.structure, &params)?);
    Ok(Outcome::Done)
}

pub(crate) fn optimize(name: &str, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.system_params()?;
    let (policy, metrics) = optimize_policy(&params)?;
    let dir = RunDir::create(name, cfg)?;
    if cfg.wants(Format::Json) {
        dir.write_json("result.json", &json!({ "policy": policy, "metrics": metrics }))?;
    }
    dir.announce();
    println!("{policy} {}", metrics_summary(&metrics));
    Ok(Outcome::Done)
}

/// The policy selected by `cfg.policy`, plus its two-threshold equivalent
/// when one has a closed form.
fn selected_policy(
    cfg: &RunConfig,
    params: &SystemParams,
) -> Result<(PolicySpec, Option<TwoThresholdPolicy>), CliError> {
    let sel = &cfg.policy;
    Ok(match sel.kind {
        PolicyKind::TwoThreshold => {
            let policy = match (sel.theta_t, sel.theta_r) {
                (Some(t), Some(r)) => TwoThresholdPolicy::new(t, r)?,
                (Some(t), None) => TwoThresholdPolicy::new(t, optimal_theta_r(t, params)?)?,
                (None, Some(_)) => {
                    return Err(CliError::Usage("theta_r given without theta_t".into()));
                }
                (None, None) => optimize_policy(params)?.0,
            };
            (PolicySpec::TwoThreshold(policy), Some(policy))
        }
        PolicyKind::SingleThreshold => {
            if sel.theta_t.is_some_and(|t| t != 1) {
                return Err(CliError::Usage("single_threshold policies have theta_t = 1".into()));
            }
            let theta = match sel.theta_r {
                Some(r) => r,
                None => optimize_single_threshold(params)?.0,
            };
            let spec = PolicySpec::SingleThreshold(theta);
            spec.validate()?;
            (spec, Some(TwoThresholdPolicy::new(1, theta)?))
        }
        PolicyKind::TruncatedArq => {
            let spec = PolicySpec::TruncatedArq { max_transmissions: sel.m };
            spec.validate()?;
            let closed = (sel.m == 1).then_some(TwoThresholdPolicy::ZERO_WAIT);
            (spec, closed)
        }
    })
}

fn policy_summary(spec: &PolicySpec) -> String {
    match spec {
        PolicySpec::TwoThreshold(p) => format!("policy=two_threshold {p}"),
        PolicySpec::SingleThreshold(t) => format!("policy=single_threshold theta_r={t}"),
        PolicySpec::TruncatedArq { max_transmissions } => format!("policy=truncated_arq M={max_transmissions}"),
        other => format!("policy={}", other.label()),
    }
}

pub(crate) fn simulate(name: &str, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.system_params()?;
    let (spec, _) = selected_policy(cfg, &params)?;
    let result = sim::simulate(&spec, &params, &cfg.sim)?;
    let dir = RunDir::create(name, cfg)?;
    if cfg.wants(Format::Json) {
        dir.write_json("result.json", &json!({ "policy": spec, "result": result }))?;
    }
    dir.announce();
    let m = &result.metrics;
    println!(
        "{} {} stderr_aoi={:.6} stderr_energy={:.6}",
        policy_summary(&spec),
        metrics_summary(m),
        m.stderr_aoi,
        m.stderr_energy
    );
    Ok(Outcome::Done)
}

pub(crate) fn validate(name: &str, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.system_params()?;
    let (spec, closed) = selected_policy(cfg, &params)?;
    let policy = closed.ok_or_else(|| {
        CliError::Usage(format!("{} has no closed form to validate against", policy_summary(&spec)))
    })?;
    let report = empirical_vs_closed_form(policy, &params, &cfg.sim)?;
    let dir = RunDir::create(name, cfg)?;
    if cfg.wants(Format::Json) {
        dir.write_json("result.json", &json!({ "report": report, "passed": report.passed() }))?;
    }
    dir.announce();
    println!(
        "{} {} z_aoi={:.3} z_energy={:.3} rel_aoi={:.2e} rel_energy={:.2e} result={}",
        policy,
        metrics_summary(&report.closed_form),
        report.aoi.z,
        report.energy.z,
        report.aoi.relative_error,
        report.energy.relative_error,
        if report.passed() { "pass" } else { "fail" }
    );
    Ok(if report.passed() { Outcome::Done } else { Outcome::ValidationFailed })
}

pub(crate) fn sweep(name: &str, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let base = BaseParams {
        p: cfg.params.p,
        e_s: cfg.params.e_s,
        e_t: cfg.params.e_t,
    };
    let mut kinds = cfg.sweep.policies.clone();
    kinds.sort();
    kinds.dedup();
    let policies = kinds
        .iter()
        .map(|k| match k {
            PolicyKind::TwoThreshold => SweepPolicy::TwoThreshold,
            PolicyKind::SingleThreshold => SweepPolicy::SingleThreshold,
            PolicyKind::TruncatedArq => SweepPolicy::TruncatedArq {
                m_values: cfg.sweep.m_values.clone(),
            },
        })
        .collect();
    let spec = SweepSpec {
        base,
        omegas: cfg.sweep.omegas.clone(),
        policies,
        validation: cfg.sweep.validation,
        sim: cfg.sim,
    };
    let rows = sweep_tradeoff(&spec)?;
    let dir = RunDir::create(name, cfg)?;
    if cfg.wants(Format::Csv) {
        dir.write("sweep.csv", &sweep_csv(&rows))?;
    }
    if cfg.wants(Format::Json) {
        dir.write("sweep.json", &sweep_json(&rows, &dir.meta).expect("serializable rows"))?;
    }
    if cfg.wants(Format::Svg) {
        let title = format!("p={}, Es={}, Et={}", base.p, base.e_s, base.e_t);
        dir.write("tradeoff.svg", &svg::tradeoff_svg(&title, &curves_from_points(&rows, "")))?;
        let curve = TradeoffCurve {
            label: title.clone(),
            points: weighted_cost_curve(&base, &spec.omegas)?,
        };
        dir.write("weighted_cost.svg", &svg::weighted_cost_svg("minimum weighted cost", &[curve]))?;
        let by_p = tradeoff_by_channel(&spec.omegas)?;
        dir.write("tradeoff_by_channel.svg", &svg::tradeoff_svg("Es=Et=1, varying p", &by_p))?;
        let by_split = tradeoff_by_energy_split(&spec.omegas)?;
        dir.write("tradeoff_by_energy_split.svg", &svg::tradeoff_svg("p=0.3, Es+Et=2, varying Es/Et", &by_split))?;
    }
    dir.announce();
    let optimal: Vec<f64> = rows
        .iter()
        .filter(|r| r.policy == LABEL_TWO && r.provenance == Provenance::ClosedForm)
        .map(|r| r.weighted_cost)
        .collect();
    let mut line = format!("rows={} omegas={}", rows.len(), spec.omegas.len());
    if let (Some(lo), Some(hi)) = (optimal.first(), optimal.last()) {
        line.push_str(&format!(" F_min={lo:.6} F_max={hi:.6}"));
    }
    println!("{line}");
    Ok(Outcome::Done)
}
