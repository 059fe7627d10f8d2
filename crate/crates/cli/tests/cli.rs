use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sleepsense"));
    cmd.env_remove("AOI_SEED").env_remove("SOURCE_DATE_EPOCH");
    cmd
}

fn run_in(out: &Path, args: &[&str]) -> Output {
    let mut cmd = bin();
    cmd.args(args).arg("--out").arg(out);
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// The single run directory under `<out>/<sub>/`.
fn only_run(out: &Path, sub: &str) -> PathBuf {
    let entries: Vec<_> = fs::read_dir(out.join(sub)).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(entries.len(), 1, "{entries:?}");
    entries.into_iter().next().unwrap()
}

fn meta_config(result: &Path) -> Value {
    let doc: Value = serde_json::from_str(&fs::read_to_string(result).unwrap()).unwrap();
    doc["meta"]["config"].clone()
}

#[test]
fn optimize_prints_thresholds_and_cost() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["optimize", "--p", "0.2", "--es", "1", "--et", "1", "--omega", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let line = stdout(&o);
    assert_eq!(line.lines().count(), 1);
    assert!(line.starts_with("theta_t=1 theta_r=3 F=4.2115"), "{line}");
    let run = only_run(dir.path(), "optimize");
    let doc: Value = serde_json::from_str(&fs::read_to_string(run.join("result.json")).unwrap()).unwrap();
    assert_eq!(doc["policy"]["theta_r"], 3);
    assert_eq!(doc["meta"]["code_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["meta"]["params"]["omega"], 2.0);
}

#[test]
fn out_of_range_channel_is_a_parameter_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["optimize", "--p", "1.0", "--es", "1", "--et", "1", "--omega", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("`p`") && err.contains("(0, 1)"), "{err}");
    assert!(!dir.path().join("optimize").exists());
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(1));
    assert_eq!(bin().args(["optimize", "--p"]).output().unwrap().status.code(), Some(1));
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(sleepsense_cli::run(["sleepsense", "optimize", "--bogus"]), 1);
}

#[test]
fn unknown_config_keys_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"params": {"p": 0.2, "omgea": 3}}"#).unwrap();
    let o = run_in(dir.path(), &["optimize", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("omgea"), "{}", stderr(&o));

    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[params]\np = 0.2\n\n[outputs]\ndirectory = \"x\"\n").unwrap();
    let o = run_in(dir.path(), &["optimize", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("outputs"), "{}", stderr(&o));
}

#[test]
fn invalid_config_values_name_the_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[params]\nomega = -1.0\n").unwrap();
    let o = run_in(dir.path(), &["optimize", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("omega"), "{}", stderr(&o));
}

#[test]
fn flags_override_config_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[params]\np = 0.3\nomega = 15.0\n\n[sim]\nseed = 11\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let a = dir.path().join("a");
    assert!(run_in(&a, &["optimize", "--config", cfg, "--p", "0.2"]).status.success());
    let c = meta_config(&only_run(&a, "optimize").join("result.json"));
    assert_eq!(c["params"]["p"], 0.2);
    assert_eq!(c["params"]["omega"], 15.0);
    assert_eq!(c["params"]["e_s"], 1.0);
    assert_eq!(c["sim"]["seed"], 11);

    let b = dir.path().join("b");
    assert!(run_in(&b, &["optimize", "--config", cfg]).status.success());
    assert_eq!(meta_config(&only_run(&b, "optimize").join("result.json"))["params"]["p"], 0.3);

    let d = dir.path().join("d");
    assert!(run_in(&d, &["optimize"]).status.success());
    let c = meta_config(&only_run(&d, "optimize").join("result.json"));
    assert_eq!(c["params"]["p"], 0.2);
    assert_eq!(c["params"]["alpha"], 0.999);
    assert_eq!(c["solver"]["i_max"], 60);
    assert_eq!(c["sim"]["slots"], 1_000_000);
}

#[test]
fn seed_precedence_flag_config_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"sim": {"seed": 5}}"#).unwrap();
    let seed_of = |sub: &str, extra: &[&str], env: Option<&str>| {
        let out = dir.path().join(sub);
        let mut cmd = bin();
        cmd.arg("optimize").args(extra).arg("--out").arg(&out);
        if let Some(v) = env {
            cmd.env("AOI_SEED", v);
        }
        assert!(cmd.output().unwrap().status.success());
        meta_config(&only_run(&out, "optimize").join("result.json"))["sim"]["seed"].clone()
    };
    let cfg = cfg.to_str().unwrap();
    assert_eq!(seed_of("a", &[], None), 0);
    assert_eq!(seed_of("b", &[], Some("42")), 42);
    assert_eq!(seed_of("c", &["--config", cfg], Some("42")), 5);
    assert_eq!(seed_of("d", &["--config", cfg, "--seed", "9"], Some("42")), 9);

    let o = bin().args(["optimize"]).env("AOI_SEED", "x").arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("AOI_SEED"));
}

#[test]
fn validate_agrees_with_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &["validate", "--p", "0.2", "--es", "1", "--et", "1", "--omega", "15", "--slots", "1000000"],
    );
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).starts_with("theta_t=3 theta_r=8 "));
    assert!(stdout(&o).trim_end().ends_with("result=pass"));
}

#[test]
fn validate_flags_transient_bias_with_exit_two() {
    // every batch replays the same deterministic ramp from (1, 1) and never
    // reaches the transmission phase: zero spread, biased mean
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "validate", "--p", "0.9", "--theta-t", "1", "--theta-r", "1000", "--slots", "1000", "--warmup", "0",
        ],
    );
    assert_eq!(o.status.code(), Some(2), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).trim_end().ends_with("result=fail"));
    let run = only_run(dir.path(), "validate");
    let doc: Value = serde_json::from_str(&fs::read_to_string(run.join("result.json")).unwrap()).unwrap();
    assert_eq!(doc["passed"], false);
}

#[test]
fn validate_rejects_policies_without_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["validate", "--policy", "truncated_arq", "--m", "3", "--slots", "20000"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("closed form"));
}

#[test]
fn simulate_each_policy_kind() {
    let dir = tempfile::tempdir().unwrap();
    for (args, prefix) in [
        (vec!["--theta-t", "2", "--theta-r", "5"], "policy=two_threshold theta_t=2 theta_r=5 F="),
        (vec!["--policy", "single_threshold", "--theta-r", "4"], "policy=single_threshold theta_r=4 F="),
        (vec!["--policy", "truncated_arq", "--m", "3"], "policy=truncated_arq M=3 F="),
    ] {
        let mut full = vec!["simulate", "--slots", "50000", "--batches", "4", "--seed", "3"];
        full.extend(args);
        let o = run_in(dir.path(), &full);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).starts_with(prefix), "{}", stdout(&o));
    }
}

#[test]
fn sweep_layout_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep", "--p", "0.3", "--omega-count", "6", "--m-values", "1,2,3", "--slots", "20000", "--batches", "4",
        "--seed", "17",
    ];
    let run = |root: &Path| {
        let o = bin().args(args).arg("--out").arg(root).env("SOURCE_DATE_EPOCH", "1700000000").output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        o
    };
    run(&dir.path().join("a"));
    run(&dir.path().join("a"));
    run(&dir.path().join("b"));
    let a = dir.path().join("a/sweep/20231114T221320Z");
    let a2 = dir.path().join("a/sweep/20231114T221320Z-2");
    let b = dir.path().join("b/sweep/20231114T221320Z");
    for name in ["sweep.csv", "sweep.json", "weighted_cost.svg", "tradeoff_by_channel.svg", "tradeoff_by_energy_split.svg", "tradeoff.svg"] {
        let x = fs::read_to_string(a.join(name)).unwrap();
        assert!(x == fs::read_to_string(a2.join(name)).unwrap(), "{name} differs between identical runs");
        // the meta block records the output root, so only data files compare across roots
        if name != "sweep.json" {
            assert!(x == fs::read_to_string(b.join(name)).unwrap(), "{name} depends on the output root");
        }
    }
    let csv = fs::read_to_string(a.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 6 * (2 + 3));
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        let zero = f[8] == "0" && f[9] == "0";
        match f[10] {
            "closed_form" => assert!(zero, "{row}"),
            "simulated" => assert!(f[8].parse::<f64>().unwrap() > 0.0 && f[9].parse::<f64>().unwrap() > 0.0),
            other => panic!("{other}"),
        }
    }
    let doc: Value = serde_json::from_str(&fs::read_to_string(a.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(doc["meta"]["timestamp"], "2023-11-14T22:13:20+00:00");
    assert_eq!(doc["meta"]["seed"], 17);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 30);
}

#[test]
fn meta_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let o = bin()
        .args(["sweep", "--p", "0.1", "--omegas", "1,4,9", "--sweep-policies", "two_threshold,truncated_arq"])
        .args(["--m-values", "2", "--slots", "10000", "--warmup", "1000"])
        .args(["--batches", "2", "--formats", "json"])
        .arg("--out")
        .arg(&first)
        .env("SOURCE_DATE_EPOCH", "0")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let run = only_run(&first, "sweep");
    assert!(!run.join("sweep.csv").exists());
    let mut cfg = meta_config(&run.join("sweep.json"));
    let second = dir.path().join("second");
    cfg["output"]["directory"] = Value::String(second.to_str().unwrap().into());
    let cfg_path = dir.path().join("replay.json");
    fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let o = bin()
        .args(["sweep", "--config", cfg_path.to_str().unwrap()])
        .env("SOURCE_DATE_EPOCH", "0")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let replay = only_run(&second, "sweep");
    let strip = |p: &Path| {
        let mut v: Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
        v["meta"]["config"]["output"] = Value::Null;
        v
    };
    assert_eq!(strip(&run.join("sweep.json")), strip(&replay.join("sweep.json")));
}

#[test]
fn solve_and_map_write_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["solve", "--alpha", "0.99", "--i-max", "40", "--j-max", "40"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("theta_t=1 theta_r=3 conforms=true F=4.2115"), "{}", stdout(&o));
    assert!(stdout(&o).trim_end().ends_with("lemmas=pass"));
    let run = only_run(dir.path(), "solve");
    assert!(fs::read_to_string(run.join("grid.csv")).unwrap().starts_with("i,j,value,action\n"));

    let o = run_in(dir.path(), &["map", "--alpha", "0.99", "--i-max", "40", "--j-max", "40", "--mode", "extended"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let run = only_run(dir.path(), "map");
    assert!(fs::read_to_string(run.join("map.svg")).unwrap().contains("theta_t=1, theta_r=3"));
}

#[test]
fn solver_failures_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["solve", "--max-iter", "5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).to_lowercase().contains("converge"), "{}", stderr(&o));
    let o = run_in(dir.path(), &["solve", "--omega", "15", "--i-max", "8", "--j-max", "8", "--margin", "1"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
}
