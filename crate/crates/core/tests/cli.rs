use std::process::{Command, Output};

fn insider(args: &[&str]) -> Output {
    insider_env(args, &[])
}

fn insider_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_insider"));
    for key in ["INSIDER_ALPHA_I", "INSIDER_ALPHA_U", "INSIDER_P_I", "INSIDER_P_N", "INSIDER_PI", "INSIDER_SEED"] {
        cmd.env_remove(key);
    }
    cmd.args(args).envs(env.iter().copied()).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn solve_reports_all_kinds() {
    let o = insider(&["solve"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let eqs = v["equilibria"].as_array().unwrap();
    assert_eq!(eqs.len(), 4);
    let y = eqs.iter().find(|e| e["kind"] == "PI").unwrap()["y_hat"].as_f64().unwrap();
    assert!((y - 2.689_095_323_637_659_4).abs() < 1e-12);
}

#[test]
fn zero_precision_hint() {
    let o = insider(&["solve", "--p-i", "0", "--kind", "pi"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--kind ns-pi"), "{}", stderr(&o));
    assert_eq!(insider(&["solve", "--p-i", "0", "--kind", "ns-pi"]).status.code(), Some(0));
}

#[test]
fn validation_and_solver_exit_codes() {
    let o = insider(&["solve", "--alpha-i", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alpha_I"));
    assert_eq!(insider(&["solve", "--max-iter", "1", "--kind", "pi"]).status.code(), Some(3));
    assert_eq!(insider(&["solve", "--bogus"]).status.code(), Some(2));
}

#[test]
fn config_file_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("params.json");
    std::fs::write(&path, r#"{"alpha_I": 0.5, "alpha_U": 2.0, "p_I": 1.5, "p_N": 0.7, "Pi": 0.1}"#).unwrap();
    let cfg = path.to_str().unwrap();

    let o = insider(&["solve", "--config", cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(&o)["params"]["alpha_U"], 2.0);

    let o = insider(&["solve", "--config", cfg, "--alpha-i", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--alpha-i"));

    let o = insider_env(&["solve", "--config", cfg], &[("INSIDER_ALPHA_U", "3.0")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(&o)["params"]["alpha_U"], 3.0);

    let o = insider_env(&["solve"], &[("INSIDER_P_N", "2.5")]);
    assert_eq!(json(&o)["params"]["p_N"], 2.5);
}

#[test]
fn sweep_and_region_tables() {
    let o = insider(&["sweep"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.split("\r\n").filter(|l| !l.is_empty()).collect();
    assert_eq!(lines[0], "p_I,ce_I_pi,ce_I_pt");
    assert_eq!(lines.len(), 51);

    let o = insider(&["region"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1601);
    assert!(text.starts_with("alpha_U,p_I,sign\r\n"));

    assert_eq!(insider(&["sweep", "--count", "1"]).status.code(), Some(2));
}

#[test]
fn output_is_reproducible() {
    let a = insider(&["sweep", "--count", "20", "--format", "json"]);
    let b = insider(&["sweep", "--count", "20", "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let o = insider(&["sweep", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), insider(&["sweep"]).stdout);
}

#[test]
fn figures() {
    let o = insider(&["figure", "--which", "2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(&o)["pi_shape"], "increasing");

    let o = insider(&["figure", "--which", "3"]);
    let text = stdout(&o);
    let diagonal: Vec<&str> = text
        .lines()
        .skip(1)
        .filter(|l| {
            let f: Vec<&str> = l.split(',').collect();
            f[0].parse::<f64>().unwrap() == f[1].parse::<f64>().unwrap()
        })
        .collect();
    assert!(!diagonal.is_empty());
    assert!(diagonal.iter().all(|l| l.ends_with("PI_better")));

    let o = insider(&["figure", "--which", "1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(insider(&["figure", "--which", "4"]).status.code(), Some(2));
}

#[test]
fn monte_carlo_checks() {
    let o = insider(&["mc", "--n-paths", "20000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let reports: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(reports.iter().any(|r| r["check"] == "clearing_PI"));

    let o = insider(&["mc", "--n-paths", "20000", "--corrupt"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("clearing_PI"));
}
