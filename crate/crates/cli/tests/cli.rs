use std::path::PathBuf;
use std::process::{Command, Output};

fn splitvote(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splitvote"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .display()
        .to_string()
}

fn curve_column(csv: &str, column: usize) -> Vec<Option<f64>> {
    csv.lines()
        .skip(1)
        .map(|line| line.split(',').nth(column).unwrap().parse().ok())
        .collect()
}

#[test]
fn optimal_reports_even_split() {
    let out = splitvote(&["optimal", "--rule", "quadratic", "--c", "1", "--budget", "100"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("wallets: 50"), "{text}");
    assert!(text.contains("total power: 50.00"), "{text}");
    assert!(text.contains("kappa: 0.5000"), "{text}");
    assert!(text.contains("min balance binding: no"), "{text}");
}

#[test]
fn optimal_flags_binding_minimum() {
    let out = splitvote(&[
        "optimal",
        "--rule",
        "quadratic",
        "--m",
        "10",
        "--v",
        "1",
        "--budget",
        "100",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("wallets: 9"), "{text}");
    assert!(text.contains("total power: 28.62"), "{text}");
    assert!(text.contains("min balance binding: yes"), "{text}");
}

#[test]
fn rejects_convex_power_rule() {
    let out = splitvote(&["optimal", "--rule", "power:1.5", "--c", "1", "--budget", "10"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("power"));
}

#[test]
fn rejects_negative_amounts() {
    let out = splitvote(&["optimal", "--rule", "quadratic", "--c", "-1", "--budget", "10"]);
    assert!(!out.status.success());
}

#[test]
fn curve_stays_below_kappa() {
    let out = splitvote(&["curve", "--rule", "quadratic", "--c", "1", "--from", "1", "--to", "1e6"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("budget_usd,honest_per_dollar,attacker_per_dollar,kappa\n"));
    let attacker: Vec<f64> = curve_column(&text, 2).into_iter().flatten().collect();
    assert!(attacker.len() > 100);
    assert!(attacker.iter().all(|&v| v <= 0.5 + 1e-12));
    assert!(attacker.iter().any(|&v| (v - 0.5).abs() < 1e-9));
}

#[test]
fn friction_lowers_kappa() {
    let kappa = |extra: &[&str]| {
        let mut args = vec!["curve", "--rule", "quadratic", "--c", "1", "--points", "10"];
        args.extend_from_slice(extra);
        let out = splitvote(&args);
        assert!(out.status.success());
        curve_column(&stdout(&out), 3)[0].unwrap()
    };
    assert!((kappa(&["--double-c"]) - 0.35355).abs() < 1e-5);
    assert!((kappa(&["--min-balance", "2"]) - 0.4714).abs() < 1e-4);
}

#[test]
fn curve_json_marks_unfundable_budgets() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.json");
    let out = splitvote(&[
        "curve",
        "--rule",
        "log",
        "--c",
        "5",
        "--from",
        "1",
        "--to",
        "100",
        "--points",
        "4",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let points = doc.as_array().unwrap();
    assert_eq!(points.len(), 4);
    assert!(points[0]["attacker_per_dollar"].is_null());
    assert!(points[3]["attacker_per_dollar"].as_f64().unwrap() > 0.0);
}

#[test]
fn analyze_writes_every_rule_and_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    let ens = fixture("ens.json");
    let arb = fixture("arbitrum.json");
    let out = splitvote(&[
        "analyze",
        "--rule",
        "quadratic",
        "--rule",
        "linear",
        "--snapshots",
        &ens,
        "--snapshots",
        &arb,
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 40);
    for row in rows.iter().filter(|r| r.contains(",linear,")) {
        assert!(row.ends_with(",1.0"), "{row}");
    }
}

#[test]
fn analyze_reads_config_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(
        &config,
        serde_json::json!({
            "rules": ["log"],
            "snapshots": [fixture("tiny.json")],
            "format": "json",
            "min_balance": "0",
        })
        .to_string(),
    )
    .unwrap();
    let out = splitvote(&["analyze", "--config", config.to_str().unwrap(), "--rule", "quadratic"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let reports = doc.as_array().unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0]["rule"], "quadratic");
    assert_eq!(reports[0]["per_proposal"].as_array().unwrap().len(), 2);
}

#[test]
fn analyze_exits_nonzero_when_a_proposal_fails() {
    let dir = tempfile::tempdir().unwrap();
    let snaps = dir.path().join("snaps.json");
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("tiny.json")).unwrap()).unwrap();
    // an all-zero tally leaves nothing to outvote
    let mut empty = doc["proposals"][0].clone();
    empty["id"] = "tiny-empty".into();
    for vote in empty["votes"].as_array_mut().unwrap() {
        vote["weight"] = "0".into();
    }
    doc["proposals"].as_array_mut().unwrap().push(empty);
    std::fs::write(&snaps, doc.to_string()).unwrap();

    let out = splitvote(&["analyze", "--rule", "quadratic", "--snapshots", snaps.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("tiny-empty"));
    assert_eq!(stdout(&out).lines().count(), 3);

    let out = splitvote(&[
        "analyze",
        "--rule",
        "quadratic",
        "--snapshots",
        "/nonexistent/snaps.json",
    ]);
    assert!(!out.status.success());
}

#[test]
fn debug_lambert_matches_omega_constant() {
    let out = splitvote(&["debug", "lambert", "1"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("0.56714329040978"));
    let out = splitvote(&["debug", "lambert", "-1"]);
    assert!(!out.status.success());
}
