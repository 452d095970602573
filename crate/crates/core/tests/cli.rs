use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_reserve-lab"))
        .arg(sub)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn small(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

#[test]
fn simulate_subcommands_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let single = small(dir.path(), "s.json", r#"{"rounds": 64, "alpha": 0.25, "epsilon": 1.0, "tau": 2, "seed": 1}"#);
    let multi = small(
        dir.path(),
        "m.json",
        r#"{"rounds": 32, "bidders_per_round": 8, "copies": 3, "alpha": 0.25, "epsilon": 1.0, "tau": 2, "seed": 1,
            "mechanism": {"pmatch": {"substeps": 4, "error_slack": 1}}}"#,
    );
    for (sub, cfg) in [("simulate-single", &single), ("simulate-bandit", &single), ("simulate-multi", &multi)] {
        let out = dir.path().join(sub);
        let o = run(sub, cfg, &out, &[]);
        assert!(o.status.success(), "{sub}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("regret"));
        for f in ["summary.json", "rounds.csv", "schedule.csv"] {
            assert!(out.join(f).exists(), "{sub} {f}");
        }
        let again = dir.path().join(format!("{sub}-again"));
        run(sub, cfg, &again, &[]);
        assert_eq!(fs::read(out.join("rounds.csv")).unwrap(), fs::read(again.join("rounds.csv")).unwrap());
        let reseeded = dir.path().join(format!("{sub}-reseeded"));
        run(sub, cfg, &reseeded, &["--seed", "99"]);
        assert_ne!(fs::read(out.join("rounds.csv")).unwrap(), fs::read(reseeded.join("rounds.csv")).unwrap());
    }
}

#[test]
fn best_response_writes_a_policy() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("best-response", &configs().join("best_response.json"), dir.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("best_response.json")).unwrap()).unwrap();
    assert!(report["max_deviation"].as_f64().unwrap() <= 1.0 + 1e-9);
    assert!(dir.path().join("policy.json").exists());
}

#[test]
fn stability_and_sweep_run() {
    let dir = tempfile::tempdir().unwrap();
    let stab = small(
        dir.path(),
        "st.json",
        r#"{"rounds": 32, "alpha": 0.25, "epsilon": 0.5, "t0": 1, "bid_a": 1.0, "bid_b": 0.0,
            "lags": [1], "thresholds": [1.0], "seeds": 1000, "seed": 3}"#,
    );
    let o = run("stability", &stab, dir.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("stability.json").exists());

    let sw = small(
        dir.path(),
        "sw.json",
        r#"{"base": {"rounds": 64, "alpha": 0.25, "epsilon": 1.0, "tau": 1, "seed": 2},
            "mechanism": "bandit", "rounds": [32, 64], "replicas": 2}"#,
    );
    let o = run("sweep", &sw, dir.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = fs::read_to_string(dir.path().join("sweep_rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 4);
    let table = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 2);
}

#[test]
fn bad_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = small(dir.path(), "bad.json", r#"{"rounds": 64, "alpha": 0.7, "epsilon": 1.0, "tau": 1}"#);
    let o = run("simulate-single", &bad, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    let o = run("simulate-single", &dir.path().join("missing.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_reserve-lab")).arg("nope").output().unwrap();
    assert!(!o.status.success());
}
