use std::path::Path;
use std::process::{Command, Output};

fn gbeta(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gbeta"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn population_sample_fit_diagnose_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&gbeta(
        &[
            "generate-population",
            "--n",
            "25",
            "--seed",
            "4",
            "--out",
            "pop.json",
            "--model-out",
            "model.json",
        ],
        d,
    ));
    assert_eq!(json(&d.join("pop.json"))["n_nodes"], 25);
    let theta: Vec<f64> = (0..25).map(|_| -1.0).chain([0.25]).collect();
    std::fs::write(d.join("theta.json"), serde_json::to_string(&theta).unwrap()).unwrap();

    ok(&gbeta(
        &[
            "sample",
            "--model",
            "model.json",
            "--theta",
            "theta.json",
            "--n-samples",
            "3",
            "--burn-in",
            "10",
            "--spacing",
            "2",
            "--out",
            "samples",
        ],
        d,
    ));
    let manifest = json(&d.join("samples/manifest.json"));
    assert_eq!(manifest["files"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["gibbs"]["burn_in_sweeps"], 10);
    let first = std::fs::read_to_string(d.join("samples/sample_0000.csv")).unwrap();
    assert!(first.starts_with("i,j\n"));

    ok(&gbeta(
        &[
            "fit",
            "--graph",
            "samples/sample_0002.csv",
            "--model",
            "model.json",
            "--out",
            "fit.json",
        ],
        d,
    ));
    let fit = json(&d.join("fit.json"));
    assert_eq!(fit["theta_hat"].as_array().unwrap().len(), 26);
    assert!(fit["wall_ms"].is_u64());
    assert!(fit["status"].is_string());

    ok(&gbeta(
        &[
            "diagnose",
            "--model",
            "model.json",
            "--theta",
            "theta.json",
            "--out",
            "report.json",
        ],
        d,
    ));
    let report = json(&d.join("report.json"));
    assert_eq!(report["D"], 24);
    assert!(report["psi_bound"].as_f64().unwrap() > 0.0);
    assert!(report["mc_coupling_matrix"].is_null());
}

#[test]
fn diagnose_with_mc_coupling_on_a_small_model() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let model = r#"{"variant": "brokerage", "population": {"n_nodes": 5, "subpops": [[1, 2, 3], [3, 4, 5]]}}"#;
    std::fs::write(d.join("model.json"), model).unwrap();
    std::fs::write(d.join("theta.json"), "[0.1, 0.0, -0.1, 0.05, 0.0, 0.1]").unwrap();
    ok(&gbeta(
        &[
            "diagnose",
            "--model",
            "model.json",
            "--theta",
            "theta.json",
            "--assumption",
            "b1",
            "--omega1",
            "2",
            "--omega2",
            "0",
            "--mc-coupling",
            "exhaustive",
            "--n-mc",
            "200",
            "--out",
            "r.json",
        ],
        d,
    ));
    let r = json(&d.join("r.json"));
    let mc = &r["mc_coupling_matrix"]["entries"];
    assert_eq!(mc.as_array().unwrap().len(), 10);
    assert_eq!(r["assumption_b"]["b1"]["omega1"], 2.0);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for args in [
        vec!["experiment", "--n-list", "30", "--out", "x"],
        vec!["experiment", "--n-list", "25", "--reps", "0", "--out", "x"],
        vec![
            "experiment",
            "--n-list",
            "25",
            "--variant",
            "nope",
            "--out",
            "x",
        ],
        vec!["experiment", "--n-list", "25"],
        vec!["generate-population", "--n", "40", "--out", "p.json"],
        vec![
            "fit",
            "--graph",
            "missing.csv",
            "--model",
            "missing.json",
            "--out",
            "f.json",
        ],
        vec![
            "diagnose",
            "--model",
            "missing.json",
            "--theta",
            "t.json",
            "--out",
            "r.json",
        ],
    ] {
        let out = gbeta(&args, d);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    std::fs::write(
        d.join("bad.json"),
        r#"{"n_values": [25], "unknown_key": 1}"#,
    )
    .unwrap();
    assert_eq!(
        gbeta(&["experiment", "--config", "bad.json", "--out", "x"], d)
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn experiment_outputs_and_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("cfg.json"),
        r#"{"n_values": [25, 50], "replications": 3, "seed": 5, "gibbs": {"burn_in_sweeps": 20, "sweeps_between_samples": 1, "seed": 0, "scan_order": "random_permutation_per_sweep"}}"#,
    )
    .unwrap();
    ok(&gbeta(
        &["experiment", "--config", "cfg.json", "--out", "exp"],
        d,
    ));
    let csv = std::fs::read_to_string(d.join("exp/trials.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,rep,seed,converged,error_sup,error_degrees,error_brokerage,iterations,wall_ms"
    );
    assert_eq!(lines.count(), 6);
    let manifest = json(&d.join("exp/manifest.json"));
    assert_eq!(manifest["config"]["replications"], 3);
    assert!(manifest["version"].as_str().unwrap().starts_with('v'));
    let summary = json(&d.join("exp/summary.json"));
    assert_eq!(summary["per_n"].as_array().unwrap().len(), 2);

    let out = gbeta(
        &["summarize", "--trials", "exp/trials.csv", "--out", "s.json"],
        d,
    );
    ok(&out);
    assert_eq!(json(&d.join("s.json")), summary);
    assert!(String::from_utf8_lossy(&out.stdout).contains("r(N)"));
}
