use std::path::Path;
use std::process::{Command, Output};

use epinet_cli::experiment::MANIFEST_FILE;
use epinet_cli::{run_experiment, CliError, ExperimentConfig, Manifest, PointOutput};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epinet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn error_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let v: serde_json::Value = serde_json::from_str(text.trim()).expect("stderr is one JSON object");
    v["error"].clone()
}

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(text, "inline").unwrap()
}

fn validation_field(text: &str) -> String {
    match config(text).validate() {
        Err(CliError::Config { field, .. }) => field,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn validation_names_the_offending_field() {
    let cases = [
        (r#"{"model":"sis_ode","params":{"beta":1}}"#, "params.gamma"),
        (r#"{"model":"sis_ode","params":{"beta":1,"gamma":0.1,"delta":0.2}}"#, "params.delta"),
        (r#"{"model":"sis_ode","params":{"beta":-1,"gamma":0.1}}"#, "params.beta"),
        (
            r#"{"model":"sis_ode","params":{"beta":1,"gamma":0.1},"graph":{"family":"complete","n":4}}"#,
            "graph",
        ),
        (r#"{"model":"sis_meanfield","params":{"beta":0.1,"gamma":0.1,"delta":0.1,"r":1}}"#, "graph"),
        (
            r#"{"model":"sis_meanfield","graph":{"family":"complete","n":4},"params":{"beta":0.1,"gamma":0.1,"delta":0,"r":1}}"#,
            "params.delta (sweep point 0)",
        ),
        (
            r#"{"model":"sis_ode","params":{"beta":1,"gamma":0.1},"sweep":{"parameters":["beta"],"increment":0.1,"count":0}}"#,
            "sweep.count",
        ),
        (
            r#"{"model":"sis_ode","params":{"beta":1,"gamma":0.1},"sweep":{"parameters":["delta"],"increment":0.1,"count":2}}"#,
            "sweep.parameters",
        ),
        (r#"{"model":"sis_ode","params":{"beta":1,"gamma":0.1},"run":{"dt":0}}"#, "run.dt"),
        (r#"{"model":"sis_ode","params":{"beta":1,"gamma":0.1},"run":{"init":1.5}}"#, "run.init"),
        (
            r#"{"model":"sis_ode","params":{"beta":1,"gamma":0.1},"run":{"allow_negative_coefficients":true}}"#,
            "run.allow_negative_coefficients",
        ),
    ];
    for (text, field) in cases {
        assert_eq!(validation_field(text), field, "{text}");
    }

    let swept = r#"{"model":"sis_mc","graph":{"family":"cycle","n":5},
        "params":{"beta":0.5,"gamma":0.1,"delta":0.1,"r":1},
        "sweep":{"parameters":["beta"],"increment":0.3,"count":3}}"#;
    assert_eq!(validation_field(swept), "params.beta (sweep point 2)");
}

#[test]
fn unknown_keys_are_rejected() {
    let err = ExperimentConfig::from_json(r#"{"model":"sis_ode","params":{"beta":1,"gamma":0.1},"extra":1}"#, "x")
        .unwrap_err();
    assert_eq!(err.kind(), "json");
    assert!(err.is_validation());
}

#[test]
fn sis_ode_config_reaches_equilibrium() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(r#"{"model":"sis_ode","params":{"beta":1,"gamma":0.1},"run":{"init":0.01,"t_end":200}}"#);
    let res = run_experiment(&cfg, dir.path(), dir.path()).unwrap();
    let Some(PointOutput::Ode(traj)) = &res.outputs[0] else {
        panic!("expected an ODE trajectory");
    };
    let (t, st) = traj.last().unwrap();
    assert!((t - 200.0).abs() < 1e-9);
    assert!((st.i - 0.9).abs() < 1e-6);
    assert_eq!(res.manifest.files, vec!["point_00.csv"]);
    assert_eq!(res.manifest.seed, None);
}

#[test]
fn manifest_records_every_point_and_failures_do_not_abort() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"model":"sis_meanfield","graph":{"family":"complete","n":20},
        "params":{"beta":0.0,"delta":0.9,"gamma":0.05,"r":1},
        "sweep":{"parameters":["beta"],"increment":0.5,"count":2},
        "run":{"steps":50,"init":0.9}}"#;
    let cfg = config(text);
    let res = run_experiment(&cfg, dir.path(), dir.path()).unwrap();
    let m = &res.manifest;
    assert_eq!(m.model, "sis_meanfield");
    assert_eq!(m.config_hash, cfg.hash());
    assert_eq!(m.config_hash.len(), 64);
    assert_eq!(m.swept_values.len(), 2);
    assert_eq!(m.swept_values[1]["beta"], 0.5);

    assert!(m.points[0].error.is_none());
    assert_eq!(m.points[0].file.as_deref(), Some("point_00.csv"));
    let err = m.points[1].error.as_ref().expect("second point fails");
    assert_eq!(err.kind, "bound_violation");
    assert!(m.points[1].file.is_none());
    // Scores are computed before the dynamics, so the failing point still has one.
    assert!(m.scores.iter().all(Option::is_some));

    assert_eq!(m.files, vec!["graph.txt", "point_00.csv"]);
    let mut on_disk: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|f| f != MANIFEST_FILE)
        .collect();
    on_disk.sort();
    assert_eq!(on_disk, m.files);

    let written: Manifest = serde_json::from_str(&std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(&written, m);
}

#[test]
fn hash_ignores_key_order_and_whitespace() {
    let a = config(r#"{"model":"sis_ode","params":{"beta":1,"gamma":0.1}}"#);
    let b = config(r#"{ "params": { "gamma": 0.1, "beta": 1 }, "model": "sis_ode" }"#);
    let c = config(r#"{"model":"sis_ode","params":{"beta":1,"gamma":0.2}}"#);
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), c.hash());
}

#[test]
fn edge_list_graph_resolves_against_the_config_directory() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("g.txt"), "3\n0 1\n1 2\n2 0\n").unwrap();
    let cfg_path = dir.path().join("exp.json");
    std::fs::write(
        &cfg_path,
        r#"{"model":"sis_mc","graph":{"family":"edge_list","path":"g.txt"},
            "params":{"beta":0.2,"gamma":0.3,"delta":0.5,"r":1},"run":{"steps":10,"runs":5,"seed":3}}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = bin(&["sweep", "--config", cfg_path.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: Manifest = serde_json::from_str(&std::fs::read_to_string(out.join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(m.seed, Some(3));
    assert_eq!(m.files, vec!["graph.txt", "point_00.csv"]);
}

#[test]
fn exit_codes_and_error_bodies() {
    let o = bin(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["kind"], "usage");

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"model":"sis_ode","params":{"beta":1}}"#).unwrap();
    let o = bin(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_json(&o);
    assert_eq!(e["kind"], "config");
    assert_eq!(e["field"], "params.gamma");

    let missing = dir.path().join("missing.txt");
    let o = bin(&["spectral", "--graph", missing.to_str().unwrap(), "--beta", "0.1", "--delta", "0.1", "--gamma", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_json(&o)["kind"], "io");
}

fn generate(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name).to_str().unwrap().to_string();
    let mut full = vec!["generate"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", &path]);
    let o = bin(&full);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    path
}

#[test]
fn spectral_prints_score_and_label() {
    let dir = tempfile::tempdir().unwrap();
    let g = generate(dir.path(), "lat.txt", &["--family", "lattice4", "--rows", "5", "--cols", "6"]);
    let vec_out = dir.path().join("v.csv");
    let o = bin(&[
        "spectral", "--graph", &g, "--beta", "0.4", "--delta", "0.65", "--gamma", "0.3", "--vector-out",
        vec_out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let line = String::from_utf8(o.stdout).unwrap();
    let (s, label) = line.trim().split_once(' ').unwrap();
    let s: f64 = s.strip_prefix("s=").unwrap().parse().unwrap();
    // 1 - delta + 4 r beta gamma / (gamma + delta) on a 4-regular graph.
    assert!((s - (0.35 + 4.0 * 0.4 * 0.3 / 0.95)).abs() < 1e-9);
    assert_eq!(label, "fast_extinction=true");
    let rows = std::fs::read_to_string(vec_out).unwrap();
    assert_eq!(rows.lines().count(), 31);

    let o = bin(&["spectral", "--graph", &g, "--beta", "2", "--delta", "0.1", "--gamma", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["field"], "beta");
}

#[test]
fn isolate_reports_json_and_cycle_failure() {
    let dir = tempfile::tempdir().unwrap();
    let g = generate(dir.path(), "lat.txt", &["--family", "lattice4", "--rows", "5", "--cols", "6"]);
    let params = dir.path().join("p.json");
    std::fs::write(&params, r#"{"delta":0.65,"gamma":0.3,"r":1,"beta":0.4}"#).unwrap();
    let out = dir.path().join("after.txt");
    let o = bin(&[
        "isolate", "--graph", &g, "--strategy", "greedy", "--k", "3", "--params", params.to_str().unwrap(), "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["strategy"], "greedy");
    assert_eq!(report["edges_removed_count"], 3);
    assert_eq!(report["lambda1_trace"].as_array().unwrap().len(), 3);
    assert!(report["lambda1_after"].as_f64().unwrap() < report["lambda1_before"].as_f64().unwrap());
    assert!(report["score_after"].as_f64().unwrap() < report["score_before"].as_f64().unwrap());
    let after = epinet::graph::load_edge_list(&out).unwrap();
    assert_eq!(after.edge_count(), 57);

    let star = generate(dir.path(), "star.txt", &["--family", "star", "--n", "6"]);
    let o = bin(&["isolate", "--graph", &star, "--strategy", "cycle", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let e = error_json(&o);
    assert_eq!(e["kind"], "hamiltonian_not_found");
    assert_eq!(e["partial_path"], serde_json::json!([0, 1]));
}

#[test]
fn ode_and_meanfield_commands_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sir.csv");
    let o = bin(&[
        "ode", "--model", "sir", "--beta", "0.8", "--gamma", "0.1", "--i0", "0.001", "--t-end", "50", "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("t,s,i,r"));
    assert_eq!(text.lines().count(), 5002);

    let g = generate(dir.path(), "c.txt", &["--family", "cycle", "--n", "10"]);
    let mf = dir.path().join("mf.csv");
    let o = bin(&[
        "meanfield", "--graph", &g, "--beta", "0.1", "--delta", "0.5", "--gamma", "0.3", "--steps", "20", "--out",
        mf.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["steps"], 20);
    assert_eq!(std::fs::read_to_string(&mf).unwrap().lines().count(), 22);
}
