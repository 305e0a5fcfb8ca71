use std::path::Path;
use std::process::{Command, Output};

fn sctool(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sctool"));
    cmd.args(args).env_remove("SC_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("sctool runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn nilpotent_config(checks: &str, expectation: &str, z: &str, out: &str) -> String {
    format!(
        r#"{{
            "instance": {{"generator": "nilpotent_counterexample"}},
            "z_values": ["{z}"],
            "beta_grid": {{"min_exponent": 1, "max_exponent": 4, "points_per_decade": 5}},
            "checks": [{checks}],
            "expectation": "{expectation}",
            "output_dir": "{out}"
        }}"#
    )
}

#[test]
fn validate_echoes_normalized_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &nilpotent_config("\"rate\"", "divergent", "0.5,0.5", "o"));
    let out = sctool(&["validate", &cfg], &[]);
    assert_eq!(out.status.code(), Some(0));
    let echo: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(echo["z_values"][0]["re"], 0.5);
    assert_eq!(echo["checks"][0], "rate");
    assert!(!dir.path().join("o").exists(), "validate must not run anything");
}

#[test]
fn validate_rejects_bad_configs_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "u.json", &nilpotent_config("\"rate\", \"magic\"", "convergent", "1,1", "o"));
    let out = sctool(&["validate", &unknown], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("checks[1]") && err.contains("magic"), "{err}");

    let grid = nilpotent_config("\"rate\"", "convergent", "1,1", "o").replace("\"min_exponent\": 1", "\"min_exponent\": 9");
    let grid = write_config(dir.path(), "g.json", &grid);
    let out = sctool(&["validate", &grid], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta_grid"));

    let out = sctool(&["run", &dir.path().join("missing.json").display().to_string()], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_checks_write_metadata_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &nilpotent_config("", "convergent", "1,1", "o"));
    let out = sctool(&["run", &cfg], &[]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/report.json")).unwrap()).unwrap();
    assert_eq!(report["instance"]["name"], "nilpotent_counterexample");
    assert_eq!(report["checks"].as_array().unwrap().len(), 0);
    assert!(dir.path().join("o/plot_curves.py").exists());
}

#[test]
fn nilpotent_rate_passes_only_when_divergence_is_expected() {
    let dir = tempfile::tempdir().unwrap();
    let conv = write_config(dir.path(), "a.json", &nilpotent_config("\"rate\"", "convergent", "0.5,0.5", "a"));
    assert_eq!(sctool(&["run", &conv], &[]).status.code(), Some(1));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/report.json")).unwrap()).unwrap();
    let slope = report["checks"][0]["metrics"]["fitted_slope"].as_f64().unwrap();
    assert!((slope - 1.0).abs() < 0.05, "slope {slope}");

    let div = write_config(dir.path(), "b.json", &nilpotent_config("\"rate\"", "divergent", "0.5,0.5", "b"));
    assert_eq!(sctool(&["run", &div], &[]).status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("b/report.json")).unwrap()).unwrap();
    assert_eq!(report["checks"][0]["metrics"]["verdict"], "divergent as predicted");
    let csv = std::fs::read_to_string(dir.path().join("b/curve_rate_0.5_0.5.csv")).unwrap();
    assert!(csv.starts_with("beta,value\n10,"));
    assert!(!csv.contains('\r'));
}

#[test]
fn singular_on_every_beta_exits_3() {
    // A + βB − I = [[0, β], [0, 0]] is singular for every β.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &nilpotent_config("\"rate\"", "divergent", "1,0", "o"));
    assert_eq!(sctool(&["run", &cfg], &[]).status.code(), Some(3));
    assert!(dir.path().join("o/report.json").exists());
}

#[test]
fn graph_file_run_reports_projector_and_compression() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("g.txt"),
        "node 1 1\nnode 2 1\nnode 3 1\nedge 1 2 1\nedge 2 1 1\nedge 2 3 2\nedge 3 2 1\n",
    )
    .unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
            "instance": {"graph_file": "g.txt", "cluster": ["2", "3"]},
            "z_values": ["-1,0"],
            "beta_grid": {"min_exponent": 1, "max_exponent": 5, "points_per_decade": 5},
            "checks": ["riesz", "reduction"],
            "output_dir": "o"
        }"#,
    );
    let out = sctool(&["run", &cfg], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/report.json")).unwrap()).unwrap();
    let p = &report["checks"][0]["metrics"]["projector"];
    let expected = [[1.0, 0.0, 0.0], [0.0, 1.0 / 3.0, 2.0 / 3.0], [0.0, 1.0 / 3.0, 2.0 / 3.0]];
    for (i, row) in expected.iter().enumerate() {
        for (j, want) in row.iter().enumerate() {
            let got = p[i][j]["re"].as_f64().unwrap();
            assert!((got - want).abs() < 1e-8, "P[{i}][{j}] = {got}");
        }
    }
    let red = &report["checks"][1]["metrics"];
    assert_eq!(red["hypothesis_violation"], true);
    assert_eq!(red["supernode"], "2+3");
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let body = |out: &str| {
        format!(
            r#"{{
                "instance": {{"generator": "finite_rank_perturbation", "params": {{"dim": 10, "rank": 4}}}},
                "z_values": ["0,2", "-1,1"],
                "beta_grid": {{"min_exponent": 1, "max_exponent": 4, "points_per_decade": 4}},
                "checks": ["riesz", "rate", "schur", "uniform_bound", "cauchy"],
                "seed": 11,
                "output_dir": "{out}"
            }}"#
        )
    };
    let a = write_config(dir.path(), "a.json", &body("same"));
    assert_eq!(sctool(&["run", &a], &[("SC_THREADS", "1")]).status.code(), Some(0));
    let first = std::fs::read(dir.path().join("same/report.json")).unwrap();
    assert_eq!(sctool(&["run", &a], &[("SC_THREADS", "3")]).status.code(), Some(0));
    let second = std::fs::read(dir.path().join("same/report.json")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn bad_thread_cap_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &nilpotent_config("", "convergent", "1,1", "o"));
    assert_eq!(sctool(&["run", &cfg], &[("SC_THREADS", "0")]).status.code(), Some(2));
}

#[test]
fn zoo_list_prints_every_generator() {
    let out = sctool(&["zoo", "list"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for g in spectral_coupling::zoo::generators() {
        assert!(text.contains(g.name), "missing {}", g.name);
    }
    assert!(text.contains("w03"));
}
