use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pathforms"))
}

#[test]
fn list_prints_every_catalog_id() {
    let out = bin().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for e in pathforms::experiments::CATALOG {
        assert!(text.contains(e.id), "missing {}", e.id);
    }
    assert!(text.contains("thm9.3-torsion-divergence") && text.contains("prop8.2-flat-wiener"));
}

#[test]
fn run_then_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--manifold", "euclidean(2)", "--steps", "16", "--samples", "200", "--suite", "flat", "--plots", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.starts_with("experiment,manifold,N,samples,estimate,std_error,tolerance,verdict\n"));
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",PASS")));

    let again = tempfile::tempdir().unwrap();
    let rep = bin().arg("report").arg(dir.path().join("report.json")).arg("--out").arg(again.path()).output().unwrap();
    assert_eq!(rep.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(again.path().join("report.csv")).unwrap(), csv);
}

#[test]
fn config_file_and_env_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"manifold": "flat_torus(2)", "steps": 16, "samples": 100, "suite": ["flat-collapse"]}"#).unwrap();
    let out_dir = dir.path().join("env-out");
    let out = bin().arg("run").arg("--config").arg(&cfg).env("PATHFORMS_OUT", &out_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert!(csv.contains("flat-collapse,euclidean(2);flat_torus(2),16,"));
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["run", "--suite", "no-such-experiment"],
        vec!["run", "--steps", "2"],
        vec!["run", "--manifold", "sphere(9)"],
        vec!["report", "/nonexistent/report.json"],
    ] {
        let out = bin().args(&args).env("PATHFORMS_OUT", std::env::temp_dir()).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn unknown_config_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"stepz": 16}"#).unwrap();
    let out = bin().arg("run").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
