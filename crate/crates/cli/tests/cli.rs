use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cocycle-lab"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn quick_run(dir: &Path) -> Output {
    cli(&[
        "run",
        "catmap_livsic_poc",
        "--output-dir",
        dir.to_str().unwrap(),
        "--override",
        "pipeline.homoclinic_points=4",
        "--max-workers",
        "1",
        "-q",
    ])
}

#[test]
fn lists_bundled_scenarios() {
    let a = cli(&["list-scenarios"]);
    assert!(a.status.success());
    let text = stdout(&a);
    let names: Vec<&str> = text
        .lines()
        .filter_map(|l| l.split_whitespace().next())
        .collect();
    assert!(names.len() >= 8, "{text}");
    for n in [
        "catmap_nondominated_bump",
        "catmap_conjugate_poc_violation",
        "sft_half_turn_witness_failure",
    ] {
        assert!(names.contains(&n), "{n} missing");
    }
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert_eq!(text, stdout(&cli(&["list-scenarios"])));
}

#[test]
fn malformed_config_exits_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    let text = include_str!("../../../scenarios/catmap_livsic_poc.json")
        .replace("\"poc_tol\": 1e-10", "\"poc_tol\": -1e-10");
    assert!(text.contains("-1e-10"));
    std::fs::write(&cfg, text).unwrap();
    let out = tmp.path().join("out");
    let o = cli(&[
        "run",
        cfg.to_str().unwrap(),
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("poc_tol"));
    assert!(!out.exists());
}

#[test]
fn unknown_fields_and_bad_overrides_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let dir = out.to_str().unwrap();
    for extra in [
        ["--override", "pipeline.samples=-3"],
        ["--override", "pipeline.no_such_field=1"],
        ["--override", "nonsense"],
        ["--max-workers", "0"],
    ] {
        let mut args = vec!["run", "catmap_livsic_poc", "--output-dir", dir];
        args.extend(extra);
        let o = cli(&args);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{extra:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!out.exists());
    }
    assert_eq!(cli(&["run", "no_such_scenario"]).status.code(), Some(2));
}

#[test]
fn run_writes_report_and_series() {
    let tmp = tempfile::tempdir().unwrap();
    let o = quick_run(tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("catmap_livsic_poc: pass"));
    for f in [
        "report.json",
        "metadata.json",
        "poc.csv",
        "su_consistency.csv",
    ] {
        assert!(tmp.path().join(f).is_file(), "{f}");
    }
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "pass");
    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["workers"], 1);
    assert!(meta["elapsed_seconds"].as_f64().unwrap() <= meta["budget_seconds"].as_f64().unwrap());
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(quick_run(a.path()).status.success());
    assert!(quick_run(b.path()).status.success());
    for f in ["report.json", "poc.csv", "su_consistency.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn failing_expectation_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let o = cli(&[
        "run",
        "sft_half_turn_witness_failure",
        "--output-dir",
        tmp.path().to_str().unwrap(),
        "--override",
        "pipeline.expect=pass",
        "-q",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(tmp.path().join("report.json").is_file());
}
