use cocycle_lab::scenario::{self, execute, write_all, Metadata, Outcome, Verdict};

fn run(name: &str, overrides: &[&str]) -> Outcome {
    let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    let (sc, _) = scenario::load(name, &overrides).unwrap();
    execute(&sc.prepare().unwrap())
}

fn failed_checks(o: &Outcome) -> Vec<String> {
    o.report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{c:?}"))
        .collect()
}

#[test]
fn quick_scenarios_pass() {
    for name in [
        "catmap_livsic_poc",
        "catmap_conjugate_poc_violation",
        "sft_half_turn_witness_failure",
        "sft_no_fixed_point_period2",
        "catmap_livsic_regularity",
    ] {
        let o = run(name, &[]);
        assert_eq!(
            o.report.verdict,
            Verdict::Pass,
            "{name}: {:?} {:?}",
            o.report.error,
            failed_checks(&o)
        );
    }
}

#[test]
fn coboundary_is_recovered() {
    let o = run(
        "catmap_coboundary_reconstruct",
        &["pipeline.eval_points=10", "pipeline.residual_samples=10"],
    );
    assert_eq!(o.report.verdict, Verdict::Pass, "{:?}", failed_checks(&o));
    assert!(o.report.check("oracle_sup_d0").unwrap().measured < 1e-7);
}

#[test]
fn a_negative_scenario_fails_when_success_is_expected() {
    let o = run("sft_half_turn_witness_failure", &["pipeline.expect=pass"]);
    assert_eq!(o.report.verdict, Verdict::Fail);
    assert_eq!(o.report.verdict.exit_code(), 1);
}

#[test]
fn violated_poc_is_reported_when_success_is_expected() {
    let o = run(
        "catmap_conjugate_poc_violation",
        &["pipeline.expect=pass", "pipeline.homoclinic_points=2"],
    );
    assert_eq!(o.report.verdict, Verdict::Fail);
    assert!(!o.report.check("poc_max_deviation").unwrap().passed);
}

#[test]
fn non_dominated_cocycles_degrade() {
    let o = run(
        "catmap_nondominated_bump",
        &[
            "fiber.grid_size=512",
            "pipeline.samples=4",
            "pipeline.scales=3",
            "pipeline.domination_samples=256",
        ],
    );
    assert_eq!(
        o.report.verdict,
        Verdict::Degraded,
        "{:?} {:?}",
        o.report.error,
        failed_checks(&o)
    );
    assert_eq!(o.report.verdict.exit_code(), 0);
    assert!(o.report.check("domination_gate_alpha").unwrap().passed);
    let dom = &o.report.domination.as_ref().unwrap().alpha;
    assert!(!dom.satisfied && dom.product >= 1.0);
    assert!(o.report.check("no_silent_jet_certificate").unwrap().passed);
}

#[test]
fn reports_are_deterministic() {
    let a = run("catmap_livsic_poc", &["pipeline.homoclinic_points=4"]);
    let b = run("catmap_livsic_poc", &["pipeline.homoclinic_points=4"]);
    assert_eq!(
        serde_json::to_string(&a.report).unwrap(),
        serde_json::to_string(&b.report).unwrap()
    );
    assert_eq!(a.tables, b.tables);
}

#[test]
fn outputs_are_written() {
    let o = run("catmap_livsic_poc", &["pipeline.homoclinic_points=4"]);
    let dir = tempfile::tempdir().unwrap();
    let meta = Metadata {
        scenario: "catmap_livsic_poc".into(),
        version: "test".into(),
        started_unix: 0.0,
        finished_unix: 0.0,
        elapsed_seconds: 0.0,
        budget_seconds: 60.0,
        workers: 1,
        parallel: false,
        timings: o.timings.clone(),
    };
    let files = write_all(dir.path(), &o.report, &o.tables, &meta).unwrap();
    for name in [
        "report.json",
        "metadata.json",
        "poc.csv",
        "su_consistency.csv",
    ] {
        assert!(
            files.iter().any(|f| f.ends_with(name)),
            "{name} missing from {files:?}"
        );
    }
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let back: scenario::Report = serde_json::from_str(&text).unwrap();
    assert_eq!(back.verdict, Verdict::Pass);
    let mut rdr = csv::Reader::from_path(dir.path().join("poc.csv")).unwrap();
    assert!(rdr.records().count() > 0);
}
