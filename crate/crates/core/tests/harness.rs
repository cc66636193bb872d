mod common;

use common::config;
use dre_deletion::dre::EstimatorKind;
use dre_deletion::harness::{
    run_deletion_trials, run_q1, run_q2, run_q3, run_repeats, write_outputs, Experiment, Question,
    RunSummary,
};
use dre_deletion::stats::PhiFamily;

const SMALL: &[&str] = &[
    "N=100",
    "m=60",
    "R=6",
    r#"estimator_grid=[{"kind":"exact"},{"kind":"kbc","sigma_c":0.15},{"kind":"knn","k":5}]"#,
    r#"phi_families=["kl","log","hellinger"]"#,
];

#[test]
fn run_repeats_emits_every_series() {
    let c = config(SMALL);
    let exp = Experiment::prepare(&c).unwrap();
    let out = run_repeats(&c, &exp, &EstimatorKind::Kbc { sigma_c: 0.15 }).unwrap();
    let lr: Vec<_> = out.series.keys().filter(|k| k.starts_with("LR/")).collect();
    assert_eq!(lr.len(), 8);
    for set in ["Y_hat", "Y_D", "Y_H0", "Y_H1"] {
        for ratio in ["rho", "rho_e"] {
            assert!(out.series.contains_key(&format!("LR/{set}/{ratio}")));
        }
    }
    for phi in [PhiFamily::Kl, PhiFamily::Log, PhiFamily::Hellinger] {
        let n = out
            .series
            .keys()
            .filter(|k| k.starts_with(&format!("ASC_{}/", phi.name())))
            .count();
        assert_eq!(n, 6);
    }
    assert!(out.series.values().all(|s| s.len() == 6));
    assert!(out.acceptance_rate().unwrap() > 0.0);
}

#[test]
fn exact_estimator_gives_zero_q1_ks() {
    let report = run_q1(&config(SMALL)).unwrap();
    let row = report
        .row(&EstimatorKind::Exact { sigma: 0.1 }, "LR")
        .unwrap();
    assert_eq!(row.ks, 0.0);
    assert_eq!(report.rows.len(), 3 * 4);
}

#[test]
fn q3_without_deletion_is_null() {
    let mut o = SMALL.to_vec();
    o.extend(["lambda=1", "R=40"]);
    let report = run_q3(&config(&o)).unwrap();
    for row in &report.rows {
        assert!(row.ks < row.critical_05, "{row:?}");
    }
}

#[test]
fn smoke_run_writes_outputs() {
    let c = config(&[
        "R=2",
        "N=80",
        "m=30",
        r#"estimator_grid=[{"kind":"knn","k":3}]"#,
    ]);
    let report = run_q2(&c).unwrap();
    assert_eq!(report.question, Question::Q2);
    let exp = Experiment::prepare(&c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = RunSummary {
        command: "q2".into(),
        config: c.clone(),
        seeds: Default::default(),
        n_train: exp.training.len(),
        n_deleted: exp.training.n_deleted(),
        bound: 1.0,
        estimators: report.diagnostics(),
        runtime_seconds: 0.0,
        results: serde_json::Value::Null,
    };
    write_outputs(
        dir.path(),
        &report.statistics(),
        Some(&report.rows),
        &summary,
    )
    .unwrap();
    let ks = std::fs::read_to_string(dir.path().join("ks_table.csv")).unwrap();
    let mut lines = ks.lines();
    assert_eq!(
        lines.next(),
        Some("experiment,estimator,statistic,ks,critical_05")
    );
    assert_eq!(lines.count(), 2);
    let stats = std::fs::read_to_string(dir.path().join("statistics.csv")).unwrap();
    assert!(stats.starts_with("name,repeat_index,value\n"));
    assert!(stats.contains("knn(k=3)/LR/Y_D/rho_e,1,"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(json["config"]["R"], 2);
}

#[test]
fn repeats_are_deterministic_and_independent_of_other_series() {
    let c = config(SMALL);
    let exp = Experiment::prepare(&c).unwrap();
    let kind = EstimatorKind::Knn { k: 5 };
    let a = run_repeats(&c, &exp, &kind).unwrap();
    let b = run_repeats(&c, &exp, &kind).unwrap();
    assert_eq!(a.series, b.series);
    let q1 = run_q1(&c).unwrap();
    let run = q1.runs.iter().find(|r| r.kind == kind).unwrap();
    for (name, s) in &run.output.series {
        assert_eq!(&a.series[name], s);
    }
}

#[test]
fn redraw_x_changes_training_per_repeat() {
    let mut o = SMALL.to_vec();
    o.push("redraw_x=true");
    let c = config(&o);
    let exp = Experiment::prepare(&c).unwrap();
    let kind = EstimatorKind::Kbc { sigma_c: 0.15 };
    let a = run_repeats(&c, &exp, &kind).unwrap();
    let b = run_repeats(&c, &exp, &kind).unwrap();
    assert_eq!(a.series, b.series);
    let fixed = run_repeats(&config(SMALL), &exp, &kind).unwrap();
    assert_ne!(a.series["LR/Y_H0/rho"], fixed.series["LR/Y_H0/rho"]);
}

#[test]
fn deletion_trials_report_rates() {
    let c = config(&["N=80", "m=40", "n_cal=20", "lambda=0.5"]);
    let exp = Experiment::prepare(&c).unwrap();
    let s = run_deletion_trials(&c, &exp, &EstimatorKind::Kbc { sigma_c: 0.1 }, 10).unwrap();
    assert_eq!(s.null_statistics.len(), 10);
    assert!((0.0..=1.0).contains(&s.false_rejection_rate));
    assert!((0.0..=1.0).contains(&s.power));
}
