use std::fs;
use std::process::Command;

use dre_deletion::cli::parse_and_dispatch;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dre-deletion"))
}

fn write_config(dir: &std::path::Path) -> std::path::PathBuf {
    let path = dir.join("mog8.json");
    fs::write(
        &path,
        r#"{"dataset":"mog8","lambda":0.6,"N":80,"m":40,"R":4,
            "estimator_grid":[{"kind":"kbc","sigma_c":0.1}]}"#,
    )
    .unwrap();
    path
}

#[test]
fn q3_with_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("q3");
    let code = parse_and_dispatch([
        "dre-deletion",
        "q3",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "lambda=0.8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["lambda"], 0.8);
    assert_eq!(summary["command"], "q3");
    let ks = fs::read_to_string(out.join("ks_table.csv")).unwrap();
    assert!(ks
        .lines()
        .skip(1)
        .all(|l| l.starts_with("q3,kbc(sigma_c=0.1),")));
}

#[test]
fn missing_config_names_path() {
    let out = bin()
        .args(["q1", "--config", "/definitely/missing.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("/definitely/missing.json"), "{err}");
    assert_eq!(err.trim().lines().count(), 1);
}

#[test]
fn generate_writes_dataset_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("gen");
    let status = bin()
        .args([
            "generate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join("dataset.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,y,cluster_id,deleted"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 80);
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 4);
        assert!((1..=8).contains(&f[2].parse::<u32>().unwrap()));
        assert!(f[3] == "0" || f[3] == "1");
    }
}

#[test]
fn usage_and_config_errors_exit_2() {
    assert_eq!(parse_and_dispatch(["dre-deletion", "q1", "--bogus"]), 2);
    assert_eq!(parse_and_dispatch(["dre-deletion", "frobnicate"]), 2);
    assert_eq!(
        parse_and_dispatch(["dre-deletion", "q1", "--set", "lambda=2"]),
        2
    );
    assert_eq!(
        parse_and_dispatch(["dre-deletion", "q1", "--set", "typo_key=1"]),
        2
    );
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let code = parse_and_dispatch([
        "dre-deletion",
        "generate",
        "--set",
        "N=20",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 3);
}

#[test]
fn mmd_and_test_commands_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    for cmd in ["mmd", "test"] {
        let out = dir.path().join(cmd);
        let code = parse_and_dispatch([
            "dre-deletion",
            cmd,
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "n_cal=20",
            "--set",
            "test_trials=4",
            "--threads",
            "2",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{cmd}");
        assert!(out.join("statistics.csv").exists());
        assert!(out.join("summary.json").exists());
    }
}
