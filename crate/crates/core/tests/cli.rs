use std::path::Path;
use std::process::{Command, Output};

fn avglab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_avglab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("AVGLAB_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const JACOBIAN: &[&str] = &[
    "run",
    "--suite",
    "jacobian",
    "--d",
    "3",
    "--N",
    "5",
    "--samples",
    "1000",
    "--seed",
    "7",
];

#[test]
fn jacobian_run_writes_residuals_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = avglab(&[JACOBIAN, &["--out-dir", "out"]].concat(), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(),
        2
    );
    let csv =
        std::fs::read_to_string(dir.path().join("out/jacobian-d3-N5-s7.residuals.csv")).unwrap();
    assert!(csv.starts_with("sample,factorization_residual,holomorphy_residual\n"));
    assert_eq!(csv.lines().count(), 1001);
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/jacobian-d3-N5-s7.summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["schema"], 1);
    assert_eq!(summary["pass"], true);
    assert_eq!(summary["assertions"].as_array().unwrap().len(), 2);
    // no temporary files are left behind
    let leftovers = std::fs::read_dir(dir.path().join("out"))
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .starts_with('.')
        })
        .count();
    assert_eq!(leftovers, 0);
}

#[test]
fn same_seed_gives_identical_csv_for_any_job_count() {
    let dir = tempfile::tempdir().unwrap();
    for (out, jobs) in [("a", "1"), ("b", "2"), ("c", "1")] {
        let o = avglab(
            &[JACOBIAN, &["--out-dir", out, "--jobs", jobs]].concat(),
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(0));
    }
    let read = |d: &str| {
        std::fs::read(dir.path().join(d).join("jacobian-d3-N5-s7.residuals.csv")).unwrap()
    };
    assert_eq!(read("a"), read("b"));
    assert_eq!(read("a"), read("c"));
}

#[test]
fn malformed_config_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.json"),
        "{\n  \"suite\": \"jacobian\",\n  \"seed\": 7,,\n}",
    )
    .unwrap();
    let o = avglab(&["run", "--config", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    std::fs::write(
        dir.path().join("unknown.json"),
        r#"{"suite": "jacobian", "samples": 5}"#,
    )
    .unwrap();
    let o = avglab(&["run", "--config", "unknown.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown field"), "{}", stderr(&o));

    let o = avglab(&["run", "--suite", "nonsense"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_tolerances_drive_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("strict.json"),
        r#"{"suite": "jacobian", "seed": 1, "curve": {"d": 2, "phi": {"monomial": 4}},
            "budget": {"samples": 50}, "out_dir": "strict",
            "jacobian": {"factorization_tol": 1e-300}}"#,
    )
    .unwrap();
    let o = avglab(&["run", "--config", "strict.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL max_factorization_residual"));
    assert!(dir
        .path()
        .join("strict/jacobian-d2-N4-s1.summary.json")
        .exists());
}

#[test]
fn sampler_exhaustion_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("tight.json"),
        r#"{"suite": "bands", "curve": {"d": 3, "phi": {"monomial": 4}},
            "budget": {"samples": 20}, "bands": {"max_tries": 1}}"#,
    )
    .unwrap();
    let o = avglab(
        &["run", "--config", "tight.json", "--out-dir", "o"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn out_dir_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_avglab"))
        .args(["run", "--suite", "lorentz", "--samples", "50"])
        .current_dir(dir.path())
        .env("AVGLAB_OUT_DIR", "from-env")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir
        .path()
        .join("from-env/lorentz-d2-N2-s0.summary.json")
        .exists());
}

#[test]
fn report_orders_suites_and_flags_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = avglab(&["report", "none/*.summary.json"], p);
    assert_eq!(o.status.code(), Some(2));

    avglab(&[JACOBIAN, &["--out-dir", "r1"]].concat(), p);
    let o = avglab(&["report", "r1/*.summary.json", "--out-dir", "rep1"], p);
    assert_eq!(o.status.code(), Some(0));
    let md = stdout(&o);
    assert_eq!(md.matches("\n## ").count(), 1);
    assert!(md.contains("## jacobian"));
    assert!(p.join("rep1/report.md").exists());

    avglab(
        &[
            "run",
            "--suite",
            "lorentz",
            "--samples",
            "50",
            "--out-dir",
            "r1",
        ],
        p,
    );
    // the same experiment id again, later and with a different tolerance
    std::fs::write(
        p.join("loose.json"),
        r#"{"suite": "jacobian", "jacobian": {"factorization_tol": 1e-3}}"#,
    )
    .unwrap();
    std::thread::sleep(std::time::Duration::from_millis(5));
    avglab(
        &[
            "run",
            "--config",
            "loose.json",
            "--d",
            "3",
            "--N",
            "5",
            "--samples",
            "1000",
            "--seed",
            "7",
            "--out-dir",
            "r2",
        ],
        p,
    );
    let o = avglab(&["report", "r*/*.summary.json", "--out-dir", "rep2"], p);
    assert_eq!(o.status.code(), Some(0));
    let md = stdout(&o);
    let j = md.find("## jacobian").unwrap();
    let l = md.find("## lorentz").unwrap();
    assert!(j < l);
    assert!(md.contains("CONFLICTING"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.join("rep2/report.json")).unwrap())
            .unwrap();
    let dup = &report["duplicates"][0];
    assert_eq!(dup["experiment_id"], "jacobian-d3-N5-s7");
    assert!(dup["kept"].as_str().unwrap().starts_with("r2"));
    assert_eq!(report["sections"].as_array().unwrap().len(), 2);
}
