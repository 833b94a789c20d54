//! End-to-end contract of the binary: exit codes, output formats, config
//! file precedence, atomic writes, and rerun stability.

use std::fs;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_pvsim")
}

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(bin());
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn help_exits_zero_and_usage_errors_exit_two() {
    assert_eq!(run(&["--help"], &[]).status.code(), Some(0));
    assert_eq!(run(&["density", "--help"], &[]).status.code(), Some(0));

    assert_eq!(run(&["no-such-command"], &[]).status.code(), Some(2));
    assert_eq!(run(&["density", "--paths", "zero?"], &[]).status.code(), Some(2));
    assert_eq!(
        run(&["smalldev", "--paths", "0"], &[]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["increments", "--rho", "1.5"], &[]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["increments", "--rho", "0.3", "--alpha", "1.0"], &[]).status.code(),
        Some(2)
    );
    // An output path whose parent cannot be a directory is an IO error,
    // not a crash.
    assert_eq!(
        run(
            &["density", "--out", "/dev/null/sub/y.csv"],
            &[("PVSIM_THREADS", "1")]
        )
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn passing_run_exits_zero_and_failing_run_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("density.csv");
    let ok = run(
        &["density", "--out", out.to_str().unwrap()],
        &[("PVSIM_THREADS", "1")],
    );
    assert_eq!(ok.status.code(), Some(0), "stdout: {}", stdout(&ok));
    assert!(stdout(&ok).contains("checks passed"));

    // A tiny eta ensemble cannot reach 5e4 records, so one check fails.
    let out2 = dir.path().join("eta.json");
    let failing = run(
        &[
            "verify-eta", "--paths", "40", "--steps", "256", "--out",
            out2.to_str().unwrap(),
        ],
        &[("PVSIM_THREADS", "1")],
    );
    assert_eq!(failing.status.code(), Some(1), "stdout: {}", stdout(&failing));
    assert!(stdout(&failing).contains("FAIL record_count"));
    assert!(out2.exists(), "report written even when checks fail");
}

#[test]
fn density_csv_has_the_documented_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("density.csv");
    let res = run(
        &["density", "--out", out.to_str().unwrap()],
        &[("PVSIM_THREADS", "1")],
    );
    assert_eq!(res.status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,density,cdf,tail_upper");
    assert_eq!(lines.len(), 1 + 129, "129 grid rows after the header");
    assert!(text.ends_with('\n'));
    assert!(!text.contains('\r'));
    // Every numeric field round-trips through the printed precision.
    for field in lines[1].split(',') {
        let v: f64 = field.parse().unwrap();
        assert_eq!(format!("{v:.16e}"), field);
    }
}

#[test]
fn json_report_is_stable_except_runtime() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");
    let args = |p: &str| {
        vec![
            "smalldev".to_string(),
            "--paths".into(),
            "500".into(),
            "--steps".into(),
            "256".into(),
            "--seed".into(),
            "11".into(),
            "--out".into(),
            p.to_string(),
        ]
    };
    for (out, threads) in [(&out_a, "1"), (&out_b, "4")] {
        let argv: Vec<String> = args(out.to_str().unwrap());
        let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
        run(&argv, &[("PVSIM_THREADS", threads)]);
    }
    let a: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out_a).unwrap()).unwrap();
    let b: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out_b).unwrap()).unwrap();
    // The echo differs only where the invocations differ: out path and
    // worker count. Every result field must match bit for bit.
    for key in ["command", "paths", "steps", "seed", "window", "format"] {
        assert_eq!(a["config"][key], b["config"][key], "config field {key}");
    }
    assert_eq!(a["config"]["workers"].as_u64(), Some(1));
    assert_eq!(b["config"]["workers"].as_u64(), Some(4));
    assert_eq!(a["tests"], b["tests"]);
    assert_eq!(a["samples_digest"], b["samples_digest"]);
    assert!(a["runtime_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(
        a["samples_digest"]["count"].as_u64(),
        Some(500),
        "digest counts every sample"
    );
    assert_eq!(
        a["samples_digest"]["order_stats"].as_array().unwrap().len(),
        8
    );
}

#[test]
fn config_file_supplies_defaults_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(
        &conf,
        "# shared settings\npaths = 400\nsteps = 512\nseed = 5\nformat = csv\n",
    )
    .unwrap();
    let out_a = dir.path().join("a.csv");
    let res = run(
        &[
            "increments", "--config", conf.to_str().unwrap(), "--out",
            out_a.to_str().unwrap(),
        ],
        &[("PVSIM_THREADS", "1")],
    );
    assert_ne!(res.status.code(), Some(2));
    let text_a = fs::read_to_string(&out_a).unwrap();
    assert_eq!(text_a.lines().count(), 1 + 400, "config file paths applied");

    // The flag wins over the file.
    let out_b = dir.path().join("b.csv");
    let res = run(
        &[
            "increments", "--config", conf.to_str().unwrap(), "--paths", "50",
            "--out", out_b.to_str().unwrap(),
        ],
        &[("PVSIM_THREADS", "1")],
    );
    assert_ne!(res.status.code(), Some(2));
    assert_eq!(
        fs::read_to_string(&out_b).unwrap().lines().count(),
        1 + 50
    );

    // Unknown keys are rejected.
    let bad = dir.path().join("bad.conf");
    fs::write(&bad, "paths = 10\nnum_threads = 4\n").unwrap();
    assert_eq!(
        run(
            &["increments", "--config", bad.to_str().unwrap()],
            &[("PVSIM_THREADS", "1")]
        )
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn env_threads_beats_flag_but_never_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    run(
        &[
            "smalldev", "--paths", "600", "--steps", "256", "--format", "csv",
            "--workers", "3", "--out", out_a.to_str().unwrap(),
        ],
        &[("PVSIM_THREADS", "2")],
    );
    run(
        &[
            "smalldev", "--paths", "600", "--steps", "256", "--format", "csv",
            "--workers", "1", "--out", out_b.to_str().unwrap(),
        ],
        &[("PVSIM_THREADS", "7")],
    );
    assert_eq!(fs::read(&out_a).unwrap(), fs::read(&out_b).unwrap());
}

#[test]
fn writes_are_atomic_with_no_stray_temp_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.csv");
    run(
        &[
            "smalldev", "--paths", "200", "--steps", "128", "--format", "csv",
            "--out", out.to_str().unwrap(),
        ],
        &[("PVSIM_THREADS", "1")],
    );
    let entries: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(entries, vec!["report.csv"], "no temp files left behind");
}
