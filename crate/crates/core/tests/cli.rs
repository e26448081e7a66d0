use std::path::Path;
use std::process::Command;

fn run(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_covert-noma"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a.csv", "b.csv"] {
        let o = run(
            dir.path(),
            &[
                "sop",
                "--trials",
                "5000",
                "--seed",
                "9",
                "--set",
                "sweep.steps=4",
                "--out",
                out,
            ],
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    let side: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("a.json")).unwrap()).unwrap();
    assert_eq!(side["seed"], 9);
    assert_eq!(side["config"]["mc_trials"], 5000);
    assert!(side["spec_version"].is_string());
}

#[test]
fn seed_changes_monte_carlo_columns_only() {
    let dir = tempfile::tempdir().unwrap();
    for (seed, out) in [("1", "s1.csv"), ("2", "s2.csv")] {
        let o = run(
            dir.path(),
            &[
                "dep-phase1",
                "--trials",
                "5000",
                "--seed",
                seed,
                "--set",
                "sweep.steps=3",
                "--out",
                out,
            ],
        );
        assert!(o.status.success());
    }
    let read = |f: &str| -> Vec<csv::StringRecord> {
        csv::Reader::from_path(dir.path().join(f))
            .unwrap()
            .records()
            .map(Result::unwrap)
            .collect()
    };
    let (r1, r2) = (read("s1.csv"), read("s2.csv"));
    assert_eq!(r1.len(), 3);
    for (x, y) in r1.iter().zip(&r2) {
        assert_eq!(&x[3], &y[3]);
    }
}

#[test]
fn config_file_and_set_are_applied() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"sweep": {"var": "n_samples", "start": 2, "stop": 4, "steps": 3, "unit": "linear"}}"#,
    )
    .unwrap();
    let o = run(
        dir.path(),
        &[
            "dep-phase2",
            "--config",
            "cfg.json",
            "--set",
            "omega2=2.5",
            "--trials",
            "1000",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("dep-phase2.csv")).unwrap();
    assert!(text.starts_with("sweep_var,value,metric,analytic,mc_mean,mc_stderr,extra\n"));
    assert_eq!(text.lines().filter(|l| l.starts_with("n_samples,")).count(), 3);
    assert!(text.contains("omega=2.5;"));
}

#[test]
fn bad_input_exits_nonzero_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["sop", "--set", "params.unknown=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("sop.csv").exists());
    let o = run(dir.path(), &["not-an-experiment"]);
    assert!(!o.status.success());
}

#[test]
fn infeasible_points_are_reported_as_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "covert-rate",
            "--set",
            "realizations=5",
            "--set",
            "sweep.start=-20",
            "--set",
            "sweep.stop=-10",
            "--set",
            "sweep.steps=2",
        ],
    );
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("covert-rate.csv")).unwrap();
    assert!(text.contains("feasible=false"));
    assert_eq!(text.lines().count(), 1 + 2 * 6);
}
