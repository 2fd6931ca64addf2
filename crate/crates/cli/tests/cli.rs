use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use genai_abm_cli::output::{read_trajectory_csv, TRAJECTORY_HEADER};
use tempfile::TempDir;

fn genai_abm(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_genai-abm"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn zero_steps_writes_initial_row_only() {
    let dir = TempDir::new().unwrap();
    let out = genai_abm(
        &["--steps", "0", "--agents", "10", "simulate", "--out", "t.csv"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], TRAJECTORY_HEADER);
    let fields: Vec<f64> = lines[1].split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(fields[0], 0.0);
    assert!((fields[1] - 0.01).abs() <= 1e-15);
    assert_eq!(fields[7], 0.1);
}

#[test]
fn simulate_default_output_round_trips() {
    let dir = TempDir::new().unwrap();
    let out = genai_abm(&["--steps", "25", "--agents", "40", "simulate"], dir.path());
    assert_eq!(code(&out), 0);
    let traj = read_trajectory_csv(&fs::read_to_string(dir.path().join("trajectory.csv")).unwrap()).unwrap();
    assert_eq!(traj.rows.len(), 26);
    assert_eq!(traj.rows[25].t, 25.0);
}

#[test]
fn json_format_selected_by_flag() {
    let dir = TempDir::new().unwrap();
    let out = genai_abm(
        &["--steps", "3", "--agents", "5", "--format", "json", "simulate"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("trajectory.json")).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn single_run_ensemble_has_zero_spread() {
    let dir = TempDir::new().unwrap();
    let out = genai_abm(
        &[
            "--runs", "1", "--agents", "50", "--steps", "30", "ensemble", "--out", "ens",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let ens = dir.path().join("ens");
    assert!(ens.join("run_0000.csv").exists());
    assert!(ens.join("shape_report.csv").exists());
    let summary = fs::read_to_string(ens.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let std_cols: Vec<usize> = (0..header.len()).filter(|&i| header[i].ends_with("_std")).collect();
    assert_eq!(std_cols.len(), 7);
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        for &i in &std_cols {
            assert_eq!(fields[i].parse::<f64>().unwrap(), 0.0, "{} in `{line}`", header[i]);
        }
    }
}

#[test]
fn ensemble_bytes_independent_of_threads() {
    let dir = TempDir::new().unwrap();
    for threads in ["1", "3"] {
        let target = format!("out{threads}");
        let args = [
            "--runs",
            "4",
            "--agents",
            "9000",
            "--steps",
            "20",
            "--threads",
            threads,
            "ensemble",
            "--out",
            &target,
        ];
        assert_eq!(code(&genai_abm(&args, dir.path())), 0);
    }
    let mut names: Vec<_> = fs::read_dir(dir.path().join("out1"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 6);
    for name in names {
        let a = fs::read(dir.path().join("out1").join(&name)).unwrap();
        let b = fs::read(dir.path().join("out3").join(&name)).unwrap();
        assert!(a == b, "{name:?} differs");
    }
}

#[test]
fn validate_passes_on_defaults_and_writes_report() {
    let dir = TempDir::new().unwrap();
    let out = genai_abm(&["validate", "--out", "conv.csv"], dir.path());
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.ends_with(" ok")).count(), 2, "{stdout}");
    let report = fs::read_to_string(dir.path().join("conv.csv")).unwrap();
    assert_eq!(report.lines().count(), 1 + 6);
}

#[test]
fn validate_failure_exits_three() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), r#"{"alpha_base": 0.8, "alpha_sd": 0, "gamma_sd": 0}"#);
    let out = genai_abm(&["--config", &cfg, "validate"], dir.path());
    assert_eq!(code(&out), 3);
}

#[test]
fn config_errors_exit_one_and_name_the_key() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), r#"{"dt": 0}"#);
    let out = genai_abm(&["--config", &cfg, "simulate"], dir.path());
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("`dt`"));

    let cfg = write_config(dir.path(), r#"{"gamma": 0.1}"#);
    assert_eq!(code(&genai_abm(&["--config", &cfg, "simulate"], dir.path())), 1);
    assert_eq!(code(&genai_abm(&["--runs", "0", "ensemble"], dir.path())), 1);
    assert_eq!(code(&genai_abm(&["frobnicate"], dir.path())), 1);
    assert!(!dir.path().join("trajectory.csv").exists());
}

#[test]
fn io_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let out = genai_abm(&["--config", "missing.json", "simulate"], dir.path());
    assert_eq!(code(&out), 2);
    let out = genai_abm(
        &[
            "--steps",
            "2",
            "--agents",
            "2",
            "simulate",
            "--out",
            "no/such/dir/t.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn calibrate_recovers_gamma_from_written_target() {
    let dir = TempDir::new().unwrap();
    let truth = write_config(
        dir.path(),
        r#"{"alpha_sd": 0, "beta_sd": 0, "gamma_sd": 0, "gamma_base": 0.08, "n_agents": 10, "n_steps": 120}"#,
    );
    assert_eq!(
        code(&genai_abm(
            &["--config", &truth, "simulate", "--out", "target.csv"],
            dir.path()
        )),
        0
    );

    let fixed = write_config(
        dir.path(),
        r#"{"alpha_sd": 0, "beta_sd": 0, "gamma_sd": 0, "n_agents": 10, "n_steps": 120}"#,
    );
    let out = genai_abm(
        &[
            "--config",
            &fixed,
            "calibrate",
            "--target",
            "target.csv",
            "--fit",
            "gamma_base=0.01:0.2",
            "--grid-points",
            "12",
            "--refine-iters",
            "30",
            "--out",
            "fit.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let fit = fs::read_to_string(dir.path().join("fit.csv")).unwrap();
    let value = |key: &str| -> f64 {
        fit.lines()
            .find_map(|l| l.strip_prefix(&format!("{key},")))
            .unwrap_or_else(|| panic!("no {key} in {fit}"))
            .parse()
            .unwrap()
    };
    assert!((value("gamma_base") - 0.08).abs() / 0.08 < 0.01, "{fit}");
    assert_eq!(value("evaluations"), (12 + 2 * 30) as f64);
}

#[test]
fn calibrate_rejects_unknown_parameter() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("target.csv"),
        format!("{TRAJECTORY_HEADER}\n0,0,0,0,0,0,0,0\n"),
    )
    .unwrap();
    let out = genai_abm(
        &["calibrate", "--target", "target.csv", "--fit", "seed=0:1"],
        dir.path(),
    );
    assert_eq!(code(&out), 1);
}
