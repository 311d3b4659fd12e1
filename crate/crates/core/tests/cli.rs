use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wholebody::motor::{synthetic_dataset, write_dataset_csv, MotorModelParams, MotorSample};

fn crate_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

/// Fresh scratch directory per test.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("wholebody-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn wholebody(args: &[&std::ffi::OsStr]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wholebody"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_valid_model_exits_zero() {
    let o = wholebody(&[
        "check".as_ref(),
        "--model".as_ref(),
        crate_path("fixtures/biped.urdf").as_os_str(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn check_cyclic_model_exits_one() {
    let o = wholebody(&[
        "check".as_ref(),
        "--model".as_ref(),
        crate_path("fixtures/cyclic.urdf").as_os_str(),
    ]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("error"));
}

#[test]
fn missing_file_exits_two() {
    let o = wholebody(&["check".as_ref(), "--model".as_ref(), "no/such/model.urdf".as_ref()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no/such/model.urdf"));
}

#[test]
fn unknown_flag_exits_two() {
    let o = wholebody(&["simulate".as_ref(), "--frobnicate".as_ref()]);
    assert_eq!(code(&o), 2);
}

fn write_dataset(dir: &Path, data: &[MotorSample]) -> PathBuf {
    let path = dir.join("motor.csv");
    let mut buf = Vec::new();
    write_dataset_csv(&mut buf, data).unwrap();
    std::fs::write(&path, buf).unwrap();
    path
}

#[test]
fn identify_recovers_planted_parameters() {
    let dir = scratch("identify");
    let planted = MotorModelParams::from_array([1.2, 0.4, 0.5, 0.08, 0.12]);
    let dataset = write_dataset(&dir, &synthetic_dataset(&planted, 2000, 0.0, 0));
    let report = dir.join("fit.csv");
    let o = wholebody(&[
        "identify".as_ref(),
        dataset.as_os_str(),
        "--out".as_ref(),
        report.as_os_str(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(report).unwrap();
    let value = |name: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(&format!("{name},"))).unwrap();
        line.split(',').nth(1).unwrap().parse().unwrap()
    };
    assert!((value("k_t") - 1.2).abs() < 1e-9);
    assert!((value("k_cn") - 0.12).abs() < 1e-9);
}

#[test]
fn malformed_dataset_names_the_row() {
    let dir = scratch("malformed");
    let path = dir.join("bad.csv");
    std::fs::write(&path, "time,voltage,torque,velocity\n0,1,2,3\n0.001,oops,2,3\n").unwrap();
    let o = wholebody(&["identify".as_ref(), path.as_os_str()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("row 3"), "{}", stderr(&o));
}

#[test]
fn one_sided_velocity_is_a_domain_error() {
    let dir = scratch("unexcited");
    let planted = MotorModelParams::from_array([1.2, 0.4, 0.5, 0.08, 0.12]);
    let data: Vec<MotorSample> = synthetic_dataset(&planted, 2000, 0.0, 0)
        .into_iter()
        .filter(|s| s.velocity > 0.0)
        .collect();
    let dataset = write_dataset(&dir, &data);
    let o = wholebody(&["identify".as_ref(), dataset.as_os_str()]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn simulate_writes_trajectory_and_summary() {
    let dir = scratch("simulate");
    let o = wholebody(&[
        "simulate".as_ref(),
        "--config".as_ref(),
        crate_path("scenarios/balance_push.toml").as_os_str(),
        "--out".as_ref(),
        dir.as_os_str(),
        "--duration".as_ref(),
        "2.5".as_ref(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let traj = std::fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 2501);
    let summary = std::fs::read_to_string(dir.join("summary.txt")).unwrap();
    assert!(summary.contains("qp_failures"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("wall_time_s"));
}

#[test]
fn unknown_contact_in_script_is_a_domain_error() {
    let dir = scratch("unknown-contact");
    let script = dir.join("script.toml");
    std::fs::write(&script, "duration = 1.0\ninitial_contacts = [\"l_foot\", \"nose\"]\n").unwrap();
    let scenario = dir.join("scenario.toml");
    std::fs::write(
        &scenario,
        format!(
            "model = {:?}\nscript = \"script.toml\"\n\n[initial]\nbalanced = true\n",
            crate_path("fixtures/biped.urdf").display().to_string()
        ),
    )
    .unwrap();
    let o = wholebody(&[
        "simulate".as_ref(),
        "--config".as_ref(),
        scenario.as_os_str(),
        "--out".as_ref(),
        dir.join("out").as_os_str(),
    ]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stderr(&o).contains("nose"), "{}", stderr(&o));
}

#[test]
fn estimate_recovers_the_scripted_push() {
    let dir = scratch("estimate");
    let o = wholebody(&[
        "estimate".as_ref(),
        "--config".as_ref(),
        crate_path("scenarios/arm_push.toml").as_os_str(),
        "--out".as_ref(),
        dir.as_os_str(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for file in ["estimation.csv", "ft.csv", "trajectory.csv", "estimation_summary.txt"] {
        assert!(dir.join(file).exists(), "{file}");
    }
    // Noise-free sensor: every wrench and torque error is at round-off.
    let summary = std::fs::read_to_string(dir.join("estimation_summary.txt")).unwrap();
    for line in summary.lines().skip(1) {
        let max: f64 = line.rsplit("= ").next().unwrap().parse().unwrap();
        assert!(max < 1e-8, "{line}");
    }
}
