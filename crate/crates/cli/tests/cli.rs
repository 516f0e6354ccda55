use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_heatinv"))
}

fn run(cwd: &Path, args: &[&str]) -> Output {
    bin().current_dir(cwd).args(args).output().unwrap()
}

fn mnist(k: usize) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../core/data/mnist/mnist_{k:02}.pgm"))
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn flat_csv(dir: &Path, side: usize) -> PathBuf {
    let p = dir.join("flat.csv");
    fs::write(&p, vec![vec!["0"; side].join(","); side].join("\n")).unwrap();
    p
}

#[test]
fn help_lists_every_flag_with_a_default() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["forward", "invert", "spectrum", "compare", "prep-image"] {
        let o = run(dir.path(), &[sub, "--help"]);
        assert!(o.status.success(), "{sub}");
        let text = stdout(&o);
        for line in text
            .lines()
            .filter(|l| l.trim_start().starts_with("--") && !l.contains("--help") && !l.contains("--version"))
        {
            assert!(line.contains("[default") || line.contains("[required"), "{sub}: {line}");
        }
    }
    let top = stdout(&run(dir.path(), &["--help"]));
    assert!(top.contains("CONFIG FILE") && top.contains("EXIT CODES"));
}

#[test]
fn forward_1d_writes_time_plus_nodes_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "forward",
            "--dim",
            "1",
            "--truth",
            "heaviside",
            "--J",
            "100",
            "--out",
            "run",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("run/trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 101);
    assert_eq!(csv.lines().count(), 1 + 101);
}

#[test]
fn forward_2d_writes_three_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let img = mnist(0);
    let o = run(
        dir.path(),
        &[
            "forward",
            "--dim",
            "2",
            "--image",
            img.to_str().unwrap(),
            "--J",
            "8",
            "--measurements",
            "4",
            "--plots",
            "--out",
            "run",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for k in 0..3 {
        assert!(dir.path().join(format!("run/snapshot_{k}.svg")).is_file());
    }
}

#[test]
fn missing_image_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["forward", "--dim", "2", "--image", "no_such_digit.pgm"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no_such_digit.pgm"));
}

#[test]
fn invert_reports_loss_and_writes_run_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "invert",
            "--dim",
            "1",
            "--truth",
            "heaviside",
            "--sensors",
            "circle",
            "--J",
            "24",
            "--measurements",
            "24",
            "--epochs",
            "8",
            "--out",
            "run",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o);
    let parts: Vec<&str> = line.split_whitespace().collect();
    assert!(parts[0].starts_with("loss=") && parts[1].starts_with("rel_err="));
    assert!(parts[0][5..].parse::<f64>().unwrap() >= 0.0);
    for f in [
        "spec.json",
        "measurements.csv",
        "training_log.csv",
        "reconstruction.csv",
        "summary.json",
    ] {
        assert!(dir.path().join("run").join(f).is_file(), "{f}");
    }
    let entries: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(entries.len(), 1);
}

#[test]
fn invert_2d_runs() {
    let dir = tempfile::tempdir().unwrap();
    let img = mnist(1);
    let o = run(
        dir.path(),
        &[
            "invert",
            "--dim",
            "2",
            "--image",
            img.to_str().unwrap(),
            "--sensors",
            "orbits4",
            "--J",
            "8",
            "--measurements",
            "16",
            "--epochs",
            "3",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("heatinv-out/training_log.csv").is_file());
}

#[test]
fn constant_initial_temperature_is_non_recoverable() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["invert", "--dim", "1", "--u0", "constant"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("not recoverable"));
}

#[test]
fn spectrum_of_constant_truth_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let side = 6;
    let img = flat_csv(dir.path(), side);
    let o = run(
        dir.path(),
        &["spectrum", "--image", img.to_str().unwrap(), "--J", "6", "--out", "all"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("all/spectrum.csv")).unwrap();
    let mut got: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let (c, dx) = (0.01, 1.0 / side as f64);
    let axis = |p: usize| 2.0 * c * ((std::f64::consts::TAU * p as f64 / side as f64).cos() - 1.0) / (dx * dx);
    let mut want: Vec<f64> = (0..side * side).map(|k| axis(k / side) + axis(k % side)).collect();
    got.sort_by(f64::total_cmp);
    want.sort_by(f64::total_cmp);
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() <= 1e-9 * w.abs().max(1.0), "{g} vs {w}");
    }
    let nulls: Vec<&str> = csv.lines().filter(|l| l.contains(",inf,")).collect();
    assert_eq!(nulls.len(), 1);
    assert!(nulls[0].split(',').nth(1).unwrap().parse::<f64>().unwrap() == 0.0);

    let o = run(
        dir.path(),
        &[
            "spectrum",
            "--dim",
            "1",
            "--truth",
            "piecelinear4w",
            "--J",
            "30",
            "--modes",
            "5",
            "--out",
            "five",
        ],
    );
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("five/spectrum.csv")).unwrap();
    assert_eq!(csv.lines().skip(1).filter(|l| !l.contains(",inf,")).count(), 5);
}

#[test]
fn compare_needs_two_layouts() {
    let dir = tempfile::tempdir().unwrap();
    let img = mnist(0);
    let o = run(
        dir.path(),
        &["compare", "--image", img.to_str().unwrap(), "--configs", "orbits4"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let img = mnist(2);
    let args = |out: &'static str| {
        vec![
            "compare".to_string(),
            "--image".into(),
            img.to_str().unwrap().into(),
            "--J".into(),
            "8".into(),
            "--measurements".into(),
            "16".into(),
            "--epochs".into(),
            "3".into(),
            "--configs".into(),
            "orbits4,static16,orbits4".into(),
            "--levels".into(),
            "1e-2,1e-3,1e-9".into(),
            "--out".into(),
            out.into(),
        ]
    };
    let a = bin().current_dir(dir.path()).args(args("a")).output().unwrap();
    let b = bin().current_dir(dir.path()).args(args("b")).output().unwrap();
    assert!(a.status.success(), "{}", stderr(&a));
    let fa = fs::read(dir.path().join("a/frontier.csv")).unwrap();
    assert_eq!(fa, fs::read(dir.path().join("b/frontier.csv")).unwrap());
    assert_eq!(String::from_utf8(fa).unwrap().lines().count(), 1 + 9);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("exp.json"),
        r#"{"grid_size": 16, "measurements": 16, "seed": 5, "noise_sd": 1e-3, "gd": {"max_epoch": 2, "gamma": 3.0}}"#,
    )
    .unwrap();
    let o = run(
        dir.path(),
        &["invert", "--config", "exp.json", "--seed", "7", "--out", "run"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let spec: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run/spec.json")).unwrap()).unwrap();
    assert_eq!(spec["seed"], 7);
    assert_eq!(spec["grid_size"], 16);
    assert_eq!(spec["gd"]["gamma"], 3.0);
    assert_eq!(spec["gd"]["n_max"], 9);

    fs::write(
        dir.path().join("typo.json"),
        r#"{"gd": {"gamma": 3.0, "max_epochs": 2}}"#,
    )
    .unwrap();
    let o = run(dir.path(), &["invert", "--config", "typo.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("max_epochs"));
}

#[test]
fn prep_image_resizes_to_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let img = mnist(0);
    let o = run(
        dir.path(),
        &["prep-image", "--image", img.to_str().unwrap(), "--out", "prep"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let bytes = fs::read(dir.path().join("prep/mnist_00_32.pgm")).unwrap();
    assert!(bytes.starts_with(b"P5\n32 32\n255\n"));
    assert_eq!(bytes.len(), 13 + 32 * 32);
}
