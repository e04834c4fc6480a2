use std::path::Path;
use std::process::{Command, Output};

fn catsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_catsim"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn catenary_prints_static_quantities() {
    let o = catsim(&["catenary", "--s", "0.8", "--l", "2", "--w", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("shape_param=6.76403758171e-1"), "{text}");
    assert!(text.contains("t1_z=-1.00000000000e0"));
    assert!(text.contains("max_tension=1.20727877645e0"));
}

#[test]
fn catenary_rejects_taut_cable() {
    let o = catsim(&["catenary", "--s", "1.0", "--l", "2", "--w", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "a.cfg",
        "sim.horizon = 2\ndisturbance.amplitude = 0.35\n",
    );
    let out = dir.path().join("out");
    let o = catsim(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout(&o).contains("status=complete"));
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2002);
    assert!(out.join("lyapunov.csv").exists());
    assert!(out.join("report.txt").exists());
}

#[test]
fn run_mode_override_and_bad_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.cfg", "sim.horizon = 0.1\n");
    let o = catsim(&["run", "--config", &cfg, "--mode", "full"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("mode=full"));
    let o = catsim(&["run", "--config", &cfg, "--mode", "sideways"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = write_config(dir.path(), "k.cfg", "gains.nonsense = 1\n");
    assert_eq!(
        catsim(&["run", "--config", &bad_key]).status.code(),
        Some(1)
    );
    let bad_step = write_config(dir.path(), "h.cfg", "sim.h = -1\n");
    assert_eq!(
        catsim(&["run", "--config", &bad_step]).status.code(),
        Some(1)
    );
    assert_eq!(
        catsim(&["run", "--config", "/nonexistent/x.cfg"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(catsim(&["run"]).status.code(), Some(1));
}

#[test]
fn sweeps_write_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.cfg", "sim.horizon = 4\n");
    let out = dir.path().join("sw");
    let o = catsim(&[
        "sweep-disturbance",
        "--config",
        &cfg,
        "--amps",
        "0.1,0.3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    for variant in ["low", "high"] {
        let text =
            std::fs::read_to_string(out.join(format!("sweep_disturbance_{variant}.csv"))).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("param,tail_metric,lambda_hat,status\n"));
    }

    let o = catsim(&[
        "sweep-gain",
        "--config",
        &cfg,
        "--kvs",
        "4,8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out.join("sweep_gain.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn sweep_without_output_directory_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.cfg", "sim.horizon = 1\n");
    assert_eq!(
        catsim(&["sweep-gain", "--config", &cfg]).status.code(),
        Some(1)
    );
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.cfg", "sim.horizon = 0.1\n");
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let o = catsim(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
