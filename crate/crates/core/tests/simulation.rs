//! Scenario runner, sweeps, CSV output and reports.

use catsim_core::analysis::tail_metric;
use catsim_core::controller::agent_references;
use catsim_core::simkit::output::{
    lyapunov_to_string, sweep_to_string, trace_to_string, LYAPUNOV_HEADER,
};
use catsim_core::simkit::sweep::SweepResult;
use catsim_core::simkit::{
    analyze_run, run_scenario, sweep_disturbance, sweep_gain, write_sweep_csv, GainVariant, Mode,
    SimConfig, SimError,
};

fn reduced(amplitude: f64) -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.disturbance = cfg.disturbance.with_amplitude(amplitude);
    cfg
}

fn full(horizon: f64) -> SimConfig {
    SimConfig {
        mode: Mode::Full,
        horizon,
        ..SimConfig::default()
    }
}

#[test]
fn trace_has_one_row_per_step_plus_initial() {
    let mut cfg = reduced(0.35);
    cfg.horizon = 0.5;
    let trace = run_scenario(&cfg).unwrap();
    assert_eq!(trace.rows.len(), cfg.steps() + 1);
    let text = trace_to_string(&trace);
    assert_eq!(text.lines().count(), cfg.steps() + 2);
    assert!(text.ends_with('\n'));
    assert!(text.starts_with("t,ep_x,ep_y,ep_z,ev_x,ev_y,ev_z,norm_e,V,Vdot_fd,dd_x,dd_y,dd_z\n"));
    // uniform time grid
    for (k, row) in trace.rows.iter().enumerate() {
        assert!((row.t - k as f64 * cfg.step).abs() < 1e-12);
    }
    let lyap = lyapunov_to_string(&trace.lyapunov_samples());
    assert!(lyap.starts_with(LYAPUNOV_HEADER));
    assert_eq!(lyap.lines().count(), cfg.steps() + 2);
}

#[test]
fn full_trace_rows_have_all_columns() {
    let trace = run_scenario(&full(0.05)).unwrap();
    let text = trace_to_string(&trace);
    let mut lines = text.lines();
    let width = lines.next().unwrap().split(',').count();
    assert_eq!(width, 13 + 2 * 22);
    assert!(lines.all(|l| l.split(',').count() == width));
}

#[test]
fn runs_are_deterministic() {
    for cfg in [reduced(0.35), full(0.5)] {
        let a = trace_to_string(&run_scenario(&cfg).unwrap());
        let b = trace_to_string(&run_scenario(&cfg).unwrap());
        assert_eq!(a, b);
    }
}

#[test]
fn seeded_jitter_is_reproducible() {
    let mut cfg = full(0.2);
    cfg.jitter = 0.01;
    cfg.seed = 7;
    let a = trace_to_string(&run_scenario(&cfg).unwrap());
    assert_eq!(a, trace_to_string(&run_scenario(&cfg).unwrap()));
    cfg.seed = 8;
    assert_ne!(a, trace_to_string(&run_scenario(&cfg).unwrap()));
}

#[test]
fn halving_the_step_leaves_the_tail_unchanged() {
    let cfg = reduced(0.35);
    let fine = SimConfig {
        step: 0.5 * cfg.step,
        ..cfg.clone()
    };
    let a = tail_metric(&run_scenario(&cfg).unwrap().lyapunov_samples(), 0.25);
    let b = tail_metric(&run_scenario(&fine).unwrap().lyapunov_samples(), 0.25);
    assert!((a - b).abs() < 1e-6, "{a} vs {b}");
}

#[test]
fn zero_amplitude_sweep_point_converges() {
    let out = sweep_disturbance(
        &reduced(0.0),
        &[0.0, 0.2],
        &[GainVariant::low(), GainVariant::high()],
    )
    .unwrap();
    let low = &out[0].result.rows;
    assert_eq!(low.len(), 2);
    assert!(low[0].tail_metric < 1e-6);
    assert!(low[1].tail_metric > low[0].tail_metric);
    // kv = 10 is overdamped with a slow pole near -0.64, so 15 s leaves a
    // small but visible residue
    let high = &out[1].result.rows;
    assert!(high[0].tail_metric < 1e-4);
}

#[test]
fn sweep_rows_follow_parameter_order() {
    let out = sweep_disturbance(&reduced(0.0), &[0.3, 0.1, 0.2], &[GainVariant::low()]).unwrap();
    assert_eq!(out[0].result.params(), vec![0.1, 0.2, 0.3]);
}

#[test]
fn duplicated_gain_gives_identical_rows() {
    let out = sweep_gain(&reduced(0.0), &[6.0, 6.0], 0.4).unwrap();
    assert_eq!(out.result.rows.len(), 2);
    assert_eq!(out.result.rows[0], out.result.rows[1]);
    let single = sweep_gain(&reduced(0.0), &[8.0], 0.4).unwrap();
    assert_eq!(single.result.rows.len(), 1);
}

#[test]
fn sweep_rejects_bad_grids() {
    assert!(matches!(
        sweep_disturbance(&reduced(0.0), &[], &[GainVariant::low()]),
        Err(SimError::ConfigInvalid(_))
    ));
    assert!(matches!(
        sweep_disturbance(&reduced(0.0), &[-0.1], &[GainVariant::low()]),
        Err(SimError::ConfigInvalid(_))
    ));
    assert!(matches!(
        sweep_gain(&reduced(0.0), &[0.0], 0.4),
        Err(SimError::ConfigInvalid(_))
    ));
}

#[test]
fn sweep_csv_is_header_only_when_empty_and_stable_otherwise() {
    let dir = tempfile::tempdir().unwrap();
    let empty = SweepResult {
        label: "empty".into(),
        rows: vec![],
    };
    let path = dir.path().join("empty.csv");
    write_sweep_csv(&empty, &path).unwrap();
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        "param,tail_metric,lambda_hat,status\n"
    );

    let out = sweep_gain(&reduced(0.0), &[4.0, 8.0], 0.4).unwrap();
    let text = sweep_to_string(&out.result);
    assert_eq!(text.lines().count(), 3);
    assert_eq!(text, sweep_to_string(&out.result));
}

#[test]
fn full_mode_tracks_references_and_keeps_rotations_healthy() {
    let cfg = full(10.0);
    let trace = run_scenario(&cfg).unwrap();
    assert!(trace.is_complete());
    assert!(trace.max_orthonormality_error < 1e-9);
    assert!(trace.max_height_gap < cfg.height_tol);
    assert!(trace.events.is_empty());
    let last = trace.final_row().unwrap();
    let uavs = last.uavs.as_ref().unwrap();
    let (r1, r2) = agent_references(&cfg.reference, last.t);
    assert!((uavs[0].position - r1.position).norm() < 1e-4);
    assert!((uavs[1].position - r2.position).norm() < 1e-4);
    assert!(uavs[0].er.norm() + uavs[1].er.norm() < 1e-4);

    // errors shrink after the transient
    let at = |t: f64| trace.rows[(t / cfg.step).round() as usize].norm_e;
    assert!(at(4.0) < at(2.0) && at(6.0) < at(4.0) && at(10.0) < at(6.0));
}

#[test]
fn full_mode_rejects_taut_initial_configuration() {
    let mut cfg = full(1.0);
    cfg.initial.dp[1].x = 0.5;
    assert!(matches!(
        run_scenario(&cfg),
        Err(SimError::ConfigInvalid(_))
    ));
}

#[test]
fn perturbed_report_carries_iss_constants() {
    let mut cfg = reduced(0.35);
    cfg.horizon = 10.0;
    let report = analyze_run(&cfg).unwrap();
    assert!(report.nominal.is_some());
    let iss = report.iss.expect("ISS estimate");
    assert!(iss.c_hat > 0.0 && iss.gamma_hat > 0.0);
    assert!(report.violation_fraction.unwrap() <= 1e-3);
    let text = report.to_text(&cfg);
    for key in [
        "mode=reduced",
        "status=complete",
        "tail_metric=",
        "c_hat=",
        "lambda_hat=",
    ] {
        assert!(text.contains(key), "missing {key} in\n{text}");
    }

    let dir = tempfile::tempdir().unwrap();
    report.write(&cfg, dir.path()).unwrap();
    for f in ["trace.csv", "lyapunov.csv", "report.txt"] {
        assert!(dir.path().join(f).exists());
    }
}

#[test]
fn nominal_report_has_decay_fit() {
    let report = analyze_run(&reduced(0.0)).unwrap();
    assert!(report.iss.is_none());
    let (rate, r2) = report.decay.unwrap();
    assert!((rate - 2.0).abs() < 1e-2 && r2 > 0.99);
    assert!(report.final_error < 1e-6);
}

#[test]
fn config_file_resolves_relative_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "mode = full\nsim.horizon = 2\noutput.dir = out\n").unwrap();
    let cfg = SimConfig::from_file(&path).unwrap();
    assert_eq!(cfg.mode, Mode::Full);
    assert_eq!(cfg.output_dir.unwrap(), dir.path().join("out"));
    assert!(matches!(
        SimConfig::from_file(&dir.path().join("missing.cfg")),
        Err(SimError::ConfigInvalid(_))
    ));
}
