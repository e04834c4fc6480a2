//! Acceptance suite. Every criterion prints one PASS/FAIL line; the test
//! fails if any criterion fails. Criteria run sequentially so the runtime
//! budgets are measured without contention from each other.

use std::time::{Duration, Instant};

use catsim_core::analysis::{
    dissipation_check, disturbance_sup, estimate_lambda_gamma, fit_decay_rate, linear_fit,
    peak_error, tail_metric, LyapunovSample, VIOLATION_TOLERANCE,
};
use catsim_core::catenary::{
    catenary_of_positions, curve_point, solve_shape_parameter, CableParams,
};
use catsim_core::controller::agent_references;
use catsim_core::geom3::Vec3;
use catsim_core::simkit::output::trace_to_string;
use catsim_core::simkit::sweep::{DEFAULT_AMPLITUDES, DEFAULT_KVS, GAIN_SWEEP_AMPLITUDE};
use catsim_core::simkit::{
    rk4_step, run_scenario, sweep_disturbance, sweep_gain, write_trace_csv, GainVariant, Mode,
    SimConfig, SweepOutcome,
};
use nalgebra::SVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(
    id: u32,
    name: &'static str,
    checks: &[(&str, bool)],
    elapsed: Duration,
    budget: f64,
    extra: String,
) -> Verdict {
    let within = elapsed.as_secs_f64() < budget;
    let failed: Vec<&str> = checks
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(n, _)| *n)
        .collect();
    let pass = failed.is_empty() && within;
    let mut detail = format!(
        "{extra}; runtime {:.2}s (budget {budget}s)",
        elapsed.as_secs_f64()
    );
    if !failed.is_empty() {
        detail.push_str(&format!("; failed checks: {}", failed.join(", ")));
    }
    if !within {
        detail.push_str("; over runtime budget");
    }
    Verdict {
        id,
        name,
        pass,
        detail,
    }
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

fn criterion_catenary() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let (mut worst_res, mut worst_vert, mut worst_sum, mut worst_arc, mut worst_end) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut errors = 0;
    for _ in 0..1000 {
        let l = rng.gen_range(0.5..5.0);
        let w = rng.gen_range(0.1..5.0);
        let ratio = rng.gen_range(0.05..0.99);
        let s = 0.5 * ratio * l;
        let heading = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let p1 = Vec3::new(
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(0.0..5.0),
        );
        let p2 = p1 + 2.0 * s * Vec3::new(heading.cos(), heading.sin(), 0.0);
        let cable = CableParams::new(l, w).unwrap();

        let Ok(a) = solve_shape_parameter(s, l) else {
            errors += 1;
            continue;
        };
        worst_res = worst_res.max((a * (s / a).sinh() - 0.5 * l).abs() / l);

        let Ok((shape, tensions)) = catenary_of_positions(&p1, &p2, &cable) else {
            errors += 1;
            continue;
        };
        let (f1, f2) = tensions.inertial(&shape);
        worst_vert = worst_vert
            .max((tensions.t1.z + 0.5 * w * l).abs())
            .max((tensions.t2.z + 0.5 * w * l).abs())
            .max((f1.z + 0.5 * w * l).abs())
            .max((f2.z + 0.5 * w * l).abs());
        worst_sum = worst_sum.max((f1 + f2 - Vec3::new(0.0, 0.0, -w * l)).norm());

        let a = shape.shape_param;
        let arc = simpson(|r| (1.0 + (r / a).sinh().powi(2)).sqrt(), -s, s, 10_000);
        worst_arc = worst_arc.max((arc - l).abs());
        worst_end = worst_end
            .max((curve_point(-s, &shape).unwrap() - p1).norm())
            .max((curve_point(s, &shape).unwrap() - p2).norm());
    }
    let elapsed = start.elapsed();
    report(
        1,
        "catenary statics",
        &[
            ("all cases solved", errors == 0),
            ("residual < 1e-10 l", worst_res < 1e-10),
            ("vertical force = -w l / 2", worst_vert < 1e-9),
            ("tension sum = (0, 0, -w l)", worst_sum < 1e-9),
            ("arc length = l", worst_arc < 1e-6),
            ("endpoints interpolated", worst_end < 1e-8),
        ],
        elapsed,
        5.0,
        format!(
            "max residual/l {worst_res:.2e}, vertical {worst_vert:.2e}, sum {worst_sum:.2e}, arc {worst_arc:.2e}"
        ),
    )
}

fn reduced_config(amplitude: f64) -> SimConfig {
    let cfg = SimConfig {
        mode: Mode::Reduced,
        ..SimConfig::default()
    };
    SimConfig {
        disturbance: cfg.disturbance.with_amplitude(amplitude),
        ..cfg
    }
}

fn criterion_nominal() -> Verdict {
    let start = Instant::now();
    let cfg = reduced_config(0.0);
    let trace = run_scenario(&cfg).unwrap();
    let samples = trace.lyapunov_samples();
    let final_e = trace.final_row().unwrap().norm_e;
    let fit = fit_decay_rate(&samples);
    let elapsed = start.elapsed();
    let (rate, r2) = fit.as_ref().map_or((f64::NAN, f64::NAN), |f| *f);
    report(
        2,
        "nominal convergence",
        &[
            ("trace complete", trace.is_complete()),
            ("|e(20)| < 1e-6", final_e < 1e-6),
            ("ln V affine, R^2 > 0.99", r2 > 0.99),
        ],
        elapsed,
        2.0,
        format!("|e(20)| = {final_e:.3e}, decay rate {rate:.4}, R^2 {r2:.6}"),
    )
}

fn criterion_perturbed() -> Verdict {
    let start = Instant::now();
    let nominal = run_scenario(&reduced_config(0.0)).unwrap();
    let cfg = reduced_config(0.35);
    let trace = run_scenario(&cfg).unwrap();
    let samples = trace.lyapunov_samples();
    let tail = tail_metric(&samples, 0.25);
    let peak = peak_error(&samples);
    let dsup = disturbance_sup(&samples);
    let iss = estimate_lambda_gamma(&nominal.lyapunov_samples(), &[&samples]);
    let elapsed = start.elapsed();
    let c_hat = iss.as_ref().map_or(f64::NAN, |e| e.c_hat);
    let bound = c_hat * dsup * 1.2;
    report(
        3,
        "bounded perturbed response",
        &[
            ("trace complete", trace.is_complete()),
            ("tail finite and positive", tail.is_finite() && tail > 0.0),
            ("tail < transient peak", tail < peak),
            ("ISS estimate available", iss.is_ok()),
            ("tail < 1.2 c_hat |Delta|_inf", tail < bound),
        ],
        elapsed,
        2.0,
        format!("tail {tail:.4e}, peak {peak:.4e}, c_hat {c_hat:.4e}, |Delta|_inf {dsup:.4e}, bound {bound:.4e}"),
    )
}

fn criterion_disturbance_sweep(outcomes: &mut Option<Vec<SweepOutcome>>) -> Verdict {
    let start = Instant::now();
    let cfg = reduced_config(0.0);
    let result = sweep_disturbance(
        &cfg,
        &DEFAULT_AMPLITUDES,
        &[GainVariant::low(), GainVariant::high()],
    );
    let elapsed = start.elapsed();
    let Ok(out) = result else {
        return report(
            4,
            "disturbance sweep shape",
            &[("sweep ran", false)],
            elapsed,
            15.0,
            String::new(),
        );
    };
    let mut r2s = Vec::new();
    for o in &out {
        let fit = linear_fit(&o.result.params(), &o.result.tails());
        r2s.push(fit.map_or(f64::NAN, |f| f.2));
    }
    let low = out[0].result.tails();
    let high = out[1].result.tails();
    let ordered = low.iter().zip(&high).all(|(l, h)| h < l);
    let all_ok = out
        .iter()
        .all(|o| o.result.rows.iter().all(|r| r.status == "ok"));
    *outcomes = Some(out);
    report(
        4,
        "disturbance sweep shape",
        &[
            ("all points ok", all_ok),
            ("R^2 > 0.95 per variant", r2s.iter().all(|r| *r > 0.95)),
            ("high damping below low damping", ordered),
        ],
        elapsed,
        15.0,
        format!(
            "R^2 low {:.6} high {:.6}; low tails {}; high tails {}",
            r2s[0],
            r2s[1],
            sci(&low),
            sci(&high)
        ),
    )
}

fn criterion_gain_sweep(outcome: &mut Option<SweepOutcome>) -> Verdict {
    let start = Instant::now();
    let cfg = reduced_config(0.0);
    let result = sweep_gain(&cfg, &DEFAULT_KVS, GAIN_SWEEP_AMPLITUDE);
    let elapsed = start.elapsed();
    let Ok(out) = result else {
        return report(
            5,
            "gain sweep monotonicity",
            &[("sweep ran", false)],
            elapsed,
            10.0,
            String::new(),
        );
    };
    let tails = out.result.tails();
    let decreasing = tails.windows(2).all(|w| w[1] < w[0]);
    let all_ok = out.result.rows.iter().all(|r| r.status == "ok");
    *outcome = Some(out);
    report(
        5,
        "gain sweep monotonicity",
        &[
            ("all points ok", all_ok),
            ("tail strictly decreasing in kv", decreasing),
        ],
        elapsed,
        10.0,
        format!("tails {}", sci(&tails)),
    )
}

/// Certifies a family of perturbed traces against their common nominal run.
fn certify(
    nominal: &[LyapunovSample],
    perturbed: &[Vec<LyapunovSample>],
) -> Result<(f64, f64, f64), String> {
    let refs: Vec<&[LyapunovSample]> = perturbed.iter().map(|v| v.as_slice()).collect();
    let est = estimate_lambda_gamma(nominal, &refs).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for p in perturbed {
        let chk =
            dissipation_check(p, est.lambda_cert, est.gamma_hat).map_err(|e| e.to_string())?;
        worst = worst.max(chk.fraction);
    }
    Ok((est.lambda_cert, est.gamma_hat, worst))
}

fn criterion_dissipation(dist: &Option<Vec<SweepOutcome>>, gain: &Option<SweepOutcome>) -> Verdict {
    let start = Instant::now();
    let (Some(dist), Some(gain)) = (dist, gain) else {
        return report(
            6,
            "ISS dissipation",
            &[("sweeps available", false)],
            start.elapsed(),
            f64::INFINITY,
            String::new(),
        );
    };
    let mut worst_pert = 0.0f64;
    let mut worst_nom = 0.0f64;
    let mut failures = Vec::new();
    let mut certs = Vec::new();

    for o in dist {
        let nominal = o.nominal[0].1.lyapunov_samples();
        let pert: Vec<Vec<LyapunovSample>> =
            o.traces.iter().map(|(_, t)| t.lyapunov_samples()).collect();
        match certify(&nominal, &pert) {
            Ok((l, g, w)) => {
                worst_pert = worst_pert.max(w);
                certs.push(format!("{}: lambda {l:.3} gamma {g:.3}", o.result.label));
            }
            Err(e) => failures.push(format!("{}: {e}", o.result.label)),
        }
        worst_nom = worst_nom.max(dissipation_check(&nominal, 0.0, 0.0).unwrap().fraction);
    }
    for ((kv, nom), (_, tr)) in gain.nominal.iter().zip(&gain.traces) {
        let nominal = nom.lyapunov_samples();
        match certify(&nominal, &[tr.lyapunov_samples()]) {
            Ok((_, _, w)) => worst_pert = worst_pert.max(w),
            Err(e) => failures.push(format!("kv {kv}: {e}")),
        }
        worst_nom = worst_nom.max(dissipation_check(&nominal, 0.0, 0.0).unwrap().fraction);
    }
    let elapsed = start.elapsed();
    report(
        6,
        "ISS dissipation",
        &[
            ("certificates fitted", failures.is_empty()),
            (
                "perturbed violations <= 0.1%",
                worst_pert <= VIOLATION_TOLERANCE,
            ),
            (
                "nominal Vdot > 0 on < 0.1%",
                worst_nom < VIOLATION_TOLERANCE,
            ),
        ],
        elapsed,
        f64::INFINITY,
        format!(
            "worst perturbed violation {:.3}%, worst nominal {:.3}%; {}{}",
            100.0 * worst_pert,
            100.0 * worst_nom,
            certs.join(", "),
            if failures.is_empty() {
                String::new()
            } else {
                format!("; errors: {}", failures.join("; "))
            }
        ),
    )
}

fn criterion_full_plant() -> Verdict {
    let start = Instant::now();
    let cfg = SimConfig {
        mode: Mode::Full,
        horizon: 12.0,
        ..SimConfig::default()
    };
    let trace = run_scenario(&cfg);
    let elapsed = start.elapsed();
    let Ok(trace) = trace else {
        return report(
            7,
            "full-plant closed loop",
            &[("run started", false)],
            elapsed,
            30.0,
            String::new(),
        );
    };
    let (mut worst_ep, mut worst_er) = (0.0f64, 0.0f64);
    for row in trace.rows.iter().filter(|r| r.t >= 10.0 - 1e-9) {
        let uavs = row.uavs.as_ref().unwrap();
        let (r1, r2) = agent_references(&cfg.reference, row.t);
        let ep = (uavs[0].position - r1.position)
            .norm()
            .max((uavs[1].position - r2.position).norm());
        worst_ep = worst_ep.max(ep).max(row.ep.norm());
        worst_er = worst_er.max(uavs[0].er.norm() + uavs[1].er.norm());
    }
    let drift = trace.max_orthonormality_error;
    report(
        7,
        "full-plant closed loop",
        &[
            ("trace complete", trace.is_complete()),
            ("|e_p| < 1e-4 from t = 10 s", worst_ep < 1e-4),
            ("sum |e_R| < 1e-4 from t = 10 s", worst_er < 1e-4),
            ("orthonormality drift < 1e-9", drift < 1e-9),
        ],
        elapsed,
        30.0,
        format!(
            "max |e_p| {worst_ep:.3e}, max sum |e_R| {worst_er:.3e}, drift {drift:.3e}, max height gap {:.3e}",
            trace.max_height_gap
        ),
    )
}

fn rk4_error(h: f64) -> f64 {
    let n = (1.0 / h).round() as usize;
    let mut x = SVector::<f64, 1>::new(1.0);
    for k in 0..n {
        x = rk4_step(
            |_, y: &SVector<f64, 1>| Ok::<_, ()>(-y),
            k as f64 * h,
            &x,
            h,
        )
        .unwrap();
    }
    (x[0] - (-1.0f64).exp()).abs()
}

fn criterion_numerics() -> Verdict {
    let start = Instant::now();
    let ratio = rk4_error(0.1) / rk4_error(0.05);

    let dir = tempfile::tempdir().unwrap();
    let mut identical = true;
    let short_full = SimConfig {
        mode: Mode::Full,
        horizon: 1.0,
        ..SimConfig::default()
    };
    for cfg in [reduced_config(0.35), short_full] {
        let a = run_scenario(&cfg).unwrap();
        let b = run_scenario(&cfg).unwrap();
        let pa = dir.path().join("a.csv");
        let pb = dir.path().join("b.csv");
        write_trace_csv(&a, &pa).unwrap();
        write_trace_csv(&b, &pb).unwrap();
        identical &= std::fs::read(&pa).unwrap() == std::fs::read(&pb).unwrap();
        identical &= trace_to_string(&a) == trace_to_string(&b);
    }
    let elapsed = start.elapsed();
    report(
        8,
        "numerical integrity",
        &[
            ("RK4 error ratio 16 +/- 2", (ratio - 16.0).abs() <= 2.0),
            ("CSV re-runs bit-identical", identical),
        ],
        elapsed,
        f64::INFINITY,
        format!("error ratio {ratio:.4}"),
    )
}

#[test]
fn acceptance_criteria() {
    let mut sweeps = None;
    let mut gain = None;
    let verdicts = vec![
        criterion_catenary(),
        criterion_nominal(),
        criterion_perturbed(),
        criterion_disturbance_sweep(&mut sweeps),
        criterion_gain_sweep(&mut gain),
        criterion_dissipation(&sweeps, &gain),
        criterion_full_plant(),
        criterion_numerics(),
    ];
    for v in &verdicts {
        println!(
            "criterion {} [{}] {}: {}",
            v.id,
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            v.detail
        );
    }
    let failed: Vec<u32> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
