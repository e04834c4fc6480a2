//! Scenario runner: integrates the reduced or full closed loop and records a
//! uniformly sampled trace with errors, inputs and Lyapunov samples.

use nalgebra::SVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{fill_vdot, lyapunov_value, AttitudeErrorTerms, ErrorState, LyapunovSample};
use crate::controller::{AgentCommand, ControlInput, GeometricController};
use crate::geom3::{attitude_potential, project_to_so3, Mat3, Rot3, Vec3};
use crate::plant::{
    cable_forces, coupled_derivatives, disturbance_signal, effective_disturbance,
    reduced_error_derivatives, split_disturbance, DisturbanceMode, PlantError, ReducedErrorState,
    RigidBodyState, SystemState,
};
use crate::simkit::config::{Mode, SimConfig};
use crate::simkit::integrator::rk4_step;
use crate::simkit::SimError;

/// Per-vehicle record in full mode.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UavRecord {
    pub position: Vec3,
    pub velocity: Vec3,
    pub attitude: Mat3,
    pub omega: Vec3,
    pub thrust: f64,
    pub torque: Vec3,
    pub er: Vec3,
    pub eomega: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub ep: Vec3,
    pub ev: Vec3,
    pub norm_e: f64,
    pub v: f64,
    pub vdot_fd: f64,
    /// Effective relative disturbance.
    pub delta: Vec3,
    pub uavs: Option<Box<[UavRecord; 2]>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceStatus {
    Complete,
    Aborted { t: f64, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MonitorKind {
    /// `|p1z - p2z|` went above the configured tolerance.
    HeightMismatch,
    /// `|p1z - p2z|` came back within tolerance.
    HeightRecovered,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorEvent {
    pub t: f64,
    pub kind: MonitorKind,
    pub height_gap: f64,
    pub separation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub mode: Mode,
    pub step: f64,
    pub rows: Vec<TraceRow>,
    pub status: TraceStatus,
    pub events: Vec<MonitorEvent>,
    /// Largest `|R^T R - I|` over the stored attitudes (full mode).
    pub max_orthonormality_error: f64,
    /// Largest `|p1z - p2z|` seen (full mode).
    pub max_height_gap: f64,
}

impl SimTrace {
    fn new(mode: Mode, step: f64) -> Self {
        SimTrace {
            mode,
            step,
            rows: Vec::new(),
            status: TraceStatus::Complete,
            events: Vec::new(),
            max_orthonormality_error: 0.0,
            max_height_gap: 0.0,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.status == TraceStatus::Complete
    }

    pub fn lyapunov_samples(&self) -> Vec<LyapunovSample> {
        self.rows
            .iter()
            .map(|r| LyapunovSample {
                t: r.t,
                v: r.v,
                vdot_fd: r.vdot_fd,
                norm_e: r.norm_e,
                norm_delta: r.delta.norm(),
            })
            .collect()
    }

    pub fn final_row(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    fn finish(&mut self) {
        let mut samples = self.lyapunov_samples();
        if samples.len() >= 2 && fill_vdot(&mut samples).is_ok() {
            for (row, s) in self.rows.iter_mut().zip(samples) {
                row.vdot_fd = s.vdot_fd;
            }
        }
    }

    fn abort(&mut self, t: f64, reason: impl Into<String>) {
        self.status = TraceStatus::Aborted {
            t,
            reason: reason.into(),
        };
    }
}

fn row_is_finite(row: &TraceRow) -> bool {
    let vec_ok = |v: &Vec3| v.iter().all(|x| x.is_finite());
    let uav_ok = row.uavs.as_ref().is_none_or(|u| {
        u.iter().all(|r| {
            vec_ok(&r.position)
                && vec_ok(&r.velocity)
                && vec_ok(&r.omega)
                && r.attitude.iter().all(|x| x.is_finite())
                && r.thrust.is_finite()
                && vec_ok(&r.torque)
        })
    });
    row.v.is_finite() && row.norm_e.is_finite() && vec_ok(&row.ep) && vec_ok(&row.ev) && uav_ok
}

/// Effective relative disturbance at `t` for the configured mode.
fn relative_disturbance(cfg: &SimConfig, t: f64) -> Vec3 {
    let signal = disturbance_signal(t, &cfg.disturbance);
    match cfg.disturbance.mode {
        DisturbanceMode::Relative => signal,
        DisturbanceMode::PerAgent => {
            let (m1, m2) = (cfg.vehicles[0].mass, cfg.vehicles[1].mass);
            let (d1, d2) = split_disturbance(&signal, m1, m2);
            effective_disturbance(&d1, &d2, m1, m2)
        }
    }
}

fn jitter_vec(rng: &mut ChaCha8Rng, amp: f64) -> Vec3 {
    Vec3::new(
        rng.gen_range(-amp..=amp),
        rng.gen_range(-amp..=amp),
        rng.gen_range(-amp..=amp),
    )
}

/// Runs the scenario described by `cfg`.
///
/// Configuration problems are returned as errors. A configuration that
/// becomes inadmissible, or any non-finite value, stops the run and returns
/// the partial trace with an `Aborted` status.
pub fn run_scenario(cfg: &SimConfig) -> Result<SimTrace, SimError> {
    cfg.validate()?;
    let trace = match cfg.mode {
        Mode::Reduced => run_reduced(cfg),
        Mode::Full => run_full(cfg),
    };
    Ok(trace)
}

type ReducedVector = SVector<f64, 6>;

fn run_reduced(cfg: &SimConfig) -> SimTrace {
    let setup = &cfg.reduced;
    let params = cfg.lyapunov_params();
    let h = cfg.step;
    let n = cfg.steps();
    let mut trace = SimTrace::new(Mode::Reduced, h);
    trace.rows.reserve(n + 1);

    let mut ep0 = setup.ep0;
    if cfg.jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        ep0 += jitter_vec(&mut rng, cfg.jitter);
    }
    let mut x = ReducedVector::zeros();
    x.fixed_rows_mut::<3>(0).copy_from(&ep0);
    x.fixed_rows_mut::<3>(3).copy_from(&setup.ev0);

    let field = |t: f64, x: &ReducedVector| -> Result<ReducedVector, std::convert::Infallible> {
        let err = ReducedErrorState {
            ep: x.fixed_rows::<3>(0).into_owned(),
            ev: x.fixed_rows::<3>(3).into_owned(),
            reduced_mass: setup.reduced_mass,
        };
        let (dp, dv) =
            reduced_error_derivatives(&err, &setup.kp, &setup.kv, &relative_disturbance(cfg, t));
        let mut out = ReducedVector::zeros();
        out.fixed_rows_mut::<3>(0).copy_from(&dp);
        out.fixed_rows_mut::<3>(3).copy_from(&dv);
        Ok(out)
    };

    for k in 0..=n {
        let t = k as f64 * h;
        let e = ErrorState::translational(
            x.fixed_rows::<3>(0).into_owned(),
            x.fixed_rows::<3>(3).into_owned(),
        );
        let row = TraceRow {
            t,
            ep: e.ep,
            ev: e.ev,
            norm_e: e.norm(),
            v: lyapunov_value(&e, &params),
            vdot_fd: 0.0,
            delta: relative_disturbance(cfg, t),
            uavs: None,
        };
        let finite = row_is_finite(&row);
        trace.rows.push(row);
        if !finite {
            trace.abort(t, "non-finite state");
            break;
        }
        if k == n {
            break;
        }
        x = match rk4_step(field, t, &x, h) {
            Ok(next) => next,
            Err(never) => match never {},
        };
    }
    trace.finish();
    trace
}

fn initial_system(cfg: &SimConfig) -> SystemState {
    let r = &cfg.reference;
    let rel = r.relative(0.0);
    let mut dp = cfg.initial.dp;
    if cfg.jitter > 0.0 {
        // horizontal jitter only, so the height constraint still holds
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for d in dp.iter_mut() {
            let j = jitter_vec(&mut rng, cfg.jitter);
            *d += Vec3::new(j.x, j.y, 0.0);
        }
    }
    let body = |i: usize, p: Vec3, v: Vec3| RigidBodyState {
        attitude: Rot3::from_scaled_axis(cfg.initial.attitude[i]),
        position: p + dp[i],
        velocity: v + cfg.initial.dv[i],
        omega: cfg.initial.omega[i],
    };
    SystemState {
        uav1: body(0, r.anchor, Vec3::zeros()),
        uav2: body(1, r.anchor + rel.position, rel.velocity),
        t: 0.0,
    }
}

fn full_row(cfg: &SimConfig, sys: &SystemState, cmds: &[AgentCommand; 2]) -> TraceRow {
    let params = cfg.lyapunov_params();
    let rel = cfg.reference.relative(sys.t);
    let ep = sys.uav2.position - sys.uav1.position - rel.position;
    let ev = sys.uav2.velocity - sys.uav1.velocity - rel.velocity;
    let bodies = [&sys.uav1, &sys.uav2];
    let att: [AttitudeErrorTerms; 2] = std::array::from_fn(|i| AttitudeErrorTerms {
        er: cmds[i].er,
        eomega: cmds[i].eomega,
        potential: attitude_potential(&bodies[i].attitude, &cmds[i].desired.attitude),
    });
    let e = ErrorState {
        ep,
        ev,
        attitude: Some(att),
    };
    let uavs: [UavRecord; 2] = std::array::from_fn(|i| UavRecord {
        position: bodies[i].position,
        velocity: bodies[i].velocity,
        attitude: *bodies[i].attitude.matrix(),
        omega: bodies[i].omega,
        thrust: cmds[i].input.thrust,
        torque: cmds[i].input.torque,
        er: cmds[i].er,
        eomega: cmds[i].eomega,
    });
    TraceRow {
        t: sys.t,
        ep,
        ev,
        norm_e: e.norm(),
        v: lyapunov_value(&e, &params),
        vdot_fd: 0.0,
        delta: relative_disturbance(cfg, sys.t),
        uavs: Some(Box::new(uavs)),
    }
}

fn run_full(cfg: &SimConfig) -> SimTrace {
    let h = cfg.step;
    let n = cfg.steps();
    let mut trace = SimTrace::new(Mode::Full, h);
    trace.rows.reserve(n + 1);
    let mut controller = GeometricController::new(cfg.gains, cfg.reference, h);
    let vehicles = (cfg.vehicles[0], cfg.vehicles[1]);
    let mut sys = initial_system(cfg);
    let mut height_flagged = false;

    for k in 0..=n {
        let t = k as f64 * h;
        sys.t = t;
        let (shape, f1, f2) = match cable_forces(&sys, &cfg.cable) {
            Ok(v) => v,
            Err(e) => {
                trace.abort(t, e.to_string());
                break;
            }
        };
        let cmds =
            match controller.compute(&sys, (&f1, &f2), (&vehicles.0, &vehicles.1), &cfg.world) {
                Ok(c) => c,
                Err(e) => {
                    trace.abort(t, e.to_string());
                    break;
                }
            };

        let gap = (sys.uav1.position.z - sys.uav2.position.z).abs();
        trace.max_height_gap = trace.max_height_gap.max(gap);
        let over = gap > cfg.height_tol;
        if over != height_flagged {
            height_flagged = over;
            trace.events.push(MonitorEvent {
                t,
                kind: if over {
                    MonitorKind::HeightMismatch
                } else {
                    MonitorKind::HeightRecovered
                },
                height_gap: gap,
                separation: 2.0 * shape.half_span,
            });
        }
        for b in [&sys.uav1, &sys.uav2] {
            trace.max_orthonormality_error = trace
                .max_orthonormality_error
                .max(b.attitude.orthonormality_error());
        }

        let row = full_row(cfg, &sys, &cmds);
        let finite = row_is_finite(&row);
        trace.rows.push(row);
        if !finite {
            trace.abort(t, "non-finite state");
            break;
        }
        if k == n {
            break;
        }

        let inputs: (ControlInput, ControlInput) = (cmds[0].input, cmds[1].input);
        let field = |ts: f64, x: &_| -> Result<_, PlantError> {
            let s = SystemState::from_vector(x, ts);
            Ok(coupled_derivatives(
                &s,
                &inputs,
                &cfg.cable,
                &cfg.disturbance,
                &vehicles,
                &cfg.world,
            )?
            .to_vector())
        };
        let next = match rk4_step(field, t, &sys.to_vector(), h) {
            Ok(x) => x,
            Err(e) => {
                trace.abort(t, e.to_string());
                break;
            }
        };
        let mut next_sys = SystemState::from_vector(&next, t + h);
        let mut projected = true;
        for b in [&mut next_sys.uav1, &mut next_sys.uav2] {
            match project_to_so3(b.attitude.matrix()) {
                Ok(r) => b.attitude = r,
                Err(_) => projected = false,
            }
        }
        if !projected {
            trace.abort(t + h, "attitude left SO(3)");
            break;
        }
        sys = next_sys;
    }
    trace.finish();
    trace
}
