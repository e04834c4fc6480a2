//! Coupled two-vehicle dynamics with quasi-static cable forces, the
//! disturbance model, and the reduced relative-error dynamics.

use nalgebra::SVector;
use thiserror::Error;

use crate::catenary::{catenary_with_height_tol, CableParams, CatenaryError, CatenaryShape};
use crate::controller::ControlInput;
use crate::geom3::{hat, Mat3, Rot3, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("inadmissible configuration: {0}")]
    InadmissibleConfiguration(#[from] CatenaryError),
    #[error("invalid vehicle parameters: {0}")]
    InvalidVehicle(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    pub mass: f64,
    pub inertia: Mat3,
}

impl VehicleParams {
    pub fn new(mass: f64, inertia: Mat3) -> Result<Self, PlantError> {
        let v = VehicleParams { mass, inertia };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(PlantError::InvalidVehicle(format!("mass {}", self.mass)));
        }
        if (self.inertia - self.inertia.transpose()).norm() > 1e-12 {
            return Err(PlantError::InvalidVehicle(
                "inertia is not symmetric".into(),
            ));
        }
        let min_eig = self.inertia.symmetric_eigenvalues().min();
        if !(min_eig > 0.0) {
            return Err(PlantError::InvalidVehicle(format!(
                "inertia is not positive definite (min eigenvalue {min_eig})"
            )));
        }
        Ok(())
    }
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            mass: 1.0,
            inertia: Mat3::from_diagonal(&Vec3::new(0.08, 0.08, 0.12)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldParams {
    pub gravity: f64,
    /// Inertial up direction.
    pub up: Vec3,
}

impl Default for WorldParams {
    fn default() -> Self {
        WorldParams {
            gravity: 9.81,
            up: Vec3::z(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RigidBodyState {
    pub attitude: Rot3,
    pub position: Vec3,
    pub velocity: Vec3,
    /// Body angular velocity.
    pub omega: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RigidBodyDerivative {
    pub attitude_dot: Mat3,
    pub position_dot: Vec3,
    pub velocity_dot: Vec3,
    pub omega_dot: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SystemState {
    pub uav1: RigidBodyState,
    pub uav2: RigidBodyState,
    pub t: f64,
}

/// Number of reals in a packed [`SystemState`] (time excluded).
pub const SYSTEM_DIM: usize = 36;
pub type SystemVector = SVector<f64, SYSTEM_DIM>;

fn pack_body(out: &mut SystemVector, offset: usize, r: &Mat3, p: &Vec3, v: &Vec3, w: &Vec3) {
    for i in 0..3 {
        for j in 0..3 {
            out[offset + 3 * i + j] = r[(i, j)];
        }
    }
    out.fixed_rows_mut::<3>(offset + 9).copy_from(p);
    out.fixed_rows_mut::<3>(offset + 12).copy_from(v);
    out.fixed_rows_mut::<3>(offset + 15).copy_from(w);
}

fn unpack_body(x: &SystemVector, offset: usize) -> (Mat3, Vec3, Vec3, Vec3) {
    let r = Mat3::from_fn(|i, j| x[offset + 3 * i + j]);
    (
        r,
        x.fixed_rows::<3>(offset + 9).into_owned(),
        x.fixed_rows::<3>(offset + 12).into_owned(),
        x.fixed_rows::<3>(offset + 15).into_owned(),
    )
}

impl SystemState {
    pub fn to_vector(&self) -> SystemVector {
        let mut x = SystemVector::zeros();
        for (k, b) in [&self.uav1, &self.uav2].into_iter().enumerate() {
            pack_body(
                &mut x,
                18 * k,
                b.attitude.matrix(),
                &b.position,
                &b.velocity,
                &b.omega,
            );
        }
        x
    }

    /// Inverse of [`SystemState::to_vector`]. Attitudes are taken as given;
    /// re-project them if the vector came out of an integrator.
    pub fn from_vector(x: &SystemVector, t: f64) -> Self {
        let body = |k: usize| {
            let (r, p, v, w) = unpack_body(x, 18 * k);
            RigidBodyState {
                attitude: Rot3::from_matrix_unchecked(r),
                position: p,
                velocity: v,
                omega: w,
            }
        };
        SystemState {
            uav1: body(0),
            uav2: body(1),
            t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SystemDerivative {
    pub uav1: RigidBodyDerivative,
    pub uav2: RigidBodyDerivative,
}

impl SystemDerivative {
    pub fn to_vector(&self) -> SystemVector {
        let mut x = SystemVector::zeros();
        for (k, d) in [&self.uav1, &self.uav2].into_iter().enumerate() {
            pack_body(
                &mut x,
                18 * k,
                &d.attitude_dot,
                &d.position_dot,
                &d.velocity_dot,
                &d.omega_dot,
            );
        }
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DisturbanceMode {
    /// Inject the signal directly into the relative error dynamics.
    #[default]
    Relative,
    /// Realize the signal through equal-and-opposite per-vehicle forces.
    PerAgent,
}

/// Sinusoidal force perturbation
/// `amp * (sin(w1 t), 0.5 cos(w2 t), 0.3 sin(w3 t))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbanceProfile {
    pub amplitude: f64,
    pub omega: [f64; 3],
    pub mode: DisturbanceMode,
}

impl Default for DisturbanceProfile {
    fn default() -> Self {
        DisturbanceProfile {
            amplitude: 0.0,
            omega: [1.3, 0.9, 1.7],
            mode: DisturbanceMode::Relative,
        }
    }
}

impl DisturbanceProfile {
    pub fn with_amplitude(self, amplitude: f64) -> Self {
        DisturbanceProfile { amplitude, ..self }
    }

    /// Upper bound on the signal norm over all time.
    pub fn bound(&self) -> f64 {
        self.amplitude * (1.0f64 + 0.25 + 0.09).sqrt()
    }
}

pub fn disturbance_signal(t: f64, prof: &DisturbanceProfile) -> Vec3 {
    let [w1, w2, w3] = prof.omega;
    prof.amplitude * Vec3::new((w1 * t).sin(), 0.5 * (w2 * t).cos(), 0.3 * (w3 * t).sin())
}

/// Relative-dynamics disturbance `(m2 d2 - m1 d1) / (m1 + m2)`.
pub fn effective_disturbance(d1: &Vec3, d2: &Vec3, m1: f64, m2: f64) -> Vec3 {
    (m2 * d2 - m1 * d1) / (m1 + m2)
}

/// Per-vehicle forces `(d1, d2)` whose effective disturbance equals `delta`.
pub fn split_disturbance(delta: &Vec3, m1: f64, m2: f64) -> (Vec3, Vec3) {
    let total = m1 + m2;
    (-0.5 * delta * total / m1, 0.5 * delta * total / m2)
}

/// Rigid-body derivative of one vehicle under thrust, torque, cable force
/// and additive disturbance (all forces inertial).
pub fn uav_derivatives(
    state: &RigidBodyState,
    input: &ControlInput,
    cable_force: &Vec3,
    disturbance: &Vec3,
    veh: &VehicleParams,
    world: &WorldParams,
) -> RigidBodyDerivative {
    let r = state.attitude.matrix();
    let thrust = input.thrust * r.column(2).into_owned();
    let accel =
        (thrust - veh.mass * world.gravity * world.up + cable_force + disturbance) / veh.mass;
    let j_omega = veh.inertia * state.omega;
    let omega_dot = veh
        .inertia
        .try_inverse()
        .expect("inertia validated positive definite")
        * (input.torque - state.omega.cross(&j_omega));
    RigidBodyDerivative {
        attitude_dot: r * hat(&state.omega),
        position_dot: state.velocity,
        velocity_dot: accel,
        omega_dot,
    }
}

/// Cable forces on both vehicles (inertial) for the current positions.
/// Heights are not checked here; the simulation monitors them.
pub fn cable_forces(
    sys: &SystemState,
    cable: &CableParams,
) -> Result<(CatenaryShape, Vec3, Vec3), PlantError> {
    let (shape, t) =
        catenary_with_height_tol(&sys.uav1.position, &sys.uav2.position, cable, f64::INFINITY)?;
    let (f1, f2) = t.inertial(&shape);
    Ok((shape, f1, f2))
}

/// Per-vehicle disturbance forces at time `t`. In relative mode the full
/// plant still needs physical forces, so the signal is split either way.
pub fn agent_disturbances(t: f64, prof: &DisturbanceProfile, m1: f64, m2: f64) -> (Vec3, Vec3) {
    split_disturbance(&disturbance_signal(t, prof), m1, m2)
}

#[allow(clippy::too_many_arguments)]
pub fn coupled_derivatives(
    sys: &SystemState,
    inputs: &(ControlInput, ControlInput),
    cable: &CableParams,
    prof: &DisturbanceProfile,
    veh: &(VehicleParams, VehicleParams),
    world: &WorldParams,
) -> Result<SystemDerivative, PlantError> {
    let (_, f1, f2) = cable_forces(sys, cable)?;
    let (d1, d2) = agent_disturbances(sys.t, prof, veh.0.mass, veh.1.mass);
    Ok(SystemDerivative {
        uav1: uav_derivatives(&sys.uav1, &inputs.0, &f1, &d1, &veh.0, world),
        uav2: uav_derivatives(&sys.uav2, &inputs.1, &f2, &d2, &veh.1, world),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedErrorState {
    pub ep: Vec3,
    pub ev: Vec3,
    pub reduced_mass: f64,
}

/// `(e_p', e_v')` for `m_r e_v' = -Kp e_p - Kv e_v + delta`.
pub fn reduced_error_derivatives(
    err: &ReducedErrorState,
    kp: &Mat3,
    kv: &Mat3,
    delta: &Vec3,
) -> (Vec3, Vec3) {
    let ev_dot = (-kp * err.ep - kv * err.ev + delta) / err.reduced_mass;
    (err.ev, ev_dot)
}
