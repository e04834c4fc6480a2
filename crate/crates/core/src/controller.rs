//! Geometric tracking controller for the two vehicles: thrust along the
//! commanded force with cable feedforward, desired attitude from that force
//! and a heading, and the SO(3) torque law.

use std::collections::VecDeque;

use thiserror::Error;

use crate::geom3::{
    angular_velocity_error, attitude_error, hat, project_to_so3, vee, Mat3, Rot3, Vec3,
};
use crate::plant::{RigidBodyState, SystemState, VehicleParams, WorldParams};

/// Minimum commanded force magnitude for a well-defined thrust axis (N).
pub const TOL_FORCE: f64 = 1e-6;
/// Minimum `|b3 x b1|` for a well-defined heading.
pub const TOL_CROSS: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("commanded force magnitude {0:e} N is too small to define a thrust axis")]
    DegenerateForce(f64),
    #[error("heading is (nearly) parallel to the thrust axis, |b3 x b1| = {0:e}")]
    HeadingDegenerate(f64),
    #[error("invalid gains: {0}")]
    InvalidGains(String),
    #[error("infeasible reference: {0}")]
    InfeasibleReference(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agent {
    One,
    Two,
}

impl Agent {
    pub fn index(self) -> usize {
        match self {
            Agent::One => 0,
            Agent::Two => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInput {
    pub thrust: f64,
    pub torque: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSet {
    pub kp1: Mat3,
    pub kv1: Mat3,
    pub kp2: Mat3,
    pub kv2: Mat3,
    pub kr: f64,
    pub komega: f64,
}

impl Default for GainSet {
    fn default() -> Self {
        GainSet {
            kp1: 6.0 * Mat3::identity(),
            kv1: 7.0 * Mat3::identity(),
            kp2: 6.0 * Mat3::identity(),
            kv2: 7.0 * Mat3::identity(),
            kr: 8.0,
            komega: 6.0,
        }
    }
}

/// True if `m` is symmetric and all its eigenvalues are positive.
pub fn is_spd(m: &Mat3) -> bool {
    (m - m.transpose()).norm() <= 1e-12 * m.norm().max(1.0) && m.symmetric_eigenvalues().min() > 0.0
}

impl GainSet {
    pub fn validate(&self) -> Result<(), ControlError> {
        for (name, k) in [
            ("kp1", &self.kp1),
            ("kv1", &self.kv1),
            ("kp2", &self.kp2),
            ("kv2", &self.kv2),
        ] {
            if !is_spd(k) {
                return Err(ControlError::InvalidGains(format!(
                    "{name} is not symmetric positive definite"
                )));
            }
        }
        if !(self.kr > 0.0) || !(self.komega > 0.0) {
            return Err(ControlError::InvalidGains(format!(
                "kR = {}, kOmega = {} must be positive",
                self.kr, self.komega
            )));
        }
        Ok(())
    }

    pub fn kp(&self, agent: Agent) -> &Mat3 {
        match agent {
            Agent::One => &self.kp1,
            Agent::Two => &self.kp2,
        }
    }

    pub fn kv(&self, agent: Agent) -> &Mat3 {
        match agent {
            Agent::One => &self.kv1,
            Agent::Two => &self.kv2,
        }
    }
}

/// Desired position, velocity and acceleration of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AgentReference {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
}

/// UAV 1 holds `anchor`; UAV 2 tracks `anchor + p12(t)` with
/// `p12(t) = offset + amplitude * sin(omega t)` (componentwise amplitude).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceTrajectory {
    pub anchor: Vec3,
    pub offset: Vec3,
    pub amplitude: Vec3,
    pub omega: f64,
    pub heading1: Vec3,
    pub heading2: Vec3,
}

impl Default for ReferenceTrajectory {
    fn default() -> Self {
        ReferenceTrajectory {
            anchor: Vec3::new(0.0, 0.0, 2.0),
            offset: Vec3::new(1.6, 0.0, 0.0),
            amplitude: Vec3::zeros(),
            omega: 0.0,
            heading1: Vec3::x(),
            heading2: Vec3::x(),
        }
    }
}

impl ReferenceTrajectory {
    /// Desired relative position and its first two derivatives.
    pub fn relative(&self, t: f64) -> AgentReference {
        let (s, c) = (self.omega * t).sin_cos();
        AgentReference {
            position: self.offset + self.amplitude * s,
            velocity: self.amplitude * (self.omega * c),
            acceleration: -self.amplitude * (self.omega * self.omega * s),
        }
    }

    pub fn heading(&self, agent: Agent) -> Vec3 {
        match agent {
            Agent::One => self.heading1,
            Agent::Two => self.heading2,
        }
    }

    /// Horizontal span stays below `length - margin` and headings are unit.
    pub fn validate(&self, length: f64, margin: f64) -> Result<(), ControlError> {
        let horiz = |v: Vec3| Vec3::new(v.x, v.y, 0.0).norm();
        let worst = horiz(self.offset) + horiz(self.amplitude);
        if worst >= length - margin {
            return Err(ControlError::InfeasibleReference(format!(
                "horizontal relative reference reaches {worst} m, cable length {length} m"
            )));
        }
        if horiz(self.offset) <= horiz(self.amplitude) {
            return Err(ControlError::InfeasibleReference(
                "relative reference passes through zero horizontal separation".into(),
            ));
        }
        for h in [self.heading1, self.heading2] {
            if (h.norm() - 1.0).abs() > 1e-9 {
                return Err(ControlError::InfeasibleReference(format!(
                    "heading {h:?} is not unit"
                )));
            }
        }
        Ok(())
    }
}

/// References for both vehicles at time `t`.
pub fn agent_references(
    reference: &ReferenceTrajectory,
    t: f64,
) -> (AgentReference, AgentReference) {
    let rel = reference.relative(t);
    let one = AgentReference {
        position: reference.anchor,
        ..Default::default()
    };
    let two = AgentReference {
        position: reference.anchor + rel.position,
        velocity: rel.velocity,
        acceleration: rel.acceleration,
    };
    (one, two)
}

/// `F = -Kp e_p - Kv e_v + m g e3 - cable_force + m a_d`.
#[allow(clippy::too_many_arguments)]
pub fn force_command(
    agent: Agent,
    state: &RigidBodyState,
    reference: &AgentReference,
    cable_force: &Vec3,
    veh: &VehicleParams,
    world: &WorldParams,
    gains: &GainSet,
) -> Vec3 {
    let ep = state.position - reference.position;
    let ev = state.velocity - reference.velocity;
    -gains.kp(agent) * ep - gains.kv(agent) * ev + veh.mass * world.gravity * world.up - cable_force
        + veh.mass * reference.acceleration
}

/// Thrust magnitude: projection of `force` onto the body thrust axis.
pub fn thrust(force: &Vec3, attitude: &Rot3) -> f64 {
    force.dot(&attitude.b3())
}

pub fn desired_b3(force: &Vec3) -> Result<Vec3, ControlError> {
    let n = force.norm();
    if n <= TOL_FORCE {
        return Err(ControlError::DegenerateForce(n));
    }
    Ok(force / n)
}

/// Rotation with third column `b3d` and first column the projection of the
/// heading `b1d` onto the plane normal to `b3d`.
pub fn desired_attitude(b3d: &Vec3, b1d: &Vec3) -> Result<Rot3, ControlError> {
    let cross = b3d.cross(b1d);
    let n = cross.norm();
    if n <= TOL_CROSS {
        return Err(ControlError::HeadingDegenerate(n));
    }
    let b2 = cross / n;
    let b1 = b2.cross(b3d);
    Ok(Rot3::from_matrix_unchecked(Mat3::from_columns(&[
        b1, b2, *b3d,
    ])))
}

/// Desired attitude together with its body rate and rate derivative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DesiredAttitude {
    pub attitude: Rot3,
    pub omega: Vec3,
    pub omega_dot: Vec3,
}

/// Finite-difference body rates of a sampled desired attitude.
///
/// Keeps the last three samples. The rate is the antisymmetrized difference
/// of the last two samples, and its derivative the difference of the last two
/// rates. Both are zero until three samples have been seen.
#[derive(Debug, Clone)]
pub struct AttitudeRateEstimator {
    step: f64,
    history: VecDeque<Rot3>,
}

impl AttitudeRateEstimator {
    pub fn new(step: f64) -> Self {
        AttitudeRateEstimator {
            step,
            history: VecDeque::with_capacity(3),
        }
    }

    pub fn reset(&mut self) {
        self.history.clear();
    }

    fn pair_rate(&self, older: &Rot3, newer: &Rot3) -> Vec3 {
        let a = older.matrix().transpose() * newer.matrix();
        let skew = 0.5 * (a - a.transpose());
        vee(&skew).expect("antisymmetric by construction") / self.step
    }

    /// Pushes `rd` and returns `(Omega_d, dOmega_d)`.
    pub fn update(&mut self, rd: Rot3) -> (Vec3, Vec3) {
        if self.history.len() == 3 {
            self.history.pop_front();
        }
        self.history.push_back(rd);
        if self.history.len() < 3 {
            return (Vec3::zeros(), Vec3::zeros());
        }
        let w_prev = self.pair_rate(&self.history[0], &self.history[1]);
        let w_last = self.pair_rate(&self.history[1], &self.history[2]);
        (w_last, (w_last - w_prev) / self.step)
    }
}

/// `tau = -kR e_R - kOmega e_Omega + Omega x J Omega
///        - J (hat(Omega) R^T Rd Omega_d - R^T Rd dOmega_d)`.
pub fn torque(
    state: &RigidBodyState,
    des: &DesiredAttitude,
    veh: &VehicleParams,
    gains: &GainSet,
) -> Vec3 {
    let r = &state.attitude;
    let w = state.omega;
    let er = attitude_error(r, &des.attitude);
    let ew = angular_velocity_error(&w, r, &des.attitude, &des.omega);
    let rt_rd = r.matrix().transpose() * des.attitude.matrix();
    let j = veh.inertia;
    -gains.kr * er - gains.komega * ew + w.cross(&(j * w))
        - j * (hat(&w) * rt_rd * des.omega - rt_rd * des.omega_dot)
}

/// Per-agent controller diagnostics for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AgentCommand {
    pub input: ControlInput,
    pub force: Vec3,
    pub desired: DesiredAttitude,
    pub reference: AgentReference,
    pub ep: Vec3,
    pub ev: Vec3,
    pub er: Vec3,
    pub eomega: Vec3,
}

/// Controller instance for one simulation. Owns the rate-estimator history,
/// so it must be evaluated once per step, in order.
#[derive(Debug, Clone)]
pub struct GeometricController {
    pub gains: GainSet,
    pub reference: ReferenceTrajectory,
    estimators: [AttitudeRateEstimator; 2],
}

impl GeometricController {
    pub fn new(gains: GainSet, reference: ReferenceTrajectory, step: f64) -> Self {
        GeometricController {
            gains,
            reference,
            estimators: [
                AttitudeRateEstimator::new(step),
                AttitudeRateEstimator::new(step),
            ],
        }
    }

    /// Commands for both vehicles given the nominal cable forces (inertial).
    pub fn compute(
        &mut self,
        sys: &SystemState,
        cable_forces: (&Vec3, &Vec3),
        vehicles: (&VehicleParams, &VehicleParams),
        world: &WorldParams,
    ) -> Result<[AgentCommand; 2], ControlError> {
        let refs = agent_references(&self.reference, sys.t);
        let one = self.agent(
            Agent::One,
            &sys.uav1,
            &refs.0,
            cable_forces.0,
            vehicles.0,
            world,
        )?;
        let two = self.agent(
            Agent::Two,
            &sys.uav2,
            &refs.1,
            cable_forces.1,
            vehicles.1,
            world,
        )?;
        Ok([one, two])
    }

    fn agent(
        &mut self,
        agent: Agent,
        state: &RigidBodyState,
        reference: &AgentReference,
        cable_force: &Vec3,
        veh: &VehicleParams,
        world: &WorldParams,
    ) -> Result<AgentCommand, ControlError> {
        let force = force_command(
            agent,
            state,
            reference,
            cable_force,
            veh,
            world,
            &self.gains,
        );
        let b3 = desired_b3(&force)?;
        let rd = desired_attitude(&b3, &self.reference.heading(agent))?;
        // clean up the last few ulps before differencing
        let rd = project_to_so3(rd.matrix()).unwrap_or(rd);
        let (omega_d, omega_d_dot) = self.estimators[agent.index()].update(rd);
        let desired = DesiredAttitude {
            attitude: rd,
            omega: omega_d,
            omega_dot: omega_d_dot,
        };
        let input = ControlInput {
            thrust: thrust(&force, &state.attitude),
            torque: torque(state, &desired, veh, &self.gains),
        };
        Ok(AgentCommand {
            input,
            force,
            desired,
            reference: *reference,
            ep: state.position - reference.position,
            ev: state.velocity - reference.velocity,
            er: attitude_error(&state.attitude, &rd),
            eomega: angular_velocity_error(&state.omega, &state.attitude, &rd, &omega_d),
        })
    }
}
