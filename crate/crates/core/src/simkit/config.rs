//! Scenario configuration and its flat `key = value` text format.
//!
//! One assignment per line, `#` starts a comment, dotted keys group related
//! settings. Matrices accept one value (scaled identity), three (diagonal) or
//! nine (row-major). Vectors are comma-separated triples.
//!
//! ```text
//! mode = reduced
//! sim.h = 1e-3
//! reduced.kv = 7        # 7 I
//! disturbance.amplitude = 0.35
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::analysis::LyapunovParams;
use crate::catenary::{admissible_with_height_tol, CableParams};
use crate::controller::{is_spd, GainSet, ReferenceTrajectory};
use crate::geom3::{Mat3, Vec3};
use crate::plant::{DisturbanceMode, DisturbanceProfile, VehicleParams, WorldParams};
use crate::simkit::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Relative translational error dynamics only.
    #[default]
    Reduced,
    /// Both vehicles on SE(3) with cable coupling and the full controller.
    Full,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Reduced => "reduced",
            Mode::Full => "full",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self, SimError> {
        match s {
            "reduced" => Ok(Mode::Reduced),
            "full" => Ok(Mode::Full),
            other => Err(SimError::ConfigInvalid(format!("unknown mode '{other}'"))),
        }
    }
}

/// Relative-coordinate model used in reduced mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedSetup {
    pub reduced_mass: f64,
    pub kp: Mat3,
    pub kv: Mat3,
    pub ep0: Vec3,
    pub ev0: Vec3,
}

impl Default for ReducedSetup {
    fn default() -> Self {
        ReducedSetup {
            reduced_mass: 1.0,
            kp: 6.0 * Mat3::identity(),
            kv: 7.0 * Mat3::identity(),
            ep0: Vec3::new(0.3, -0.2, 0.1),
            ev0: Vec3::zeros(),
        }
    }
}

/// Full-mode initial deviations from the references.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialOffsets {
    pub dp: [Vec3; 2],
    pub dv: [Vec3; 2],
    /// Attitude offsets as rotation vectors (rad).
    pub attitude: [Vec3; 2],
    pub omega: [Vec3; 2],
}

impl Default for InitialOffsets {
    fn default() -> Self {
        InitialOffsets {
            dp: [Vec3::new(0.05, -0.04, 0.02), Vec3::new(-0.03, 0.05, 0.02)],
            dv: [Vec3::zeros(); 2],
            attitude: [Vec3::new(0.05, -0.03, 0.02), Vec3::new(-0.04, 0.03, -0.02)],
            omega: [Vec3::zeros(); 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub mode: Mode,
    pub step: f64,
    pub horizon: f64,
    pub gains: GainSet,
    pub reduced: ReducedSetup,
    pub alpha: f64,
    pub beta: [f64; 2],
    pub disturbance: DisturbanceProfile,
    pub cable: CableParams,
    pub vehicles: [VehicleParams; 2],
    pub world: WorldParams,
    pub reference: ReferenceTrajectory,
    pub initial: InitialOffsets,
    /// Seed for initial-condition jitter; used only when `jitter > 0`.
    pub seed: u64,
    pub jitter: f64,
    /// Fraction of the horizon used by the tail metric.
    pub tail_fraction: f64,
    /// Height mismatch (m) above which the monitor flags an event.
    pub height_tol: f64,
    pub output_dir: Option<PathBuf>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            mode: Mode::Reduced,
            step: 1e-3,
            horizon: 20.0,
            gains: GainSet::default(),
            reduced: ReducedSetup::default(),
            alpha: 0.08,
            beta: [0.02, 0.02],
            disturbance: DisturbanceProfile::default(),
            cable: CableParams::default(),
            vehicles: [VehicleParams::default(); 2],
            world: WorldParams::default(),
            reference: ReferenceTrajectory::default(),
            initial: InitialOffsets::default(),
            seed: 0,
            jitter: 0.0,
            tail_fraction: 0.25,
            height_tol: 1e-3,
            output_dir: None,
        }
    }
}

fn invalid(msg: impl Into<String>) -> SimError {
    SimError::ConfigInvalid(msg.into())
}

fn parse_f64(key: &str, s: &str) -> Result<f64, SimError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| invalid(format!("{key}: '{s}' is not a number")))
}

fn parse_list(key: &str, s: &str) -> Result<Vec<f64>, SimError> {
    s.split(',').map(|p| parse_f64(key, p)).collect()
}

fn parse_vec3(key: &str, s: &str) -> Result<Vec3, SimError> {
    match parse_list(key, s)?.as_slice() {
        [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
        other => Err(invalid(format!(
            "{key}: expected 3 values, got {}",
            other.len()
        ))),
    }
}

fn parse_mat3(key: &str, s: &str) -> Result<Mat3, SimError> {
    let v = parse_list(key, s)?;
    match v.len() {
        1 => Ok(v[0] * Mat3::identity()),
        3 => Ok(Mat3::from_diagonal(&Vec3::new(v[0], v[1], v[2]))),
        9 => Ok(Mat3::from_row_slice(&v)),
        n => Err(invalid(format!(
            "{key}: expected 1, 3 or 9 values, got {n}"
        ))),
    }
}

fn fmt_vec3(v: &Vec3) -> String {
    format!("{:?}, {:?}, {:?}", v.x, v.y, v.z)
}

fn fmt_mat3(m: &Mat3) -> String {
    let off_diagonal_zero = (0..3).all(|i| (0..3).all(|j| i == j || m[(i, j)] == 0.0));
    if off_diagonal_zero {
        if m[(0, 0)] == m[(1, 1)] && m[(1, 1)] == m[(2, 2)] {
            format!("{:?}", m[(0, 0)])
        } else {
            fmt_vec3(&m.diagonal())
        }
    } else {
        let rows: Vec<String> = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| format!("{:?}", m[(i, j)]))
            .collect();
        rows.join(", ")
    }
}

impl SimConfig {
    /// Parses `text` over the defaults. Unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut cfg = SimConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("line {}: expected 'key = value'", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.validate()?;
        // relative output dirs are taken relative to the config file
        if let (Some(dir), Some(base)) = (&cfg.output_dir, path.parent()) {
            if dir.is_relative() {
                cfg.output_dir = Some(base.join(dir));
            }
        }
        Ok(cfg)
    }

    /// Applies one assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SimError> {
        let f = |v: &str| parse_f64(key, v);
        let v3 = |v: &str| parse_vec3(key, v);
        let m3 = |v: &str| parse_mat3(key, v);
        match key {
            "mode" => self.mode = value.parse()?,
            "sim.h" => self.step = f(value)?,
            "sim.horizon" => self.horizon = f(value)?,
            "sim.seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| invalid(format!("{key}: '{value}' is not an unsigned integer")))?
            }
            "sim.jitter" => self.jitter = f(value)?,
            "sim.tail_fraction" => self.tail_fraction = f(value)?,
            "sim.height_tol" => self.height_tol = f(value)?,
            "reduced.m_r" => self.reduced.reduced_mass = f(value)?,
            "reduced.kp" => self.reduced.kp = m3(value)?,
            "reduced.kv" => self.reduced.kv = m3(value)?,
            "reduced.ep0" => self.reduced.ep0 = v3(value)?,
            "reduced.ev0" => self.reduced.ev0 = v3(value)?,
            "gains.kp" => {
                self.gains.kp1 = m3(value)?;
                self.gains.kp2 = self.gains.kp1;
            }
            "gains.kv" => {
                self.gains.kv1 = m3(value)?;
                self.gains.kv2 = self.gains.kv1;
            }
            "gains.kp1" => self.gains.kp1 = m3(value)?,
            "gains.kv1" => self.gains.kv1 = m3(value)?,
            "gains.kp2" => self.gains.kp2 = m3(value)?,
            "gains.kv2" => self.gains.kv2 = m3(value)?,
            "gains.kr" => self.gains.kr = f(value)?,
            "gains.komega" => self.gains.komega = f(value)?,
            "lyapunov.alpha" => self.alpha = f(value)?,
            "lyapunov.beta1" => self.beta[0] = f(value)?,
            "lyapunov.beta2" => self.beta[1] = f(value)?,
            "disturbance.amplitude" => self.disturbance.amplitude = f(value)?,
            "disturbance.omega1" => self.disturbance.omega[0] = f(value)?,
            "disturbance.omega2" => self.disturbance.omega[1] = f(value)?,
            "disturbance.omega3" => self.disturbance.omega[2] = f(value)?,
            "disturbance.mode" => {
                self.disturbance.mode = match value {
                    "relative" => DisturbanceMode::Relative,
                    "per-agent" => DisturbanceMode::PerAgent,
                    other => return Err(invalid(format!("{key}: unknown mode '{other}'"))),
                }
            }
            "cable.l" => self.cable.length = f(value)?,
            "cable.w" => self.cable.weight_per_length = f(value)?,
            "uav1.m" => self.vehicles[0].mass = f(value)?,
            "uav1.J" => self.vehicles[0].inertia = m3(value)?,
            "uav2.m" => self.vehicles[1].mass = f(value)?,
            "uav2.J" => self.vehicles[1].inertia = m3(value)?,
            "world.g" => self.world.gravity = f(value)?,
            "reference.p10" => self.reference.anchor = v3(value)?,
            "reference.p12" => self.reference.offset = v3(value)?,
            "reference.p12_amp" => self.reference.amplitude = v3(value)?,
            "reference.p12_omega" => self.reference.omega = f(value)?,
            "reference.b1_1" => self.reference.heading1 = v3(value)?,
            "reference.b1_2" => self.reference.heading2 = v3(value)?,
            "init.dp1" => self.initial.dp[0] = v3(value)?,
            "init.dp2" => self.initial.dp[1] = v3(value)?,
            "init.dv1" => self.initial.dv[0] = v3(value)?,
            "init.dv2" => self.initial.dv[1] = v3(value)?,
            "init.att1" => self.initial.attitude[0] = v3(value)?,
            "init.att2" => self.initial.attitude[1] = v3(value)?,
            "init.omega1" => self.initial.omega[0] = v3(value)?,
            "init.omega2" => self.initial.omega[1] = v3(value)?,
            "output.dir" => self.output_dir = Some(PathBuf::from(value)),
            other => return Err(invalid(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Serializes every setting in the text format; parsing the result gives
    /// back an identical configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("mode", self.mode.as_str().into());
        kv("sim.h", format!("{:?}", self.step));
        kv("sim.horizon", format!("{:?}", self.horizon));
        kv("sim.seed", self.seed.to_string());
        kv("sim.jitter", format!("{:?}", self.jitter));
        kv("sim.tail_fraction", format!("{:?}", self.tail_fraction));
        kv("sim.height_tol", format!("{:?}", self.height_tol));
        kv("reduced.m_r", format!("{:?}", self.reduced.reduced_mass));
        kv("reduced.kp", fmt_mat3(&self.reduced.kp));
        kv("reduced.kv", fmt_mat3(&self.reduced.kv));
        kv("reduced.ep0", fmt_vec3(&self.reduced.ep0));
        kv("reduced.ev0", fmt_vec3(&self.reduced.ev0));
        kv("gains.kp1", fmt_mat3(&self.gains.kp1));
        kv("gains.kv1", fmt_mat3(&self.gains.kv1));
        kv("gains.kp2", fmt_mat3(&self.gains.kp2));
        kv("gains.kv2", fmt_mat3(&self.gains.kv2));
        kv("gains.kr", format!("{:?}", self.gains.kr));
        kv("gains.komega", format!("{:?}", self.gains.komega));
        kv("lyapunov.alpha", format!("{:?}", self.alpha));
        kv("lyapunov.beta1", format!("{:?}", self.beta[0]));
        kv("lyapunov.beta2", format!("{:?}", self.beta[1]));
        kv(
            "disturbance.amplitude",
            format!("{:?}", self.disturbance.amplitude),
        );
        kv(
            "disturbance.omega1",
            format!("{:?}", self.disturbance.omega[0]),
        );
        kv(
            "disturbance.omega2",
            format!("{:?}", self.disturbance.omega[1]),
        );
        kv(
            "disturbance.omega3",
            format!("{:?}", self.disturbance.omega[2]),
        );
        kv(
            "disturbance.mode",
            match self.disturbance.mode {
                DisturbanceMode::Relative => "relative",
                DisturbanceMode::PerAgent => "per-agent",
            }
            .into(),
        );
        kv("cable.l", format!("{:?}", self.cable.length));
        kv("cable.w", format!("{:?}", self.cable.weight_per_length));
        kv("uav1.m", format!("{:?}", self.vehicles[0].mass));
        kv("uav1.J", fmt_mat3(&self.vehicles[0].inertia));
        kv("uav2.m", format!("{:?}", self.vehicles[1].mass));
        kv("uav2.J", fmt_mat3(&self.vehicles[1].inertia));
        kv("world.g", format!("{:?}", self.world.gravity));
        kv("reference.p10", fmt_vec3(&self.reference.anchor));
        kv("reference.p12", fmt_vec3(&self.reference.offset));
        kv("reference.p12_amp", fmt_vec3(&self.reference.amplitude));
        kv("reference.p12_omega", format!("{:?}", self.reference.omega));
        kv("reference.b1_1", fmt_vec3(&self.reference.heading1));
        kv("reference.b1_2", fmt_vec3(&self.reference.heading2));
        kv("init.dp1", fmt_vec3(&self.initial.dp[0]));
        kv("init.dp2", fmt_vec3(&self.initial.dp[1]));
        kv("init.dv1", fmt_vec3(&self.initial.dv[0]));
        kv("init.dv2", fmt_vec3(&self.initial.dv[1]));
        kv("init.att1", fmt_vec3(&self.initial.attitude[0]));
        kv("init.att2", fmt_vec3(&self.initial.attitude[1]));
        kv("init.omega1", fmt_vec3(&self.initial.omega[0]));
        kv("init.omega2", fmt_vec3(&self.initial.omega[1]));
        if let Some(dir) = &self.output_dir {
            kv("output.dir", dir.display().to_string());
        }
        s
    }

    /// Number of integration steps covering the horizon.
    pub fn steps(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(invalid(format!("sim.h = {} must be positive", self.step)));
        }
        if !(self.horizon >= 10.0 * self.step && self.horizon.is_finite()) {
            return Err(invalid(format!(
                "sim.horizon = {} must cover at least 10 steps",
                self.horizon
            )));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(invalid("sim.tail_fraction must lie in (0, 1]"));
        }
        if !(self.jitter >= 0.0) || !(self.height_tol > 0.0) {
            return Err(invalid("sim.jitter must be >= 0 and sim.height_tol > 0"));
        }
        if !(self.reduced.reduced_mass > 0.0) {
            return Err(invalid("reduced.m_r must be positive"));
        }
        if !is_spd(&self.reduced.kp) || !is_spd(&self.reduced.kv) {
            return Err(invalid(
                "reduced.kp and reduced.kv must be symmetric positive definite",
            ));
        }
        self.gains.validate().map_err(|e| invalid(e.to_string()))?;
        if !(self.alpha >= 0.0) || !(self.beta[0] >= 0.0) || !(self.beta[1] >= 0.0) {
            return Err(invalid("Lyapunov cross-term weights must be non-negative"));
        }
        if !(self.disturbance.amplitude >= 0.0)
            || self.disturbance.omega.iter().any(|w| !w.is_finite())
        {
            return Err(invalid(
                "disturbance amplitude must be >= 0 with finite frequencies",
            ));
        }
        self.cable.validate().map_err(|e| invalid(e.to_string()))?;
        for v in &self.vehicles {
            v.validate().map_err(|e| invalid(e.to_string()))?;
        }
        if !(self.world.gravity > 0.0) {
            return Err(invalid("world.g must be positive"));
        }
        if self.mode == Mode::Full {
            self.reference
                .validate(self.cable.length, 1e-3 * self.cable.length)
                .map_err(|e| invalid(e.to_string()))?;
            let p1 = self.reference.anchor + self.initial.dp[0];
            let p2 =
                self.reference.anchor + self.reference.relative(0.0).position + self.initial.dp[1];
            admissible_with_height_tol(&p1, &p2, self.cable.length, self.height_tol)
                .map_err(|e| invalid(format!("initial configuration: {e}")))?;
        }
        Ok(())
    }

    /// Lyapunov weights for this configuration. Full mode derives the relative
    /// reduced mass and position gain from vehicle 1 (`m_r Kp1 / m1`).
    pub fn lyapunov_params(&self) -> LyapunovParams {
        let (reduced_mass, kp) = match self.mode {
            Mode::Reduced => (self.reduced.reduced_mass, self.reduced.kp),
            Mode::Full => {
                let (m1, m2) = (self.vehicles[0].mass, self.vehicles[1].mass);
                let mr = m1 * m2 / (m1 + m2);
                (mr, self.gains.kp1 * (mr / m1))
            }
        };
        LyapunovParams {
            alpha: self.alpha,
            beta: self.beta,
            kr: self.gains.kr,
            reduced_mass,
            kp,
            inertia: [self.vehicles[0].inertia, self.vehicles[1].inertia],
        }
    }

    /// Sets the translational damping to `kv I` in both the reduced model and
    /// the per-vehicle gains.
    pub fn set_damping(&mut self, kv: f64) {
        let k = kv * Mat3::identity();
        self.reduced.kv = k;
        self.gains.kv1 = k;
        self.gains.kv2 = k;
    }
}
