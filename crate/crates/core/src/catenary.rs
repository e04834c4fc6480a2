//! Quasi-static catenary between two equal-height attachment points.
//!
//! The cable carries no state of its own: the UAV positions fix the plane
//! orientation, the half-span and the shape parameter, and those in turn fix
//! the endpoint forces. Catenary-frame conventions:
//!
//! * `e2` of the catenary frame points along the horizontal span direction
//!   `d_hat` (from UAV 1 towards UAV 2) and `e3` is the inertial vertical.
//! * The curve parameter `r` runs from `-s` at UAV 1 to `+s` at UAV 2.
//! * Endpoint forces are the forces the cable applies to each vehicle:
//!   inward along the span and downward by half the cable weight.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::geom3::{rot_z, Rot3, Vec3};

/// Horizontal separation below which the catenary plane is undefined.
pub const TOL_SEP: f64 = 1e-9;
/// Relative margin to the taut limit `2s = l`.
pub const EPS_TAUT: f64 = 1e-6;
/// Height mismatch tolerated by static admissibility checks.
pub const TOL_HEIGHT: f64 = 1e-6;
/// Iteration budget shared by the bracketing and polishing phases.
pub const MAX_ITER: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatenaryError {
    #[error("horizontal separation {0:e} m is below the tolerance")]
    DegenerateSeparation(f64),
    #[error("cable is taut or over-stretched: span 2s = {span} m, length l = {length} m")]
    TautCable { span: f64, length: f64 },
    #[error("shape parameter solve did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("curve parameter r = {r} outside [-{s}, {s}]")]
    ParamOutOfRange { r: f64, s: f64 },
    #[error("invalid cable parameters: {0}")]
    InvalidParams(String),
    #[error("inadmissible configuration: {0}")]
    Inadmissible(Inadmissibility),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CableParams {
    /// Cable length (m).
    pub length: f64,
    /// Weight per unit length (N/m).
    pub weight_per_length: f64,
}

impl CableParams {
    pub fn new(length: f64, weight_per_length: f64) -> Result<Self, CatenaryError> {
        let p = CableParams {
            length,
            weight_per_length,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CatenaryError> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(CatenaryError::InvalidParams(format!(
                "length {}",
                self.length
            )));
        }
        if !(self.weight_per_length > 0.0 && self.weight_per_length.is_finite()) {
            return Err(CatenaryError::InvalidParams(format!(
                "weight per length {}",
                self.weight_per_length
            )));
        }
        Ok(())
    }

    pub fn total_weight(&self) -> f64 {
        self.length * self.weight_per_length
    }
}

impl Default for CableParams {
    fn default() -> Self {
        CableParams {
            length: 2.0,
            weight_per_length: 0.5,
        }
    }
}

/// Geometry of the hanging cable induced by a pair of positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatenaryShape {
    /// Heading of the span direction, `atan2(y2 - y1, x2 - x1)`.
    pub psi: f64,
    /// Catenary frame orientation; maps catenary `e2` onto `d_hat`.
    pub frame: Rot3,
    /// Half-span (m).
    pub half_span: f64,
    /// Shape parameter (m).
    pub shape_param: f64,
    /// Inertial position of the vertex.
    pub vertex: Vec3,
    /// Unit horizontal span direction.
    pub d_hat: Vec3,
}

/// Forces on the two vehicles, in the catenary frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointTensions {
    pub t1: Vec3,
    pub t2: Vec3,
}

impl EndpointTensions {
    /// Both forces mapped to the inertial frame.
    pub fn inertial(&self, shape: &CatenaryShape) -> (Vec3, Vec3) {
        (shape.frame * self.t1, shape.frame * self.t2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Inadmissibility {
    Coincident,
    Taut { span: f64, length: f64 },
    HeightMismatch(f64),
}

impl std::fmt::Display for Inadmissibility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Inadmissibility::Coincident => write!(f, "positions coincide"),
            Inadmissibility::Taut { span, length } => {
                write!(f, "span {span} m reaches cable length {length} m")
            }
            Inadmissibility::HeightMismatch(dz) => write!(f, "height mismatch {dz:e} m"),
        }
    }
}

/// Static admissibility: distinct points, slack cable, equal heights.
pub fn admissible(p1: &Vec3, p2: &Vec3, length: f64) -> Result<(), Inadmissibility> {
    admissible_with_height_tol(p1, p2, length, TOL_HEIGHT)
}

pub fn admissible_with_height_tol(
    p1: &Vec3,
    p2: &Vec3,
    length: f64,
    tol_height: f64,
) -> Result<(), Inadmissibility> {
    let delta = p2 - p1;
    if delta.norm() <= 0.0 || horizontal(&delta).norm() <= TOL_SEP {
        return Err(Inadmissibility::Coincident);
    }
    let span = 2.0 * half_span(p1, p2);
    if span >= length * (1.0 - EPS_TAUT) {
        return Err(Inadmissibility::Taut { span, length });
    }
    let dz = (p1.z - p2.z).abs();
    if dz > tol_height {
        return Err(Inadmissibility::HeightMismatch(dz));
    }
    Ok(())
}

fn horizontal(v: &Vec3) -> Vec3 {
    Vec3::new(v.x, v.y, 0.0)
}

/// Span heading, catenary frame and horizontal direction.
pub fn orientation(p1: &Vec3, p2: &Vec3) -> Result<(f64, Rot3, Vec3), CatenaryError> {
    let dxy = horizontal(&(p2 - p1));
    let n = dxy.norm();
    if n <= TOL_SEP {
        return Err(CatenaryError::DegenerateSeparation(n));
    }
    let psi = dxy.y.atan2(dxy.x);
    Ok((psi, frame_from_heading(psi), dxy / n))
}

/// Catenary frame for span heading `psi`: rotation about `e3` taking `e2` to
/// `(cos psi, sin psi, 0)`.
pub fn frame_from_heading(psi: f64) -> Rot3 {
    rot_z(psi - FRAC_PI_2)
}

pub fn half_span(p1: &Vec3, p2: &Vec3) -> f64 {
    0.5 * horizontal(&(p2 - p1)).norm()
}

/// `sinh(u)/u`, accurate near zero.
fn sinhc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        1.0 + u * u / 6.0
    } else {
        u.sinh() / u
    }
}

/// Solves `l/2 = a sinh(s/a)` for the shape parameter `a`.
///
/// Works in `u = s/a`, where `sinh(u)/u` is strictly increasing: bisection
/// narrows the bracket to width 1e-3, then Newton finishes.
pub fn solve_shape_parameter(half_span: f64, length: f64) -> Result<f64, CatenaryError> {
    if !(length > 0.0) || !(half_span > 0.0) {
        return Err(CatenaryError::InvalidParams(format!(
            "half span {half_span}, length {length}"
        )));
    }
    if 2.0 * half_span >= length * (1.0 - EPS_TAUT) {
        return Err(CatenaryError::TautCable {
            span: 2.0 * half_span,
            length,
        });
    }
    let target = length / (2.0 * half_span);
    let g = |u: f64| sinhc(u) - target;

    let mut lo = 1e-12_f64;
    let mut hi = 50.0_f64;
    let mut iter = 0;
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        iter += 1;
        if iter >= MAX_ITER || !hi.is_finite() {
            return Err(CatenaryError::NoConvergence(iter));
        }
    }
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iter += 1;
        if iter >= MAX_ITER {
            return Err(CatenaryError::NoConvergence(iter));
        }
    }

    let mut u = 0.5 * (lo + hi);
    loop {
        // d/du sinh(u)/u = (u cosh u - sinh u) / u^2
        let deriv = if u < 1e-4 {
            u / 3.0
        } else {
            (u * u.cosh() - u.sinh()) / (u * u)
        };
        let step = g(u) / deriv;
        let mut next = u - step;
        if !(next > lo && next < hi) {
            // keep the iterate inside the bracket
            next = 0.5 * (lo + hi);
        }
        if g(next) < 0.0 {
            lo = lo.max(next);
        } else {
            hi = hi.min(next);
        }
        let done = (next - u).abs() <= 4.0 * f64::EPSILON * next;
        u = next;
        iter += 1;
        if done || hi - lo <= 4.0 * f64::EPSILON * u {
            break;
        }
        if iter >= MAX_ITER {
            return Err(CatenaryError::NoConvergence(iter));
        }
    }
    Ok(half_span / u)
}

/// Shape from positions and cable length.
pub fn shape_of_positions(
    p1: &Vec3,
    p2: &Vec3,
    length: f64,
) -> Result<CatenaryShape, CatenaryError> {
    let (psi, frame, d_hat) = orientation(p1, p2)?;
    let s = half_span(p1, p2);
    let a = solve_shape_parameter(s, length)?;
    let vertex = 0.5 * (p1 + p2) - a * ((s / a).cosh() - 1.0) * Vec3::z();
    Ok(CatenaryShape {
        psi,
        frame,
        half_span: s,
        shape_param: a,
        vertex,
        d_hat,
    })
}

fn check_param(r: f64, s: f64) -> Result<(), CatenaryError> {
    // a hair of slack so that r = +-s computed in floating point is accepted
    if r.abs() > s * (1.0 + 1e-12) {
        Err(CatenaryError::ParamOutOfRange { r, s })
    } else {
        Ok(())
    }
}

/// Centerline in the catenary frame, vertex at the origin.
pub fn curve_point_local(r: f64, shape: &CatenaryShape) -> Result<Vec3, CatenaryError> {
    check_param(r, shape.half_span)?;
    let a = shape.shape_param;
    Ok(Vec3::new(0.0, r, a * ((r / a).cosh() - 1.0)))
}

/// Centerline in the inertial frame; `r = -s` is UAV 1, `r = +s` is UAV 2.
pub fn curve_point(r: f64, shape: &CatenaryShape) -> Result<Vec3, CatenaryError> {
    Ok(shape.frame * curve_point_local(r, shape)? + shape.vertex)
}

/// Internal tension field in the catenary frame at parameter `r`.
///
/// The horizontal component is reported as `+w a`; its sign only encodes
/// which side of the cut the force acts on.
pub fn tension_distribution(r: f64, shape: &CatenaryShape, w: f64) -> Result<Vec3, CatenaryError> {
    check_param(r, shape.half_span)?;
    let a = shape.shape_param;
    Ok(Vec3::new(0.0, w * a, w * a * (r / a).sinh()))
}

/// Forces the cable exerts on the two vehicles, catenary frame.
pub fn endpoint_tensions(shape: &CatenaryShape, cable: &CableParams) -> EndpointTensions {
    let horiz = cable.weight_per_length * shape.shape_param;
    let vert = -0.5 * cable.total_weight();
    EndpointTensions {
        t1: Vec3::new(0.0, horiz, vert),
        t2: Vec3::new(0.0, -horiz, vert),
    }
}

/// Full pipeline: admissibility, shape and endpoint forces.
pub fn catenary_of_positions(
    p1: &Vec3,
    p2: &Vec3,
    cable: &CableParams,
) -> Result<(CatenaryShape, EndpointTensions), CatenaryError> {
    catenary_with_height_tol(p1, p2, cable, TOL_HEIGHT)
}

/// As [`catenary_of_positions`] with a caller-chosen height tolerance. The
/// dynamic simulation passes `f64::INFINITY` and monitors heights itself.
pub fn catenary_with_height_tol(
    p1: &Vec3,
    p2: &Vec3,
    cable: &CableParams,
    tol_height: f64,
) -> Result<(CatenaryShape, EndpointTensions), CatenaryError> {
    cable.validate()?;
    admissible_with_height_tol(p1, p2, cable.length, tol_height)
        .map_err(CatenaryError::Inadmissible)?;
    let shape = shape_of_positions(p1, p2, cable.length)?;
    let tensions = endpoint_tensions(&shape, cable);
    Ok((shape, tensions))
}

/// Summary used by the `catenary` CLI subcommand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticReport {
    pub shape_param: f64,
    pub t1: Vec3,
    pub t2: Vec3,
    pub max_tension: f64,
    pub residual: f64,
}

/// Static quantities for half-span `s` and cable `cable`, independent of heading.
pub fn static_report(half_span: f64, cable: &CableParams) -> Result<StaticReport, CatenaryError> {
    cable.validate()?;
    let a = solve_shape_parameter(half_span, cable.length)?;
    let shape = CatenaryShape {
        psi: 0.0,
        frame: frame_from_heading(0.0),
        half_span,
        shape_param: a,
        vertex: Vec3::zeros(),
        d_hat: Vec3::x(),
    };
    let t = endpoint_tensions(&shape, cable);
    Ok(StaticReport {
        shape_param: a,
        t1: t.t1,
        t2: t.t2,
        max_tension: cable.weight_per_length * a * (half_span / a).cosh(),
        residual: a * (half_span / a).sinh() - 0.5 * cable.length,
    })
}
