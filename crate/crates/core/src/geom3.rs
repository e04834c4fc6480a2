//! Rotation-group primitives: hat/vee maps, yaw rotations, drift repair and
//! the SO(3) tracking errors used by the controller and the Lyapunov monitor.

use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Orthonormality tolerance used when validating incoming rotations.
pub const TOL_ORTH: f64 = 1e-9;
/// Antisymmetry tolerance accepted by [`vee`].
pub const TOL_SKEW: f64 = 1e-9;
/// Smallest singular value accepted by [`project_to_so3`].
pub const TOL_RANK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("matrix is not antisymmetric (|M + M^T| = {0:e})")]
    NonSkewInput(f64),
    #[error("matrix cannot be projected onto SO(3): {0}")]
    DegenerateMatrix(String),
    #[error("matrix is not a rotation (|R^T R - I| = {orth:e}, det = {det})")]
    NotRotation { orth: f64, det: f64 },
}

/// A rotation matrix, kept as the full 3x3 array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rot3(Mat3);

impl Rot3 {
    pub fn identity() -> Self {
        Rot3(Mat3::identity())
    }

    /// Accepts `m` if it is orthonormal with unit determinant to [`TOL_ORTH`].
    pub fn from_matrix(m: Mat3) -> Result<Self, GeomError> {
        let orth = orthonormality_error(&m);
        let det = m.determinant();
        if orth < TOL_ORTH && (det - 1.0).abs() < TOL_ORTH {
            Ok(Rot3(m))
        } else {
            Err(GeomError::NotRotation { orth, det })
        }
    }

    /// Wraps `m` without validation. Callers own the SO(3) guarantee.
    pub fn from_matrix_unchecked(m: Mat3) -> Self {
        Rot3(m)
    }

    /// Rotation by angle `|v|` about `v`.
    pub fn from_scaled_axis(v: Vec3) -> Self {
        Rot3(*nalgebra::Rotation3::from_scaled_axis(v).matrix())
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn into_matrix(self) -> Mat3 {
        self.0
    }

    pub fn transpose(&self) -> Rot3 {
        Rot3(self.0.transpose())
    }

    /// Third column, the body thrust axis expressed in the inertial frame.
    pub fn b3(&self) -> Vec3 {
        self.0.column(2).into_owned()
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.0)
    }
}

impl Default for Rot3 {
    fn default() -> Self {
        Rot3::identity()
    }
}

impl Mul for Rot3 {
    type Output = Rot3;
    fn mul(self, rhs: Rot3) -> Rot3 {
        Rot3(self.0 * rhs.0)
    }
}

impl Mul<Vec3> for Rot3 {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl Mul<Vec3> for &Rot3 {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

/// Frobenius norm of `M^T M - I`.
pub fn orthonormality_error(m: &Mat3) -> f64 {
    (m.transpose() * m - Mat3::identity()).norm()
}

/// Skew-symmetric matrix with `hat(v) * u == v x u`.
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`]. Rejects matrices whose symmetric part exceeds [`TOL_SKEW`].
pub fn vee(m: &Mat3) -> Result<Vec3, GeomError> {
    let sym = (m + m.transpose()).norm();
    if sym >= TOL_SKEW {
        return Err(GeomError::NonSkewInput(sym));
    }
    Ok(vee_unchecked(m))
}

fn vee_unchecked(m: &Mat3) -> Vec3 {
    Vec3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Rotation about the inertial vertical axis by `psi` radians.
pub fn rot_z(psi: f64) -> Rot3 {
    let (s, c) = psi.sin_cos();
    Rot3(Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
}

/// Nearest rotation to `m` in the Frobenius sense (orthogonal polar factor).
///
/// Uses the scaled Newton iteration `X <- (zeta X + X^-T / zeta) / 2`, which
/// converges quadratically for any nonsingular start and keeps `det X` of the
/// same sign as `det m`.
pub fn project_to_so3(m: &Mat3) -> Result<Rot3, GeomError> {
    let det = m.determinant();
    if !det.is_finite() || det <= 0.0 {
        return Err(GeomError::DegenerateMatrix(format!("det = {det}")));
    }
    let sv_min = m.singular_values().min();
    if sv_min < TOL_RANK {
        return Err(GeomError::DegenerateMatrix(format!(
            "smallest singular value {sv_min:e}"
        )));
    }

    let mut x = *m;
    for iter in 0..100 {
        let inv_t = x
            .try_inverse()
            .ok_or_else(|| GeomError::DegenerateMatrix("singular iterate".into()))?
            .transpose();
        // Frobenius-norm scaling only while far from orthogonal.
        let zeta = if iter < 8 && orthonormality_error(&x) > 1e-3 {
            (inv_t.norm() / x.norm()).sqrt()
        } else {
            1.0
        };
        let next = 0.5 * (zeta * x + inv_t / zeta);
        let delta = (next - x).norm();
        x = next;
        if delta < 1e-15 {
            break;
        }
    }
    Ok(Rot3(x))
}

/// `e_R = 1/2 (Rd^T R - R^T Rd)^vee`.
pub fn attitude_error(r: &Rot3, rd: &Rot3) -> Vec3 {
    let a = rd.0.transpose() * r.0;
    0.5 * vee_unchecked(&(a - a.transpose()))
}

/// `e_Omega = Omega - R^T Rd Omega_d`.
pub fn angular_velocity_error(omega: &Vec3, r: &Rot3, rd: &Rot3, omega_d: &Vec3) -> Vec3 {
    omega - r.0.transpose() * (rd.0 * omega_d)
}

/// `tr(I - Rd^T R)`, the configuration error function on SO(3).
pub fn attitude_potential(r: &Rot3, rd: &Rot3) -> f64 {
    3.0 - (rd.0.transpose() * r.0).trace()
}
