//! Quaternion, Euler-ZYX and rotation-matrix algebra.
//!
//! Conventions used throughout the crate:
//! - quaternions are Hamilton products, scalar part first, kept at unit norm
//!   with the scalar part non-negative (one representative per rotation);
//! - `R(q)` maps body-frame vectors into the world frame;
//! - Euler angles follow the ZYX sequence, `R = Rz(psi) Ry(theta) Rx(phi)`;
//! - body angular velocity relates to Euler rates through `omega = W(delta) delta_dot`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// |sin θ| may not get closer to 1 than this before Euler extraction fails.
pub const GIMBAL_GUARD: f64 = 1e-9;
/// |cos θ| below this makes the Euler-rate map non-invertible.
pub const SINGULAR_MAP_GUARD: f64 = 1e-6;

/// Wraps an angle to [-π, π).
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let w = a - two_pi * ((a + std::f64::consts::PI) / two_pi).floor();
    // floor rounding can land exactly on +π
    if w >= std::f64::consts::PI {
        w - two_pi
    } else {
        w
    }
}

/// Skew-symmetric cross-product matrix `[v]×`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Elementary rotation about the x-axis.
pub fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Elementary rotation about the y-axis.
pub fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Elementary rotation about the z-axis.
pub fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// ZYX Euler angles in radians.
#[derive(Clone, Copy, Debug, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct EulerZyx {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl EulerZyx {
    pub fn new(phi: f64, theta: f64, psi: f64) -> Self {
        Self { phi, theta, psi }
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.phi, self.theta, self.psi)
    }

    /// Same angles with phi and psi wrapped to [-π, π).
    pub fn wrapped(&self) -> Self {
        Self::new(wrap_angle(self.phi), self.theta, wrap_angle(self.psi))
    }
}

/// Unit quaternion with non-negative scalar part.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Quat {
    eta: f64,
    eps: Vector3<f64>,
}

impl Default for Quat {
    fn default() -> Self {
        Self::identity()
    }
}

impl Quat {
    pub fn identity() -> Self {
        Self { eta: 1.0, eps: Vector3::zeros() }
    }

    /// Builds a quaternion from raw parts, normalizing and fixing the sign.
    pub fn from_parts(eta: f64, eps: Vector3<f64>) -> Self {
        let mut q = Self { eta, eps };
        q.renormalize();
        q
    }

    /// Rotation by `angle` about a unit `axis`.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let half = 0.5 * angle;
        Self::from_parts(half.cos(), axis * half.sin())
    }

    /// Exponential-map quaternion of a rotation vector (axis times angle).
    pub fn from_rotation_vector(v: &Vector3<f64>) -> Self {
        let angle = v.norm();
        if angle < 1e-12 {
            // first-order series keeps the step exact to O(angle^3)
            return Self::from_parts(1.0, v * 0.5);
        }
        Self::from_axis_angle(&(v / angle), angle)
    }

    /// ZYX Euler angles to quaternion: `q = qz(psi) ∘ qy(theta) ∘ qx(phi)`.
    pub fn from_euler(d: &EulerZyx) -> Self {
        let qx = Self::from_axis_angle(&Vector3::x(), d.phi);
        let qy = Self::from_axis_angle(&Vector3::y(), d.theta);
        let qz = Self::from_axis_angle(&Vector3::z(), d.psi);
        qz.compose(&qy).compose(&qx)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn eps(&self) -> Vector3<f64> {
        self.eps
    }

    pub fn norm(&self) -> f64 {
        (self.eta * self.eta + self.eps.norm_squared()).sqrt()
    }

    fn renormalize(&mut self) {
        let n = self.norm();
        assert!(n > 1e-12, "cannot normalize a near-zero quaternion");
        let sign = if self.eta < 0.0 { -1.0 } else { 1.0 };
        self.eta *= sign / n;
        self.eps *= sign / n;
    }

    /// Hamilton product, renormalized; composes rotations left to right:
    /// `rotation(a.compose(b)) = rotation(a) * rotation(b)`.
    pub fn compose(&self, other: &Self) -> Self {
        let eta = self.eta * other.eta - self.eps.dot(&other.eps);
        let eps = self.eta * other.eps + other.eta * self.eps + self.eps.cross(&other.eps);
        Self::from_parts(eta, eps)
    }

    /// Inverse rotation (conjugate for unit quaternions).
    pub fn inverse(&self) -> Self {
        Self { eta: self.eta, eps: -self.eps }
    }

    /// Body-to-world rotation matrix.
    pub fn rotation(&self) -> Matrix3<f64> {
        let e = &self.eps;
        Matrix3::identity() * (self.eta * self.eta - e.norm_squared())
            + e * e.transpose() * 2.0
            + skew(e) * (2.0 * self.eta)
    }

    /// Rotates a body-frame vector into the world frame.
    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        let t = 2.0 * self.eps.cross(v);
        v + self.eta * t + self.eps.cross(&t)
    }

    /// ZYX Euler angles on the principal branch, θ ∈ (-π/2, π/2).
    pub fn to_euler(&self) -> Result<EulerZyx> {
        let r = self.rotation();
        let s = -r[(2, 0)]; // sin(theta)
        if s.abs() >= 1.0 - GIMBAL_GUARD {
            return Err(Error::GimbalLock(s.abs()));
        }
        let theta = s.asin();
        let phi = r[(2, 1)].atan2(r[(2, 2)]);
        let psi = r[(1, 0)].atan2(r[(0, 0)]);
        Ok(EulerZyx::new(wrap_angle(phi), theta, wrap_angle(psi)))
    }

    /// Quaternion kinematics under body angular velocity, `q̇ = ½ q ∘ (0, ω)`.
    ///
    /// Returns the scalar and vector parts of the (non-unit) derivative.
    pub fn kinematics(&self, omega: &Vector3<f64>) -> (f64, Vector3<f64>) {
        let eta_dot = -0.5 * self.eps.dot(omega);
        let eps_dot = 0.5 * (self.eta * omega + self.eps.cross(omega));
        (eta_dot, eps_dot)
    }

    /// Advances the quaternion by one exact exponential-map step of constant
    /// body rate `omega` over `dt`.
    pub fn integrate_body_rate(&self, omega: &Vector3<f64>, dt: f64) -> Self {
        self.compose(&Self::from_rotation_vector(&(omega * dt)))
    }

    /// Riemannian geodesic distance on the rotation group, in [0, π].
    ///
    /// Uses the absolute inner product so antipodal representatives of the
    /// same rotation are at distance zero.
    pub fn geodesic_distance(&self, other: &Self) -> f64 {
        let dot = (self.eta * other.eta + self.eps.dot(&other.eps)).abs();
        2.0 * dot.clamp(0.0, 1.0).acos()
    }

    pub fn is_finite(&self) -> bool {
        self.eta.is_finite() && self.eps.iter().all(|x| x.is_finite())
    }
}

/// Euler-rate map `W(δ)` with `ω = W(δ) δ̇`.
pub fn euler_rate_map(d: &EulerZyx) -> Matrix3<f64> {
    let (sp, cp) = d.phi.sin_cos();
    let (st, ct) = d.theta.sin_cos();
    Matrix3::new(1.0, 0.0, -st, 0.0, cp, ct * sp, 0.0, -sp, ct * cp)
}

/// Elementwise time derivative of `W(δ)` along `δ̇`.
pub fn euler_rate_map_dot(d: &EulerZyx, d_dot: &Vector3<f64>) -> Matrix3<f64> {
    let (sp, cp) = d.phi.sin_cos();
    let (st, ct) = d.theta.sin_cos();
    let (pd, td) = (d_dot.x, d_dot.y);
    Matrix3::new(
        0.0,
        0.0,
        -ct * td,
        0.0,
        -sp * pd,
        -st * td * sp + ct * cp * pd,
        0.0,
        -cp * pd,
        -st * td * cp - ct * sp * pd,
    )
}

/// Analytic inverse of `W(δ)`; fails near the pitch singularity.
pub fn euler_rate_map_inv(d: &EulerZyx) -> Result<Matrix3<f64>> {
    let (sp, cp) = d.phi.sin_cos();
    let ct = d.theta.cos();
    if ct.abs() < SINGULAR_MAP_GUARD {
        return Err(Error::SingularMap(ct.abs()));
    }
    let tt = d.theta.tan();
    Ok(Matrix3::new(
        1.0,
        sp * tt,
        cp * tt,
        0.0,
        cp,
        -sp,
        0.0,
        sp / ct,
        cp / ct,
    ))
}
