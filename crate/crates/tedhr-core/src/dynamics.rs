//! Rigid-body truth model with actuator saturation and external force
//! injection, integrated by a fixed-step classical Runge–Kutta scheme.

use nalgebra::{Vector3, Vector6};
use std::f64::consts::PI;

use crate::alloc::{AllocationMatrices, VehicleParams, GRAVITY};
use crate::attitude::Quat;
use crate::error::{Error, Result};

/// Simulation truth: world-frame position/velocity, attitude quaternion and
/// body-frame angular velocity.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct RigidBodyState {
    pub p: Vector3<f64>,
    pub v: Vector3<f64>,
    pub q: Quat,
    pub omega: Vector3<f64>,
}

impl RigidBodyState {
    /// At rest at a position, level attitude.
    pub fn at_rest(p: Vector3<f64>) -> Self {
        Self { p, v: Vector3::zeros(), q: Quat::identity(), omega: Vector3::zeros() }
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().all(|x| x.is_finite())
            && self.v.iter().all(|x| x.is_finite())
            && self.q.is_finite()
            && self.omega.iter().all(|x| x.is_finite())
    }
}

/// Saturated squared propeller rates, (rad/s)².
#[derive(Clone, Copy, Debug)]
pub struct ControlInput(pub Vector6<f64>);

impl ControlInput {
    pub fn zero() -> Self {
        Self(Vector6::zeros())
    }
}

/// What saturation removed: commanded (pre-clamp) rates in Hz.
#[derive(Clone, Copy, Debug, Default)]
pub struct SaturationReport {
    /// Largest commanded rate, Hz (negative squared commands count as 0).
    pub max_commanded_hz: f64,
    /// Commanded rates per rotor, Hz.
    pub commanded_hz: [f64; 6],
    /// Whether any entry was clamped.
    pub clamped: bool,
}

impl SaturationReport {
    /// Input excess over the rate bound, Hz.
    pub fn excess_hz(&self, rate_max_hz: f64) -> f64 {
        (self.max_commanded_hz - rate_max_hz).max(0.0)
    }
}

/// Clamps raw squared rates into `[0, (2π·rate_max)²]` and reports the
/// pre-clamp commanded rates.
pub fn saturate(u_raw: &Vector6<f64>, params: &VehicleParams) -> (ControlInput, SaturationReport) {
    let u_max = params.u_max();
    let mut u = Vector6::zeros();
    let mut report = SaturationReport::default();
    for i in 0..6 {
        let cmd_hz = u_raw[i].max(0.0).sqrt() / (2.0 * PI);
        report.commanded_hz[i] = cmd_hz;
        report.max_commanded_hz = report.max_commanded_hz.max(cmd_hz);
        let clamped = u_raw[i].clamp(0.0, u_max);
        report.clamped |= clamped != u_raw[i];
        u[i] = clamped;
    }
    (ControlInput(u), report)
}

/// External force (world frame) and moment (body frame) acting on the body.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExternalWrench {
    pub f_ext: Vector3<f64>,
    pub tau_ext: Vector3<f64>,
}

/// Time derivative of a rigid-body state.
#[derive(Clone, Copy, Debug)]
pub struct StateDerivative {
    pub p_dot: Vector3<f64>,
    pub v_dot: Vector3<f64>,
    pub eta_dot: f64,
    pub eps_dot: Vector3<f64>,
    pub omega_dot: Vector3<f64>,
}

/// Rigid-body equations of motion:
/// `ṗ = v`, `q̇ = ½ q∘(0, ω)`, `m v̇ = -m g e3 + R(q) F u + f_ext`,
/// `J ω̇ = -ω × J ω + M u + τ_ext`.
pub fn derivative(
    state: &RigidBodyState,
    u: &ControlInput,
    ext: &ExternalWrench,
    alloc: &AllocationMatrices,
    params: &VehicleParams,
) -> StateDerivative {
    let (eta_dot, eps_dot) = state.q.kinematics(&state.omega);
    let thrust_world = state.q.rotate(&(alloc.f * u.0));
    let v_dot = Vector3::new(0.0, 0.0, -GRAVITY) + (thrust_world + ext.f_ext) / params.mass;
    let j = params.inertia();
    let torque = -state.omega.cross(&(j * state.omega)) + alloc.m * u.0 + ext.tau_ext;
    let omega_dot = params.inertia_inv() * torque;
    StateDerivative { p_dot: state.v, v_dot, eta_dot, eps_dot, omega_dot }
}

/// Stage state for RK4 with the quaternion kept as raw (possibly non-unit)
/// components. The kinematics are linear in (η, ε) and the rotation formula
/// is degree-2 homogeneous, so stages need no normalization; normalizing
/// mid-step would break the integration order and can flip the sign near
/// η = 0.
#[derive(Clone, Copy)]
struct RawState {
    p: Vector3<f64>,
    v: Vector3<f64>,
    eta: f64,
    eps: Vector3<f64>,
    omega: Vector3<f64>,
}

impl RawState {
    fn from_state(s: &RigidBodyState) -> Self {
        Self { p: s.p, v: s.v, eta: s.q.eta(), eps: s.q.eps(), omega: s.omega }
    }

    fn advanced(&self, d: &StateDerivative, dt: f64) -> Self {
        Self {
            p: self.p + d.p_dot * dt,
            v: self.v + d.v_dot * dt,
            eta: self.eta + d.eta_dot * dt,
            eps: self.eps + d.eps_dot * dt,
            omega: self.omega + d.omega_dot * dt,
        }
    }

    fn derivative(
        &self,
        u: &ControlInput,
        ext: &ExternalWrench,
        alloc: &AllocationMatrices,
        params: &VehicleParams,
    ) -> StateDerivative {
        let eta_dot = -0.5 * self.eps.dot(&self.omega);
        let eps_dot = 0.5 * (self.eta * self.omega + self.eps.cross(&self.omega));
        // R(q) scaled by ||q||², exact for unit q and smooth for stage states
        let n2 = self.eta * self.eta + self.eps.norm_squared();
        let f_body = alloc.f * u.0;
        let t = 2.0 * self.eps.cross(&f_body);
        let thrust_world = (f_body * n2 + self.eta * t + self.eps.cross(&t)) / n2;
        let v_dot = Vector3::new(0.0, 0.0, -GRAVITY) + (thrust_world + ext.f_ext) / params.mass;
        let j = params.inertia();
        let torque = -self.omega.cross(&(j * self.omega)) + alloc.m * u.0 + ext.tau_ext;
        StateDerivative {
            p_dot: self.v,
            v_dot,
            eta_dot,
            eps_dot,
            omega_dot: params.inertia_inv() * torque,
        }
    }
}

/// One classical RK4 step; the quaternion is renormalized afterwards.
pub fn rk4_step(
    state: &RigidBodyState,
    u: &ControlInput,
    ext: &ExternalWrench,
    alloc: &AllocationMatrices,
    params: &VehicleParams,
    dt: f64,
) -> Result<RigidBodyState> {
    debug_assert!(dt > 0.0 && dt <= 0.01);
    let raw = RawState::from_state(state);
    let k1 = raw.derivative(u, ext, alloc, params);
    let k2 = raw.advanced(&k1, 0.5 * dt).derivative(u, ext, alloc, params);
    let k3 = raw.advanced(&k2, 0.5 * dt).derivative(u, ext, alloc, params);
    let k4 = raw.advanced(&k3, dt).derivative(u, ext, alloc, params);

    let combined = StateDerivative {
        p_dot: (k1.p_dot + 2.0 * k2.p_dot + 2.0 * k3.p_dot + k4.p_dot) / 6.0,
        v_dot: (k1.v_dot + 2.0 * k2.v_dot + 2.0 * k3.v_dot + k4.v_dot) / 6.0,
        eta_dot: (k1.eta_dot + 2.0 * k2.eta_dot + 2.0 * k3.eta_dot + k4.eta_dot) / 6.0,
        eps_dot: (k1.eps_dot + 2.0 * k2.eps_dot + 2.0 * k3.eps_dot + k4.eps_dot) / 6.0,
        omega_dot: (k1.omega_dot + 2.0 * k2.omega_dot + 2.0 * k3.omega_dot + k4.omega_dot) / 6.0,
    };
    let end = raw.advanced(&combined, dt);
    if !(end.eta.is_finite()
        && end.p.iter().all(|x| x.is_finite())
        && end.v.iter().all(|x| x.is_finite())
        && end.eps.iter().all(|x| x.is_finite())
        && end.omega.iter().all(|x| x.is_finite()))
    {
        return Err(Error::NonFinite);
    }
    Ok(RigidBodyState {
        p: end.p,
        v: end.v,
        q: Quat::from_parts(end.eta, end.eps),
        omega: end.omega,
    })
}

/// Hover input: uniform-thrust solution of `[F; M] u = (m g R(q)ᵀe3, 0)` at
/// level attitude.
pub fn hover_input(alloc: &AllocationMatrices, params: &VehicleParams) -> Vector6<f64> {
    alloc.input_for_wrench(&Vector3::new(0.0, 0.0, params.mass * GRAVITY), &Vector3::zeros())
}
