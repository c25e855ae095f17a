//! Hierarchical nonlinear controller.
//!
//! The rotor input is split as `u = M†_H τ_r + ū f_c`: the zero-moment input
//! `ū` delivers the control force along the preferential direction `d*`
//! while `M†_H` realizes the reference moment without disturbing the force.
//! The controller carries two internal states, the control-force intensity
//! `f_c` and the desired orientation `q_d`; the force-mismatch loop steers
//! `R(q_d) d* f_c` onto the reference force, and the attitude loop tracks
//! `q_d` (not `q_r` directly — attitude regulation has the lower priority).

use nalgebra::{Vector3, Vector6};

use crate::alloc::{AllocationMatrices, VehicleParams, GRAVITY};
use crate::attitude::{skew, Quat};
use crate::error::{Error, Result};

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct HcGains {
    /// Position gain of the reference force.
    pub k_pp: f64,
    /// Velocity gain of the reference force.
    pub k_pd: f64,
    /// Orientation-mismatch gain steering `q_d` toward `q_r`.
    pub k_q: f64,
    /// Force-mismatch contraction rate.
    pub k_delta: f64,
    /// Attitude proportional gain of the inner loop.
    pub k_r: f64,
    /// Rate gain of the inner loop.
    pub k_omega: f64,
    /// Lower guard on the control-force intensity, N.
    pub f_min: f64,
}

impl Default for HcGains {
    fn default() -> Self {
        Self {
            k_pp: 25.0,
            k_pd: 14.0,
            k_q: 8.0,
            k_delta: 12.0,
            k_r: 120.0,
            k_omega: 25.0,
            f_min: 0.5,
        }
    }
}

impl HcGains {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k_pp", self.k_pp),
            ("k_pd", self.k_pd),
            ("k_q", self.k_q),
            ("k_delta", self.k_delta),
            ("k_r", self.k_r),
            ("k_omega", self.k_omega),
            ("f_min", self.f_min),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParams(format!("HC gain {name} = {v}")));
            }
        }
        Ok(())
    }
}

/// Dynamic controller states.
#[derive(Clone, Copy, Debug)]
pub struct HcState {
    /// Control-force intensity, N.
    pub f_c: f64,
    /// Desired orientation.
    pub q_d: Quat,
}

impl HcState {
    /// Initialization at hover thrust with the measured initial attitude.
    pub fn init(params: &VehicleParams, q0: Quat) -> Self {
        Self { f_c: params.mass * GRAVITY, q_d: q0 }
    }
}

/// References consumed by one controller tick.
#[derive(Clone, Copy, Debug)]
pub struct HcReferences {
    pub p_r: Vector3<f64>,
    pub v_r: Vector3<f64>,
    pub a_r: Vector3<f64>,
    /// Reference jerk, m/s³.
    pub j_r: Vector3<f64>,
    pub q_r: Quat,
}

/// Zero-moment preferential direction:
/// `d* = R(q_r)ᵀ(m g e3 + m p̈_r) / ‖·‖`.
pub fn preferential_direction(q_r: &Quat, p_ddot_r: &Vector3<f64>, mass: f64) -> Result<Vector3<f64>> {
    let d = q_r.rotation().transpose() * (mass * (Vector3::new(0.0, 0.0, GRAVITY) + p_ddot_r));
    let n = d.norm();
    if n <= 1e-6 {
        return Err(Error::DegenerateDirection(n));
    }
    Ok(d / n)
}

/// Reference force `f_r = m g e3 + m p̈_r - k_pp e_p - k_pd e_v` (world).
pub fn reference_force(
    e_p: &Vector3<f64>,
    e_v: &Vector3<f64>,
    p_ddot_r: &Vector3<f64>,
    mass: f64,
    gains: &HcGains,
) -> Vector3<f64> {
    mass * (Vector3::new(0.0, 0.0, GRAVITY) + p_ddot_r) - gains.k_pp * e_p - gains.k_pd * e_v
}

/// Force mismatch `f_Δ = R(q_d) d* f_c - f_r`.
pub fn force_mismatch(hc: &HcState, d_star: &Vector3<f64>, f_r: &Vector3<f64>) -> Vector3<f64> {
    hc.q_d.rotation() * d_star * hc.f_c - f_r
}

/// Virtual input of the force-mismatch loop:
/// `ν = (k_pd k_pp/m) e_p + (k_pd²/m - k_pp) e_v - (k_pd/m + k_Δ) f_Δ - m p⃛_r`.
pub fn virtual_input(
    e_p: &Vector3<f64>,
    e_v: &Vector3<f64>,
    f_delta: &Vector3<f64>,
    p_dddot_r: &Vector3<f64>,
    mass: f64,
    gains: &HcGains,
) -> Vector3<f64> {
    (gains.k_pd * gains.k_pp / mass) * e_p + (gains.k_pd * gains.k_pd / mass - gains.k_pp) * e_v
        - (gains.k_pd / mass + gains.k_delta) * f_delta
        - mass * p_dddot_r
}

/// Desired-orientation rate and thrust-intensity rate:
/// `ω_d = (1/f_c)[d*]× R(q_d)ᵀ ν - k_q d* d*ᵀ ε'_Δ`, `ḟ_c = (R(q_d) d*)ᵀ ν`,
/// with `q'_Δ = q_r⁻¹ ∘ q_d`.
pub fn desired_dynamics(
    hc: &HcState,
    nu: &Vector3<f64>,
    d_star: &Vector3<f64>,
    q_r: &Quat,
    gains: &HcGains,
) -> Result<(Vector3<f64>, f64)> {
    if hc.f_c < gains.f_min {
        return Err(Error::ThrustUnderflow { f_c: hc.f_c, f_min: gains.f_min });
    }
    let r_d = hc.q_d.rotation();
    let eps_mismatch = q_r.inverse().compose(&hc.q_d).eps();
    let omega_d = skew(d_star) * (r_d.transpose() * nu) / hc.f_c
        - gains.k_q * d_star * (d_star.dot(&eps_mismatch));
    let f_c_dot = (r_d * d_star).dot(nu);
    Ok((omega_d, f_c_dot))
}

/// Reference moment: quaternion proportional-rate feedback with gyroscopic
/// feedforward, zeroing `q_Δ = q_d⁻¹ ∘ q`. The double-cover sign is fixed by
/// the non-negative scalar-part convention of [`Quat`].
pub fn reference_moment(
    q: &Quat,
    omega: &Vector3<f64>,
    hc: &HcState,
    omega_d: &Vector3<f64>,
    params: &VehicleParams,
    gains: &HcGains,
) -> Vector3<f64> {
    let q_mismatch = hc.q_d.inverse().compose(q);
    let j = params.inertia();
    let rate_err = omega - q_mismatch.rotation().transpose() * omega_d;
    omega.cross(&(j * omega)) - j * (gains.k_r * q_mismatch.eps() + gains.k_omega * rate_err)
}

/// Diagnostics and rotor command of one tick.
#[derive(Clone, Copy, Debug)]
pub struct HcOutput {
    /// Unsaturated squared rotor rates.
    pub u_raw: Vector6<f64>,
    pub d_star: Vector3<f64>,
    pub tau_r: Vector3<f64>,
    pub omega_d: Vector3<f64>,
    pub f_delta: Vector3<f64>,
    /// Thrust intensity used for this tick (before the state update).
    pub f_c: f64,
}

/// One 100 Hz controller tick: computes the rotor command from the current
/// controller state and the measured vehicle state, then advances `f_c`
/// (explicit Euler) and `q_d` (exponential-map step at the desired rate).
pub fn hc_step(
    refs: &HcReferences,
    meas_p: &Vector3<f64>,
    meas_v: &Vector3<f64>,
    meas_q: &Quat,
    meas_omega: &Vector3<f64>,
    state: &mut HcState,
    dt_ctrl: f64,
    alloc: &AllocationMatrices,
    params: &VehicleParams,
    gains: &HcGains,
) -> Result<HcOutput> {
    let d_star = preferential_direction(&refs.q_r, &refs.a_r, params.mass)?;
    let u_bar = alloc.zero_moment_input(&d_star)?;
    let e_p = meas_p - refs.p_r;
    let e_v = meas_v - refs.v_r;
    let f_r = reference_force(&e_p, &e_v, &refs.a_r, params.mass, gains);
    let f_delta = force_mismatch(state, &d_star, &f_r);
    let nu = virtual_input(&e_p, &e_v, &f_delta, &refs.j_r, params.mass, gains);
    let (omega_d, f_c_dot) = desired_dynamics(state, &nu, &d_star, &refs.q_r, gains)?;
    let tau_r = reference_moment(meas_q, meas_omega, state, &omega_d, params, gains);
    let u_raw = alloc.m_pinv_h * tau_r + u_bar * state.f_c;
    let f_c = state.f_c;

    state.f_c += f_c_dot * dt_ctrl;
    state.q_d = state.q_d.integrate_body_rate(&omega_d, dt_ctrl);

    Ok(HcOutput { u_raw, d_star, tau_r, omega_d, f_delta, f_c })
}
