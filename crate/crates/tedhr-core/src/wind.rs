//! Wind velocity field and the resulting disturbance force.
//!
//! The total wind velocity is the componentwise sum of a logarithmic shear
//! profile along `x_W`, low-altitude Dryden turbulence (MIL-F-8785C forms,
//! discretized exactly so the stationary output variance matches the model
//! intensities at any step size) and a discrete gust with a half-cosine rise.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dynamics::RigidBodyState;
use crate::error::{Error, Result};

const FT_PER_M: f64 = 1.0 / 0.3048;
/// The low-altitude turbulence model is evaluated no lower than 10 ft.
const MIN_ALT_M: f64 = 10.0 * 0.3048;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DragLaw {
    /// `f_w = ρ A d_w` — the model used throughout the study.
    Linear,
    /// `f_w = ½ ρ A ||d_w|| d_w` — physical alternative, selectable in config.
    Quadratic,
}

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct WindConfig {
    /// Mean wind speed at the reference altitude, m/s.
    pub reference_speed: f64,
    /// Altitude at which `reference_speed` holds, m.
    pub reference_altitude: f64,
    /// Surface roughness length of the shear profile, m.
    pub roughness_length: f64,
    /// Airspeed used by the Dryden shaping filters, m/s.
    pub filter_airspeed: f64,
    /// Gust onset time, s.
    pub gust_start: f64,
    /// Gust rise duration, s.
    pub gust_rise: f64,
    /// Gust velocity reached after the rise, world frame, m/s.
    pub gust_target: [f64; 3],
    /// Lateral invested area, m².
    pub area_lateral: f64,
    /// Upper invested area, m².
    pub area_upper: f64,
    pub drag_law: DragLaw,
    pub shear_enabled: bool,
    pub dryden_enabled: bool,
    pub gust_enabled: bool,
}

impl Default for WindConfig {
    fn default() -> Self {
        Self {
            reference_speed: 10.0,
            reference_altitude: 6.0,
            roughness_length: 0.15,
            filter_airspeed: 10.0,
            gust_start: 25.0,
            gust_rise: 2.0,
            gust_target: [2.0, 2.0, 1.0],
            area_lateral: 0.111,
            area_upper: 0.885,
            drag_law: DragLaw::Linear,
            shear_enabled: true,
            dryden_enabled: true,
            gust_enabled: true,
        }
    }
}

impl WindConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.reference_altitude > 0.0) || !(self.gust_rise > 0.0) {
            return Err(Error::InvalidParams("wind reference altitude and gust rise must be positive".into()));
        }
        if !(self.area_lateral > 0.0) || !(self.area_upper > 0.0) {
            return Err(Error::InvalidParams("invested areas must be positive".into()));
        }
        Ok(())
    }

    /// All disturbance sources off (the FC-ideal configuration).
    pub fn disabled() -> Self {
        Self {
            shear_enabled: false,
            dryden_enabled: false,
            gust_enabled: false,
            ..Self::default()
        }
    }
}

/// Logarithmic shear profile along `x_W`; equals the reference speed at the
/// reference altitude and zero at or below the roughness length.
pub fn shear_velocity(h: f64, cfg: &WindConfig) -> Vector3<f64> {
    let z0 = cfg.roughness_length;
    let mag = cfg.reference_speed * (h.max(z0) / z0).ln() / (cfg.reference_altitude / z0).ln();
    Vector3::new(mag, 0.0, 0.0)
}

/// Discrete gust: zero before onset, half-cosine rise, constant afterwards.
pub fn gust_velocity(t: f64, cfg: &WindConfig) -> Vector3<f64> {
    let target = Vector3::from(cfg.gust_target);
    if t < cfg.gust_start {
        Vector3::zeros()
    } else if t < cfg.gust_start + cfg.gust_rise {
        let ramp = 0.5 * (1.0 - (std::f64::consts::PI * (t - cfg.gust_start) / cfg.gust_rise).cos());
        target * ramp
    } else {
        target
    }
}

/// Tropospheric layer of the standard atmosphere.
pub fn air_density(h: f64) -> Result<f64> {
    const RHO0: f64 = 1.225; // kg/m³
    const T0: f64 = 288.15; // K
    const LAPSE: f64 = 0.0065; // K/m
    const R_S: f64 = 287.053; // J/(kg·K)
    const G0: f64 = 9.80665; // m/s², standard-atmosphere constant
    if h >= 11_000.0 {
        return Err(Error::OutOfLayer(h));
    }
    let h = h.max(0.0);
    Ok(RHO0 * (1.0 - LAPSE * h / T0).powf(G0 / (R_S * LAPSE) - 1.0))
}

/// Altitude-dependent Dryden parameters: per-axis intensity and pole `b = V/L`.
#[derive(Clone, Copy, Debug)]
struct DrydenParams {
    sigma_u: f64,
    sigma_vw: f64, // σ_v = σ_u by the low-altitude model; σ_w separate
    sigma_w: f64,
    b_u: f64,
    b_v: f64,
    b_w: f64,
}

fn dryden_params(h: f64, cfg: &WindConfig) -> DrydenParams {
    let h_eff = h.max(MIN_ALT_M);
    let h_ft = h_eff * FT_PER_M;
    let denom = 0.177 + 0.000823 * h_ft;
    let sigma_w = 0.1 * cfg.reference_speed;
    let sigma_uv = sigma_w / denom.powf(0.4);
    let l_w = h_eff;
    let l_uv = h_eff / denom.powf(1.2);
    let v = cfg.filter_airspeed.max(0.1);
    DrydenParams {
        sigma_u: sigma_uv,
        sigma_vw: sigma_uv,
        sigma_w,
        b_u: v / l_uv,
        b_v: v / l_uv,
        b_w: v / l_w,
    }
}

/// Second-order shaping-filter state (the v and w channels).
#[derive(Clone, Copy, Debug, Default)]
struct SecondOrderState {
    x1: f64,
    x2: f64,
}

impl SecondOrderState {
    /// Exact sampling of `ẋ = A x + G w`, `A = [[0,1],[-b²,-2b]]`, `G=(0,1)ᵀ`,
    /// unit-intensity white noise. The output `y = σ(b^{3/2} x1 + √(3b) x2)`
    /// then has stationary variance σ².
    fn step<R: Rng>(&mut self, b: f64, dt: f64, rng: &mut R) {
        let e = (-b * dt).exp();
        let a11 = e * (1.0 + b * dt);
        let a12 = e * dt;
        let a21 = -e * b * b * dt;
        let a22 = e * (1.0 - b * dt);

        // Qd = ∫ e^{Aτ} G Gᵀ e^{Aᵀτ} dτ over one step, in closed form
        let c = 2.0 * b;
        let ect = (-c * dt).exp();
        let i0 = (1.0 - ect) / c;
        let i1 = (1.0 - ect * (1.0 + c * dt)) / (c * c);
        let i2 = (2.0 - ect * (2.0 + 2.0 * c * dt + c * c * dt * dt)) / (c * c * c);
        let q11 = i2;
        let q12 = i1 - b * i2;
        let q22 = i0 - 2.0 * b * i1 + b * b * i2;

        let l11 = q11.max(0.0).sqrt();
        let (l21, l22) = if l11 > 0.0 {
            let l21 = q12 / l11;
            (l21, (q22 - l21 * l21).max(0.0).sqrt())
        } else {
            (0.0, q22.max(0.0).sqrt())
        };
        let n1: f64 = StandardNormal.sample(rng);
        let n2: f64 = StandardNormal.sample(rng);
        let (x1, x2) = (self.x1, self.x2);
        self.x1 = a11 * x1 + a12 * x2 + l11 * n1;
        self.x2 = a21 * x1 + a22 * x2 + l21 * n1 + l22 * n2;
    }

    fn output(&self, sigma: f64, b: f64) -> f64 {
        sigma * (b.powf(1.5) * self.x1 + (3.0 * b).sqrt() * self.x2)
    }
}

/// Turbulence filter states plus the last total wind velocity.
#[derive(Clone, Debug, Default)]
pub struct WindState {
    u: f64, // longitudinal first-order state
    v: SecondOrderState,
    w: SecondOrderState,
    pub velocity: Vector3<f64>,
}

impl WindState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Advances the turbulence filters one step and returns the turbulence
    /// velocity in the wind frame (aligned with the world frame here).
    pub fn dryden_update<R: Rng>(&mut self, h: f64, dt: f64, cfg: &WindConfig, rng: &mut R) -> Vector3<f64> {
        let p = dryden_params(h, cfg);
        // longitudinal channel: Ornstein-Uhlenbeck, exact discretization
        let a = (-p.b_u * dt).exp();
        let n: f64 = StandardNormal.sample(rng);
        self.u = a * self.u + p.sigma_u * (1.0 - a * a).max(0.0).sqrt() * n;
        self.v.step(p.b_v, dt, rng);
        self.w.step(p.b_w, dt, rng);
        Vector3::new(
            self.u,
            self.v.output(p.sigma_vw, p.b_v),
            self.w.output(p.sigma_w, p.b_w),
        )
    }

    /// Total wind velocity at time `t` and altitude `h`; updates `velocity`.
    pub fn update<R: Rng>(&mut self, t: f64, h: f64, dt: f64, cfg: &WindConfig, rng: &mut R) -> Vector3<f64> {
        let mut vel = Vector3::zeros();
        if cfg.shear_enabled {
            vel += shear_velocity(h, cfg);
        }
        if cfg.dryden_enabled {
            vel += self.dryden_update(h, dt, cfg, rng);
        }
        if cfg.gust_enabled {
            vel += gust_velocity(t, cfg);
        }
        self.velocity = vel;
        vel
    }
}

/// Disturbance force from the relative wind, world frame.
///
/// The invested area interpolates between the lateral and upper areas with
/// the relative-wind alignment `d_v = |d̂_w · z_B|`.
pub fn wind_force(wind_vel: &Vector3<f64>, state: &RigidBodyState, cfg: &WindConfig) -> Result<Vector3<f64>> {
    let d_w = wind_vel - state.v;
    let norm = d_w.norm();
    if norm < 1e-9 {
        return Ok(Vector3::zeros());
    }
    let z_b = state.q.rotate(&Vector3::z());
    let d_v = (d_w / norm).dot(&z_b).abs();
    let area = (1.0 - d_v) * cfg.area_lateral + d_v * cfg.area_upper;
    let rho = air_density(state.p.z)?;
    Ok(match cfg.drag_law {
        DragLaw::Linear => rho * area * d_w,
        DragLaw::Quadratic => 0.5 * rho * area * norm * d_w,
    })
}
