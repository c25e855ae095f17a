//! Reference trajectory generation.
//!
//! Every run starts from ground parking at the circle-entry azimuth: a
//! quintic vertical takeoff lifts the vehicle to the flight altitude, then
//! the position reference follows a circle with analytic derivatives through
//! jerk. Attitude references are step schedules (scenarios A and B) or
//! piecewise-linear yaw ramps over constant roll/pitch (scenario C); the
//! attitude-rate references are zero throughout — the controllers receive
//! the attitude reference as a piecewise-constant sample train.

use nalgebra::Vector3;
use std::f64::consts::PI;

use crate::attitude::{EulerZyx, Quat};
use crate::error::{Error, Result};
use crate::flatness::FlatPoint;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioId {
    /// Unwindy flight, attitude step schedule.
    A,
    /// Windy flight, attitude step schedule.
    B,
    /// Unwindy flight, yaw ramp references.
    C,
}

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub scenario: ScenarioId,
    /// Circle radius, m.
    pub radius: f64,
    /// Flight altitude, m.
    pub altitude: f64,
    /// Circle revolution period, s.
    pub circle_period: f64,
    /// Takeoff duration, s.
    pub takeoff_duration: f64,
    /// Total run duration, s.
    pub duration: f64,
    /// Roll step schedule, (time s, value deg), times increasing; the
    /// reference is 0° (ground attitude) before the first step time.
    pub roll_schedule: Vec<(f64, f64)>,
    /// Pitch step schedule, (time s, value deg).
    pub pitch_schedule: Vec<(f64, f64)>,
    /// Yaw step schedule, (time s, value deg).
    pub yaw_schedule: Vec<(f64, f64)>,
    /// Scenario C: constant roll reference, deg.
    pub roll_const_deg: f64,
    /// Scenario C: constant pitch reference, deg.
    pub pitch_const_deg: f64,
    /// Scenario C: yaw starting value, deg.
    pub yaw_ramp_start_deg: f64,
    /// Scenario C: ramp slopes applied in consecutive equal windows, deg/s.
    pub yaw_ramp_slopes_deg_s: Vec<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let takeoff = 5.0;
        let duration = 60.0;
        // first value applies early in the takeoff so its (large) transient
        // settles before the circle phase; later steps spread over it
        let window = duration - takeoff;
        let step3 = |values: [f64; 3]| {
            vec![
                (1.0, values[0]),
                (takeoff + window / 3.0, values[1]),
                (takeoff + 2.0 * window / 3.0, values[2]),
            ]
        };
        let yaw: Vec<(f64, f64)> = (0..5)
            .map(|k| {
                let t = if k == 0 { 1.0 } else { takeoff + k as f64 * window / 5.0 };
                (t, 90.0 + 45.0 * k as f64)
            })
            .collect();
        Self {
            scenario: ScenarioId::A,
            radius: 2.0,
            altitude: 1.0,
            circle_period: 30.0,
            takeoff_duration: takeoff,
            duration,
            roll_schedule: step3([-7.0, 0.0, 7.0]),
            pitch_schedule: step3([0.0, 3.5, 7.0]),
            yaw_schedule: yaw,
            roll_const_deg: 0.0,
            pitch_const_deg: 0.0,
            yaw_ramp_start_deg: 90.0,
            yaw_ramp_slopes_deg_s: vec![3.0, 6.0, 12.0],
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !(self.circle_period > 0.0) {
            return Err(Error::InvalidParams("radius and circle period must be positive".into()));
        }
        if !(self.takeoff_duration > 0.0) || self.duration <= self.takeoff_duration {
            return Err(Error::InvalidParams("duration must exceed the takeoff".into()));
        }
        for sched in [&self.roll_schedule, &self.pitch_schedule, &self.yaw_schedule] {
            if sched.is_empty() {
                return Err(Error::InvalidParams("empty step schedule".into()));
            }
            if sched.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::InvalidParams("step times must be increasing".into()));
            }
        }
        if self.scenario == ScenarioId::C && self.yaw_ramp_slopes_deg_s.is_empty() {
            return Err(Error::InvalidParams("scenario C needs ramp slopes".into()));
        }
        Ok(())
    }

    fn schedule_value(schedule: &[(f64, f64)], t: f64) -> f64 {
        let mut value = 0.0;
        for &(ts, v) in schedule {
            if t >= ts {
                value = v;
            } else {
                break;
            }
        }
        value
    }

    /// Yaw ramp of scenario C: continuous, slope changing per window.
    fn ramp_yaw_deg(&self, t: f64) -> f64 {
        let mut yaw = self.yaw_ramp_start_deg;
        if t <= self.takeoff_duration {
            return yaw;
        }
        let window = (self.duration - self.takeoff_duration) / self.yaw_ramp_slopes_deg_s.len() as f64;
        let mut t_left = t - self.takeoff_duration;
        for &slope in &self.yaw_ramp_slopes_deg_s {
            let span = t_left.min(window);
            yaw += slope * span;
            t_left -= span;
            if t_left <= 0.0 {
                break;
            }
        }
        yaw
    }
}

/// Full reference sample: position derivatives through jerk, attitude and
/// its (zero) rates, and the reference quaternion.
#[derive(Clone, Copy, Debug)]
pub struct ReferencePoint {
    pub p_r: Vector3<f64>,
    pub v_r: Vector3<f64>,
    pub a_r: Vector3<f64>,
    pub j_r: Vector3<f64>,
    pub delta_r: EulerZyx,
    pub delta_dot_r: Vector3<f64>,
    pub delta_ddot_r: Vector3<f64>,
    pub q_r: Quat,
}

impl ReferencePoint {
    pub fn flat_point(&self) -> FlatPoint {
        FlatPoint::new(
            &self.p_r,
            &self.delta_r,
            &self.v_r,
            &self.delta_dot_r,
            &self.a_r,
            &self.delta_ddot_r,
        )
    }
}

/// Samples the reference trajectory at time `t`.
pub fn reference_at(t: f64, cfg: &ScenarioConfig) -> Result<ReferencePoint> {
    if !(0.0..=cfg.duration).contains(&t) {
        return Err(Error::OutOfRange { t, duration: cfg.duration });
    }

    let (p_r, v_r, a_r, j_r) = if t < cfg.takeoff_duration {
        // quintic climb from ground to the circle entry point
        let s = t / cfg.takeoff_duration;
        let h = cfg.altitude;
        let tt = cfg.takeoff_duration;
        let z = h * (10.0 * s.powi(3) - 15.0 * s.powi(4) + 6.0 * s.powi(5));
        let zd = h * (30.0 * s.powi(2) - 60.0 * s.powi(3) + 30.0 * s.powi(4)) / tt;
        let zdd = h * (60.0 * s - 180.0 * s.powi(2) + 120.0 * s.powi(3)) / (tt * tt);
        let zddd = h * (60.0 - 360.0 * s + 360.0 * s * s) / (tt * tt * tt);
        (
            Vector3::new(cfg.radius, 0.0, z),
            Vector3::new(0.0, 0.0, zd),
            Vector3::new(0.0, 0.0, zdd),
            Vector3::new(0.0, 0.0, zddd),
        )
    } else {
        let omega = 2.0 * PI / cfg.circle_period;
        let a = omega * (t - cfg.takeoff_duration);
        let (sin, cos) = a.sin_cos();
        let r = cfg.radius;
        (
            Vector3::new(r * cos, r * sin, cfg.altitude),
            Vector3::new(-r * omega * sin, r * omega * cos, 0.0),
            Vector3::new(-r * omega * omega * cos, -r * omega * omega * sin, 0.0),
            Vector3::new(r * omega.powi(3) * sin, -r * omega.powi(3) * cos, 0.0),
        )
    };

    let delta_r = match cfg.scenario {
        ScenarioId::A | ScenarioId::B => EulerZyx::new(
            ScenarioConfig::schedule_value(&cfg.roll_schedule, t).to_radians(),
            ScenarioConfig::schedule_value(&cfg.pitch_schedule, t).to_radians(),
            ScenarioConfig::schedule_value(&cfg.yaw_schedule, t).to_radians(),
        ),
        ScenarioId::C => EulerZyx::new(
            cfg.roll_const_deg.to_radians(),
            cfg.pitch_const_deg.to_radians(),
            cfg.ramp_yaw_deg(t).to_radians(),
        ),
    };

    Ok(ReferencePoint {
        p_r,
        v_r,
        a_r,
        j_r,
        delta_r,
        delta_dot_r: Vector3::zeros(),
        delta_ddot_r: Vector3::zeros(),
        q_r: Quat::from_euler(&delta_r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn ground_parking_start() {
        let cfg = ScenarioConfig::default();
        let r = reference_at(0.0, &cfg).unwrap();
        assert_abs_diff_eq!(r.p_r, Vector3::new(2.0, 0.0, 0.0), epsilon = 1e-12);
        assert_abs_diff_eq!(r.v_r, Vector3::zeros(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.a_r, Vector3::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn takeoff_reaches_circle_entry() {
        let cfg = ScenarioConfig::default();
        let r = reference_at(cfg.takeoff_duration - 1e-9, &cfg).unwrap();
        assert_abs_diff_eq!(r.p_r.z, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.v_r.z, 0.0, epsilon = 1e-6);
        let r = reference_at(cfg.takeoff_duration, &cfg).unwrap();
        assert_abs_diff_eq!(r.p_r, Vector3::new(2.0, 0.0, 1.0), epsilon = 1e-12);
    }

    #[test]
    fn circle_radius_altitude_and_acceleration() {
        let cfg = ScenarioConfig::default();
        let omega = 2.0 * PI / cfg.circle_period;
        for k in 0..200 {
            let t = cfg.takeoff_duration + 0.25 * k as f64;
            if t > cfg.duration {
                break;
            }
            let r = reference_at(t, &cfg).unwrap();
            assert_relative_eq!(r.p_r.xy().norm(), 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(r.p_r.z, 1.0, epsilon = 1e-12);
            assert_relative_eq!(r.a_r.norm(), cfg.radius * omega * omega, epsilon = 1e-12);
        }
    }

    #[test]
    fn yaw_schedule_visits_paper_steps() {
        let cfg = ScenarioConfig::default();
        let mut seen = Vec::new();
        let mut t = 0.0;
        while t <= cfg.duration {
            let r = reference_at(t, &cfg).unwrap();
            let yaw = crate::attitude::wrap_angle(r.delta_r.psi).to_degrees();
            // compare against the wrapped schedule targets
            let expected = [90.0, 135.0, -180.0, -135.0, -90.0];
            for e in expected {
                if (yaw - e).abs() < 1e-9 && !seen.contains(&e) {
                    seen.push(e);
                }
            }
            t += 0.5;
        }
        assert_eq!(seen.len(), 5, "visited {seen:?}");
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let cfg = ScenarioConfig::default();
        let h = 1e-4;
        // probe away from phase boundaries and step instants
        for &t in &[1.3, 2.7, 4.2, 7.9, 13.4, 22.2, 30.1, 44.4, 55.5] {
            let fm = reference_at(t - h, &cfg).unwrap();
            let f0 = reference_at(t, &cfg).unwrap();
            let fp = reference_at(t + h, &cfg).unwrap();
            let v_fd = (fp.p_r - fm.p_r) / (2.0 * h);
            let a_fd = (fp.p_r - 2.0 * f0.p_r + fm.p_r) / (h * h);
            let j_fd = (fp.a_r - fm.a_r) / (2.0 * h);
            assert_abs_diff_eq!(v_fd, f0.v_r, epsilon = 1e-6);
            assert_abs_diff_eq!(a_fd, f0.a_r, epsilon = 1e-4);
            assert_abs_diff_eq!(j_fd, f0.j_r, epsilon = 1e-6);
        }
    }

    #[test]
    fn scenario_c_ramp_profile() {
        let cfg = ScenarioConfig { scenario: ScenarioId::C, ..ScenarioConfig::default() };
        // constant during takeoff
        let r = reference_at(2.0, &cfg).unwrap();
        assert_abs_diff_eq!(r.delta_r.psi.to_degrees(), 90.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.delta_r.phi, 0.0, epsilon = 1e-15);

        // slope 3°/s in the first window
        let t0 = cfg.takeoff_duration;
        let y1 = reference_at(t0 + 2.0, &cfg).unwrap().delta_r.psi.to_degrees();
        let y2 = reference_at(t0 + 4.0, &cfg).unwrap().delta_r.psi.to_degrees();
        assert_relative_eq!((y2 - y1) / 2.0, 3.0, epsilon = 1e-9);

        // slope 6°/s in the second window; continuity across the switch
        let window = (cfg.duration - t0) / 3.0;
        let before = reference_at(t0 + window - 1e-6, &cfg).unwrap().delta_r.psi;
        let after = reference_at(t0 + window + 1e-6, &cfg).unwrap().delta_r.psi;
        assert_abs_diff_eq!(before, after, epsilon = 1e-6);
        let y3 = reference_at(t0 + window + 1.0, &cfg).unwrap().delta_r.psi.to_degrees();
        let y4 = reference_at(t0 + window + 3.0, &cfg).unwrap().delta_r.psi.to_degrees();
        assert_relative_eq!((y4 - y3) / 2.0, 6.0, epsilon = 1e-9);

        // attitude rates are not referenced
        assert_eq!(r.delta_dot_r, Vector3::zeros());
    }

    #[test]
    fn out_of_range_rejected() {
        let cfg = ScenarioConfig::default();
        assert!(matches!(reference_at(-0.1, &cfg), Err(Error::OutOfRange { .. })));
        assert!(matches!(reference_at(60.1, &cfg), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn default_config_valid() {
        ScenarioConfig::default().validate().unwrap();
        let c = ScenarioConfig { scenario: ScenarioId::C, ..ScenarioConfig::default() };
        c.validate().unwrap();
    }
}
