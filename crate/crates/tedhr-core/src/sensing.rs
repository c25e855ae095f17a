//! Measurement channel: transport delay, additive Gaussian noise and
//! zero-order-hold sampling of the full state.
//!
//! Noise is applied in the measurement representation — position (m),
//! ZYX Euler angles (deg), velocity (m/s), angular rate (deg/s) — matching
//! the units of the configured variances, then converted back to radians.

use std::collections::VecDeque;

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::attitude::{EulerZyx, Quat};
use crate::dynamics::RigidBodyState;
use crate::error::{Error, Result};
use crate::flatness::FlatState;

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    /// Transport delay, s.
    pub delay_s: f64,
    /// Measurement update rate, Hz.
    pub sample_rate_hz: f64,
    /// Position noise variance per axis, m².
    pub var_p: [f64; 3],
    /// Euler-angle noise variance per axis, deg².
    pub var_delta_deg2: [f64; 3],
    /// Velocity noise variance per axis, (m/s)².
    pub var_v: [f64; 3],
    /// Angular-rate noise variance per axis, (deg/s)².
    pub var_omega_deg2: [f64; 3],
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            delay_s: 0.012,
            sample_rate_hz: 100.0,
            var_p: [4.099e-7, 2.838e-7, 2.105e-8],
            var_delta_deg2: [0.0012, 0.0011, 0.0011],
            var_v: [2.050e-6, 1.419e-6, 1.050e-7],
            var_omega_deg2: [0.0024, 0.0022, 0.0022],
        }
    }
}

impl SensorConfig {
    /// Noiseless, delay-free channel (the FC-ideal configuration).
    pub fn ideal() -> Self {
        Self {
            delay_s: 0.0,
            var_p: [0.0; 3],
            var_delta_deg2: [0.0; 3],
            var_v: [0.0; 3],
            var_omega_deg2: [0.0; 3],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.delay_s < 0.0 || !(self.sample_rate_hz > 0.0) {
            return Err(Error::InvalidParams("sensor delay must be >= 0 and rate > 0".into()));
        }
        let all = self
            .var_p
            .iter()
            .chain(&self.var_delta_deg2)
            .chain(&self.var_v)
            .chain(&self.var_omega_deg2);
        for &v in all {
            if v < 0.0 {
                return Err(Error::InvalidParams(format!("negative variance {v}")));
            }
        }
        Ok(())
    }
}

/// One emitted measurement in the controller representation.
#[derive(Clone, Copy, Debug)]
pub struct Measurement {
    pub p: Vector3<f64>,
    pub v: Vector3<f64>,
    /// Noisy attitude, radians.
    pub euler: EulerZyx,
    /// Noisy body rate, rad/s.
    pub omega: Vector3<f64>,
}

impl Measurement {
    /// Rebuilds a state view with the quaternion taken from the noisy Euler
    /// angles.
    pub fn as_state(&self) -> RigidBodyState {
        RigidBodyState {
            p: self.p,
            v: self.v,
            q: Quat::from_euler(&self.euler),
            omega: self.omega,
        }
    }

    /// 12-dimensional state estimate `(p, v, δ, ω)`.
    pub fn as_flat_state(&self) -> FlatState {
        let mut x = FlatState::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&self.p);
        x.fixed_rows_mut::<3>(3).copy_from(&self.v);
        x.fixed_rows_mut::<3>(6).copy_from(&self.euler.as_vector());
        x.fixed_rows_mut::<3>(9).copy_from(&self.omega);
        x
    }
}

/// Ring buffer of timestamped true states spanning at least one delay.
#[derive(Clone, Debug)]
pub struct MeasurementBuffer {
    entries: VecDeque<(f64, RigidBodyState)>,
    initial: RigidBodyState,
    horizon: f64,
}

impl MeasurementBuffer {
    pub fn new(initial: RigidBodyState, delay_s: f64) -> Self {
        let mut entries = VecDeque::new();
        entries.push_back((0.0, initial));
        Self {
            entries,
            initial,
            horizon: delay_s + 0.05,
        }
    }

    /// Records the true state at time `t`; times must be non-decreasing.
    pub fn push(&mut self, t: f64, state: RigidBodyState) {
        debug_assert!(self.entries.back().map_or(true, |(tb, _)| t >= *tb));
        self.entries.push_back((t, state));
        while let Some(&(t0, _)) = self.entries.front() {
            if t - t0 > self.horizon && self.entries.len() > 2 {
                self.entries.pop_front();
            } else {
                break;
            }
        }
    }

    /// True state at `t` by linear interpolation (normalized lerp with sign
    /// alignment for the quaternion).
    fn interpolate(&self, t: f64) -> Result<RigidBodyState> {
        let first = self.entries.front().ok_or(Error::BufferUnderrun(t))?;
        if t < first.0 - 1e-12 {
            return Err(Error::BufferUnderrun(t));
        }
        // index of the first entry with time >= t
        let idx = self.entries.partition_point(|(te, _)| *te < t);
        if idx == 0 {
            return Ok(first.1);
        }
        let (t1, s1) = self.entries[idx - 1];
        let Some(&(t2, s2)) = self.entries.get(idx) else {
            // never extrapolate forward; hold the newest sample
            return Ok(self.entries[idx - 1].1);
        };
        let w = if t2 > t1 { (t - t1) / (t2 - t1) } else { 0.0 };
        // align representatives before lerping across a possible sign flip
        let dot = s1.q.eta() * s2.q.eta() + s1.q.eps().dot(&s2.q.eps());
        let sign = if dot < 0.0 { -1.0 } else { 1.0 };
        let q = Quat::from_parts(
            (1.0 - w) * s1.q.eta() + w * sign * s2.q.eta(),
            (1.0 - w) * s1.q.eps() + w * sign * s2.q.eps(),
        );
        Ok(RigidBodyState {
            p: s1.p.lerp(&s2.p, w),
            v: s1.v.lerp(&s2.v, w),
            q,
            omega: s1.omega.lerp(&s2.omega, w),
        })
    }

    /// Emits the measurement for tick time `t`: delayed truth plus noise.
    ///
    /// During the first delay interval the channel emits the initial state,
    /// noiseless.
    pub fn sample<R: Rng>(&self, t: f64, cfg: &SensorConfig, rng: &mut R) -> Result<Measurement> {
        if t < cfg.delay_s {
            let euler = self.initial.q.to_euler()?;
            return Ok(Measurement {
                p: self.initial.p,
                v: self.initial.v,
                euler,
                omega: self.initial.omega,
            });
        }
        let truth = self.interpolate(t - cfg.delay_s)?;
        let euler = truth.q.to_euler()?;

        let mut gauss = |var: f64| -> f64 {
            let n: f64 = StandardNormal.sample(rng);
            n * var.sqrt()
        };
        let p = truth.p + Vector3::new(gauss(cfg.var_p[0]), gauss(cfg.var_p[1]), gauss(cfg.var_p[2]));
        let v = truth.v + Vector3::new(gauss(cfg.var_v[0]), gauss(cfg.var_v[1]), gauss(cfg.var_v[2]));
        let euler = EulerZyx::new(
            euler.phi + gauss(cfg.var_delta_deg2[0]).to_radians(),
            euler.theta + gauss(cfg.var_delta_deg2[1]).to_radians(),
            euler.psi + gauss(cfg.var_delta_deg2[2]).to_radians(),
        );
        let omega = truth.omega
            + Vector3::new(
                gauss(cfg.var_omega_deg2[0]).to_radians(),
                gauss(cfg.var_omega_deg2[1]).to_radians(),
                gauss(cfg.var_omega_deg2[2]).to_radians(),
            );
        Ok(Measurement { p, v, euler, omega })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ramp_state(t: f64) -> RigidBodyState {
        RigidBodyState {
            p: Vector3::new(t, -2.0 * t, 0.5 * t),
            v: Vector3::new(1.0, -2.0, 0.5),
            q: Quat::identity(),
            omega: Vector3::zeros(),
        }
    }

    #[test]
    fn passthrough_when_ideal() {
        let cfg = SensorConfig::ideal();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut buf = MeasurementBuffer::new(ramp_state(0.0), cfg.delay_s);
        for k in 1..=100 {
            let t = k as f64 * 1e-3;
            buf.push(t, ramp_state(t));
            if k % 10 == 0 {
                let m = buf.sample(t, &cfg, &mut rng).unwrap();
                assert_abs_diff_eq!(m.p, ramp_state(t).p, epsilon = 1e-12);
                assert_abs_diff_eq!(m.v, ramp_state(t).v, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn delay_shifts_ramp() {
        let cfg = SensorConfig {
            var_p: [0.0; 3],
            var_delta_deg2: [0.0; 3],
            var_v: [0.0; 3],
            var_omega_deg2: [0.0; 3],
            ..SensorConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut buf = MeasurementBuffer::new(ramp_state(0.0), cfg.delay_s);
        let dt = 1e-3;
        for k in 1..=200 {
            let t = k as f64 * dt;
            buf.push(t, ramp_state(t));
        }
        let t = 0.2;
        let m = buf.sample(t, &cfg, &mut rng).unwrap();
        // the delayed ramp value, within one sim step
        assert_abs_diff_eq!(m.p.x, t - cfg.delay_s, epsilon = dt);
        assert_abs_diff_eq!(m.p.x, t - 0.012, epsilon = 1e-9);
    }

    #[test]
    fn startup_grace_emits_initial() {
        let cfg = SensorConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let init = ramp_state(0.0);
        let mut buf = MeasurementBuffer::new(init, cfg.delay_s);
        buf.push(0.005, ramp_state(0.005));
        let m = buf.sample(0.01, &cfg, &mut rng).unwrap();
        assert_eq!(m.p, init.p);
        assert_eq!(m.v, init.v);
    }

    #[test]
    fn underrun_detected() {
        let cfg = SensorConfig::default();
        let mut buf = MeasurementBuffer::new(ramp_state(0.0), cfg.delay_s);
        // simulate a buffer that starts late: rebuild with a first entry at 1.0
        buf.entries.clear();
        buf.entries.push_back((1.0, ramp_state(1.0)));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(matches!(
            buf.sample(1.005, &cfg, &mut rng),
            Err(Error::BufferUnderrun(_))
        ));
    }

    #[test]
    fn noise_variance_matches_config() {
        let cfg = SensorConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let state = RigidBodyState::at_rest(Vector3::new(1.0, 2.0, 3.0));
        let mut buf = MeasurementBuffer::new(state, cfg.delay_s);
        for k in 1..=30 {
            buf.push(k as f64 * 1e-3, state);
        }
        let n = 100_000;
        let mut sum = [0.0f64; 4];
        let mut sum_sq = [0.0f64; 4];
        for _ in 0..n {
            let m = buf.sample(0.03, &cfg, &mut rng).unwrap();
            let vals = [
                m.p.x - state.p.x,
                m.euler.phi.to_degrees(),
                m.v.x,
                m.omega.x.to_degrees(),
            ];
            for (i, v) in vals.iter().enumerate() {
                sum[i] += v;
                sum_sq[i] += v * v;
            }
        }
        let var = |i: usize| sum_sq[i] / n as f64 - (sum[i] / n as f64).powi(2);
        assert_relative_eq!(var(0), 4.099e-7, max_relative = 0.05);
        assert_relative_eq!(var(1), 0.0012, max_relative = 0.05);
        assert_relative_eq!(var(2), 2.050e-6, max_relative = 0.05);
        assert_relative_eq!(var(3), 0.0024, max_relative = 0.05);
    }

    #[test]
    fn interpolation_across_sign_flip() {
        // yaw sweeping through 180° flips the stored representative; the
        // interpolated quaternion must stay on the short path
        let cfg = SensorConfig {
            var_p: [0.0; 3],
            var_delta_deg2: [0.0; 3],
            var_v: [0.0; 3],
            var_omega_deg2: [0.0; 3],
            ..SensorConfig::default()
        };
        let mut buf = MeasurementBuffer::new(ramp_state(0.0), cfg.delay_s);
        let yaw = |t: f64| 179.9f64.to_radians() + t * 0.2; // crosses π
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for k in 0..=100 {
            let t = k as f64 * 1e-3;
            let mut s = ramp_state(t);
            s.q = Quat::from_euler(&EulerZyx::new(0.0, 0.0, yaw(t)));
            buf.push(t, s);
            if k >= 20 && k % 10 == 0 {
                let m = buf.sample(t, &cfg, &mut rng).unwrap();
                let expected = Quat::from_euler(&EulerZyx::new(0.0, 0.0, yaw(t - cfg.delay_s)));
                assert!(m.as_state().q.geodesic_distance(&expected) < 1e-6);
            }
        }
    }
}
