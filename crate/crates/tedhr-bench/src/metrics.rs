//! Per-tick performance indexes.

use nalgebra::{Vector3, Vector6};
use std::f64::consts::PI;

use tedhr_core::attitude::Quat;
use tedhr_core::dynamics::SaturationReport;

/// The four indexes evaluated at every controller tick.
#[derive(Clone, Copy, Debug, Default, serde::Serialize, serde::Deserialize)]
pub struct TickMetrics {
    /// Position tracking error norm, m.
    pub e_p: f64,
    /// Attitude error: geodesic distance to the reference, deg.
    pub e_a_deg: f64,
    /// Norm of the applied rotor-rate vector, Hz.
    pub u_n_hz: f64,
    /// Commanded-rate excess over the actuator bound, Hz.
    pub u_e_hz: f64,
}

pub fn tick_metrics(
    p: &Vector3<f64>,
    p_r: &Vector3<f64>,
    q: &Quat,
    q_r: &Quat,
    u_sat: &Vector6<f64>,
    report: &SaturationReport,
    rate_max_hz: f64,
) -> TickMetrics {
    let rates_sq: f64 = u_sat.iter().map(|&u| u.max(0.0)).sum();
    TickMetrics {
        e_p: (p - p_r).norm(),
        e_a_deg: q.geodesic_distance(q_r).to_degrees(),
        u_n_hz: rates_sq.sqrt() / (2.0 * PI),
        u_e_hz: report.excess_hz(rate_max_hz),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use tedhr_core::alloc::VehicleParams;
    use tedhr_core::attitude::EulerZyx;
    use tedhr_core::dynamics::saturate;

    #[test]
    fn perfect_tracking() {
        let params = VehicleParams::default();
        let q = Quat::from_euler(&EulerZyx::new(0.1, 0.0, 1.0));
        let u = Vector6::from_element((2.0 * PI * 40.0f64).powi(2));
        let (u_sat, report) = saturate(&u, &params);
        let m = tick_metrics(
            &Vector3::new(1.0, 2.0, 3.0),
            &Vector3::new(1.0, 2.0, 3.0),
            &q,
            &q,
            &u_sat.0,
            &report,
            params.rate_max_hz,
        );
        assert_abs_diff_eq!(m.e_p, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.e_a_deg, 0.0, epsilon = 1e-5);
        assert_abs_diff_eq!(m.u_n_hz, 40.0 * 6.0f64.sqrt(), epsilon = 1e-9);
        assert_eq!(m.u_e_hz, 0.0);
    }

    #[test]
    fn excess_from_commanded_rate() {
        let params = VehicleParams::default();
        let mut u = Vector6::from_element((2.0 * PI * 40.0f64).powi(2));
        u[2] = (2.0 * PI * 85.0f64).powi(2);
        let (u_sat, report) = saturate(&u, &params);
        let m = tick_metrics(
            &Vector3::zeros(),
            &Vector3::zeros(),
            &Quat::identity(),
            &Quat::identity(),
            &u_sat.0,
            &report,
            params.rate_max_hz,
        );
        assert_abs_diff_eq!(m.u_e_hz, 1.5, epsilon = 1e-12);
    }
}
