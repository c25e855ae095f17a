//! Deterministic closed-loop simulation and the Monte-Carlo driver.

use nalgebra::{Vector3, Vector6};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use tedhr_core::alloc::build_allocation;
use tedhr_core::attitude::{EulerZyx, Quat};
use tedhr_core::dynamics::{rk4_step, saturate, ControlInput, ExternalWrench, RigidBodyState};
use tedhr_core::error::Error;
use tedhr_core::fc::FcController;
use tedhr_core::hc::{hc_step, HcReferences, HcState};
use tedhr_core::scenario::{reference_at, ReferencePoint, ScenarioId};
use tedhr_core::sensing::MeasurementBuffer;
use tedhr_core::wind::{wind_force, WindConfig, WindState};

use crate::config::SimConfig;
use crate::metrics::{tick_metrics, TickMetrics};
use crate::HarnessError;

/// Seed-stream separators so that wind and sensor noise are independent and
/// identical across controllers for the same run seed.
const WIND_STREAM: u64 = 0x57494e44;
const NOISE_STREAM: u64 = 0x4e4f4953;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Controller {
    Fc,
    Hc,
    FcIdeal,
}

impl Controller {
    pub fn label(&self) -> &'static str {
        match self {
            Controller::Fc => "fc",
            Controller::Hc => "hc",
            Controller::FcIdeal => "fc-ideal",
        }
    }
}

impl std::fmt::Display for Controller {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One recorded controller tick.
#[derive(Clone, Debug)]
pub struct TickRow {
    pub t: f64,
    pub state: RigidBodyState,
    /// True attitude as Euler angles (NaN at a gimbal pole).
    pub euler: EulerZyx,
    pub reference: ReferencePoint,
    /// Commanded (pre-saturation) rotor rates, Hz.
    pub commanded_hz: [f64; 6],
    /// Applied squared rotor rates, (rad/s)².
    pub u_sat: Vector6<f64>,
    /// Total wind velocity at the tick, m/s.
    pub wind: Vector3<f64>,
    pub metrics: TickMetrics,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum RunStatus {
    Completed,
    /// The run left the controllable envelope at time `t`: position error
    /// beyond the divergence threshold, a non-finite state, or a controller /
    /// measurement singularity (gimbal lock, thrust underflow).
    Diverged { t: f64, reason: String },
}

/// Full time series of one Monte-Carlo run.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub scenario: ScenarioId,
    pub controller: Controller,
    pub seed: u64,
    pub rows: Vec<TickRow>,
    pub status: RunStatus,
}

impl RunRecord {
    pub fn diverged(&self) -> bool {
        matches!(self.status, RunStatus::Diverged { .. })
    }

    /// Sums of the per-tick metrics over the evaluation window
    /// (t >= takeoff duration), with the tick count.
    pub fn window_sums(&self, window_start: f64) -> MetricSums {
        let mut s = MetricSums::default();
        for row in self.rows.iter().filter(|r| r.t >= window_start) {
            s.add(&row.metrics);
        }
        s
    }
}

#[derive(Clone, Copy, Debug, Default, serde::Serialize, serde::Deserialize)]
pub struct MetricSums {
    pub e_p: f64,
    pub e_a_deg: f64,
    pub u_n_hz: f64,
    pub u_e_hz: f64,
    pub ticks: u64,
}

impl MetricSums {
    fn add(&mut self, m: &TickMetrics) {
        self.e_p += m.e_p;
        self.e_a_deg += m.e_a_deg;
        self.u_n_hz += m.u_n_hz;
        self.u_e_hz += m.u_e_hz;
        self.ticks += 1;
    }

    pub fn merge(&mut self, other: &MetricSums) {
        self.e_p += other.e_p;
        self.e_a_deg += other.e_a_deg;
        self.u_n_hz += other.u_n_hz;
        self.u_e_hz += other.u_e_hz;
        self.ticks += other.ticks;
    }

    pub fn mean(&self, field: impl Fn(&MetricSums) -> f64) -> f64 {
        if self.ticks == 0 {
            0.0
        } else {
            field(self) / self.ticks as f64
        }
    }
}

/// Aggregated results of a Monte-Carlo batch.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct SummaryStats {
    pub scenario: ScenarioId,
    pub controller: Controller,
    pub runs: u64,
    pub diverged: u64,
    pub first_seed: u64,
    /// Start of the evaluation window (takeoff excluded), s.
    pub window_start: f64,
    pub sums: MetricSums,
    pub mean_e_p: f64,
    pub mean_e_a_deg: f64,
    pub mean_u_n_hz: f64,
    pub mean_u_e_hz: f64,
    /// Time-sum of the per-tick rate norm over the window, Hz·tick.
    pub total_u_n_hz: f64,
}

enum ControllerState {
    Fc(FcController),
    Hc(HcState),
}

fn effective_configs(cfg: &SimConfig, controller: Controller) -> (tedhr_core::sensing::SensorConfig, WindConfig) {
    let mut sensor = cfg.sensor.clone();
    let mut wind = cfg.wind.clone();
    match cfg.scenario.scenario {
        ScenarioId::B => {}
        ScenarioId::A | ScenarioId::C => {
            wind.shear_enabled = false;
            wind.dryden_enabled = false;
            wind.gust_enabled = false;
        }
    }
    if controller == Controller::FcIdeal {
        sensor = tedhr_core::sensing::SensorConfig {
            sample_rate_hz: sensor.sample_rate_hz,
            ..tedhr_core::sensing::SensorConfig::ideal()
        };
        wind.shear_enabled = false;
        wind.dryden_enabled = false;
        wind.gust_enabled = false;
    }
    (sensor, wind)
}

/// Simulates one run; deterministic in `(cfg, controller, seed)`.
pub fn simulate_run(
    cfg: &SimConfig,
    controller: Controller,
    seed: u64,
) -> Result<RunRecord, HarnessError> {
    cfg.validate()?;
    let params = &cfg.vehicle;
    let alloc = build_allocation(params)?;
    let (sensor_cfg, wind_cfg) = effective_configs(cfg, controller);

    let mut wind_rng = ChaCha8Rng::seed_from_u64(seed ^ WIND_STREAM);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed ^ NOISE_STREAM);

    let dt = cfg.sim.dt_sim;
    let ctrl_every = (cfg.sim.dt_ctrl / dt).round() as usize;
    let n_steps = (cfg.scenario.duration / dt).round() as usize;

    let start_ref = reference_at(0.0, &cfg.scenario)?;
    let mut state = RigidBodyState::at_rest(start_ref.p_r);
    let mut buffer = MeasurementBuffer::new(state, sensor_cfg.delay_s);
    let mut wind_state = WindState::new();
    let mut wind_now = Vector3::zeros();

    let mut ctl = match controller {
        Controller::Fc | Controller::FcIdeal => {
            ControllerState::Fc(FcController::synthesize(&cfg.gains_fc, params)?)
        }
        Controller::Hc => ControllerState::Hc(HcState::init(params, state.q)),
    };

    let mut rows: Vec<TickRow> = Vec::with_capacity(n_steps / ctrl_every + 2);
    let mut status = RunStatus::Completed;
    let mut u_held = ControlInput::zero();

    'sim: for k in 0..=n_steps {
        let t = k as f64 * dt;

        if k % ctrl_every == 0 {
            let tick_result: Result<TickRow, Error> = (|| {
                let meas = buffer.sample(t, &sensor_cfg, &mut noise_rng)?;
                let reference = reference_at(t, &cfg.scenario)?;
                let u_raw = match &mut ctl {
                    ControllerState::Fc(fc) => {
                        fc.compute(&reference.flat_point(), &meas.as_flat_state(), &alloc, params)?
                    }
                    ControllerState::Hc(hc) => {
                        let refs = HcReferences {
                            p_r: reference.p_r,
                            v_r: reference.v_r,
                            a_r: reference.a_r,
                            j_r: reference.j_r,
                            q_r: reference.q_r,
                        };
                        let meas_q = Quat::from_euler(&meas.euler);
                        hc_step(
                            &refs,
                            &meas.p,
                            &meas.v,
                            &meas_q,
                            &meas.omega,
                            hc,
                            cfg.sim.dt_ctrl,
                            &alloc,
                            params,
                            &cfg.gains_hc,
                        )?
                        .u_raw
                    }
                };
                let (u_sat, report) = saturate(&u_raw, params);
                u_held = u_sat;
                let metrics = tick_metrics(
                    &state.p,
                    &reference.p_r,
                    &state.q,
                    &reference.q_r,
                    &u_sat.0,
                    &report,
                    params.rate_max_hz,
                );
                let euler = state
                    .q
                    .to_euler()
                    .unwrap_or(EulerZyx::new(f64::NAN, f64::NAN, f64::NAN));
                Ok(TickRow {
                    t,
                    state,
                    euler,
                    reference,
                    commanded_hz: report.commanded_hz,
                    u_sat: u_sat.0,
                    wind: wind_now,
                    metrics,
                })
            })();

            match tick_result {
                Ok(row) => {
                    let e_p = row.metrics.e_p;
                    rows.push(row);
                    if e_p > cfg.sim.divergence_threshold_m {
                        status = RunStatus::Diverged { t, reason: format!("e_p = {e_p:.3} m") };
                        break 'sim;
                    }
                }
                Err(
                    e @ (Error::GimbalLock(_)
                    | Error::SingularMap(_)
                    | Error::ThrustUnderflow { .. }
                    | Error::DegenerateDirection(_)
                    | Error::NonFinite
                    | Error::BufferUnderrun(_)),
                ) => {
                    status = RunStatus::Diverged { t, reason: e.to_string() };
                    break 'sim;
                }
                Err(e) => return Err(e.into()),
            }
        }

        if k == n_steps {
            break;
        }

        wind_now = wind_state.update(t, state.p.z.max(0.0), dt, &wind_cfg, &mut wind_rng);
        let f_w = wind_force(&wind_now, &state, &wind_cfg)?;
        match rk4_step(&state, &u_held, &ExternalWrench { f_ext: f_w, tau_ext: Vector3::zeros() }, &alloc, params, dt)
        {
            Ok(next) => state = next,
            Err(Error::NonFinite) => {
                status = RunStatus::Diverged { t, reason: "non-finite state".into() };
                break 'sim;
            }
            Err(e) => return Err(e.into()),
        }
        buffer.push(t + dt, state);
    }

    Ok(RunRecord { scenario: cfg.scenario.scenario, controller, seed, rows, status })
}

/// Runs `n` independent seeds (seed, seed+1, …) in parallel and aggregates.
pub fn monte_carlo(
    cfg: &SimConfig,
    controller: Controller,
    runs: u64,
    first_seed: u64,
) -> Result<(SummaryStats, Vec<RunRecord>), HarnessError> {
    if runs == 0 {
        return Err(HarnessError::Config("run count must be >= 1".into()));
    }
    let records: Vec<RunRecord> = (0..runs)
        .into_par_iter()
        .map(|i| simulate_run(cfg, controller, first_seed + i))
        .collect::<Result<_, _>>()?;
    let summary = summarize(cfg, controller, first_seed, &records);
    Ok((summary, records))
}

/// Order-independent aggregation of per-run sums over the evaluation window.
pub fn summarize(
    cfg: &SimConfig,
    controller: Controller,
    first_seed: u64,
    records: &[RunRecord],
) -> SummaryStats {
    let window_start = cfg.scenario.takeoff_duration;
    let mut sums = MetricSums::default();
    let mut diverged = 0;
    for rec in records {
        sums.merge(&rec.window_sums(window_start));
        if rec.diverged() {
            diverged += 1;
        }
    }
    SummaryStats {
        scenario: cfg.scenario.scenario,
        controller,
        runs: records.len() as u64,
        diverged,
        first_seed,
        window_start,
        sums,
        mean_e_p: sums.mean(|s| s.e_p),
        mean_e_a_deg: sums.mean(|s| s.e_a_deg),
        mean_u_n_hz: sums.mean(|s| s.u_n_hz),
        mean_u_e_hz: sums.mean(|s| s.u_e_hz),
        total_u_n_hz: sums.u_n_hz,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn quick_cfg() -> SimConfig {
        let mut cfg = SimConfig::default();
        cfg.scenario.duration = 12.0;
        cfg
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = quick_cfg();
        let a = simulate_run(&cfg, Controller::Hc, 7).unwrap();
        let b = simulate_run(&cfg, Controller::Hc, 7).unwrap();
        assert_eq!(a.rows.len(), b.rows.len());
        assert_eq!(a.status, b.status);
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.state.p, rb.state.p);
            assert_eq!(ra.u_sat, rb.u_sat);
            assert_eq!(ra.wind, rb.wind);
        }
        let c = simulate_run(&cfg, Controller::Hc, 8).unwrap();
        assert_ne!(
            a.rows.last().unwrap().state.p,
            c.rows.last().unwrap().state.p
        );
    }

    #[test]
    fn tick_count_matches_duration() {
        let cfg = quick_cfg();
        let rec = simulate_run(&cfg, Controller::FcIdeal, 1).unwrap();
        let expected = (cfg.scenario.duration / cfg.sim.dt_ctrl).round() as usize + 1;
        assert_eq!(rec.rows.len(), expected);
        assert_eq!(rec.status, RunStatus::Completed);
        // strictly increasing tick times
        assert!(rec.rows.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn aggregation_splits_and_merges() {
        let cfg = quick_cfg();
        let (full, records) = monte_carlo(&cfg, Controller::Hc, 4, 10).unwrap();
        let sum_a = summarize(&cfg, Controller::Hc, 10, &records[..2]);
        let sum_b = summarize(&cfg, Controller::Hc, 10, &records[2..]);
        let mut merged = sum_a.sums;
        merged.merge(&sum_b.sums);
        assert_eq!(merged.ticks, full.sums.ticks);
        assert_abs_diff_eq!(merged.e_p, full.sums.e_p, epsilon = 1e-12);

        // single run: summary equals that run's means
        let (one, recs) = monte_carlo(&cfg, Controller::Hc, 1, 10).unwrap();
        let s = recs[0].window_sums(cfg.scenario.takeoff_duration);
        assert_abs_diff_eq!(one.mean_e_p, s.e_p / s.ticks as f64, epsilon = 1e-15);
    }

    #[test]
    fn fc_ideal_tracks_tightly() {
        let cfg = quick_cfg();
        let rec = simulate_run(&cfg, Controller::FcIdeal, 3).unwrap();
        assert_eq!(rec.status, RunStatus::Completed);
        let sums = rec.window_sums(cfg.scenario.takeoff_duration);
        let mean_e_p = sums.e_p / sums.ticks as f64;
        assert!(mean_e_p < 0.02, "FC-ideal mean e_p = {mean_e_p}");
    }
}
