//! Differential-flatness machinery.
//!
//! With state `x = (p, v, δ, ω)`, flat input `μ` and flat output `y = (p, δ)`
//! the rigid-body model takes the quasi-linear form
//! `ẋ = A(x) x + B μ - g`, and both the state and the rotor input are
//! algebraic functions of the flat output and its first two derivatives.

use nalgebra::{SMatrix, SVector, Vector3, Vector6};

use crate::alloc::{AllocationMatrices, VehicleParams, GRAVITY};
use crate::attitude::{
    euler_rate_map, euler_rate_map_dot, euler_rate_map_inv, EulerZyx, Quat,
};
use crate::error::{Error, Result};

/// 12-dimensional state `(p, v, δ, ω)`.
pub type FlatState = SVector<f64, 12>;
/// Flat input: world-frame force block over body-frame moment block.
pub type FlatInput = Vector6<f64>;

pub fn pack_state(p: &Vector3<f64>, v: &Vector3<f64>, delta: &EulerZyx, omega: &Vector3<f64>) -> FlatState {
    let mut x = FlatState::zeros();
    x.fixed_rows_mut::<3>(0).copy_from(p);
    x.fixed_rows_mut::<3>(3).copy_from(v);
    x.fixed_rows_mut::<3>(6).copy_from(&delta.as_vector());
    x.fixed_rows_mut::<3>(9).copy_from(omega);
    x
}

pub fn state_delta(x: &FlatState) -> EulerZyx {
    EulerZyx::new(x[6], x[7], x[8])
}

pub fn state_omega(x: &FlatState) -> Vector3<f64> {
    x.fixed_rows::<3>(9).into_owned()
}

/// Flat output with first and second derivatives: `y = (p, δ)`.
#[derive(Clone, Copy, Debug)]
pub struct FlatPoint {
    pub y: Vector6<f64>,
    pub y_dot: Vector6<f64>,
    pub y_ddot: Vector6<f64>,
}

impl FlatPoint {
    pub fn new(
        p: &Vector3<f64>,
        delta: &EulerZyx,
        p_dot: &Vector3<f64>,
        delta_dot: &Vector3<f64>,
        p_ddot: &Vector3<f64>,
        delta_ddot: &Vector3<f64>,
    ) -> Self {
        let stack = |a: &Vector3<f64>, b: &Vector3<f64>| {
            let mut v = Vector6::zeros();
            v.fixed_rows_mut::<3>(0).copy_from(a);
            v.fixed_rows_mut::<3>(3).copy_from(b);
            v
        };
        Self {
            y: stack(p, &delta.as_vector()),
            y_dot: stack(p_dot, delta_dot),
            y_ddot: stack(p_ddot, delta_ddot),
        }
    }

    pub fn p(&self) -> Vector3<f64> {
        self.y.fixed_rows::<3>(0).into_owned()
    }

    pub fn delta(&self) -> EulerZyx {
        EulerZyx::new(self.y[3], self.y[4], self.y[5])
    }

    pub fn p_dot(&self) -> Vector3<f64> {
        self.y_dot.fixed_rows::<3>(0).into_owned()
    }

    pub fn delta_dot(&self) -> Vector3<f64> {
        self.y_dot.fixed_rows::<3>(3).into_owned()
    }

    pub fn p_ddot(&self) -> Vector3<f64> {
        self.y_ddot.fixed_rows::<3>(0).into_owned()
    }

    pub fn delta_ddot(&self) -> Vector3<f64> {
        self.y_ddot.fixed_rows::<3>(3).into_owned()
    }
}

/// The quasi-linear system matrices evaluated at `x`.
pub struct StateMatrices {
    pub a: SMatrix<f64, 12, 12>,
    pub b: SMatrix<f64, 12, 6>,
    pub c: SMatrix<f64, 6, 12>,
    pub g: SVector<f64, 12>,
}

pub fn state_matrices(x: &FlatState, params: &VehicleParams) -> Result<StateMatrices> {
    let w_inv = euler_rate_map_inv(&state_delta(x))?;
    let mut a = SMatrix::<f64, 12, 12>::zeros();
    a.fixed_view_mut::<3, 3>(0, 3).fill_with_identity();
    a.fixed_view_mut::<3, 3>(6, 9).copy_from(&w_inv);

    let mut b = SMatrix::<f64, 12, 6>::zeros();
    b.fixed_view_mut::<3, 3>(3, 0)
        .copy_from(&(nalgebra::Matrix3::identity() / params.mass));
    b.fixed_view_mut::<3, 3>(9, 3).copy_from(&params.inertia_inv());

    let mut c = SMatrix::<f64, 6, 12>::zeros();
    c.fixed_view_mut::<3, 3>(0, 0).fill_with_identity();
    c.fixed_view_mut::<3, 3>(3, 6).fill_with_identity();

    let mut g = SVector::<f64, 12>::zeros();
    g[5] = GRAVITY;

    Ok(StateMatrices { a, b, c, g })
}

/// `g_x`: state from the flat output and its first derivative,
/// `x = (p, ṗ, δ, W(δ) δ̇)`.
pub fn flat_to_state(fp: &FlatPoint) -> Result<FlatState> {
    let delta = fp.delta();
    // the forward map needs no inversion, but the trajectory must stay clear
    // of the singularity for the surrounding transforms to be valid
    euler_rate_map_inv(&delta)?;
    let omega = euler_rate_map(&delta) * fp.delta_dot();
    Ok(pack_state(&fp.p(), &fp.p_dot(), &delta, &omega))
}

/// `g_u`: rotor input realizing the flat trajectory,
/// `u = [F; M]⁻¹ (m R(δ)ᵀ(p̈ + g e3), J ω̇ + ω × J ω)`.
pub fn flat_to_input(
    fp: &FlatPoint,
    alloc: &AllocationMatrices,
    params: &VehicleParams,
) -> Result<Vector6<f64>> {
    let delta = fp.delta();
    euler_rate_map_inv(&delta)?; // reject trajectories at the singularity
    let w = euler_rate_map(&delta);
    let omega = w * fp.delta_dot();
    let omega_dot = euler_rate_map_dot(&delta, &fp.delta_dot()) * fp.delta_dot() + w * fp.delta_ddot();
    let r = Quat::from_euler(&delta).rotation();
    let force = params.mass * r.transpose() * (fp.p_ddot() + Vector3::new(0.0, 0.0, GRAVITY));
    let j = params.inertia();
    let moment = j * omega_dot + omega.cross(&(j * omega));
    Ok(alloc.input_for_wrench(&force, &moment))
}

/// Flat input from state and rotor input:
/// `μ = (0, -ω × J ω) + blkdiag(R(δ), I) [F; M] u`.
pub fn flat_input_of(
    x: &FlatState,
    u: &Vector6<f64>,
    alloc: &AllocationMatrices,
    params: &VehicleParams,
) -> FlatInput {
    let r = Quat::from_euler(&state_delta(x)).rotation();
    let omega = state_omega(x);
    let j = params.inertia();
    let mut mu = Vector6::zeros();
    mu.fixed_rows_mut::<3>(0).copy_from(&(r * (alloc.f * u)));
    mu.fixed_rows_mut::<3>(3)
        .copy_from(&(-omega.cross(&(j * omega)) + alloc.m * u));
    mu
}

/// Inverse of [`flat_input_of`] at the same state.
pub fn actuator_input_of(
    mu: &FlatInput,
    x: &FlatState,
    alloc: &AllocationMatrices,
    params: &VehicleParams,
) -> Vector6<f64> {
    let r = Quat::from_euler(&state_delta(x)).rotation();
    let omega = state_omega(x);
    let j = params.inertia();
    let force_body = r.transpose() * mu.fixed_rows::<3>(0).into_owned();
    let moment = mu.fixed_rows::<3>(3).into_owned() + omega.cross(&(j * omega));
    alloc.input_for_wrench(&force_body, &moment)
}

/// Rejects flat points that violate the pitch margin.
pub fn validate_flat_point(fp: &FlatPoint) -> Result<()> {
    let theta = fp.delta().theta;
    if theta.abs() >= std::f64::consts::FRAC_PI_2 - 1e-3 {
        return Err(Error::SingularMap(theta.cos().abs()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alloc::build_allocation;
    use crate::dynamics::{self, ControlInput, ExternalWrench, RigidBodyState};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (VehicleParams, AllocationMatrices) {
        let params = VehicleParams::default();
        let alloc = build_allocation(&params).unwrap();
        (params, alloc)
    }

    fn random_state(rng: &mut ChaCha8Rng) -> FlatState {
        let mut x = FlatState::zeros();
        for i in 0..12 {
            x[i] = rng.random_range(-1.0..1.0);
        }
        // keep pitch well away from the singularity
        x[7] *= 0.8;
        x
    }

    fn hover_point() -> FlatPoint {
        FlatPoint::new(
            &Vector3::new(0.0, 0.0, 1.0),
            &EulerZyx::default(),
            &Vector3::zeros(),
            &Vector3::zeros(),
            &Vector3::zeros(),
            &Vector3::zeros(),
        )
    }

    #[test]
    fn matrices_at_origin() {
        let (params, _) = setup();
        let sm = state_matrices(&FlatState::zeros(), &params).unwrap();
        let mut expected_a = SMatrix::<f64, 12, 12>::zeros();
        expected_a.fixed_view_mut::<3, 3>(0, 3).fill_with_identity();
        expected_a.fixed_view_mut::<3, 3>(6, 9).fill_with_identity();
        assert_abs_diff_eq!(sm.a, expected_a, epsilon = 1e-15);
        assert_abs_diff_eq!(sm.g[5], 9.81, epsilon = 1e-15);
    }

    #[test]
    fn output_selects_pose() {
        let (params, _) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for _ in 0..100 {
            let x = random_state(&mut rng);
            let sm = state_matrices(&x, &params).unwrap();
            let y = sm.c * x;
            assert_abs_diff_eq!(y.fixed_rows::<3>(0).into_owned(), x.fixed_rows::<3>(0).into_owned(), epsilon = 1e-15);
            assert_abs_diff_eq!(y.fixed_rows::<3>(3).into_owned(), x.fixed_rows::<3>(6).into_owned(), epsilon = 1e-15);
        }
    }

    #[test]
    fn state_space_matches_rigid_body_dynamics() {
        // ẋ = A(x)x + Bμ - g with μ = flat_input_of(x, u) must agree with the
        // simulator's equations of motion
        let (params, alloc) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let x = random_state(&mut rng);
            let mut u = Vector6::zeros();
            for i in 0..6 {
                u[i] = rng.random_range(0.0..1.5e5);
            }
            let mu = flat_input_of(&x, &u, &alloc, &params);
            let sm = state_matrices(&x, &params).unwrap();
            let x_dot = sm.a * x + sm.b * mu - sm.g;

            let state = RigidBodyState {
                p: x.fixed_rows::<3>(0).into_owned(),
                v: x.fixed_rows::<3>(3).into_owned(),
                q: Quat::from_euler(&state_delta(&x)),
                omega: state_omega(&x),
            };
            let d = dynamics::derivative(&state, &ControlInput(u), &ExternalWrench::default(), &alloc, &params);
            assert_abs_diff_eq!(x_dot.fixed_rows::<3>(0).into_owned(), d.p_dot, epsilon = 1e-9);
            assert_abs_diff_eq!(x_dot.fixed_rows::<3>(3).into_owned(), d.v_dot, epsilon = 1e-9);
            assert_abs_diff_eq!(x_dot.fixed_rows::<3>(9).into_owned(), d.omega_dot, epsilon = 1e-9);
            // Euler-rate row: δ̇ = W⁻¹ω
            let w_inv = euler_rate_map_inv(&state_delta(&x)).unwrap();
            assert_abs_diff_eq!(x_dot.fixed_rows::<3>(6).into_owned(), w_inv * state_omega(&x), epsilon = 1e-12);
        }
    }

    #[test]
    fn flat_to_state_cases() {
        // hover: zero derivatives
        let x = flat_to_state(&hover_point()).unwrap();
        assert_abs_diff_eq!(x.fixed_rows::<3>(3).into_owned(), Vector3::zeros(), epsilon = 1e-15);
        assert_abs_diff_eq!(x.fixed_rows::<3>(9).into_owned(), Vector3::zeros(), epsilon = 1e-15);

        // pure yaw rate at level attitude: ω = (0, 0, r)
        let fp = FlatPoint::new(
            &Vector3::zeros(),
            &EulerZyx::default(),
            &Vector3::zeros(),
            &Vector3::new(0.0, 0.0, 0.7),
            &Vector3::zeros(),
            &Vector3::zeros(),
        );
        let x = flat_to_state(&fp).unwrap();
        assert_abs_diff_eq!(state_omega(&x), Vector3::new(0.0, 0.0, 0.7), epsilon = 1e-15);
    }

    #[test]
    fn flat_to_input_hover_matches_equilibrium() {
        let (params, alloc) = setup();
        let u = flat_to_input(&hover_point(), &alloc, &params).unwrap();
        let u_hover = dynamics::hover_input(&alloc, &params);
        assert_abs_diff_eq!(u, u_hover, epsilon = 1e-9);
    }

    #[test]
    fn force_block_linear_in_mass() {
        let (params, alloc) = setup();
        let fp = FlatPoint::new(
            &Vector3::new(1.0, -2.0, 3.0),
            &EulerZyx::new(0.1, -0.2, 0.4),
            &Vector3::new(0.3, 0.0, -0.1),
            &Vector3::zeros(),
            &Vector3::new(0.5, -0.4, 0.2),
            &Vector3::zeros(),
        );
        let mut heavier = params.clone();
        heavier.mass *= 2.0;
        let u1 = flat_to_input(&fp, &alloc, &params).unwrap();
        let u2 = flat_to_input(&fp, &alloc, &heavier).unwrap();
        // the realized force block doubles with the mass, the moment block
        // (zero rates here) is unchanged
        assert_abs_diff_eq!(alloc.f * u2, 2.0 * (alloc.f * u1), epsilon = 1e-12);
        assert_abs_diff_eq!(alloc.m * u2, alloc.m * u1, epsilon = 1e-12);
    }

    #[test]
    fn input_conversions_are_inverse() {
        let (params, alloc) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..1000 {
            let x = random_state(&mut rng);
            let mut u = Vector6::zeros();
            for i in 0..6 {
                u[i] = rng.random_range(-1e5..2e5);
            }
            let mu = flat_input_of(&x, &u, &alloc, &params);
            let back = actuator_input_of(&mu, &x, &alloc, &params);
            assert_abs_diff_eq!(back, u, epsilon = 1e-10 * (1.0 + u.norm()));
        }

        // zero case
        let x = FlatState::zeros();
        let mu = flat_input_of(&x, &Vector6::zeros(), &alloc, &params);
        assert_abs_diff_eq!(mu, Vector6::zeros(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            actuator_input_of(&Vector6::zeros(), &x, &alloc, &params),
            Vector6::zeros(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn hover_flat_input() {
        let (params, alloc) = setup();
        let x = flat_to_state(&hover_point()).unwrap();
        let u = flat_to_input(&hover_point(), &alloc, &params).unwrap();
        let mu = flat_input_of(&x, &u, &alloc, &params);
        // world-frame force block carries exactly the weight
        assert_abs_diff_eq!(
            mu.fixed_rows::<3>(0).into_owned(),
            Vector3::new(0.0, 0.0, params.mass * GRAVITY),
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(mu.fixed_rows::<3>(3).into_owned(), Vector3::zeros(), epsilon = 1e-10);

        // and converting back recovers the hover rotor input
        let back = actuator_input_of(&mu, &x, &alloc, &params);
        assert_abs_diff_eq!(back, u, epsilon = 1e-9);
    }

    #[test]
    fn additivity_in_input() {
        let (params, alloc) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let x = random_state(&mut rng);
        let u1 = Vector6::from_fn(|_, _| rng.random_range(0.0..1e5));
        let u2 = Vector6::from_fn(|_, _| rng.random_range(0.0..1e5));
        let lhs = flat_input_of(&x, &(u1 + u2), &alloc, &params) - flat_input_of(&x, &u1, &alloc, &params);
        // difference is the linear part: blkdiag(R, I)[F; M] u2
        let r = Quat::from_euler(&state_delta(&x)).rotation();
        let mut expected = Vector6::zeros();
        expected.fixed_rows_mut::<3>(0).copy_from(&(r * (alloc.f * u2)));
        expected.fixed_rows_mut::<3>(3).copy_from(&(alloc.m * u2));
        assert_abs_diff_eq!(lhs, expected, epsilon = 1e-9);
    }

    #[test]
    fn finite_difference_consistency_along_trajectory() {
        // d/dt of the position part of g_x matches the velocity part
        let traj = |t: f64| {
            FlatPoint::new(
                &Vector3::new((0.7 * t).sin(), (0.5 * t).cos(), 1.0 + 0.1 * t),
                &EulerZyx::new(0.2 * (0.9 * t).sin(), 0.15 * (1.1 * t).sin(), 0.5 * t),
                &Vector3::new(0.7 * (0.7 * t).cos(), -0.5 * (0.5 * t).sin(), 0.1),
                &Vector3::new(0.2 * 0.9 * (0.9 * t).cos(), 0.15 * 1.1 * (1.1 * t).cos(), 0.5),
                &Vector3::new(-0.49 * (0.7 * t).sin(), -0.25 * (0.5 * t).cos(), 0.0),
                &Vector3::new(-0.2 * 0.81 * (0.9 * t).sin(), -0.15 * 1.21 * (1.1 * t).sin(), 0.0),
            )
        };
        let h = 1e-5;
        for k in 0..20 {
            let t = 0.3 * k as f64;
            let x_m = flat_to_state(&traj(t - h)).unwrap();
            let x_p = flat_to_state(&traj(t + h)).unwrap();
            let x = flat_to_state(&traj(t)).unwrap();
            let p_rate = (x_p.fixed_rows::<3>(0) - x_m.fixed_rows::<3>(0)) / (2.0 * h);
            assert_abs_diff_eq!(p_rate.into_owned(), x.fixed_rows::<3>(3).into_owned(), epsilon = 1e-8);
        }
    }
}
