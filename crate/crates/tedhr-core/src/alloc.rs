//! TedHR geometry and control allocation.
//!
//! Six rotors sit evenly spaced on a circle of radius `arm_length`, arm `i`
//! (1-based) at azimuth `γ_i = (i-1)·60°`. Each spin axis is tilted by fixed
//! angles: `α` about the arm direction (sign alternating with `i`) and `β`
//! about the in-plane axis orthogonal to it, so in the body frame
//!
//! `z_Pi = Rz(γ_i) · Rx((-1)^i α) · Ry(β) · e3`.
//!
//! Squared propeller rates `u` map to body-frame force and moment through
//! `f_c = F u`, `τ_c = M u`. For `(α, β) ≠ (0, 0)` the stacked map is full
//! rank and the platform is fully actuated.

use nalgebra::{Matrix3, Matrix3x6, Matrix6, Matrix6x3, Vector3, Vector6};
use std::f64::consts::PI;

use crate::attitude::{rot_x, rot_y, rot_z};
use crate::error::{Error, Result};

/// Gravitational acceleration used by the vehicle model, m/s².
pub const GRAVITY: f64 = 9.81;

/// Physical and aerodynamic parameters of the platform.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct VehicleParams {
    /// Mass, kg.
    pub mass: f64,
    /// Body-frame inertia diagonal, kg·m² (off-diagonal terms are not modeled).
    pub inertia_diag: [f64; 3],
    /// Tilt about the arm direction, degrees.
    pub alpha_deg: f64,
    /// Tilt about the axis orthogonal to the arm, degrees.
    pub beta_deg: f64,
    /// Center-to-rotor distance, m.
    pub arm_length: f64,
    /// Thrust coefficient, N per (rad/s)².
    pub c_f: f64,
    /// Drag-moment coefficient, N·m per (rad/s)².
    pub c_tau: f64,
    /// Propeller rate bound, Hz.
    pub rate_max_hz: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        // c_f sized so that hover sits near 50% of the rate bound.
        let mass = 3.5;
        let (alpha_deg, beta_deg) = (25.0f64, 10.0f64);
        let rate_max_hz = 83.5;
        let hover_u = (2.0 * PI * 0.5 * rate_max_hz).powi(2);
        let c_f = mass * GRAVITY
            / (6.0 * alpha_deg.to_radians().cos() * beta_deg.to_radians().cos() * hover_u);
        Self {
            mass,
            inertia_diag: [0.12, 0.12, 0.20],
            alpha_deg,
            beta_deg,
            arm_length: 0.4,
            c_f,
            c_tau: 0.015 * c_f,
            rate_max_hz,
        }
    }
}

impl VehicleParams {
    pub fn alpha(&self) -> f64 {
        self.alpha_deg.to_radians()
    }

    pub fn beta(&self) -> f64 {
        self.beta_deg.to_radians()
    }

    pub fn inertia(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::from(self.inertia_diag))
    }

    pub fn inertia_inv(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::new(
            1.0 / self.inertia_diag[0],
            1.0 / self.inertia_diag[1],
            1.0 / self.inertia_diag[2],
        ))
    }

    /// Squared-rate saturation bound, (rad/s)².
    pub fn u_max(&self) -> f64 {
        (2.0 * PI * self.rate_max_hz).powi(2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) {
            return Err(Error::InvalidParams(format!("mass = {}", self.mass)));
        }
        if self.inertia_diag.iter().any(|&j| !(j > 0.0)) {
            return Err(Error::InvalidParams(format!(
                "inertia diagonal {:?} not positive definite",
                self.inertia_diag
            )));
        }
        for (name, v) in [
            ("arm_length", self.arm_length),
            ("c_f", self.c_f),
            ("c_tau", self.c_tau),
            ("rate_max_hz", self.rate_max_hz),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} = {v}")));
            }
        }
        Ok(())
    }
}

/// Rotor spin-axis directions in the body frame, unit norm.
pub fn rotor_axes(alpha: f64, beta: f64) -> [Vector3<f64>; 6] {
    std::array::from_fn(|k| {
        let i = k + 1;
        let gamma = (i - 1) as f64 * PI / 3.0;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        rot_z(gamma) * rot_x(sign * alpha) * rot_y(beta) * Vector3::z()
    })
}

/// Rotor hub positions in the body frame.
pub fn rotor_positions(arm_length: f64) -> [Vector3<f64>; 6] {
    std::array::from_fn(|k| rot_z(k as f64 * PI / 3.0) * Vector3::new(arm_length, 0.0, 0.0))
}

/// Force/moment input matrices together with the kernel and pseudo-inverse
/// structures needed by the controllers. Immutable after construction.
#[derive(Clone, Debug)]
pub struct AllocationMatrices {
    /// Control force input matrix, `f_c = F u`.
    pub f: Matrix3x6<f64>,
    /// Control moment input matrix, `τ_c = M u`.
    pub m: Matrix3x6<f64>,
    /// Orthonormal basis of ker(F).
    pub f_bar: Matrix6x3<f64>,
    /// Right pseudo-inverse of M with columns in ker(F):
    /// `M·M†_H = I`, `F·M†_H = 0`.
    pub m_pinv_h: Matrix6x3<f64>,
    /// Orthonormal basis of ker(M).
    pub m_kernel: Matrix6x3<f64>,
    /// rank([F; M]).
    pub stacked_rank: usize,
    stacked: Matrix6<f64>,
    stacked_inv: Matrix6<f64>,
}

/// Orthonormal kernel basis of a 3×6 matrix via the spectral decomposition
/// of AᵀA. Returns the basis and the rank of A.
fn kernel_basis(a: &Matrix3x6<f64>) -> (Vec<Vector6<f64>>, usize) {
    let gram = a.transpose() * a;
    let eig = gram.symmetric_eigen();
    let max_ev = eig.eigenvalues.iter().fold(0.0f64, |acc, &v| acc.max(v));
    // eigenvalues of the Gram matrix are squared singular values; true zeros
    // show up at machine-noise level ~1e-16·max
    let tol = max_ev * 1e-12 + 1e-300;
    let mut pairs: Vec<(f64, Vector6<f64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, eig.eigenvectors.column(i).into_owned()))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let kernel: Vec<Vector6<f64>> = pairs
        .iter()
        .filter(|(v, _)| *v <= tol)
        .map(|(_, vec)| *vec)
        .collect();
    (kernel, 6 - pairs.iter().filter(|(v, _)| *v <= tol).count())
}

fn mat6x3_from_columns(cols: &[Vector6<f64>]) -> Matrix6x3<f64> {
    let mut out = Matrix6x3::zeros();
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

/// Builds the allocation structures for a parameter set.
pub fn build_allocation(params: &VehicleParams) -> Result<AllocationMatrices> {
    params.validate()?;
    let axes = rotor_axes(params.alpha(), params.beta());
    let positions = rotor_positions(params.arm_length);

    let mut f = Matrix3x6::zeros();
    let mut m = Matrix3x6::zeros();
    for i in 0..6 {
        let sign = if (i + 1) % 2 == 0 { 1.0 } else { -1.0 };
        f.set_column(i, &(params.c_f * axes[i]));
        m.set_column(
            i,
            &(params.c_f * positions[i].cross(&axes[i]) + sign * params.c_tau * axes[i]),
        );
    }

    let (f_kernel, f_rank) = kernel_basis(&f);
    if f_kernel.len() != 3 {
        return Err(Error::RankDeficient(format!(
            "rank(F) = {f_rank}, ker(F) has dimension {}",
            f_kernel.len()
        )));
    }
    let f_bar = mat6x3_from_columns(&f_kernel);

    let m_f_bar = m * f_bar;
    let m_f_bar_inv = m_f_bar.try_inverse().ok_or_else(|| {
        Error::RankDeficient(format!(
            "rk(M·F̄) < 3 (det = {:e})",
            m_f_bar.determinant()
        ))
    })?;
    let m_pinv_h = f_bar * m_f_bar_inv;

    let (m_kernel_vecs, m_rank) = kernel_basis(&m);
    if m_kernel_vecs.len() != 3 {
        return Err(Error::RankDeficient(format!(
            "rank(M) = {m_rank}, ker(M) has dimension {}",
            m_kernel_vecs.len()
        )));
    }
    let m_kernel = mat6x3_from_columns(&m_kernel_vecs);

    let mut stacked = Matrix6::zeros();
    stacked.view_mut((0, 0), (3, 6)).copy_from(&f);
    stacked.view_mut((3, 0), (3, 6)).copy_from(&m);
    let svd = stacked.svd(false, false);
    let sv_max = svd.singular_values.max();
    let stacked_rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > sv_max * 1e-10)
        .count();
    let stacked_inv = stacked
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient("stacked [F; M] not invertible".into()))?;

    Ok(AllocationMatrices {
        f,
        m,
        f_bar,
        m_pinv_h,
        m_kernel,
        stacked_rank,
        stacked,
        stacked_inv,
    })
}

impl AllocationMatrices {
    /// Stacked 6×6 map u ↦ (f_c, τ_c).
    pub fn stacked(&self) -> &Matrix6<f64> {
        &self.stacked
    }

    /// Squared rates realizing a body-frame wrench exactly.
    pub fn input_for_wrench(&self, force: &Vector3<f64>, moment: &Vector3<f64>) -> Vector6<f64> {
        let mut w = Vector6::zeros();
        w.fixed_rows_mut::<3>(0).copy_from(force);
        w.fixed_rows_mut::<3>(3).copy_from(moment);
        self.stacked_inv * w
    }

    /// Input spanning ker(M) with `F·ū = d_star`: force along the zero-moment
    /// preferential direction, decoupled from the control moment.
    pub fn zero_moment_input(&self, d_star: &Vector3<f64>) -> Result<Vector6<f64>> {
        let f_n = self.f * self.m_kernel;
        let det = f_n.determinant();
        // scale-free guard: F carries the thrust coefficient, so an absolute
        // determinant threshold would reject any physical platform
        let scale = f_n.norm() / 3.0f64.sqrt();
        if det.abs() < 1e-12 * scale.powi(3).max(f64::MIN_POSITIVE) {
            return Err(Error::DegenerateKernel(det.abs()));
        }
        let f_n_inv = f_n
            .try_inverse()
            .ok_or(Error::DegenerateKernel(det.abs()))?;
        Ok(self.m_kernel * (f_n_inv * d_star))
    }
}
