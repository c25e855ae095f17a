//! Flatness-based controller: feedforward reference state/input from the
//! flat transforms, LQR feedback on the 12-dimensional state error, and
//! conversion of the resulting flat input into rotor commands.

use nalgebra::{DMatrix, SMatrix, Vector6};

use crate::alloc::{AllocationMatrices, VehicleParams};
use crate::attitude::wrap_angle;
use crate::error::{Error, Result};
use crate::flatness::{
    actuator_input_of, flat_input_of, flat_to_input, flat_to_state, state_matrices, FlatPoint,
    FlatState,
};
use crate::lqr;

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct FcConfig {
    /// State-cost diagonal, ordered (p, v, δ, ω).
    pub q_diag: [f64; 12],
    /// Input-cost diagonal on the flat input μ.
    pub r_diag: [f64; 6],
    /// Optional fixed gain (6×12, row-major) bypassing synthesis.
    pub k_f_override: Option<Vec<f64>>,
}

impl Default for FcConfig {
    fn default() -> Self {
        // Sized against the flat-input units (N for the force block, N·m for
        // the moment block) so the closed-loop poles stay well below the
        // 100 Hz controller rate: position loop ~4 rad/s, attitude ~12 rad/s.
        Self {
            q_diag: [31.0, 31.0, 31.0, 2.4, 2.4, 2.4, 3.0, 3.0, 3.0, 0.04, 0.04, 0.04],
            r_diag: [1e-2; 6],
            k_f_override: None,
        }
    }
}

/// Synthesized controller; owns only its gain.
#[derive(Clone, Debug)]
pub struct FcController {
    pub k_f: SMatrix<f64, 6, 12>,
}

impl FcController {
    /// LQR synthesis at the hover linearization (`δ = 0`, so `W⁻¹ = I`),
    /// giving a constant gain for the whole run.
    pub fn synthesize(cfg: &FcConfig, params: &VehicleParams) -> Result<Self> {
        if let Some(k) = &cfg.k_f_override {
            if k.len() != 72 {
                return Err(Error::InvalidParams(format!(
                    "gain override must have 72 entries, got {}",
                    k.len()
                )));
            }
            return Ok(Self { k_f: SMatrix::<f64, 6, 12>::from_row_slice(k) });
        }
        let sm = state_matrices(&FlatState::zeros(), params)?;
        let a = DMatrix::from_fn(12, 12, |i, j| sm.a[(i, j)]);
        let b = DMatrix::from_fn(12, 6, |i, j| sm.b[(i, j)]);
        let q = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&cfg.q_diag));
        let r = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&cfg.r_diag));
        let k = lqr::lqr_gain(&a, &b, &q, &r)?;
        Ok(Self { k_f: SMatrix::<f64, 6, 12>::from_fn(|i, j| k[(i, j)]) })
    }

    /// Reference flat input `μ_r = g_μ(y_r, ẏ_r, ÿ_r)`.
    pub fn reference_flat_input(
        refp: &FlatPoint,
        alloc: &AllocationMatrices,
        params: &VehicleParams,
    ) -> Result<(FlatState, Vector6<f64>)> {
        let x_r = flat_to_state(refp)?;
        let u_ff = flat_to_input(refp, alloc, params)?;
        let mu_r = flat_input_of(&x_r, &u_ff, alloc, params);
        Ok((x_r, mu_r))
    }

    /// One controller tick: `μ = μ_r - K_f · wrap(x̂ - x_r)`, converted to
    /// (unsaturated) squared rotor rates through the state feedback.
    pub fn compute(
        &self,
        refp: &FlatPoint,
        x_hat: &FlatState,
        alloc: &AllocationMatrices,
        params: &VehicleParams,
    ) -> Result<Vector6<f64>> {
        let (x_r, mu_r) = Self::reference_flat_input(refp, alloc, params)?;
        let mut e = x_hat - x_r;
        for i in 6..9 {
            e[i] = wrap_angle(e[i]);
        }
        let mu = mu_r - self.k_f * e;
        Ok(actuator_input_of(&mu, x_hat, alloc, params))
    }
}
