//! Error type shared by every module of the crate.

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// Euler extraction attempted with pitch too close to ±π/2.
    #[error("gimbal lock: |sin(theta)| = {0} too close to 1")]
    GimbalLock(f64),
    /// The Euler-rate map W(δ) is not invertible (|cos θ| below threshold).
    #[error("singular Euler-rate map: |cos(theta)| = {0}")]
    SingularMap(f64),
    /// The stacked force/moment allocation lost rank.
    #[error("rank-deficient allocation: {0}")]
    RankDeficient(String),
    /// ker(M) does not reach the requested force direction.
    #[error("degenerate moment kernel: |det(F N_M)| = {0}")]
    DegenerateKernel(f64),
    /// Reference acceleration cancels gravity; no preferential direction exists.
    #[error("degenerate preferential direction: |d| = {0}")]
    DegenerateDirection(f64),
    /// Controller thrust state dropped below its guard value.
    #[error("thrust underflow: f_c = {f_c} < f_min = {f_min}")]
    ThrustUnderflow { f_c: f64, f_min: f64 },
    /// A state entry left the finite range (simulation diverged).
    #[error("non-finite state entry")]
    NonFinite,
    /// Measurement history does not reach back one transport delay.
    #[error("measurement buffer underrun at t = {0}")]
    BufferUnderrun(f64),
    /// Altitude outside the tropospheric layer of the atmosphere model.
    #[error("altitude {0} m outside the 0-11 km layer")]
    OutOfLayer(f64),
    /// The Riccati solver failed to produce a stabilizing solution.
    #[error("LQR synthesis failed: {0}")]
    NotStabilizable(String),
    /// Query time outside the reference trajectory.
    #[error("time {t} outside the scenario range [0, {duration}]")]
    OutOfRange { t: f64, duration: f64 },
    /// Inconsistent or physically invalid parameters.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, Error>;
