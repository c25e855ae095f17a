//! Simulation and control stack for star-shaped tilted hexarotors (TedHR).
//!
//! The crate provides the building blocks of a trajectory-tracking study with
//! concurrent attitude regulation:
//!
//! - [`attitude`]: quaternion / Euler-ZYX / rotation algebra;
//! - [`alloc`]: rotor geometry and the force/moment allocation structures;
//! - [`dynamics`]: rigid-body truth model with RK4 integration and actuator
//!   saturation;
//! - [`wind`]: shear, Dryden turbulence and gust models plus the resulting
//!   disturbance force;
//! - [`sensing`]: transport delay, additive measurement noise and 100 Hz
//!   zero-order-hold sampling;
//! - [`flatness`]: the flat-output state/input transformations of the
//!   platform;
//! - [`lqr`]: continuous algebraic Riccati solver and gain synthesis;
//! - [`fc`]: flatness-based controller (feedforward + LQR feedback);
//! - [`hc`]: hierarchical nonlinear controller;
//! - [`scenario`]: reference trajectory generation.

pub mod alloc;
pub mod attitude;
pub mod dynamics;
pub mod error;
pub mod fc;
pub mod flatness;
pub mod hc;
pub mod lqr;
pub mod scenario;
pub mod sensing;
pub mod wind;

pub use error::{Error, Result};
