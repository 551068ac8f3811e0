//! Pre-emptive braking NMPC on a double-track prediction model.
//!
//! The controller modulates a single total wheel torque, so left and right
//! wheels of an axle always see the same torque. It previews the path
//! curvature to hold a friction-based speed limit and keeps the rear-axle
//! slip angle inside a soft bound.

mod config;
mod controller;
mod model;

pub use config::{DtNmpcConfig, MuMode};
pub use controller::{DtController, DtOutput};
pub use model::{
    allocate_torque, dt_prediction_dynamics, feedforward_steer, rear_axle_slip_angle, DtControl, DtModel, DtStage, DtState, TorqueAllocation,
};
