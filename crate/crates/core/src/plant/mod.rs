//! Seven-degree-of-freedom double-track vehicle used as simulation truth.
//!
//! Body frame: x forward, y left, yaw counter-clockwise. Corners are indexed
//! FL, FR, RL, RR throughout.

mod delay;
mod model;
mod params;
mod tire;

pub use delay::DelayLine;
pub use model::{
    chassis_rates, drive_split, plant_diagnostics, plant_step, stable_substeps, vertical_loads, vertical_loads_unfloored,
    wheel_stiffness, ActuatorInput, ChassisRates, PlantState, Vehicle, V_EPS,
};
pub use params::{Axis, DrivenAxle, TireParams, VehicleParams, VehicleSet, GRAVITY};
pub use tire::{combined_forces, magic_formula, peak_force, peak_slip};
