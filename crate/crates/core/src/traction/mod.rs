//! Wheel-slip NMPC for a front-driven vehicle with an open differential.
//!
//! The controller can only lower the driver's motor torque request. In
//! pre-emptive mode it reads the friction map ahead of the front wheels,
//! shifted by the distance covered during the powertrain dead time; in
//! reactive mode it assumes the friction under the wheels now holds over the
//! whole horizon.

mod config;
mod controller;
mod model;
mod table;

pub use config::TractionNmpcConfig;
pub use controller::{TractionController, TractionMeasurement, TractionOutput};
pub use model::{prediction_dynamics, slip_error, TractionControl, TractionModel, TractionStage, TractionState};
pub use table::{force_peak_slip, reference_slip, ReferenceSlip, ReferenceSlipTable};
