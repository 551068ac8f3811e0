//! Preview-based nonlinear MPC for connected electric vehicles.
//!
//! The crate bundles a real-time-iteration optimal-control solver
//! ([`ocp`]), a double-track vehicle simulator ([`plant`]), distance-indexed
//! friction and curvature maps ([`preview`]), the traction and braking
//! controllers built on top of them ([`traction`], [`braking`]), and the
//! scenario harness that runs closed-loop experiments ([`harness`]).

pub mod braking;
pub mod error;
pub mod harness;
pub mod kv;
pub mod ocp;
pub mod plant;
pub mod preview;
pub mod traction;

pub use braking::{DtController, DtNmpcConfig, DtOutput, DtState, MuMode, TorqueAllocation};
pub use error::{ConfigError, OcpError, PlotError, QpError, SimError};
pub use harness::{Figure, LogRecord, RunSummary, ScenarioSpec, SweepCell};
pub use ocp::{OcpModel, OcpProblem, SolveResult, SolveStatus, SolverConfig, Trajectory};
pub use plant::{ActuatorInput, PlantState, TireParams, Vehicle, VehicleParams};
pub use preview::{Interpolation, PathMap, PreviewMode, PreviewVector};
pub use traction::{TractionController, TractionMeasurement, TractionNmpcConfig, TractionOutput};
