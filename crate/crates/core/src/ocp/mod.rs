//! Finite-horizon nonlinear optimal control: problem definition, RK4
//! discretization, and a Gauss-Newton SQP solver with condensing.

mod integrate;
mod problem;
pub mod qp;
mod sqp;

pub use integrate::{fd_step, integrate_rk4, linearize, linearize_map, linearize_map_forward, linearize_map_partial, rk4_in_place, Rk4Scratch};
pub use problem::{shift_warm_start, OcpModel, OcpProblem, SolveResult, SolveStatus, SolverConfig, StepStats, Trajectory};
pub use sqp::solve;
