//! Closed-loop experiments: driver models, reference paths, scenario files,
//! the co-simulation loop and its CSV logs, parameter sweeps and plot tables.

mod driver;
mod path;
mod plot;
mod scenario;
mod sim;
mod sweep;

pub use driver::{driver_full_throttle, driver_path_tracking, driver_speed_pi, PathTracker, PiGains, SpeedPi, SteerGains};
pub use path::{wrap_angle, Gate, LaneChangeCourse, PathPoint, Projection, ReferencePath, Segment};
pub use plot::{emit_plot_data, panel_tables, Figure, LogTable};
pub use scenario::{ControllerSpec, DriverKind, DriverSpec, PathSpec, ScenarioKind, ScenarioSpec, SweepSpec, TorqueUnit};
pub use sim::{log_to_csv, run_scenario, scenario_path, simulate, LogRecord, RunSummary, SimRun, LOG_COLUMNS, OFF_PATH_LIMIT};
pub use sweep::{run_sweep, summary_csv, SweepCell};
