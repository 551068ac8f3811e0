use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::braking::{allocate_torque, rear_axle_slip_angle, DtController, DtState, TorqueAllocation};
use crate::error::SimError;
use crate::ocp::StepStats;
use crate::plant::{plant_diagnostics, vertical_loads, ActuatorInput, DelayLine, PlantState, Vehicle, V_EPS};
use crate::preview::PathMap;
use crate::traction::{TractionController, TractionMeasurement};

use super::driver::{driver_full_throttle, PathTracker, SpeedPi};
use super::path::{LaneChangeCourse, ReferencePath};
use super::scenario::{ControllerSpec, DriverKind, PathSpec, ScenarioSpec, TorqueUnit};

/// Lateral deviation at which a run is aborted (m).
pub const OFF_PATH_LIMIT: f64 = 10.0;
/// Body overhang ahead of the front axle and behind the rear axle (m).
const OVERHANG: f64 = 0.7;
/// Sample spacing of the curvature map handed to the braking controller (m).
const CURVATURE_SPACING: f64 = 0.25;

/// Column names of the simulation log, in file order.
pub const LOG_COLUMNS: [&str; 40] = [
    "t",
    "x",
    "y",
    "psi",
    "vx",
    "vy",
    "yaw_rate",
    "omega_fl",
    "omega_fr",
    "omega_rl",
    "omega_rr",
    "tau_m_actual",
    "s",
    "s_path",
    "lat_dev",
    "v",
    "omega_r_fl",
    "omega_r_fr",
    "omega_r_rl",
    "omega_r_rr",
    "sigma_fl",
    "sigma_fr",
    "sigma_rl",
    "sigma_rr",
    "beta",
    "alpha_r",
    "delta",
    "tau_driver",
    "tau_ctrl",
    "tau_m_cmd",
    "brake_fl",
    "brake_fr",
    "brake_rl",
    "brake_rr",
    "v_max_now",
    "mu_now",
    "k_now",
    "iterations",
    "kkt",
    "status",
];

/// One row of the simulation log, taken after each plant step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LogRecord {
    pub t: f64,
    pub state: PlantState,
    /// Station of the closest reference-path point.
    pub s_path: f64,
    /// Signed distance from the path, positive left.
    pub lateral: f64,
    pub v: f64,
    /// Wheel tangential speeds.
    pub omega_r: [f64; 4],
    pub sigma: [f64; 4],
    pub beta: f64,
    pub alpha_r: f64,
    pub delta: f64,
    /// Driver request: motor torque for traction runs, total wheel torque
    /// for braking runs.
    pub tau_driver: f64,
    /// Controller output in the same units as the driver request.
    pub tau_ctrl: f64,
    pub tau_m_cmd: f64,
    pub tau_brake: [f64; 4],
    pub v_max_now: f64,
    pub mu_now: f64,
    pub k_now: f64,
    pub iterations: usize,
    pub kkt: f64,
    /// 0 converged, 1 iteration limit, 2 failed, -1 no controller.
    pub status: i8,
}

impl LogRecord {
    fn write_row(&self, out: &mut String) {
        let s = &self.state;
        let floats = [
            self.t,
            s.x,
            s.y,
            s.psi,
            s.vx,
            s.vy,
            s.yaw_rate,
            s.omega[0],
            s.omega[1],
            s.omega[2],
            s.omega[3],
            s.tau_m_actual,
            s.s_travel,
            self.s_path,
            self.lateral,
            self.v,
            self.omega_r[0],
            self.omega_r[1],
            self.omega_r[2],
            self.omega_r[3],
            self.sigma[0],
            self.sigma[1],
            self.sigma[2],
            self.sigma[3],
            self.beta,
            self.alpha_r,
            self.delta,
            self.tau_driver,
            self.tau_ctrl,
            self.tau_m_cmd,
            self.tau_brake[0],
            self.tau_brake[1],
            self.tau_brake[2],
            self.tau_brake[3],
            self.v_max_now,
            self.mu_now,
            self.k_now,
        ];
        for v in floats {
            let _ = write!(out, "{v:.8e},");
        }
        let kkt = if self.kkt.is_finite() { self.kkt } else { -1.0 };
        let _ = writeln!(out, "{},{kkt:.8e},{}", self.iterations, self.status);
    }
}

/// Render a log as CSV text. A run that ended in a fault gets a final
/// `FAULT` row carrying the message.
pub fn log_to_csv(records: &[LogRecord], fault: Option<&SimError>) -> String {
    let mut out = String::with_capacity(64 + records.len() * 640);
    out.push_str(&LOG_COLUMNS.join(","));
    out.push('\n');
    for r in records {
        r.write_row(&mut out);
    }
    if let Some(f) = fault {
        let msg = f.to_string().replace([',', '\n'], ";");
        let _ = writeln!(out, "FAULT,{msg}");
    }
    out
}

/// Per-run statistics the experiments are judged on. Statistics marked
/// "in the window" only look at path stations inside the manoeuvre window of
/// the scenario's path.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSummary {
    pub steps: usize,
    /// Largest front-right slip ratio after the warm-up time.
    pub peak_sigma_fr: f64,
    /// Largest driven-wheel `omega R / V` after the warm-up time.
    pub peak_wheel_speed_ratio: f64,
    /// Largest |beta| in the window (rad).
    pub max_abs_beta: f64,
    /// Largest |alpha_R| in the window (rad).
    pub max_abs_alpha_r: f64,
    pub min_speed_window: f64,
    pub max_lateral_window: f64,
    pub max_lateral: f64,
    pub cone_hit: bool,
    /// Path station where friction brakes first act.
    pub brake_onset_s: Option<f64>,
    /// Largest `V - V_max` at the current position after the first second.
    pub max_speed_excess: f64,
    /// Largest controller output above the driver request.
    pub max_torque_excess: f64,
    /// Left and right brake torques were equal on both axles at every step.
    pub left_right_equal: bool,
    pub controller_calls: usize,
    pub solver_failures: usize,
    /// Controller wall time per call (s).
    pub mean_wall_time: f64,
    pub max_wall_time: f64,
    pub fault: Option<String>,
}

impl RunSummary {
    fn new() -> Self {
        Self {
            min_speed_window: f64::INFINITY,
            max_speed_excess: f64::NEG_INFINITY,
            max_torque_excess: f64::NEG_INFINITY,
            left_right_equal: true,
            ..Default::default()
        }
    }
}

/// Everything a run produced.
#[derive(Debug)]
pub struct SimRun {
    pub records: Vec<LogRecord>,
    pub summary: RunSummary,
    pub fault: Option<SimError>,
}

impl SimRun {
    pub fn csv(&self) -> String {
        log_to_csv(&self.records, self.fault.as_ref())
    }
}

enum Ctrl {
    None,
    Traction(Box<TractionController>),
    Braking(Box<DtController>),
}

struct CtrlOut {
    tau: f64,
    allocation: Option<TorqueAllocation>,
    v_max: f64,
    mu: f64,
    k: f64,
    stats: Option<StepStats>,
}

/// Run the closed loop described by `spec`. Runtime faults stop the loop;
/// the log up to the fault is kept.
pub fn simulate(spec: &ScenarioSpec) -> SimRun {
    let p = spec.vehicle.clone();
    let tires = spec.tires.clone();
    let dt = spec.dt;
    let path = spec.path.build(p.width);
    let curvature = path.curvature_map(CURVATURE_SPACING);
    let (win_lo, win_hi) = spec.path.window();
    let path_end = path.length() - 0.5;
    let course = matches!(spec.path, PathSpec::Iso3888 { .. }).then(|| LaneChangeCourse::iso3888_2(p.width));
    let braking_units = spec.torque_unit == TorqueUnit::Wheel;
    let motor_min = match &spec.controller {
        ControllerSpec::Braking(c) => c.motor_min,
        _ => 0.0,
    };

    let start = path.at(spec.s0);
    let mut init = PlantState::rolling(spec.v0, p.r_wheel);
    init.x = start.x;
    init.y = start.y;
    init.psi = start.heading;
    init.s_travel = spec.s0;
    let mut vehicle = Vehicle::new(p.clone(), tires.clone(), init, DelayLine::new(spec.delay, spec.lag, dt));

    let mut ctrl = match &spec.controller {
        ControllerSpec::Passive => Ctrl::None,
        ControllerSpec::Traction(c) => Ctrl::Traction(Box::new(TractionController::new(c.clone(), p.clone(), tires.clone()))),
        ControllerSpec::Braking(c) => Ctrl::Braking(Box::new(DtController::new(c.clone(), p.clone(), tires.clone()))),
    };
    let every = spec.controller.ts().map(|ts| (ts / dt).round() as usize).unwrap_or(1).max(1);

    let tau_max = if braking_units { p.tau_m_max * p.gear_ratio } else { p.tau_m_max };
    let tau_min = if braking_units { spec.driver.tau_min } else { 0.0 };
    let mut speed_pi = SpeedPi::new(spec.driver.speed_gains, tau_min, tau_max);
    let mut tracker = PathTracker::new(spec.driver.steer);
    let steering = spec.driver.kind == DriverKind::PathTracking;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = (spec.omega_noise > 0.0).then(|| Normal::new(0.0, spec.omega_noise).expect("finite noise"));

    let n_steps = (spec.duration / dt).round() as usize;
    let mut records = Vec::with_capacity(n_steps);
    let mut sum = RunSummary::new();
    let mut wall_total = 0.0;
    let mut fault = None;
    let mut hint = None;
    let mut held: Option<CtrlOut> = None;
    let mut tau_driver = 0.0;

    let wheel_mu = |map: &PathMap, s: f64| [map.sample(s + p.a), map.sample(s + p.a), map.sample(s - p.b), map.sample(s - p.b)];

    for k in 0..n_steps {
        let t = k as f64 * dt;
        let st = vehicle.state;
        let proj = path.project(st.x, st.y, st.psi, hint);
        hint = Some(proj.index);
        if proj.lateral.abs() > OFF_PATH_LIMIT {
            fault = Some(SimError::OffPath {
                deviation: proj.lateral.abs(),
                time: t,
            });
            break;
        }
        let station = proj.s;
        if station >= path_end {
            break;
        }
        let mu = wheel_mu(&spec.friction, station);

        // driver
        let v = st.speed();
        let released = station >= spec.driver.release_s;
        let request = match spec.driver.kind {
            DriverKind::FullThrottle => driver_full_throttle(tau_max),
            _ if released => 0.0,
            _ => speed_pi.step(v, spec.driver.v_target, dt),
        };
        // a controller sees the request sampled at its own calls
        if k % every == 0 || matches!(ctrl, Ctrl::None) {
            tau_driver = request;
        }
        let delta = if steering {
            tracker.step(&proj, curvature.sample(station + spec.driver.steer.lookahead), &p, dt)
        } else {
            0.0
        };

        // controller, on its own clock with the output held in between
        if k % every == 0 {
            let mut omega = st.omega;
            if let Some(n) = &noise {
                for w in omega.iter_mut() {
                    *w += n.sample(&mut rng);
                }
            }
            held = match &mut ctrl {
                Ctrl::None => None,
                Ctrl::Traction(c) => {
                    let d = plant_diagnostics(&st, &ActuatorInput::default(), &mu, &p, &tires);
                    let fz = vertical_loads(d.ax, 0.0, &p);
                    let meas = TractionMeasurement {
                        s: station,
                        v: st.vx,
                        tau_m: st.tau_m_actual,
                        omega: [omega[0], omega[1]],
                        fz: [fz[0], fz[1]],
                    };
                    let out = c.step(&meas, tau_driver, &spec.friction_estimate);
                    Some(CtrlOut {
                        tau: out.tau_m_mod,
                        allocation: None,
                        v_max: f64::NAN,
                        mu: out.mu_now,
                        k: 0.0,
                        stats: Some(out.stats),
                    })
                }
                Ctrl::Braking(c) => {
                    let mut meas = DtState::from_plant(&st);
                    meas.s = station;
                    meas.omega = omega;
                    let out = c.step(&meas, tau_driver, &curvature, &spec.friction_estimate);
                    Some(CtrlOut {
                        tau: out.tau_wh,
                        allocation: Some(out.allocation),
                        v_max: out.v_max_now,
                        mu: out.mu_now,
                        k: out.curvature_now,
                        stats: Some(out.stats),
                    })
                }
            };
            if let Some(s) = held.as_ref().and_then(|h| h.stats) {
                sum.controller_calls += 1;
                wall_total += s.wall_time;
                sum.max_wall_time = sum.max_wall_time.max(s.wall_time);
                if s.fallback {
                    sum.solver_failures += 1;
                }
            }
        }

        let tau_ctrl = held.as_ref().map(|h| h.tau).unwrap_or(tau_driver);
        let (tau_m_cmd, tau_brake) = if braking_units {
            let alloc = held
                .as_ref()
                .and_then(|h| h.allocation)
                .unwrap_or_else(|| allocate_torque(tau_driver, motor_min, &p));
            (alloc.motor, alloc.brake)
        } else {
            (tau_ctrl, [0.0; 4])
        };
        let input = ActuatorInput {
            tau_m_cmd,
            tau_brake,
            delta,
        };

        if let Err(e) = vehicle.step(&input, &mu, dt) {
            fault = Some(e);
            break;
        }
        let ns = vehicle.state;
        let diag = plant_diagnostics(&ns, &input, &mu, &p, &tires);
        let v_new = ns.speed();
        let alpha_r = rear_axle_slip_angle(v_new.max(V_EPS), ns.beta(), ns.yaw_rate, p.b);
        let omega_r = ns.omega.map(|w| w * p.r_wheel);
        let (v_max, mu_now, k_now, stats) = match &held {
            Some(h) => (h.v_max, h.mu, h.k, h.stats),
            None => (f64::NAN, mu[0], curvature.sample(station), None),
        };
        let rec = LogRecord {
            t: t + dt,
            state: ns,
            s_path: station,
            lateral: proj.lateral,
            v: v_new,
            omega_r,
            sigma: diag.sigma,
            beta: ns.beta(),
            alpha_r,
            delta,
            tau_driver,
            tau_ctrl,
            tau_m_cmd,
            tau_brake,
            v_max_now: v_max,
            mu_now,
            k_now,
            iterations: stats.map(|s| s.iterations).unwrap_or(0),
            kkt: stats.map(|s| s.kkt_residual).unwrap_or(0.0),
            status: stats.map(|s| s.status.code() as i8).unwrap_or(-1),
        };

        // statistics
        if rec.t > spec.warmup {
            sum.peak_sigma_fr = sum.peak_sigma_fr.max(rec.sigma[1]);
            for w in p.driven_axle.wheels() {
                sum.peak_wheel_speed_ratio = sum.peak_wheel_speed_ratio.max(omega_r[w] / v_new.max(V_EPS));
            }
        }
        if station >= win_lo && station <= win_hi {
            sum.max_abs_beta = sum.max_abs_beta.max(rec.beta.abs());
            sum.max_abs_alpha_r = sum.max_abs_alpha_r.max(alpha_r.abs());
            sum.min_speed_window = sum.min_speed_window.min(v_new);
            sum.max_lateral_window = sum.max_lateral_window.max(proj.lateral.abs());
        }
        sum.max_lateral = sum.max_lateral.max(proj.lateral.abs());
        if let Some(c) = &course {
            if !sum.cone_hit && c.hits_cone(ns.x, ns.y, ns.psi, p.a + OVERHANG, p.b + OVERHANG) {
                sum.cone_hit = true;
            }
        }
        if sum.brake_onset_s.is_none() && tau_brake.iter().any(|b| *b > 1.0) {
            sum.brake_onset_s = Some(station);
        }
        if rec.t > 1.0 && v_max.is_finite() {
            sum.max_speed_excess = sum.max_speed_excess.max(v_new - v_max);
        }
        if held.is_some() {
            sum.max_torque_excess = sum.max_torque_excess.max(tau_ctrl - tau_driver);
        }
        if tau_brake[0] != tau_brake[1] || tau_brake[2] != tau_brake[3] {
            sum.left_right_equal = false;
        }
        records.push(rec);
    }

    sum.steps = records.len();
    if sum.controller_calls > 0 {
        sum.mean_wall_time = wall_total / sum.controller_calls as f64;
    }
    if !sum.min_speed_window.is_finite() {
        sum.min_speed_window = f64::NAN;
    }
    sum.fault = fault.as_ref().map(|f| f.to_string());
    SimRun {
        records,
        summary: sum,
        fault,
    }
}

/// Run a scenario and write its log to `out`. On a runtime fault the log up
/// to the fault is still written, with a `FAULT` row at the end, and the
/// fault is returned.
pub fn run_scenario(spec: &ScenarioSpec, out: &Path) -> Result<RunSummary, SimError> {
    let run = simulate(spec);
    write_text(out, &run.csv())?;
    match run.fault {
        Some(f) => Err(f),
        None => Ok(run.summary),
    }
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), SimError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| SimError::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, text).map_err(|e| SimError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Reference path a scenario drives on.
pub fn scenario_path(spec: &ScenarioSpec) -> ReferencePath {
    spec.path.build(spec.vehicle.width)
}
