use std::collections::VecDeque;
use std::time::Instant;

use crate::ocp::{rk4_in_place, shift_warm_start, solve, OcpModel, OcpProblem, Rk4Scratch, SolveStatus, SolverConfig, StepStats, Trajectory};
use crate::plant::{stable_substeps, TireParams, VehicleParams, V_EPS};
use crate::preview::{delay_advance, friction_preview, future_distances, PathMap, PreviewMode};

use super::config::TractionNmpcConfig;
use super::model::{TractionModel, TractionStage};
use super::table::ReferenceSlipTable;

/// What the traction controller sees each call.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TractionMeasurement {
    /// Distance travelled by the centre of gravity (m).
    pub s: f64,
    /// Vehicle speed (m/s).
    pub v: f64,
    /// Delivered motor torque (N m).
    pub tau_m: f64,
    /// Front wheel speeds, left then right (rad/s).
    pub omega: [f64; 2],
    /// Estimated front vertical loads (N).
    pub fz: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TractionOutput {
    pub tau_m_mod: f64,
    /// Friction the controller assumed for the current stage.
    pub mu_now: f64,
    pub sigma_ref_now: f64,
    /// Lowest previewed friction over the horizon.
    pub mu_min_ahead: f64,
    pub stats: StepStats,
}

#[derive(Debug, Clone)]
pub struct TractionController {
    cfg: TractionNmpcConfig,
    model: TractionModel,
    table: ReferenceSlipTable,
    solver: SolverConfig,
    warm: Option<Trajectory>,
    last_cmd: f64,
    /// Commands issued but not yet delivered, oldest first.
    in_flight: VecDeque<f64>,
}

impl TractionController {
    pub fn new(cfg: TractionNmpcConfig, vehicle: VehicleParams, tires: TireParams) -> Self {
        let table = ReferenceSlipTable::standard(&tires, cfg.slip_margin);
        let solver = SolverConfig::real_time(cfg.sqp_iters);
        Self {
            model: TractionModel {
                vehicle,
                tires,
                t_m: cfg.t_m,
            },
            cfg,
            table,
            solver,
            warm: None,
            last_cmd: 0.0,
            in_flight: VecDeque::new(),
        }
    }

    fn delay_steps(&self) -> usize {
        match self.cfg.mode {
            PreviewMode::Preemptive => (self.cfg.dt_delay / self.cfg.ts).round() as usize,
            PreviewMode::Reactive => 0,
        }
    }

    pub fn config(&self) -> &TractionNmpcConfig {
        &self.cfg
    }

    pub fn table(&self) -> &ReferenceSlipTable {
        &self.table
    }

    pub fn model(&self) -> &TractionModel {
        &self.model
    }

    pub fn set_solver(&mut self, solver: SolverConfig) {
        self.solver = solver;
    }

    pub fn reset(&mut self) {
        self.warm = None;
        self.last_cmd = 0.0;
        self.in_flight.clear();
    }

    /// Build the OCP for the current measurement.
    pub fn problem(&self, meas: &TractionMeasurement, tau_driver: f64, map: &PathMap) -> OcpProblem<&TractionModel> {
        let cfg = &self.cfg;
        let veh = &self.model.vehicle;
        let scale = self.model.tau_scale();
        let v = meas.v.max(0.0);
        // the friction map is read where the driven (front) wheels are
        let s_fut = future_distances(meas.s + veh.a, v, cfg.n, cfg.ts);
        let dx = match cfg.mode {
            PreviewMode::Preemptive => delay_advance(v, cfg.dt_delay),
            PreviewMode::Reactive => 0.0,
        };
        let mu_fut = friction_preview(map, &s_fut, dx, cfg.mode);
        let params: Vec<Vec<f64>> = (0..cfg.n)
            .map(|n| {
                let mu = mu_fut.values[n];
                let sigma_ref = [self.table.lookup(mu, meas.fz[0]).value, self.table.lookup(mu, meas.fz[1]).value];
                TractionStage {
                    mu,
                    sigma_ref,
                    fz: meas.fz,
                    tau_driver,
                }
                .to_vec(scale)
            })
            .collect();

        let r = veh.r_wheel;
        let x0 = vec![
            meas.tau_m / scale,
            meas.omega[0] * r - v,
            meas.omega[1] * r - v,
            meas.omega[0],
            meas.omega[1],
        ];
        let x0 = self.predict_through_delay(x0, meas, v, map, lambda_guess(&self.model, meas, 1.2));
        let mut p = OcpProblem::new(&self.model, cfg.n, cfg.ts, x0);
        p.weights = vec![cfg.w_slack_fl, cfg.w_slack_fr, cfg.w_tau];
        p.u_lo = vec![0.0, 0.0, 0.0];
        p.u_hi = vec![(tau_driver / scale).max(0.0), f64::INFINITY, f64::INFINITY];
        let mu_max = mu_fut.values.iter().cloned().fold(0.0, f64::max);
        p.substeps = stable_substeps(cfg.ts, lambda_guess(&self.model, meas, mu_max));
        p.params = params;
        p
    }

    /// Roll the measured state forward over the dead time with the commands
    /// already sent, so the horizon starts where those commands leave the
    /// wheels. The map is read at the same advanced positions the horizon
    /// uses, keeping state and friction preview aligned.
    fn predict_through_delay(&self, x0: Vec<f64>, meas: &TractionMeasurement, v: f64, map: &PathMap, lambda: f64) -> Vec<f64> {
        let d = self.delay_steps();
        if d == 0 {
            return x0;
        }
        let cfg = &self.cfg;
        let veh = &self.model.vehicle;
        let scale = self.model.tau_scale();
        let sub = stable_substeps(cfg.ts, lambda);
        let h = cfg.ts / sub as f64;
        let mut x = x0;
        let mut scratch = Rk4Scratch::new(5);
        let f = |x: &[f64], u: &[f64], p: &[f64], dx: &mut [f64]| self.model.dynamics(x, u, p, dx);
        let pending = self.in_flight.len();
        for j in 0..d {
            // commands older than the history are assumed equal to the oldest known one
            let cmd = if pending + j >= d {
                self.in_flight[pending + j - d]
            } else {
                self.in_flight.front().copied().unwrap_or(meas.tau_m)
            };
            let s = meas.s + veh.a + v * j as f64 * cfg.ts;
            let p = [map.sample(s), 0.0, 0.0, meas.fz[0], meas.fz[1], 0.0];
            let u = [cmd / scale, 0.0, 0.0];
            let saved = x.clone();
            for _ in 0..sub {
                if !rk4_in_place(&f, &mut x, &u, &p, h, &mut scratch) {
                    return saved;
                }
            }
        }
        x
    }

    pub fn step(&mut self, meas: &TractionMeasurement, tau_driver: f64, map: &PathMap) -> TractionOutput {
        let start = Instant::now();
        let tau_driver = tau_driver.max(0.0);
        let problem = self.problem(meas, tau_driver, map);
        let mu_now = problem.params[0][0];
        let sigma_ref_now = problem.params[0][2];
        let mu_min_ahead = problem.params.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let scale = self.model.tau_scale();

        let warm = self.warm.as_ref().map(shift_warm_start).unwrap_or_else(|| Trajectory {
            states: vec![problem.x0.clone(); self.cfg.n + 1],
            controls: vec![vec![tau_driver / scale, 0.0, 0.0]; self.cfg.n],
        });
        let result = solve(&problem, &self.solver, Some(&warm));
        let elapsed = || start.elapsed().as_secs_f64();
        let (cmd, stats) = match result {
            Ok(res) if res.status != SolveStatus::Failed => {
                let cmd = (res.trajectory.controls[0][0] * scale).clamp(0.0, tau_driver);
                self.warm = Some(res.trajectory.clone());
                (cmd, StepStats::from_result(&res, elapsed()))
            }
            other => {
                self.warm = None;
                let iters = other.map(|r| r.iterations).unwrap_or(0);
                ((0.9 * self.last_cmd).clamp(0.0, tau_driver), StepStats::failed(iters, elapsed()))
            }
        };
        self.last_cmd = cmd;
        let d = self.delay_steps();
        if d > 0 {
            self.in_flight.push_back(cmd);
            while self.in_flight.len() > d {
                self.in_flight.pop_front();
            }
        }
        TractionOutput {
            tau_m_mod: cmd,
            mu_now,
            sigma_ref_now,
            mu_min_ahead,
            stats,
        }
    }
}

/// Upper estimate of the fastest eigenvalue of the prediction model.
fn lambda_guess(model: &TractionModel, meas: &TractionMeasurement, mu_max: f64) -> f64 {
    let veh = &model.vehicle;
    let t = &model.tires;
    let r = veh.r_wheel;
    (0..2)
        .map(|j| {
            let c_sigma = mu_max * 1.5 * meas.fz[j] * t.bx * t.cx * t.dx;
            c_sigma * r * r / (veh.jw * (meas.omega[j] * r).abs().max(V_EPS))
        })
        .fold(1.0 / model.t_m, f64::max)
}
