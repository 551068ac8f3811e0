use std::time::Instant;

use crate::ocp::{shift_warm_start, solve, OcpProblem, SolveStatus, SolverConfig, StepStats, Trajectory};
use crate::plant::{stable_substeps, wheel_stiffness, TireParams, VehicleParams, V_EPS};
use crate::preview::{curvature_preview, future_distances, speed_limit, PathMap};

use super::config::{DtNmpcConfig, MuMode};
use super::model::{allocate_torque, rear_axle_slip_angle, DtModel, DtStage, DtState, TorqueAllocation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtOutput {
    pub tau_wh: f64,
    pub allocation: TorqueAllocation,
    /// Speed limit at the current position.
    pub v_max_now: f64,
    pub curvature_now: f64,
    pub mu_now: f64,
    pub alpha_r: f64,
    pub stats: StepStats,
}

#[derive(Debug, Clone)]
pub struct DtController {
    cfg: DtNmpcConfig,
    model: DtModel,
    solver: SolverConfig,
    warm: Option<Trajectory>,
}

impl DtController {
    pub fn new(cfg: DtNmpcConfig, vehicle: VehicleParams, tires: TireParams) -> Self {
        let mut solver = SolverConfig::real_time(cfg.sqp_iters);
        solver.levenberg_regularization = cfg.regularization;
        solver.central_differences = false;
        Self {
            model: DtModel {
                vehicle,
                tires,
                motor_min: cfg.motor_min,
            },
            cfg,
            solver,
            warm: None,
        }
    }

    pub fn config(&self) -> &DtNmpcConfig {
        &self.cfg
    }

    pub fn model(&self) -> &DtModel {
        &self.model
    }

    pub fn set_solver(&mut self, solver: SolverConfig) {
        self.solver = solver;
    }

    pub fn reset(&mut self) {
        self.warm = None;
    }

    /// Lowest wheel torque the controller may command for a driver request.
    fn bounds(&self, tau_driver: f64) -> (f64, f64) {
        let hi = tau_driver.max(self.cfg.tau_min);
        (self.cfg.tau_min, hi)
    }

    /// Per-stage preview values `(K, mu, V_max)`, `N + 1` entries each.
    pub fn preview(&self, meas: &DtState, curvature: &PathMap, friction: &PathMap) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let cfg = &self.cfg;
        let s_fut = future_distances(meas.s, meas.v.max(0.0), cfg.n, cfg.ts);
        let k = curvature_preview(curvature, &s_fut).values;
        let mu: Vec<f64> = match cfg.mu_mode {
            MuMode::Constant => vec![friction.sample(meas.s); s_fut.len()],
            MuMode::Variable => s_fut.values.iter().map(|s| friction.sample(*s)).collect(),
        };
        let v_max = k.iter().zip(&mu).map(|(k, mu)| speed_limit(*mu, *k, cfg.fs, cfg.v_veh_max)).collect();
        (k, mu, v_max)
    }

    pub fn problem(&self, meas: &DtState, tau_driver: f64, curvature: &PathMap, friction: &PathMap) -> OcpProblem<&DtModel> {
        let cfg = &self.cfg;
        let scale = self.model.tau_scale();
        let (k, mu, v_max) = self.preview(meas, curvature, friction);
        let (lo, hi) = self.bounds(tau_driver);
        let params: Vec<Vec<f64>> = (0..cfg.n)
            .map(|n| {
                DtStage {
                    curvature: k[n],
                    mu: mu[n],
                    v_max: v_max[n],
                    tau_driver: hi,
                    alpha_r_max: cfg.alpha_r_max,
                }
                .to_vec(scale)
            })
            .collect();
        let mut p = OcpProblem::new(&self.model, cfg.n, cfg.ts, meas.to_vec());
        p.weights = vec![cfg.w_v, cfg.w_alpha, cfg.w_tau];
        p.u_lo = vec![lo / scale, 0.0, 0.0];
        p.u_hi = vec![hi / scale, f64::INFINITY, f64::INFINITY];
        p.params = params;
        // the wheels stiffen as the vehicle slows, so size the substeps for
        // the slowest speed the horizon is likely to reach
        let v_low = v_max.iter().cloned().fold(meas.v, f64::min).max(V_EPS);
        let r = self.model.vehicle.r_wheel;
        let mu_max = mu.iter().cloned().fold(0.0, f64::max);
        let lambda = wheel_stiffness(&[v_low / r; 4], &[mu_max; 4], &self.model.vehicle, &self.model.tires);
        p.substeps = stable_substeps(cfg.ts, 1.25 * lambda);
        p
    }

    pub fn step(&mut self, meas: &DtState, tau_driver: f64, curvature: &PathMap, friction: &PathMap) -> DtOutput {
        let start = Instant::now();
        let scale = self.model.tau_scale();
        let problem = self.problem(meas, tau_driver, curvature, friction);
        let (lo, hi) = self.bounds(tau_driver);
        let p0 = &problem.params[0];
        let (curvature_now, mu_now, v_max_now) = (p0[0], p0[1], p0[2]);
        let alpha_r = rear_axle_slip_angle(meas.v, meas.beta, meas.yaw_rate, self.model.vehicle.b);

        let warm = self.warm.as_ref().map(shift_warm_start).unwrap_or_else(|| Trajectory {
            states: vec![problem.x0.clone(); self.cfg.n + 1],
            controls: vec![vec![hi / scale, 0.0, 0.0]; self.cfg.n],
        });
        let result = if meas.is_finite() {
            solve(&problem, &self.solver, Some(&warm)).ok()
        } else {
            None
        };
        let elapsed = || start.elapsed().as_secs_f64();
        let (tau_wh, stats) = match result {
            Some(res) if res.status != SolveStatus::Failed => {
                let tau = (res.trajectory.controls[0][0] * scale).clamp(lo, hi);
                self.warm = Some(res.trajectory.clone());
                (tau, StepStats::from_result(&res, elapsed()))
            }
            other => {
                // pass the driver's braking through, never their drive torque
                self.warm = None;
                let iters = other.map(|r| r.iterations).unwrap_or(0);
                (tau_driver.min(0.0).max(lo), StepStats::failed(iters, elapsed()))
            }
        };
        DtOutput {
            tau_wh,
            allocation: allocate_torque(tau_wh, self.cfg.motor_min, &self.model.vehicle),
            v_max_now,
            curvature_now,
            mu_now,
            alpha_r,
            stats,
        }
    }
}
