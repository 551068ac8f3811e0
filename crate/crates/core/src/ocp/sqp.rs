//! Gauss-Newton SQP over single-shooting controls.
//!
//! Each iteration simulates the horizon, linearizes every stage with central
//! differences, condenses the states out of the problem, solves the resulting
//! dense QP in the control increments and takes a backtracking step on an
//! l1 merit function.

use nalgebra::{DMatrix, DVector};

use super::integrate::{linearize_map, linearize_map_forward, linearize_map_partial, rk4_in_place, Rk4Scratch};
use super::problem::{OcpModel, OcpProblem, SolveResult, SolveStatus, SolverConfig, Trajectory};
use super::qp::{solve_qp, QpProblem};
use crate::error::OcpError;

const BACKTRACK_FACTOR: f64 = 0.5;
const MAX_BACKTRACKS: usize = 8;
const ARMIJO: f64 = 1e-4;

struct Rollout {
    states: Vec<Vec<f64>>,
    cost: f64,
    violation: f64,
}

struct Evaluator<'a, M: OcpModel> {
    problem: &'a OcpProblem<M>,
    scratch: Rk4Scratch,
    residual: Vec<f64>,
    cons: Vec<f64>,
}

impl<'a, M: OcpModel> Evaluator<'a, M> {
    fn new(problem: &'a OcpProblem<M>) -> Self {
        Self {
            scratch: Rk4Scratch::new(problem.nx()),
            residual: vec![0.0; problem.model.nr()],
            cons: vec![0.0; problem.model.nc()],
            problem,
        }
    }

    /// Discrete step map of stage `n`, written into `out`.
    fn step(&mut self, n: usize, x: &[f64], u: &[f64], out: &mut [f64]) -> bool {
        let pr = self.problem;
        let h = pr.step / pr.substeps as f64;
        out.copy_from_slice(x);
        let f = |x: &[f64], u: &[f64], p: &[f64], d: &mut [f64]| pr.model.dynamics(x, u, p, d);
        for _ in 0..pr.substeps {
            if !rk4_in_place(&f, out, u, &pr.params[n], h, &mut self.scratch) {
                return false;
            }
        }
        true
    }

    fn stage_cost(&mut self, n: usize, x: &[f64], u: &[f64]) -> f64 {
        let pr = self.problem;
        pr.model.residuals(x, u, &pr.params[n], &mut self.residual);
        self.residual.iter().zip(&pr.weights).map(|(r, w)| w * r * r).sum()
    }

    fn stage_violation(&mut self, n: usize, x: &[f64], u: &[f64]) -> f64 {
        let pr = self.problem;
        if pr.model.nc() == 0 {
            return 0.0;
        }
        pr.model.constraints(x, u, &pr.params[n], &mut self.cons);
        self.cons.iter().map(|h| h.max(0.0)).sum()
    }

    fn rollout(&mut self, x0: &[f64], controls: &[Vec<f64>]) -> Result<Rollout, (usize, Vec<Vec<f64>>)> {
        let pr = self.problem;
        let mut states = Vec::with_capacity(pr.horizon + 1);
        states.push(x0.to_vec());
        let mut cost = 0.0;
        let mut violation = 0.0;
        let mut next = vec![0.0; pr.nx()];
        for n in 0..pr.horizon {
            let x = &states[n];
            cost += self.stage_cost(n, x, &controls[n]);
            violation += self.stage_violation(n, x, &controls[n]);
            let x = states[n].clone();
            if !self.step(n, &x, &controls[n], &mut next) {
                return Err((n, states));
            }
            violation += state_bound_violation(pr, &next);
            states.push(next.clone());
        }
        if !(cost.is_finite() && violation.is_finite()) {
            return Err((pr.horizon, states));
        }
        Ok(Rollout { states, cost, violation })
    }
}

fn state_bound_violation<M: OcpModel>(pr: &OcpProblem<M>, x: &[f64]) -> f64 {
    x.iter()
        .zip(pr.x_lo.iter().zip(&pr.x_hi))
        .map(|(v, (lo, hi))| (lo - v).max(0.0) + (v - hi).max(0.0))
        .sum()
}

/// Solve the OCP starting from `warm` (controls only; states are re-simulated
/// from `x0`).
pub fn solve<M: OcpModel>(problem: &OcpProblem<M>, config: &SolverConfig, warm: Option<&Trajectory>) -> Result<SolveResult, OcpError> {
    problem.validate()?;
    config.validate()?;
    let (nx, nu, n_stages) = (problem.nx(), problem.nu(), problem.horizon);
    let nu_dyn = problem.model.nu_dynamics();
    let nr = problem.model.nr();
    let nc = problem.model.nc();
    let nz = nu * n_stages;

    let mut x0 = problem.x0.clone();
    let mut x0_clipped = false;
    for i in 0..nx {
        let c = x0[i].clamp(problem.x_lo[i], problem.x_hi[i]);
        if c != x0[i] {
            x0_clipped = true;
            x0[i] = c;
        }
    }

    let mut controls: Vec<Vec<f64>> = match warm.filter(|_| config.warm_start) {
        Some(w) => {
            if w.controls.len() != n_stages || w.controls.iter().any(|c| c.len() != nu) {
                return Err(OcpError::Dimension(format!(
                    "warm start has {} controls, expected {n_stages} of size {nu}",
                    w.controls.len()
                )));
            }
            w.controls.clone()
        }
        None => vec![vec![0.0; nu]; n_stages],
    };
    for u in controls.iter_mut() {
        for i in 0..nu {
            u[i] = u[i].clamp(problem.u_lo[i], problem.u_hi[i]);
        }
    }

    let mut ev = Evaluator::new(problem);
    let failed = |states: Vec<Vec<f64>>, controls: Vec<Vec<f64>>, iterations| {
        let mut states = states;
        let last = states.last().cloned().unwrap_or_else(|| x0.clone());
        states.resize(n_stages + 1, last);
        SolveResult {
            trajectory: Trajectory { states, controls },
            objective: f64::NAN,
            kkt_residual: f64::INFINITY,
            iterations,
            status: SolveStatus::Failed,
            x0_clipped,
        }
    };

    let mut current = match ev.rollout(&x0, &controls) {
        Ok(r) => r,
        Err((_, states)) => return Ok(failed(states, controls, 0)),
    };

    let mut rho = 0.0f64;
    let mut status = SolveStatus::MaxIterReached;
    let mut kkt = f64::INFINITY;
    let mut iterations = 0;

    let mut a_mats = Vec::with_capacity(n_stages);
    let mut b_mats = Vec::with_capacity(n_stages);

    for it in 0..config.max_sqp_iters {
        iterations = it + 1;

        // stage linearizations
        a_mats.clear();
        b_mats.clear();
        let mut res_jac = Vec::with_capacity(n_stages);
        let mut con_jac = Vec::with_capacity(n_stages);
        let mut res_val = Vec::with_capacity(n_stages);
        let mut con_val = Vec::with_capacity(n_stages);
        for n in 0..n_stages {
            let x = &current.states[n];
            let u = &controls[n];
            let step = |xx: &[f64], uu: &[f64], out: &mut [f64]| ev.step(n, xx, uu, out);
            let lin = if config.central_differences {
                linearize_map_partial(step, x, u, nx, nu_dyn)
            } else {
                linearize_map_forward(step, x, u, &current.states[n + 1], nu_dyn)
            };
            let Some((a, b)) = lin else {
                return Err(OcpError::Linearization { stage: n });
            };
            a_mats.push(a);
            b_mats.push(b);
            let p = &problem.params[n];
            let Some(rj) = linearize_map(
                |xx, uu, out| {
                    problem.model.residuals(xx, uu, p, out);
                    out.iter().all(|v| v.is_finite())
                },
                x,
                u,
                nr,
            ) else {
                return Err(OcpError::Linearization { stage: n });
            };
            res_jac.push(rj);
            let mut r = vec![0.0; nr];
            problem.model.residuals(x, u, p, &mut r);
            res_val.push(r);
            if nc > 0 {
                let Some(cj) = linearize_map(
                    |xx, uu, out| {
                        problem.model.constraints(xx, uu, p, out);
                        out.iter().all(|v| v.is_finite())
                    },
                    x,
                    u,
                    nc,
                ) else {
                    return Err(OcpError::Linearization { stage: n });
                };
                con_jac.push(cj);
                let mut h = vec![0.0; nc];
                problem.model.constraints(x, u, p, &mut h);
                con_val.push(h);
            }
        }

        // condensing: sens[n] = d x_n / d U
        let mut sens: Vec<DMatrix<f64>> = Vec::with_capacity(n_stages + 1);
        sens.push(DMatrix::zeros(nx, nz));
        // x_n depends only on the first n control blocks
        for n in 0..n_stages {
            let mut next = DMatrix::zeros(nx, nz);
            let k = n * nu;
            if k > 0 {
                next.columns_mut(0, k).gemm(1.0, &a_mats[n], &sens[n].columns(0, k), 0.0);
            }
            next.view_mut((0, k), (nx, nu)).copy_from(&b_mats[n]);
            sens.push(next);
        }

        // Gauss-Newton Hessian and gradient by a backward sweep over the
        // stage cost-to-go P and adjoint lam
        let mut hess = DMatrix::<f64>::zeros(nz, nz);
        let mut grad = DVector::<f64>::zeros(nz);
        let mut p_next = DMatrix::<f64>::zeros(nx, nx);
        let mut lam = DVector::<f64>::zeros(nx);
        for k in (0..n_stages).rev() {
            let (rx, ru) = &res_jac[k];
            let mut wrx = rx.clone();
            let mut wru = ru.clone();
            for i in 0..nr {
                wrx.row_mut(i).scale_mut(problem.weights[i]);
                wru.row_mut(i).scale_mut(problem.weights[i]);
            }
            let wr = DVector::from_iterator(nr, res_val[k].iter().zip(&problem.weights).map(|(r, w)| r * w));
            let a = &a_mats[k];
            let b = &b_mats[k];
            let pb = &p_next * b;
            let y = a.transpose() * &pb + rx.transpose() * &wru;
            let diag = b.transpose() * &pb + ru.transpose() * &wru;
            let c = k * nu;
            hess.view_mut((c, c), (nu, nu)).copy_from(&(2.0 * diag));
            if k > 0 {
                let off = 2.0 * sens[k].columns(0, c).transpose() * &y;
                hess.view_mut((0, c), (c, nu)).copy_from(&off);
                hess.view_mut((c, 0), (nu, c)).copy_from(&off.transpose());
            }
            let gk = 2.0 * (ru.transpose() * &wr + b.transpose() * &lam);
            grad.rows_mut(c, nu).copy_from(&gk);
            lam = rx.transpose() * &wr + a.transpose() * &lam;
            p_next = rx.transpose() * &wrx + a.transpose() * &p_next * a;
        }
        let diag_scale = hess.diagonal().amax().max(1.0);
        let reg = config.levenberg_regularization.max(1e-12 * diag_scale);
        for i in 0..nz {
            hess[(i, i)] += reg;
        }

        let mut rows = Vec::new();
        if nc > 0 {
            for n in 0..n_stages {
                let (cx, cu) = &con_jac[n];
                let mut jc = cx * &sens[n];
                let mut blk = jc.view_mut((0, n * nu), (nc, nu));
                blk += cu;
                for j in 0..nc {
                    rows.push((jc.row(j).iter().copied().collect::<Vec<f64>>(), -con_val[n][j]));
                }
            }
        }
        for n in 1..=n_stages {
            for i in 0..nx {
                let v = current.states[n][i];
                if problem.x_hi[i].is_finite() {
                    rows.push((sens[n].row(i).iter().copied().collect(), problem.x_hi[i] - v));
                }
                if problem.x_lo[i].is_finite() {
                    rows.push((sens[n].row(i).iter().map(|v| -v).collect(), v - problem.x_lo[i]));
                }
            }
        }
        let mut lower = Vec::with_capacity(nz);
        let mut upper = Vec::with_capacity(nz);
        for n in 0..n_stages {
            for i in 0..nu {
                lower.push(problem.u_lo[i] - controls[n][i]);
                upper.push(problem.u_hi[i] - controls[n][i]);
            }
        }

        let qp = QpProblem {
            hessian: hess,
            gradient: grad,
            lower,
            upper,
            rows,
        };
        let sol = match solve_qp(&qp) {
            Ok(s) => s,
            Err(_) => {
                status = SolveStatus::Failed;
                break;
            }
        };

        let stationarity = (&qp.hessian * &sol.z).amax() / current.cost.max(1.0);
        kkt = stationarity.max(current.violation);
        if kkt <= config.qp_tolerance {
            status = SolveStatus::Converged;
            break;
        }

        let lambda_max = sol.row_multipliers.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        rho = rho.max(2.0 * lambda_max + 1e-6);
        let merit0 = current.cost + rho * current.violation;
        let slope = qp.gradient.dot(&sol.z) - rho * current.violation;

        let mut alpha = 1.0;
        let mut accepted: Option<(Vec<Vec<f64>>, Rollout)> = None;
        for attempt in 0..=MAX_BACKTRACKS {
            let trial: Vec<Vec<f64>> = controls
                .iter()
                .enumerate()
                .map(|(n, u)| {
                    (0..nu)
                        .map(|i| (u[i] + alpha * sol.z[n * nu + i]).clamp(problem.u_lo[i], problem.u_hi[i]))
                        .collect()
                })
                .collect();
            if let Ok(r) = ev.rollout(&x0, &trial) {
                let merit = r.cost + rho * r.violation;
                if merit <= merit0 + ARMIJO * alpha * slope.min(0.0) || attempt == MAX_BACKTRACKS {
                    accepted = Some((trial, r));
                    break;
                }
            }
            alpha *= BACKTRACK_FACTOR;
        }
        match accepted {
            Some((trial, r)) => {
                controls = trial;
                current = r;
            }
            None => {
                status = SolveStatus::Failed;
                break;
            }
        }
    }

    Ok(SolveResult {
        trajectory: Trajectory {
            states: current.states,
            controls,
        },
        objective: current.cost,
        kkt_residual: kkt,
        iterations,
        status,
        x0_clipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Double integrator with control effort and position tracking.
    struct DoubleIntegrator {
        target: f64,
    }

    impl OcpModel for DoubleIntegrator {
        fn nx(&self) -> usize {
            2
        }
        fn nu(&self) -> usize {
            1
        }
        fn nr(&self) -> usize {
            2
        }
        fn dynamics(&self, x: &[f64], u: &[f64], _: &[f64], d: &mut [f64]) {
            d[0] = x[1];
            d[1] = u[0];
        }
        fn residuals(&self, x: &[f64], u: &[f64], _: &[f64], r: &mut [f64]) {
            r[0] = x[0] - self.target;
            r[1] = u[0];
        }
    }

    fn problem(weights: Vec<f64>) -> OcpProblem<DoubleIntegrator> {
        let mut p = OcpProblem::new(DoubleIntegrator { target: 1.0 }, 10, 0.1, vec![0.0, 0.0]);
        p.weights = weights;
        p
    }

    #[test]
    fn zero_weights_converge_immediately() {
        let p = problem(vec![0.0, 0.0]);
        let r = solve(&p, &SolverConfig::default(), None).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert_eq!(r.objective, 0.0);
        assert!(r.trajectory.controls.iter().all(|u| u[0] == 0.0));
    }

    #[test]
    fn states_start_at_x0() {
        let mut p = problem(vec![1.0, 0.01]);
        p.x0 = vec![0.3, -0.2];
        let r = solve(&p, &SolverConfig::default(), None).unwrap();
        assert_eq!(r.trajectory.states[0], p.x0);
        assert_eq!(r.status, SolveStatus::Converged);
    }

    #[test]
    fn solve_is_deterministic() {
        let mut p = problem(vec![1.0, 0.01]);
        p.u_hi = vec![0.5];
        let a = solve(&p, &SolverConfig::default(), None).unwrap();
        let b = solve(&p, &SolverConfig::default(), None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mut p = problem(vec![1.0, 0.01]);
        p.x0 = vec![0.0];
        assert!(matches!(solve(&p, &SolverConfig::default(), None), Err(OcpError::Dimension(_))));
    }

    #[test]
    fn warm_start_dimension_is_checked() {
        let p = problem(vec![1.0, 0.01]);
        let warm = Trajectory {
            states: vec![vec![0.0, 0.0]; 3],
            controls: vec![vec![0.0]; 2],
        };
        assert!(solve(&p, &SolverConfig::default(), Some(&warm)).is_err());
    }

    #[test]
    fn x0_outside_bounds_is_clipped_and_flagged() {
        let mut p = problem(vec![1.0, 0.01]);
        p.x_lo = vec![-1.0, -1.0];
        p.x_hi = vec![1.0, 1.0];
        p.x0 = vec![2.0, 0.0];
        let r = solve(&p, &SolverConfig::default(), None).unwrap();
        assert!(r.x0_clipped);
        assert_eq!(r.trajectory.states[0], vec![1.0, 0.0]);
    }

    #[test]
    fn state_bound_is_respected() {
        let mut p = problem(vec![1.0, 0.001]);
        p.x_hi = vec![0.6, f64::INFINITY];
        let r = solve(&p, &SolverConfig::default(), None).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        for s in &r.trajectory.states {
            assert!(s[0] <= 0.6 + 1e-6, "{s:?}");
        }
    }
}
