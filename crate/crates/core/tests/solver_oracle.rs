//! Solver checks against independent dense oracles.

mod common;

use common::lq::{grid_search, random_lq, LinearQuadratic};
use nalgebra::DMatrix;
use preempt_core::ocp::{solve, OcpModel, OcpProblem, SolveStatus, SolverConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tight() -> SolverConfig {
    SolverConfig {
        max_sqp_iters: 20,
        qp_tolerance: 1e-9,
        levenberg_regularization: 0.0,
        warm_start: false,
        central_differences: true,
    }
}

#[test]
fn double_integrator_matches_dense_least_squares() {
    let lq = LinearQuadratic::double_integrator(10, 0.1);
    let (u_ref, j_ref) = lq.dense_optimum();
    let res = solve(&lq.problem(), &tight(), None).unwrap();
    assert_eq!(res.status, SolveStatus::Converged);
    assert!((res.objective - j_ref).abs() <= 1e-6 * j_ref.abs().max(1e-12), "{} vs {j_ref}", res.objective);
    for (n, u) in res.trajectory.controls.iter().enumerate() {
        assert!((u[0] - u_ref[n]).abs() < 1e-6, "stage {n}: {} vs {}", u[0], u_ref[n]);
    }
}

#[test]
fn control_bound_clamps_binding_stages() {
    let mut lq = LinearQuadratic::double_integrator(3, 0.1);
    let (u_free, _) = lq.dense_optimum();
    let cap = 0.5 * u_free.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    lq.u_lo = vec![-cap];
    lq.u_hi = vec![cap];
    let res = solve(&lq.problem(), &tight(), None).unwrap();
    let (u_grid, j_grid) = grid_search(&lq, 1e-3);
    assert!(res.objective <= j_grid + 1e-12);
    for (n, u) in res.trajectory.controls.iter().enumerate() {
        assert!((u[0] - u_grid[n]).abs() <= 1e-3 + 1e-9, "stage {n}: {} vs grid {}", u[0], u_grid[n]);
        if u_free[n] > cap {
            assert!((u[0] - cap).abs() < 1e-9, "stage {n} should clamp at {cap}, got {}", u[0]);
        }
    }
}

#[test]
fn random_problems_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..20 {
        let lq = random_lq(&mut rng, false);
        let (_, j_ref) = lq.dense_optimum();
        let res = solve(&lq.problem(), &tight(), None).unwrap();
        assert_eq!(res.status, SolveStatus::Converged, "case {case}");
        assert!((res.objective - j_ref).abs() <= 1e-6 * j_ref.abs().max(1e-9), "case {case}: {} vs {j_ref}", res.objective);
    }
}

/// Double integrator with a soft upper bound on position realized through a
/// slack control.
struct SoftBound {
    target: f64,
    limit: f64,
}

impl OcpModel for SoftBound {
    fn nx(&self) -> usize {
        2
    }
    fn nu(&self) -> usize {
        2
    }
    fn nr(&self) -> usize {
        3
    }
    fn nc(&self) -> usize {
        1
    }
    fn dynamics(&self, x: &[f64], u: &[f64], _: &[f64], d: &mut [f64]) {
        d[0] = x[1];
        d[1] = u[0];
    }
    fn residuals(&self, x: &[f64], u: &[f64], _: &[f64], r: &mut [f64]) {
        r[0] = x[0] - self.target;
        r[1] = u[0];
        r[2] = u[1];
    }
    fn constraints(&self, x: &[f64], u: &[f64], _: &[f64], h: &mut [f64]) {
        h[0] = x[0] - self.limit - u[1];
    }
}

fn soft_problem(slack_weight: f64) -> OcpProblem<SoftBound> {
    let mut p = OcpProblem::new(SoftBound { target: 1.0, limit: 0.4 }, 10, 0.2, vec![0.0, 0.0]);
    p.weights = vec![1.0, 0.01, slack_weight];
    p.u_lo = vec![f64::NEG_INFINITY, 0.0];
    p
}

#[test]
fn slack_magnitude_is_monotone_in_weight() {
    let mut prev = f64::INFINITY;
    for w in [0.1, 1.0, 10.0, 100.0, 1000.0] {
        let res = solve(&soft_problem(w), &tight(), None).unwrap();
        assert_eq!(res.status, SolveStatus::Converged, "weight {w}");
        let slack: f64 = res.trajectory.controls.iter().map(|u| u[1]).sum();
        assert!(res.trajectory.controls.iter().all(|u| u[1] >= -1e-9));
        assert!(slack <= prev + 1e-9, "weight {w}: slack {slack} > {prev}");
        prev = slack;
    }
}

#[test]
fn soft_constraint_is_exact_when_slack_is_expensive() {
    let res = solve(&soft_problem(1e6), &tight(), None).unwrap();
    for (n, x) in res.trajectory.states.iter().enumerate().take(10) {
        assert!(x[0] <= 0.4 + 1e-3, "stage {n}: {}", x[0]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bounded_results_respect_bounds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lq = random_lq(&mut rng, true);
        let cfg = tight();
        let res = solve(&lq.problem(), &cfg, None).unwrap();
        if res.status == SolveStatus::Converged {
            let eps = 10.0 * cfg.qp_tolerance;
            for u in &res.trajectory.controls {
                for i in 0..u.len() {
                    prop_assert!(u[i] >= lq.u_lo[i] - eps && u[i] <= lq.u_hi[i] + eps);
                }
            }
        }
    }

    #[test]
    fn unbounded_objective_matches_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lq = random_lq(&mut rng, false);
        let (_, j_ref) = lq.dense_optimum();
        let res = solve(&lq.problem(), &tight(), None).unwrap();
        prop_assert!((res.objective - j_ref).abs() <= 1e-6 * j_ref.abs().max(1e-9));
    }
}

#[test]
fn oracle_rk4_polynomial_matches_integrator() {
    // the oracle's closed-form discrete matrices agree with one RK4 step
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let lq = random_lq(&mut rng, false);
    let (ad, bd) = lq.discrete();
    let x: Vec<f64> = (0..lq.nx()).map(|i| 0.3 * i as f64 - 0.2).collect();
    let u: Vec<f64> = (0..lq.nu()).map(|i| 0.5 - i as f64).collect();
    let next = preempt_core::ocp::integrate_rk4(|x, u, p, d| lq.dynamics(x, u, p, d), &x, &u, &[], lq.ts).unwrap();
    let expect = &ad * DMatrix::from_column_slice(x.len(), 1, &x) + &bd * DMatrix::from_column_slice(u.len(), 1, &u);
    for i in 0..x.len() {
        assert!((next[i] - expect[(i, 0)]).abs() < 1e-12);
    }
}
