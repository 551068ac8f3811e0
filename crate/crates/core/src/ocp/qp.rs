//! Dense convex QP with variable bounds and general inequality rows.
//!
//! ```text
//! min  0.5 z' H z + g' z
//! s.t. lower <= z <= upper
//!      a_k' z <= b_k
//! ```
//!
//! Solved with the Goldfarb-Idnani dual active-set method: start from the
//! unconstrained minimizer and add the most violated constraint each outer
//! iteration, dropping constraints whose multipliers would turn negative.
//! The factorization `J' N = [R; 0]` is updated with Givens rotations so each
//! change of the active set costs O(n^2).

use nalgebra::{DMatrix, DVector};

use crate::error::QpError;

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub hessian: DMatrix<f64>,
    pub gradient: DVector<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// General rows `a' z <= b`.
    pub rows: Vec<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub z: DVector<f64>,
    pub objective: f64,
    /// Multipliers of the general rows (>= 0).
    pub row_multipliers: Vec<f64>,
    /// Multipliers of the bounds, positive when the lower bound is active and
    /// negative when the upper bound is active.
    pub bound_multipliers: Vec<f64>,
    pub iterations: usize,
}

/// A constraint normalized to `n' z >= b` with unit-norm normal.
#[derive(Debug, Clone)]
enum Normal {
    /// `sign * z[index]`
    Unit(usize, f64),
    Dense(Vec<f64>),
}

#[derive(Debug, Clone)]
struct Constraint {
    normal: Normal,
    rhs: f64,
    /// Factor that maps the normalized multiplier back to the caller's row.
    scale: f64,
    origin: Origin,
}

#[derive(Debug, Clone, Copy)]
enum Origin {
    Lower(usize),
    Upper(usize),
    Row(usize),
}

impl Constraint {
    fn dot(&self, z: &DVector<f64>) -> f64 {
        match &self.normal {
            Normal::Unit(i, s) => s * z[*i],
            Normal::Dense(a) => a.iter().zip(z.iter()).map(|(a, z)| a * z).sum(),
        }
    }

    /// `J' n`
    fn project(&self, j: &DMatrix<f64>, out: &mut DVector<f64>) {
        let n = j.nrows();
        match &self.normal {
            Normal::Unit(i, s) => {
                for c in 0..n {
                    out[c] = s * j[(*i, c)];
                }
            }
            Normal::Dense(a) => {
                for c in 0..n {
                    let col = j.column(c);
                    out[c] = a.iter().zip(col.iter()).map(|(a, j)| a * j).sum();
                }
            }
        }
    }
}

fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    let h = a.hypot(b);
    if h == 0.0 {
        (1.0, 0.0, 0.0)
    } else {
        (a / h, b / h, h)
    }
}

fn rotate_columns(j: &mut DMatrix<f64>, c1: usize, c2: usize, c: f64, s: f64) {
    for r in 0..j.nrows() {
        let (x, y) = (j[(r, c1)], j[(r, c2)]);
        j[(r, c1)] = c * x + s * y;
        j[(r, c2)] = -s * x + c * y;
    }
}

/// `L^{-T}` for lower-triangular `L`: column `j` of the result is the
/// solution of `L y = e_j`, which vanishes above `j`.
fn lower_inverse_transposed(l: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = l.nrows();
    let lt = l.transpose();
    let mut x = DMatrix::<f64>::zeros(n, n);
    let mut y = vec![0.0; n];
    for j in 0..n {
        y[j] = 1.0 / l[(j, j)];
        for i in j + 1..n {
            let li = &lt.as_slice()[i * n + j..i * n + i];
            let acc: f64 = li.iter().zip(&y[j..i]).map(|(a, b)| a * b).sum();
            y[i] = -acc / l[(i, i)];
        }
        for i in j..n {
            x[(j, i)] = y[i];
        }
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

pub fn solve_qp(problem: &QpProblem) -> Result<QpSolution, QpError> {
    let n = problem.gradient.len();
    if problem.hessian.nrows() != n || problem.hessian.ncols() != n {
        return Err(QpError::Dimension(format!(
            "hessian is {}x{}, gradient has {n} entries",
            problem.hessian.nrows(),
            problem.hessian.ncols()
        )));
    }
    if problem.lower.len() != n || problem.upper.len() != n {
        return Err(QpError::Dimension("bounds length differs from variable count".into()));
    }
    if let Some((a, _)) = problem.rows.iter().find(|(a, _)| a.len() != n) {
        return Err(QpError::Dimension(format!("row has {} entries, expected {n}", a.len())));
    }
    for i in 0..n {
        if problem.lower[i] > problem.upper[i] {
            return Err(QpError::Infeasible);
        }
    }

    let mut cons = Vec::new();
    for i in 0..n {
        if problem.lower[i].is_finite() {
            cons.push(Constraint {
                normal: Normal::Unit(i, 1.0),
                rhs: problem.lower[i],
                scale: 1.0,
                origin: Origin::Lower(i),
            });
        }
        if problem.upper[i].is_finite() {
            cons.push(Constraint {
                normal: Normal::Unit(i, -1.0),
                rhs: -problem.upper[i],
                scale: 1.0,
                origin: Origin::Upper(i),
            });
        }
    }
    for (k, (a, b)) in problem.rows.iter().enumerate() {
        let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            if *b < 0.0 {
                return Err(QpError::Infeasible);
            }
            continue;
        }
        cons.push(Constraint {
            normal: Normal::Dense(a.iter().map(|v| -v / norm).collect()),
            rhs: -b / norm,
            scale: 1.0 / norm,
            origin: Origin::Row(k),
        });
    }
    let m = cons.len();

    let chol = problem.hessian.clone().cholesky().ok_or(QpError::NotConvex)?;
    let l = chol.l();
    let mut jm = lower_inverse_transposed(&l).ok_or(QpError::NotConvex)?;
    let mut r = DMatrix::<f64>::zeros(n, n);

    // unconstrained minimizer z = -J J' g
    let mut z = -(&jm * (jm.transpose() * &problem.gradient));

    let mut active: Vec<usize> = Vec::with_capacity(n);
    let mut mult: Vec<f64> = Vec::with_capacity(n);
    let mut is_active = vec![false; m];
    let mut d = DVector::zeros(n);
    let mut step = DVector::zeros(n);

    let scale_rhs = cons.iter().map(|c| c.rhs.abs()).fold(1.0, f64::max);
    let feas_tol = 1e-11 * scale_rhs.max(z.amax());
    let max_iter = 10 * (n + m) + 50;
    let mut iterations = 0;

    loop {
        // most violated inactive constraint
        let mut pick = None;
        let mut worst = -feas_tol;
        for (i, c) in cons.iter().enumerate() {
            if is_active[i] {
                continue;
            }
            let s = c.dot(&z) - c.rhs;
            if s < worst {
                worst = s;
                pick = Some(i);
            }
        }
        let Some(p) = pick else { break };
        let mut u_p = 0.0;

        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(QpError::IterationLimit(iterations));
            }
            let q = active.len();
            cons[p].project(&jm, &mut d);

            // primal direction z_step = J2 d2
            step.fill(0.0);
            for c in q..n {
                let dc = d[c];
                if dc != 0.0 {
                    for row in 0..n {
                        step[row] += jm[(row, c)] * dc;
                    }
                }
            }
            // dual direction r_dir = R^{-1} d1
            let mut r_dir = vec![0.0; q];
            for i in (0..q).rev() {
                let mut acc = d[i];
                for k in i + 1..q {
                    acc -= r[(i, k)] * r_dir[k];
                }
                r_dir[i] = acc / r[(i, i)];
            }

            let mut t1 = f64::INFINITY;
            let mut drop_at = None;
            for (k, &rk) in r_dir.iter().enumerate() {
                if rk > 0.0 {
                    let ratio = mult[k] / rk;
                    if ratio < t1 {
                        t1 = ratio;
                        drop_at = Some(k);
                    }
                }
            }
            let step_norm = step.amax();
            let zn = cons[p].dot(&step);
            let t2 = if step_norm > 1e-14 * (1.0 + z.amax()) && zn > 0.0 {
                -(cons[p].dot(&z) - cons[p].rhs) / zn
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if t.is_infinite() {
                return Err(QpError::Infeasible);
            }

            if t2.is_finite() {
                z.axpy(t, &step, 1.0);
            }
            for k in 0..q {
                mult[k] -= t * r_dir[k];
            }
            u_p += t;

            if t2.is_finite() && t2 <= t1 {
                // full step: add p
                for c in (q + 1..n).rev() {
                    if d[c] != 0.0 {
                        let (cs, sn, h) = givens(d[c - 1], d[c]);
                        d[c - 1] = h;
                        d[c] = 0.0;
                        rotate_columns(&mut jm, c - 1, c, cs, sn);
                    }
                }
                for i in 0..=q {
                    r[(i, q)] = d[i];
                }
                active.push(p);
                mult.push(u_p);
                is_active[p] = true;
                break;
            }

            // partial step: drop the blocking constraint and retry p
            let k = drop_at.expect("finite partial step has a blocking constraint");
            is_active[active[k]] = false;
            active.remove(k);
            mult.remove(k);
            for col in k..q - 1 {
                for row in 0..=col + 1 {
                    r[(row, col)] = r[(row, col + 1)];
                }
            }
            for row in 0..n {
                r[(row, q - 1)] = 0.0;
            }
            for i in k..q - 1 {
                let (cs, sn, h) = givens(r[(i, i)], r[(i + 1, i)]);
                r[(i, i)] = h;
                r[(i + 1, i)] = 0.0;
                for col in i + 1..q - 1 {
                    let (x, y) = (r[(i, col)], r[(i + 1, col)]);
                    r[(i, col)] = cs * x + sn * y;
                    r[(i + 1, col)] = -sn * x + cs * y;
                }
                rotate_columns(&mut jm, i, i + 1, cs, sn);
            }
        }
    }

    let mut row_multipliers = vec![0.0; problem.rows.len()];
    let mut bound_multipliers = vec![0.0; n];
    for (&c, &u) in active.iter().zip(&mult) {
        match cons[c].origin {
            Origin::Lower(i) => bound_multipliers[i] += u,
            Origin::Upper(i) => bound_multipliers[i] -= u,
            Origin::Row(k) => row_multipliers[k] += u * cons[c].scale,
        }
    }
    let objective = 0.5 * z.dot(&(&problem.hessian * &z)) + problem.gradient.dot(&z);
    Ok(QpSolution {
        z,
        objective,
        row_multipliers,
        bound_multipliers,
        iterations,
    })
}
