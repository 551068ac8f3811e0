//! Linear-quadratic test problems and their dense least-squares oracle.
//!
//! The oracle builds the discrete matrices from the closed-form RK4 Taylor
//! polynomial and solves the stacked weighted least-squares problem directly,
//! without touching the solver's finite-difference or condensing code.

use nalgebra::{DMatrix, DVector};
use preempt_core::ocp::{OcpModel, OcpProblem};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct LinearQuadratic {
    pub ac: DMatrix<f64>,
    pub bc: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub e: DVector<f64>,
    pub weights: Vec<f64>,
    pub ts: f64,
    pub horizon: usize,
    pub x0: Vec<f64>,
    pub u_lo: Vec<f64>,
    pub u_hi: Vec<f64>,
}

impl OcpModel for LinearQuadratic {
    fn nx(&self) -> usize {
        self.ac.nrows()
    }
    fn nu(&self) -> usize {
        self.bc.ncols()
    }
    fn nr(&self) -> usize {
        self.c.nrows()
    }
    fn dynamics(&self, x: &[f64], u: &[f64], _: &[f64], out: &mut [f64]) {
        for i in 0..self.nx() {
            out[i] = (0..self.nx()).map(|j| self.ac[(i, j)] * x[j]).sum::<f64>()
                + (0..self.nu()).map(|j| self.bc[(i, j)] * u[j]).sum::<f64>();
        }
    }
    fn residuals(&self, x: &[f64], u: &[f64], _: &[f64], r: &mut [f64]) {
        for i in 0..self.nr() {
            r[i] = (0..self.nx()).map(|j| self.c[(i, j)] * x[j]).sum::<f64>()
                + (0..self.nu()).map(|j| self.d[(i, j)] * u[j]).sum::<f64>()
                - self.e[i];
        }
    }
}

impl LinearQuadratic {
    pub fn double_integrator(horizon: usize, ts: f64) -> Self {
        Self {
            ac: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            bc: DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            c: DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]),
            d: DMatrix::from_row_slice(3, 1, &[0.0, 0.0, 1.0]),
            e: DVector::from_vec(vec![1.0, 0.0, 0.0]),
            weights: vec![1.0, 0.1, 0.01],
            ts,
            horizon,
            x0: vec![0.0, 0.0],
            u_lo: vec![f64::NEG_INFINITY],
            u_hi: vec![f64::INFINITY],
        }
    }

    pub fn problem(&self) -> OcpProblem<&LinearQuadratic> {
        let mut p = OcpProblem::new(self, self.horizon, self.ts, self.x0.clone());
        p.weights = self.weights.clone();
        p.u_lo = self.u_lo.clone();
        p.u_hi = self.u_hi.clone();
        p
    }

    /// Exact RK4 discretization of a linear system with held input.
    pub fn discrete(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.nx();
        let h = self.ts;
        let a = &self.ac;
        let a2 = a * a;
        let a3 = &a2 * a;
        let a4 = &a3 * a;
        let id = DMatrix::<f64>::identity(n, n);
        let ad = &id + a * h + &a2 * (h * h / 2.0) + &a3 * (h.powi(3) / 6.0) + &a4 * (h.powi(4) / 24.0);
        let bd = (&id * h + a * (h * h / 2.0) + &a2 * (h.powi(3) / 6.0) + &a3 * (h.powi(4) / 24.0)) * &self.bc;
        (ad, bd)
    }

    /// Weighted stacked system `sqrt(W) (M U - c)` over all stages.
    pub fn stacked(&self) -> (DMatrix<f64>, DVector<f64>) {
        let (nx, nu, nr, big_n) = (self.nx(), self.nu(), self.nr(), self.horizon);
        let (ad, bd) = self.discrete();
        let mut m = DMatrix::zeros(big_n * nr, big_n * nu);
        let mut c = DVector::zeros(big_n * nr);
        // free response and input-to-state blocks
        let mut phi = DMatrix::<f64>::identity(nx, nx);
        let x0 = DVector::from_column_slice(&self.x0);
        let mut gamma: Vec<DMatrix<f64>> = Vec::new();
        for n in 0..big_n {
            let free = &phi * &x0;
            let target = &self.e - &self.c * &free;
            for i in 0..nr {
                let sw = self.weights[i].sqrt();
                c[n * nr + i] = sw * target[i];
                for (k, g) in gamma.iter().enumerate() {
                    let blk = &self.c * g;
                    for j in 0..nu {
                        m[(n * nr + i, k * nu + j)] = sw * blk[(i, j)];
                    }
                }
                for j in 0..nu {
                    m[(n * nr + i, n * nu + j)] += sw * self.d[(i, j)];
                }
            }
            for g in gamma.iter_mut() {
                *g = &ad * &*g;
            }
            gamma.push(bd.clone());
            phi = &ad * phi;
        }
        (m, c)
    }

    pub fn cost(&self, m: &DMatrix<f64>, c: &DVector<f64>, u: &DVector<f64>) -> f64 {
        (m * u - c).norm_squared()
    }

    /// Unconstrained optimum via SVD least squares.
    pub fn dense_optimum(&self) -> (Vec<f64>, f64) {
        let (m, c) = self.stacked();
        let svd = m.clone().svd(true, true);
        let u = svd.solve(&c, 1e-14).expect("svd solve");
        let j = self.cost(&m, &c, &u);
        (u.iter().copied().collect(), j)
    }
}

/// Grid search over box-bounded scalar controls of a short horizon. A coarse
/// pass over the whole box is refined on a fine grid around its best point,
/// which is exact enough for these strictly convex problems.
pub fn grid_search(lq: &LinearQuadratic, spacing: f64) -> (Vec<f64>, f64) {
    assert_eq!(lq.nu(), 1);
    let (m, c) = lq.stacked();
    let q = m.transpose() * &m;
    let b = m.transpose() * &c;
    let k = c.norm_squared();
    let (lo, hi) = (lq.u_lo[0], lq.u_hi[0]);
    let f = |u: &[f64]| {
        let mut f = k;
        for i in 0..u.len() {
            f -= 2.0 * b[i] * u[i];
            for j in 0..u.len() {
                f += u[i] * q[(i, j)] * u[j];
            }
        }
        f
    };
    let axis = |from: f64, to: f64, h: f64| -> Vec<f64> {
        let steps = ((to - from) / h).ceil() as usize;
        (0..=steps).map(|i| (from + i as f64 * h).min(to)).collect()
    };
    let n = lq.horizon;
    let coarse = 20.0 * spacing;
    let grids = vec![axis(lo, hi, coarse); n];
    let (best, _) = scan(&grids, &f);
    let grids: Vec<Vec<f64>> = best
        .iter()
        .map(|&u| axis((u - 2.0 * coarse).max(lo), (u + 2.0 * coarse).min(hi), spacing))
        .collect();
    scan(&grids, &f)
}

fn scan(grids: &[Vec<f64>], f: &impl Fn(&[f64]) -> f64) -> (Vec<f64>, f64) {
    let n = grids.len();
    let mut idx = vec![0usize; n];
    let mut u = vec![0.0; n];
    let mut best = (vec![0.0; n], f64::INFINITY);
    loop {
        for s in 0..n {
            u[s] = grids[s][idx[s]];
        }
        let v = f(&u);
        if v < best.1 {
            best = (u.clone(), v);
        }
        let mut s = 0;
        loop {
            if s == n {
                return best;
            }
            idx[s] += 1;
            if idx[s] < grids[s].len() {
                break;
            }
            idx[s] = 0;
            s += 1;
        }
    }
}

pub fn random_lq(rng: &mut impl Rng, bounded: bool) -> LinearQuadratic {
    let nx = rng.random_range(1..=4);
    let nu = rng.random_range(1..=2);
    let horizon = rng.random_range(1..=10);
    let nr = nx + nu;
    let ac = DMatrix::from_fn(nx, nx, |_, _| rng.random_range(-1.0..1.0));
    let bc = DMatrix::from_fn(nx, nu, |_, _| rng.random_range(-1.0..1.0));
    let mut c = DMatrix::zeros(nr, nx);
    let mut d = DMatrix::zeros(nr, nu);
    for i in 0..nx {
        c[(i, i)] = 1.0;
    }
    for j in 0..nu {
        d[(nx + j, j)] = 1.0;
    }
    let e = DVector::from_fn(nr, |_, _| rng.random_range(-1.0..1.0));
    let weights = (0..nr).map(|_| rng.random_range(0.1..2.0)).collect();
    let x0 = (0..nx).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (u_lo, u_hi) = if bounded {
        (
            (0..nu).map(|_| rng.random_range(-0.5..-0.05)).collect(),
            (0..nu).map(|_| rng.random_range(0.05..0.5)).collect(),
        )
    } else {
        (vec![f64::NEG_INFINITY; nu], vec![f64::INFINITY; nu])
    };
    LinearQuadratic {
        ac,
        bc,
        c,
        d,
        e,
        weights,
        ts: 0.1,
        horizon,
        x0,
        u_lo,
        u_hi,
    }
}
