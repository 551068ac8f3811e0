use crate::plant::{magic_formula, Axis, TireParams};

/// Reference slip ratios over a (mu, Fz) grid, each a fixed fraction of the
/// slip at which the longitudinal force peaks.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSlipTable {
    mu_grid: Vec<f64>,
    fz_grid: Vec<f64>,
    /// Row-major, one row per mu node.
    values: Vec<f64>,
    margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSlip {
    pub value: f64,
    /// Set when the query was outside the grid and had to be clamped.
    pub clamped: bool,
}

/// Slip of maximum longitudinal force, from a scan at `resolution` polished
/// by golden-section search.
pub fn force_peak_slip(mu: f64, fz: f64, tire: &TireParams, resolution: f64) -> f64 {
    let f = |s: f64| magic_formula(s, mu, fz, tire, Axis::Longitudinal);
    let steps = (1.0 / resolution).ceil() as usize;
    let mut best = (resolution, f(resolution));
    for i in 2..=steps {
        let s = i as f64 * resolution;
        let v = f(s);
        if v > best.1 {
            best = (s, v);
        }
    }
    let (mut lo, mut hi) = ((best.0 - resolution).max(0.0), best.0 + resolution);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..40 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if f(x1) < f(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    0.5 * (lo + hi)
}

impl ReferenceSlipTable {
    pub fn build(tire: &TireParams, margin: f64, mu_grid: Vec<f64>, fz_grid: Vec<f64>) -> Self {
        assert!(!mu_grid.is_empty() && !fz_grid.is_empty());
        let mut values = Vec::with_capacity(mu_grid.len() * fz_grid.len());
        for &mu in &mu_grid {
            for &fz in &fz_grid {
                values.push((margin * force_peak_slip(mu, fz, tire, 1e-3)).clamp(1e-4, 0.2));
            }
        }
        Self {
            mu_grid,
            fz_grid,
            values,
            margin,
        }
    }

    /// Table on mu in [0.05, 1.2] (step 0.05) and Fz in [250, 8000] N.
    pub fn standard(tire: &TireParams, margin: f64) -> Self {
        let mu: Vec<f64> = (1..=24).map(|i| 0.05 * i as f64).collect();
        let fz: Vec<f64> = (0..=31).map(|i| 250.0 + 250.0 * i as f64).collect();
        Self::build(tire, margin, mu, fz)
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn mu_grid(&self) -> &[f64] {
        &self.mu_grid
    }

    pub fn fz_grid(&self) -> &[f64] {
        &self.fz_grid
    }

    pub fn node(&self, i_mu: usize, i_fz: usize) -> f64 {
        self.values[i_mu * self.fz_grid.len() + i_fz]
    }

    pub fn lookup(&self, mu: f64, fz: f64) -> ReferenceSlip {
        let (i, wi, c1) = bracket(&self.mu_grid, mu);
        let (j, wj, c2) = bracket(&self.fz_grid, fz);
        let nf = self.fz_grid.len();
        let at = |a: usize, b: usize| self.values[a * nf + b];
        let i1 = (i + 1).min(self.mu_grid.len() - 1);
        let j1 = (j + 1).min(nf - 1);
        let v = (1.0 - wi) * ((1.0 - wj) * at(i, j) + wj * at(i, j1)) + wi * ((1.0 - wj) * at(i1, j) + wj * at(i1, j1));
        ReferenceSlip {
            value: v,
            clamped: c1 || c2,
        }
    }
}

/// Lower node index, interpolation weight and clamp flag.
fn bracket(grid: &[f64], x: f64) -> (usize, f64, bool) {
    let n = grid.len();
    if n == 1 {
        return (0, 0.0, x != grid[0]);
    }
    if !(x >= grid[0]) {
        return (0, 0.0, true);
    }
    if x >= grid[n - 1] {
        return (n - 1, 0.0, x > grid[n - 1]);
    }
    let i = grid.partition_point(|g| *g <= x) - 1;
    (i, (x - grid[i]) / (grid[i + 1] - grid[i]), false)
}

/// Reference slip for `(mu, Fz)`.
pub fn reference_slip(mu: f64, fz: f64, table: &ReferenceSlipTable) -> ReferenceSlip {
    table.lookup(mu, fz)
}
