use crate::error::OcpError;

/// Continuous-time model plus stage cost and path constraints of an OCP.
///
/// The stage cost is `sum_i w_i * r_i(x, u, p)^2` over the residual vector.
/// Path constraints are inequalities `h(x, u, p) <= 0` applied on stages
/// `0..N`.
pub trait OcpModel {
    fn nx(&self) -> usize;
    fn nu(&self) -> usize;
    fn nr(&self) -> usize;
    fn nc(&self) -> usize {
        0
    }
    /// Number of leading controls that enter the dynamics. Trailing controls
    /// (slack variables) only appear in residuals and constraints.
    fn nu_dynamics(&self) -> usize {
        self.nu()
    }

    fn dynamics(&self, x: &[f64], u: &[f64], p: &[f64], xdot: &mut [f64]);

    fn residuals(&self, x: &[f64], u: &[f64], p: &[f64], r: &mut [f64]);

    fn constraints(&self, _x: &[f64], _u: &[f64], _p: &[f64], _h: &mut [f64]) {}
}

impl<M: OcpModel + ?Sized> OcpModel for &M {
    fn nx(&self) -> usize {
        (**self).nx()
    }
    fn nu(&self) -> usize {
        (**self).nu()
    }
    fn nr(&self) -> usize {
        (**self).nr()
    }
    fn nc(&self) -> usize {
        (**self).nc()
    }
    fn nu_dynamics(&self) -> usize {
        (**self).nu_dynamics()
    }
    fn dynamics(&self, x: &[f64], u: &[f64], p: &[f64], xdot: &mut [f64]) {
        (**self).dynamics(x, u, p, xdot)
    }
    fn residuals(&self, x: &[f64], u: &[f64], p: &[f64], r: &mut [f64]) {
        (**self).residuals(x, u, p, r)
    }
    fn constraints(&self, x: &[f64], u: &[f64], p: &[f64], h: &mut [f64]) {
        (**self).constraints(x, u, p, h)
    }
}

/// A discretized finite-horizon optimal-control problem.
///
/// `params[n]` is the exogenous parameter vector of stage `n` (preview values
/// and the like). Bounds apply at every stage; infinite entries are unbounded.
/// Each shooting interval of length `step` is integrated with `substeps`
/// classical RK4 steps.
#[derive(Debug, Clone)]
pub struct OcpProblem<M> {
    pub model: M,
    pub horizon: usize,
    pub step: f64,
    pub substeps: usize,
    pub weights: Vec<f64>,
    pub x_lo: Vec<f64>,
    pub x_hi: Vec<f64>,
    pub u_lo: Vec<f64>,
    pub u_hi: Vec<f64>,
    pub x0: Vec<f64>,
    pub params: Vec<Vec<f64>>,
}

impl<M: OcpModel> OcpProblem<M> {
    /// Problem with unbounded states/controls, unit weights and empty stage
    /// parameters. Callers fill in the rest.
    pub fn new(model: M, horizon: usize, step: f64, x0: Vec<f64>) -> Self {
        let (nx, nu, nr) = (model.nx(), model.nu(), model.nr());
        Self {
            horizon,
            step,
            substeps: 1,
            weights: vec![1.0; nr],
            x_lo: vec![f64::NEG_INFINITY; nx],
            x_hi: vec![f64::INFINITY; nx],
            u_lo: vec![f64::NEG_INFINITY; nu],
            u_hi: vec![f64::INFINITY; nu],
            x0,
            params: vec![Vec::new(); horizon],
            model,
        }
    }

    pub fn nx(&self) -> usize {
        self.model.nx()
    }

    pub fn nu(&self) -> usize {
        self.model.nu()
    }

    /// Prediction horizon length `N * Ts` in seconds.
    pub fn horizon_time(&self) -> f64 {
        self.horizon as f64 * self.step
    }

    pub fn validate(&self) -> Result<(), OcpError> {
        let (nx, nu, nr) = (self.nx(), self.nu(), self.model.nr());
        if self.horizon == 0 {
            return Err(OcpError::Invalid("horizon must be at least 1".into()));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(OcpError::Invalid(format!("step must be > 0, got {}", self.step)));
        }
        if self.substeps == 0 {
            return Err(OcpError::Invalid("substeps must be at least 1".into()));
        }
        let check = |name: &str, len: usize, want: usize| {
            if len != want {
                Err(OcpError::Dimension(format!("{name}: expected {want}, got {len}")))
            } else {
                Ok(())
            }
        };
        check("x0", self.x0.len(), nx)?;
        check("x_lo", self.x_lo.len(), nx)?;
        check("x_hi", self.x_hi.len(), nx)?;
        check("u_lo", self.u_lo.len(), nu)?;
        check("u_hi", self.u_hi.len(), nu)?;
        check("weights", self.weights.len(), nr)?;
        check("params", self.params.len(), self.horizon)?;
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(OcpError::Invalid("x0 must be finite".into()));
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(OcpError::Invalid(format!("weights must be finite and >= 0, got {w}")));
        }
        for (i, (lo, hi)) in self.x_lo.iter().zip(&self.x_hi).enumerate() {
            if lo > hi || lo.is_nan() || hi.is_nan() {
                return Err(OcpError::Invalid(format!("state bound {i}: {lo} > {hi}")));
            }
        }
        for (i, (lo, hi)) in self.u_lo.iter().zip(&self.u_hi).enumerate() {
            if lo > hi || lo.is_nan() || hi.is_nan() {
                return Err(OcpError::Invalid(format!("control bound {i}: {lo} > {hi}")));
            }
        }
        Ok(())
    }
}

/// State and control sequences of a horizon: `N + 1` states, `N` controls.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.controls.len()
    }

    pub fn is_consistent(&self, nx: usize, nu: usize) -> bool {
        self.states.len() == self.controls.len() + 1
            && self.states.iter().all(|s| s.len() == nx)
            && self.controls.iter().all(|c| c.len() == nu)
    }
}

/// Shift a trajectory one stage earlier for receding-horizon warm starts. The
/// final state and control are duplicated to keep the length.
pub fn shift_warm_start(traj: &Trajectory) -> Trajectory {
    let shift = |v: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        if v.is_empty() {
            return Vec::new();
        }
        let mut out: Vec<Vec<f64>> = v[1..].to_vec();
        out.push(v[v.len() - 1].clone());
        out
    };
    Trajectory {
        states: shift(&traj.states),
        controls: shift(&traj.controls),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterReached,
    Failed,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterReached => "max_iter",
            SolveStatus::Failed => "failed",
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            SolveStatus::Converged => 0,
            SolveStatus::MaxIterReached => 1,
            SolveStatus::Failed => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub trajectory: Trajectory,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    /// Set when `x0` was outside the state bounds and had to be clipped.
    pub x0_clipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_sqp_iters: usize,
    pub qp_tolerance: f64,
    pub levenberg_regularization: f64,
    pub warm_start: bool,
    /// Central differences for the dynamics Jacobians; forward differences
    /// reuse the nominal rollout and cost about half as much.
    pub central_differences: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_sqp_iters: 50,
            qp_tolerance: 1e-6,
            levenberg_regularization: 0.0,
            warm_start: true,
            central_differences: true,
        }
    }
}

impl SolverConfig {
    /// Small fixed iteration budget for online use.
    pub fn real_time(iters: usize) -> Self {
        Self {
            max_sqp_iters: iters,
            qp_tolerance: 1e-6,
            levenberg_regularization: 1e-8,
            warm_start: true,
            central_differences: true,
        }
    }

    pub fn validate(&self) -> Result<(), OcpError> {
        if self.max_sqp_iters == 0 {
            return Err(OcpError::Invalid("max_sqp_iters must be >= 1".into()));
        }
        if !(self.qp_tolerance > 0.0) {
            return Err(OcpError::Invalid("qp_tolerance must be > 0".into()));
        }
        if !(self.levenberg_regularization >= 0.0) {
            return Err(OcpError::Invalid("levenberg_regularization must be >= 0".into()));
        }
        Ok(())
    }
}

/// Per-call summary a controller reports after solving its OCP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub iterations: usize,
    pub kkt_residual: f64,
    pub status: SolveStatus,
    /// The solver failed and the controller fell back to its safe command.
    pub fallback: bool,
    /// Wall-clock time of the call in seconds.
    pub wall_time: f64,
}

impl StepStats {
    pub fn from_result(r: &SolveResult, wall_time: f64) -> Self {
        Self {
            iterations: r.iterations,
            kkt_residual: r.kkt_residual,
            status: r.status,
            fallback: false,
            wall_time,
        }
    }

    pub fn failed(iterations: usize, wall_time: f64) -> Self {
        Self {
            iterations,
            kkt_residual: f64::INFINITY,
            status: SolveStatus::Failed,
            fallback: true,
            wall_time,
        }
    }
}
