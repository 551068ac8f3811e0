use crate::error::SimError;
use crate::ocp::{rk4_in_place, Rk4Scratch};

use super::delay::DelayLine;
use super::params::{TireParams, VehicleParams, GRAVITY};
use super::tire::combined_forces;

/// Regularization speed for slip denominators (m/s).
pub const V_EPS: f64 = 0.5;
/// Wheel speed scale of the smooth brake-torque sign (rad/s).
const BRAKE_SIGN_SCALE: f64 = 0.1;
/// Body speed scale of the smooth rolling-resistance sign (m/s).
const ROLL_SIGN_SCALE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub vx: f64,
    pub vy: f64,
    pub yaw_rate: f64,
    /// FL, FR, RL, RR.
    pub omega: [f64; 4],
    pub tau_m_actual: f64,
    pub s_travel: f64,
}

impl PlantState {
    /// Straight-line rolling at speed `v` with free-rolling wheels.
    pub fn rolling(v: f64, r_wheel: f64) -> Self {
        Self {
            vx: v,
            omega: [v / r_wheel; 4],
            ..Default::default()
        }
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    pub fn beta(&self) -> f64 {
        self.vy.atan2(self.vx)
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|v| v.is_finite()) && self.tau_m_actual.is_finite()
    }

    fn to_vec(self) -> [f64; 11] {
        [
            self.x,
            self.y,
            self.psi,
            self.vx,
            self.vy,
            self.yaw_rate,
            self.omega[0],
            self.omega[1],
            self.omega[2],
            self.omega[3],
            self.s_travel,
        ]
    }

    fn from_slice(v: &[f64], tau: f64) -> Self {
        Self {
            x: v[0],
            y: v[1],
            psi: v[2],
            vx: v[3],
            vy: v[4],
            yaw_rate: v[5],
            omega: [v[6], v[7], v[8], v[9]],
            tau_m_actual: tau,
            s_travel: v[10],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActuatorInput {
    pub tau_m_cmd: f64,
    pub tau_brake: [f64; 4],
    pub delta: f64,
}

/// Quasi-static vertical loads (FL, FR, RL, RR). Longitudinal transfer
/// `m ax h / L` moves load from the front axle to the rear; lateral transfer
/// `m_axle ay h / track` moves load to the right wheels for `ay > 0` (left
/// turn). Each load is floored at zero after the transfer.
pub fn vertical_loads(ax: f64, ay: f64, p: &VehicleParams) -> [f64; 4] {
    let raw = vertical_loads_unfloored(ax, ay, p);
    raw.map(|f| f.max(0.0))
}

pub fn vertical_loads_unfloored(ax: f64, ay: f64, p: &VehicleParams) -> [f64; 4] {
    let l = p.wheelbase();
    let front = p.m * GRAVITY * p.b / l - p.m * ax * p.h / l;
    let rear = p.m * GRAVITY * p.a / l + p.m * ax * p.h / l;
    let lat_f = p.m * (p.b / l) * ay * p.h / p.tw_f;
    let lat_r = p.m * (p.a / l) * ay * p.h / p.tw_r;
    [
        0.5 * front - lat_f,
        0.5 * front + lat_f,
        0.5 * rear - lat_r,
        0.5 * rear + lat_r,
    ]
}

/// Planar body motion and wheel spin rates for given velocities and
/// per-wheel torques, with all intermediate tire quantities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChassisRates {
    pub vx_dot: f64,
    pub vy_dot: f64,
    pub yaw_acc: f64,
    pub omega_dot: [f64; 4],
    /// Body-frame accelerations felt at the CoG.
    pub ax: f64,
    pub ay: f64,
    pub fz: [f64; 4],
    pub sigma: [f64; 4],
    pub alpha: [f64; 4],
    /// Wheel-frame longitudinal forces.
    pub fx: [f64; 4],
}

struct Corners {
    fxb: [f64; 4],
    fyb: [f64; 4],
    fx: [f64; 4],
    sigma: [f64; 4],
    alpha: [f64; 4],
}

#[allow(clippy::too_many_arguments)]
fn corners(
    vx: f64,
    vy: f64,
    r: f64,
    omega: &[f64; 4],
    delta: f64,
    fz: &[f64; 4],
    mu: &[f64; 4],
    p: &VehicleParams,
    t: &TireParams,
) -> Corners {
    let mut c = Corners {
        fxb: [0.0; 4],
        fyb: [0.0; 4],
        fx: [0.0; 4],
        sigma: [0.0; 4],
        alpha: [0.0; 4],
    };
    let (sd, cd) = delta.sin_cos();
    for (i, (xi, yi)) in p.corner_positions().into_iter().enumerate() {
        let vxw = vx - r * yi;
        let vyw = vy + r * xi;
        let (s, co) = if i < 2 { (sd, cd) } else { (0.0, 1.0) };
        let v_long = vxw * co + vyw * s;
        let v_lat = -vxw * s + vyw * co;
        let wr = omega[i] * p.r_wheel;
        let sigma = (wr - v_long) / wr.abs().max(V_EPS);
        let alpha = (v_lat / v_long.abs().max(V_EPS)).atan();
        let (fx, fy) = combined_forces(sigma, alpha, mu[i], fz[i], t);
        c.fxb[i] = fx * co - fy * s;
        c.fyb[i] = fx * s + fy * co;
        c.fx[i] = fx;
        c.sigma[i] = sigma;
        c.alpha[i] = alpha;
    }
    c
}

fn resistance(vx: f64, p: &VehicleParams) -> f64 {
    p.drag_coeff * vx * vx.abs() + p.roll_res * p.m * GRAVITY * (vx / ROLL_SIGN_SCALE).tanh()
}

/// Double-track rates. Loads come from one fixed-point pass: forces at static
/// load give the accelerations, which set the transferred loads used for the
/// final forces.
#[allow(clippy::too_many_arguments)]
pub fn chassis_rates(
    vx: f64,
    vy: f64,
    r: f64,
    omega: &[f64; 4],
    delta: f64,
    drive: &[f64; 4],
    brake: &[f64; 4],
    mu: &[f64; 4],
    p: &VehicleParams,
    t: &TireParams,
) -> ChassisRates {
    let res = resistance(vx, p);
    let fz0 = vertical_loads(0.0, 0.0, p);
    let c0 = corners(vx, vy, r, omega, delta, &fz0, mu, p, t);
    let ax0 = (c0.fxb.iter().sum::<f64>() - res) / p.m;
    let ay0 = c0.fyb.iter().sum::<f64>() / p.m;
    let fz = vertical_loads(ax0, ay0, p);
    let c = corners(vx, vy, r, omega, delta, &fz, mu, p, t);
    let ax = (c.fxb.iter().sum::<f64>() - res) / p.m;
    let ay = c.fyb.iter().sum::<f64>() / p.m;
    let mut mz = 0.0;
    for (i, (xi, yi)) in p.corner_positions().into_iter().enumerate() {
        mz += xi * c.fyb[i] - yi * c.fxb[i];
    }
    let mut omega_dot = [0.0; 4];
    for i in 0..4 {
        let tb = brake[i].max(0.0) * (omega[i] / BRAKE_SIGN_SCALE).tanh();
        omega_dot[i] = (drive[i] - tb - c.fx[i] * p.r_wheel) / p.jw;
    }
    ChassisRates {
        vx_dot: ax + r * vy,
        vy_dot: ay - r * vx,
        yaw_acc: mz / p.iz,
        omega_dot,
        ax,
        ay,
        fz,
        sigma: c.sigma,
        alpha: c.alpha,
        fx: c.fx,
    }
}

/// Per-wheel drive torque from a motor torque through an open differential.
pub fn drive_split(tau_m: f64, p: &VehicleParams) -> [f64; 4] {
    let mut d = [0.0; 4];
    for i in p.driven_axle.wheels() {
        d[i] = 0.5 * tau_m * p.gear_ratio;
    }
    d
}

/// Largest wheel-spin eigenvalue magnitude, an upper estimate used to pick
/// a stable integration step.
pub fn wheel_stiffness(omega: &[f64; 4], mu: &[f64; 4], p: &VehicleParams, t: &TireParams) -> f64 {
    let fz = vertical_loads(0.0, 0.0, p);
    (0..4)
        .map(|i| {
            let c_sigma = mu[i].max(0.0) * 1.6 * fz[i] * t.bx * t.cx * t.dx;
            let denom = (omega[i] * p.r_wheel).abs().max(V_EPS);
            c_sigma * p.r_wheel * p.r_wheel / (p.jw * denom)
        })
        .fold(0.0, f64::max)
}

/// Number of RK4 substeps that keeps `h * lambda` inside the stability region
/// with margin.
pub fn stable_substeps(dt: f64, lambda: f64) -> usize {
    ((dt * lambda / 2.0).ceil() as usize).clamp(1, 10_000)
}

fn state_rates(x: &[f64], input: &ActuatorInput, tau_m: f64, mu: &[f64; 4], p: &VehicleParams, t: &TireParams, d: &mut [f64]) {
    let (psi, vx, vy, r) = (x[2], x[3], x[4], x[5]);
    let omega = [x[6], x[7], x[8], x[9]];
    let drive = drive_split(tau_m, p);
    let c = chassis_rates(vx, vy, r, &omega, input.delta, &drive, &input.tau_brake, mu, p, t);
    let (sp, cp) = psi.sin_cos();
    d[0] = vx * cp - vy * sp;
    d[1] = vx * sp + vy * cp;
    d[2] = r;
    d[3] = c.vx_dot;
    d[4] = c.vy_dot;
    d[5] = c.yaw_acc;
    d[6..10].copy_from_slice(&c.omega_dot);
    d[10] = vx.hypot(vy);
}

/// Advance the plant by `dt`. `input.tau_m_cmd` is applied as the delivered
/// motor torque (clamped to the motor limit) and held over the step; route
/// it through a [`DelayLine`] first to model the powertrain response. The
/// step is split into enough RK4 substeps to keep the wheel-spin dynamics
/// stable.
pub fn plant_step(
    state: &PlantState,
    input: &ActuatorInput,
    mu: &[f64; 4],
    dt: f64,
    p: &VehicleParams,
    t: &TireParams,
) -> Result<PlantState, SimError> {
    let tau = input.tau_m_cmd.clamp(-p.tau_m_max, p.tau_m_max);
    let n = stable_substeps(dt, wheel_stiffness(&state.omega, mu, p, t));
    let h = dt / n as f64;
    let mut x = state.to_vec();
    let mut scratch = Rk4Scratch::new(11);
    let f = |x: &[f64], _: &[f64], _: &[f64], d: &mut [f64]| state_rates(x, input, tau, mu, p, t, d);
    for _ in 0..n {
        if !rk4_in_place(&f, &mut x, &[], &[], h, &mut scratch) {
            return Err(SimError::NonFinite { step: 0 });
        }
    }
    Ok(PlantState::from_slice(&x, tau))
}

/// Tire and body quantities at the current state, for logging and
/// measurement.
pub fn plant_diagnostics(state: &PlantState, input: &ActuatorInput, mu: &[f64; 4], p: &VehicleParams, t: &TireParams) -> ChassisRates {
    let drive = drive_split(state.tau_m_actual, p);
    chassis_rates(
        state.vx,
        state.vy,
        state.yaw_rate,
        &state.omega,
        input.delta,
        &drive,
        &input.tau_brake,
        mu,
        p,
        t,
    )
}

/// A plant together with its powertrain delay line and a step counter.
#[derive(Debug, Clone)]
pub struct Vehicle {
    pub params: VehicleParams,
    pub tires: TireParams,
    pub state: PlantState,
    delay: DelayLine,
    steps: usize,
}

impl Vehicle {
    pub fn new(params: VehicleParams, tires: TireParams, state: PlantState, delay: DelayLine) -> Self {
        Self {
            params,
            tires,
            state,
            delay,
            steps: 0,
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn delay_line(&self) -> &DelayLine {
        &self.delay
    }

    pub fn step(&mut self, input: &ActuatorInput, mu: &[f64; 4], dt: f64) -> Result<&PlantState, SimError> {
        let delivered = self.delay.push_pop(input.tau_m_cmd);
        let applied = ActuatorInput {
            tau_m_cmd: delivered,
            ..*input
        };
        let next = plant_step(&self.state, &applied, mu, dt, &self.params, &self.tires)
            .map_err(|_| SimError::NonFinite { step: self.steps })?;
        if !next.is_finite() {
            return Err(SimError::NonFinite { step: self.steps });
        }
        self.state = next;
        self.steps += 1;
        Ok(&self.state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_loads_sum_to_weight() {
        let p = VehicleParams::traction_default();
        let fz = vertical_loads(0.0, 0.0, &p);
        let total: f64 = fz.iter().sum();
        assert!((total - p.m * GRAVITY).abs() < 1e-9);
        assert!(((fz[0] + fz[1]) / total - p.b / p.wheelbase()).abs() < 1e-12);
    }

    #[test]
    fn longitudinal_transfer_example() {
        let mut p = VehicleParams::traction_default();
        p.a = 1.0;
        p.b = 1.0;
        p.h = 0.5;
        let fz0 = vertical_loads(0.0, 0.0, &p);
        let fz = vertical_loads(5.0, 0.0, &p);
        let drop = (fz0[0] + fz0[1]) - (fz[0] + fz[1]);
        assert!((drop - 1125.0).abs() < 1e-9);
        assert_eq!(fz[0], fz[1]);
        assert_eq!(fz[2], fz[3]);
        assert!(fz[2] > fz0[2]);
    }

    #[test]
    fn equilibrium_at_rest() {
        let p = VehicleParams::traction_default();
        let t = TireParams::default();
        let s0 = PlantState::default();
        let s1 = plant_step(&s0, &ActuatorInput::default(), &[1.0; 4], 0.001, &p, &t).unwrap();
        assert!(s1.to_vec().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn vehicle_applies_delay() {
        let p = VehicleParams::traction_default();
        let t = TireParams::default();
        let mut v = Vehicle::new(p, t, PlantState::rolling(5.0, 0.28), DelayLine::new(0.01, 0.0, 0.001));
        let input = ActuatorInput {
            tau_m_cmd: 50.0,
            ..Default::default()
        };
        for _ in 0..10 {
            assert_eq!(v.step(&input, &[1.0; 4], 0.001).unwrap().tau_m_actual, 0.0);
        }
        assert_eq!(v.step(&input, &[1.0; 4], 0.001).unwrap().tau_m_actual, 50.0);
        assert_eq!(v.steps(), 11);
    }
}
