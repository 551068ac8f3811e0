use crate::ocp::OcpModel;
use crate::plant::{chassis_rates, drive_split, PlantState, TireParams, VehicleParams, V_EPS};

/// Double-track state: path distance, speed, sideslip, yaw rate and the four
/// wheel speeds (FL, FR, RL, RR).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DtState {
    pub s: f64,
    pub v: f64,
    pub beta: f64,
    pub yaw_rate: f64,
    pub omega: [f64; 4],
}

impl DtState {
    pub fn from_plant(p: &PlantState) -> Self {
        Self {
            s: p.s_travel,
            v: p.speed(),
            beta: p.beta(),
            yaw_rate: p.yaw_rate,
            omega: p.omega,
        }
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![
            self.s,
            self.v,
            self.beta,
            self.yaw_rate,
            self.omega[0],
            self.omega[1],
            self.omega[2],
            self.omega[3],
        ]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            s: x[0],
            v: x[1],
            beta: x[2],
            yaw_rate: x[3],
            omega: [x[4], x[5], x[6], x[7]],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DtControl {
    pub tau_wh: f64,
    pub eps_v: f64,
    pub eps_alpha: f64,
}

/// Motor torque plus per-wheel friction brake torques (magnitudes).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TorqueAllocation {
    pub motor: f64,
    pub brake: [f64; 4],
}

impl TorqueAllocation {
    /// Total torque at the wheels, drive positive.
    pub fn wheel_torque(&self, p: &VehicleParams) -> f64 {
        p.gear_ratio * self.motor - self.brake.iter().sum::<f64>()
    }
}

/// Split a total wheel torque into motor and brakes. Positive requests go to
/// the motor. Negative requests first take the motor down to `motor_min`
/// and put the rest on the friction brakes, half per axle and equal left and
/// right.
pub fn allocate_torque(tau_wh: f64, motor_min: f64, p: &VehicleParams) -> TorqueAllocation {
    if tau_wh >= 0.0 {
        return TorqueAllocation {
            motor: tau_wh / p.gear_ratio,
            brake: [0.0; 4],
        };
    }
    let motor = (tau_wh / p.gear_ratio).max(motor_min.min(0.0));
    // rounding can leave a tiny positive remainder when the motor covers it all
    let rest = (tau_wh - motor * p.gear_ratio).min(0.0);
    TorqueAllocation {
        motor,
        brake: [-0.25 * rest; 4],
    }
}

/// Slip angle at the rear axle centre, with the longitudinal speed
/// regularized.
pub fn rear_axle_slip_angle(v: f64, beta: f64, yaw_rate: f64, b: f64) -> f64 {
    let (sb, cb) = beta.sin_cos();
    ((v * sb - yaw_rate * b) / (v * cb).max(V_EPS)).atan()
}

/// Kinematic steering that puts a bicycle on a circle of curvature `k`.
pub fn feedforward_steer(k: f64, p: &VehicleParams) -> f64 {
    p.wheelbase() * k
}

/// Stage parameters of the prediction model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtStage {
    pub curvature: f64,
    pub mu: f64,
    pub v_max: f64,
    pub tau_driver: f64,
    pub alpha_r_max: f64,
}

impl DtStage {
    pub const LEN: usize = 5;

    pub fn to_vec(self, tau_scale: f64) -> Vec<f64> {
        vec![
            self.curvature,
            self.mu,
            self.v_max,
            self.tau_driver / tau_scale,
            self.alpha_r_max,
        ]
    }
}

/// Double-track prediction model with torques scaled by the largest drive
/// torque at the wheels.
///
/// States `[S, V, beta, yaw_rate, omega x4]`, controls
/// `[tau_wh, eps_V, eps_alpha]`, parameters
/// `[K, mu, V_max, tau_driver, alpha_R_max]`.
#[derive(Debug, Clone)]
pub struct DtModel {
    pub vehicle: VehicleParams,
    pub tires: TireParams,
    pub motor_min: f64,
}

impl DtModel {
    pub fn tau_scale(&self) -> f64 {
        self.vehicle.tau_m_max * self.vehicle.gear_ratio
    }

    /// Unscaled state derivative.
    pub fn derivative(&self, x: &DtState, u: &DtControl, stage: &DtStage) -> DtState {
        let s = self.tau_scale();
        let us = [u.tau_wh / s, u.eps_v, u.eps_alpha];
        let mut d = [0.0; 8];
        self.dynamics(&x.to_vec(), &us, &stage.to_vec(s), &mut d);
        DtState::from_slice(&d)
    }
}

/// State derivative of the double-track prediction model for one stage.
pub fn dt_prediction_dynamics(model: &DtModel, x: &DtState, u: &DtControl, stage: &DtStage) -> DtState {
    model.derivative(x, u, stage)
}

impl OcpModel for DtModel {
    fn nx(&self) -> usize {
        8
    }
    fn nu(&self) -> usize {
        3
    }
    fn nr(&self) -> usize {
        3
    }
    fn nc(&self) -> usize {
        3
    }
    fn nu_dynamics(&self) -> usize {
        1
    }

    fn dynamics(&self, x: &[f64], u: &[f64], p: &[f64], d: &mut [f64]) {
        let veh = &self.vehicle;
        let (v, beta, r) = (x[1], x[2], x[3]);
        let omega = [x[4], x[5], x[6], x[7]];
        let (sb, cb) = beta.sin_cos();
        let (vx, vy) = (v * cb, v * sb);
        let alloc = allocate_torque(u[0] * self.tau_scale(), self.motor_min, veh);
        let drive = drive_split(alloc.motor, veh);
        let delta = feedforward_steer(p[0], veh);
        let c = chassis_rates(vx, vy, r, &omega, delta, &drive, &alloc.brake, &[p[1]; 4], veh, &self.tires);
        let vr = v.abs().max(V_EPS);
        d[0] = v;
        d[1] = (vx * c.vx_dot + vy * c.vy_dot) / vr;
        d[2] = (vx * c.vy_dot - vy * c.vx_dot) / (vr * vr);
        d[3] = c.yaw_acc;
        d[4..8].copy_from_slice(&c.omega_dot);
    }

    fn residuals(&self, _x: &[f64], u: &[f64], p: &[f64], r: &mut [f64]) {
        r[0] = u[1];
        r[1] = u[2];
        r[2] = p[3] - u[0];
    }

    /// `V - eps_V - V_max <= 0` and `+-alpha_R - eps_alpha - alpha_R_max <= 0`.
    fn constraints(&self, x: &[f64], u: &[f64], p: &[f64], h: &mut [f64]) {
        let alpha = rear_axle_slip_angle(x[1], x[2], x[3], self.vehicle.b);
        h[0] = x[1] - u[1] - p[2];
        h[1] = alpha - u[2] - p[4];
        h[2] = -alpha - u[2] - p[4];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slip_angle_examples() {
        assert_eq!(rear_axle_slip_angle(10.0, 0.0, 0.0, 0.8), 0.0);
        let a = rear_axle_slip_angle(8.0, -2f64.to_radians(), 0.8, 0.85);
        let b = rear_axle_slip_angle(8.0, 2f64.to_radians(), -0.8, 0.85);
        // hand evaluation of the closed form: -0.95919 / 7.99513 -> atan
        assert!((a + 0.119402).abs() < 1e-6, "{a}");
        assert_eq!(a, -b);
    }

    #[test]
    fn allocation_reproduces_request() {
        let p = VehicleParams::braking_default();
        for tau in [-2000.0, -300.0, -1.0, 0.0, 5.0, 400.0] {
            for floor in [0.0, -10.0, -1e9] {
                let a = allocate_torque(tau, floor, &p);
                assert!((a.wheel_torque(&p) - tau).abs() < 1e-9);
                assert!(a.brake.iter().all(|b| *b >= 0.0));
                assert!(a.motor >= floor.min(0.0));
            }
        }
    }

    #[test]
    fn motor_goes_first() {
        let p = VehicleParams::braking_default();
        let a = allocate_torque(-50.0, -20.0, &p);
        assert_eq!(a.brake, [0.0; 4]);
        let a = allocate_torque(-500.0, -20.0, &p);
        assert_eq!(a.motor, -20.0);
        assert!(a.brake[0] > 0.0 && a.brake.iter().all(|b| *b == a.brake[0]));
    }
}
