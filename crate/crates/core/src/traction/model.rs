use crate::ocp::OcpModel;
use crate::plant::{magic_formula, Axis, TireParams, VehicleParams, V_EPS};

/// Front-axle slip state: motor torque, two slip speeds, two wheel speeds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TractionState {
    pub tau_m: f64,
    pub s_fl: f64,
    pub s_fr: f64,
    pub omega_fl: f64,
    pub omega_fr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TractionControl {
    pub tau_m_mod: f64,
    pub eps_fl: f64,
    pub eps_fr: f64,
}

/// Slip-ratio error `sigma_ref - s / (omega R)`, with `omega R` floored at
/// the regularization speed.
pub fn slip_error(sigma_ref: f64, s: f64, omega: f64, r_wheel: f64) -> f64 {
    sigma_ref - s / (omega * r_wheel).max(V_EPS)
}

/// Stage parameters of the prediction model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TractionStage {
    pub mu: f64,
    pub sigma_ref: [f64; 2],
    pub fz: [f64; 2],
    pub tau_driver: f64,
}

impl TractionStage {
    pub const LEN: usize = 6;

    pub fn to_vec(self, tau_scale: f64) -> Vec<f64> {
        vec![
            self.mu,
            self.sigma_ref[0],
            self.sigma_ref[1],
            self.fz[0],
            self.fz[1],
            self.tau_driver / tau_scale,
        ]
    }
}

/// Prediction model in scaled units: torques are divided by the motor limit.
///
/// States `[tau, s_FL, s_FR, omega_FL, omega_FR]`, controls
/// `[tau_mod, eps_FL, eps_FR]`, parameters
/// `[mu, sigma_ref_FL, sigma_ref_FR, Fz_FL, Fz_FR, tau_driver]`.
#[derive(Debug, Clone)]
pub struct TractionModel {
    pub vehicle: VehicleParams,
    pub tires: TireParams,
    pub t_m: f64,
}

impl TractionModel {
    pub fn tau_scale(&self) -> f64 {
        self.vehicle.tau_m_max
    }

    fn forces(&self, x: &[f64], p: &[f64]) -> [f64; 2] {
        let r = self.vehicle.r_wheel;
        let mut fx = [0.0; 2];
        for j in 0..2 {
            let sigma = x[1 + j] / (x[3 + j] * r).max(V_EPS);
            fx[j] = magic_formula(sigma, p[0], p[3 + j], &self.tires, Axis::Longitudinal);
        }
        fx
    }

    /// Unscaled state derivative, in the units of [`TractionState`].
    pub fn derivative(&self, x: &TractionState, u: &TractionControl, stage: &TractionStage) -> TractionState {
        let s = self.tau_scale();
        let xs = [x.tau_m / s, x.s_fl, x.s_fr, x.omega_fl, x.omega_fr];
        let us = [u.tau_m_mod / s, u.eps_fl, u.eps_fr];
        let mut d = [0.0; 5];
        self.dynamics(&xs, &us, &stage.to_vec(s), &mut d);
        TractionState {
            tau_m: d[0] * s,
            s_fl: d[1],
            s_fr: d[2],
            omega_fl: d[3],
            omega_fr: d[4],
        }
    }
}

/// Stage-wise state derivative of the front-axle model.
pub fn prediction_dynamics(model: &TractionModel, x: &TractionState, u: &TractionControl, stage: &TractionStage) -> TractionState {
    model.derivative(x, u, stage)
}

impl OcpModel for TractionModel {
    fn nx(&self) -> usize {
        5
    }
    fn nu(&self) -> usize {
        3
    }
    fn nr(&self) -> usize {
        3
    }
    fn nc(&self) -> usize {
        2
    }
    fn nu_dynamics(&self) -> usize {
        1
    }

    fn dynamics(&self, x: &[f64], u: &[f64], p: &[f64], d: &mut [f64]) {
        let v = &self.vehicle;
        let fx = self.forces(x, p);
        let ax = (fx[0] + fx[1]) / v.m;
        let wheel_torque = 0.5 * x[0] * self.tau_scale() * v.gear_ratio;
        d[0] = (u[0] - x[0]) / self.t_m;
        for j in 0..2 {
            let omega_dot = (wheel_torque - fx[j] * v.r_wheel) / v.jw;
            d[3 + j] = omega_dot;
            d[1 + j] = omega_dot * v.r_wheel - ax;
        }
    }

    fn residuals(&self, _x: &[f64], u: &[f64], p: &[f64], r: &mut [f64]) {
        r[0] = u[1];
        r[1] = u[2];
        r[2] = p[5] - u[0];
    }

    /// `sigma - sigma_ref - eps <= 0`, the over-slip side only.
    fn constraints(&self, x: &[f64], u: &[f64], p: &[f64], h: &mut [f64]) {
        let r = self.vehicle.r_wheel;
        for j in 0..2 {
            h[j] = -slip_error(p[1 + j], x[1 + j], x[3 + j], r) - u[1 + j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slip_error_examples() {
        assert_eq!(slip_error(0.08, 0.0, 50.0, 0.3), 0.08);
        assert!((slip_error(0.08, 1.5, 50.0, 0.3) + 0.02).abs() < 1e-12);
        assert!(slip_error(0.08, 0.08 * 50.0 * 0.3, 50.0, 0.3).abs() < 1e-15);
    }
}
