use crate::plant::VehicleParams;

use super::path::Projection;

/// Open-loop driver that always asks for `tau_max`.
pub fn driver_full_throttle(tau_max: f64) -> f64 {
    tau_max
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiGains {
    pub kp: f64,
    pub ki: f64,
}

/// Speed-tracking PI driver. The integrator stops accumulating whenever the
/// output saturates in the direction of the error.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedPi {
    pub gains: PiGains,
    pub tau_min: f64,
    pub tau_max: f64,
    integral: f64,
}

impl SpeedPi {
    pub fn new(gains: PiGains, tau_min: f64, tau_max: f64) -> Self {
        Self {
            gains,
            tau_min,
            tau_max,
            integral: 0.0,
        }
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn reset(&mut self) {
        self.integral = 0.0;
    }

    pub fn step(&mut self, v: f64, v_target: f64, dt: f64) -> f64 {
        driver_speed_pi(v, v_target, self.gains, &mut self.integral, self.tau_min, self.tau_max, dt)
    }
}

/// One update of a PI speed controller with clamping anti-windup.
pub fn driver_speed_pi(v: f64, v_target: f64, gains: PiGains, integral: &mut f64, tau_min: f64, tau_max: f64, dt: f64) -> f64 {
    let e = v_target - v;
    let raw = gains.kp * e + gains.ki * (*integral + e * dt);
    let out = raw.clamp(tau_min, tau_max);
    let pushing_further = (raw > tau_max && e > 0.0) || (raw < tau_min && e < 0.0);
    if !pushing_further {
        *integral += e * dt;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteerGains {
    /// rad per metre of lateral deviation.
    pub kp_lat: f64,
    /// rad per metre-second of integrated deviation.
    pub ki_lat: f64,
    /// rad per rad of heading error.
    pub kp_heading: f64,
    /// Distance ahead at which the feedforward curvature is read (m).
    pub lookahead: f64,
    pub max_steer: f64,
}

impl Default for SteerGains {
    fn default() -> Self {
        Self {
            kp_lat: 0.15,
            ki_lat: 0.02,
            kp_heading: 0.8,
            lookahead: 2.0,
            max_steer: 0.6,
        }
    }
}

/// Path-tracking driver: kinematic feedforward on previewed curvature plus
/// PI feedback on the lateral deviation and heading error.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTracker {
    pub gains: SteerGains,
    integral: f64,
}

impl PathTracker {
    pub fn new(gains: SteerGains) -> Self {
        Self { gains, integral: 0.0 }
    }

    pub fn step(&mut self, proj: &Projection, k_preview: f64, p: &VehicleParams, dt: f64) -> f64 {
        driver_path_tracking(proj, k_preview, self.gains, &mut self.integral, p, dt)
    }
}

/// Steering angle (positive left) for a vehicle at `proj` relative to the
/// path. A vehicle left of the path is steered right.
pub fn driver_path_tracking(proj: &Projection, k_preview: f64, gains: SteerGains, integral: &mut f64, p: &VehicleParams, dt: f64) -> f64 {
    *integral += proj.lateral * dt;
    let ff = p.wheelbase() * k_preview;
    let fb = -(gains.kp_lat * proj.lateral + gains.ki_lat * *integral + gains.kp_heading * proj.heading_error);
    (ff + fb).clamp(-gains.max_steer, gains.max_steer)
}
