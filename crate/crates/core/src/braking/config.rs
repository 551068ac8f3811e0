use crate::error::ConfigError;
use crate::kv::{KeyValues, KvReader};

/// Where the friction used in the curvature speed limit comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuMode {
    /// The value under the vehicle now, held over the horizon.
    Constant,
    /// Sampled from the map at each future distance.
    Variable,
}

impl MuMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            MuMode::Constant => "constant",
            MuMode::Variable => "variable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtNmpcConfig {
    pub n: usize,
    pub ts: f64,
    pub w_v: f64,
    pub w_alpha: f64,
    /// Weight on the torque deviation, with torques normalized by the
    /// largest drive torque at the wheels.
    pub w_tau: f64,
    /// Rear-axle slip angle limit (rad).
    pub alpha_r_max: f64,
    /// Most negative total wheel torque (N m).
    pub tau_min: f64,
    pub v_veh_max: f64,
    pub fs: f64,
    pub mu_mode: MuMode,
    /// Lowest motor torque used when braking; 0 disables regeneration.
    pub motor_min: f64,
    pub sqp_iters: usize,
    /// Levenberg term added to the Gauss-Newton Hessian.
    pub regularization: f64,
}

impl Default for DtNmpcConfig {
    fn default() -> Self {
        Self {
            n: 17,
            ts: 0.2,
            w_v: 10.0,
            w_alpha: 50.0,
            w_tau: 1e-5,
            alpha_r_max: 6f64.to_radians(),
            tau_min: -1500.0,
            v_veh_max: 40.0,
            fs: 0.9,
            mu_mode: MuMode::Constant,
            motor_min: 0.0,
            sqp_iters: 2,
            regularization: 1e-3,
        }
    }
}

impl DtNmpcConfig {
    pub fn horizon_time(&self) -> f64 {
        self.n as f64 * self.ts
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        self.collect_errors(&mut errs);
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    fn collect_errors(&self, errs: &mut Vec<String>) {
        if self.n == 0 {
            errs.push("N: must be >= 1".into());
        }
        if !(self.ts > 0.0 && self.ts.is_finite()) {
            errs.push(format!("Ts: must be > 0, got {}", self.ts));
        }
        for (k, v) in [("W_V", self.w_v), ("W_alpha", self.w_alpha), ("W_tau", self.w_tau)] {
            if !(v >= 0.0 && v.is_finite()) {
                errs.push(format!("{k}: must be >= 0, got {v}"));
            }
        }
        if !(self.alpha_r_max > 0.0 && self.alpha_r_max < std::f64::consts::FRAC_PI_2) {
            errs.push(format!("alpha_R_max_deg: must be in (0, 90), got {}", self.alpha_r_max.to_degrees()));
        }
        if !(self.tau_min < 0.0 && self.tau_min.is_finite()) {
            errs.push(format!("tau_min: must be < 0, got {}", self.tau_min));
        }
        if !(self.v_veh_max > 0.0 && self.v_veh_max.is_finite()) {
            errs.push(format!("V_veh_max: must be > 0, got {}", self.v_veh_max));
        }
        if !(self.fs > 0.0 && self.fs <= 1.0) {
            errs.push(format!("Fs: must be in (0, 1], got {}", self.fs));
        }
        if !(self.motor_min <= 0.0 && self.motor_min.is_finite()) {
            errs.push(format!("motor_min: must be <= 0, got {}", self.motor_min));
        }
        if self.sqp_iters == 0 {
            errs.push("sqp_iters: must be >= 1".into());
        }
        if !(self.regularization >= 0.0 && self.regularization.is_finite()) {
            errs.push(format!("regularization: must be >= 0, got {}", self.regularization));
        }
    }

    pub fn from_reader(r: &mut KvReader) -> Self {
        let d = Self::default();
        let mu_mode = r.choice_or("mu_mode", &["constant", "variable"], "constant");
        let cfg = Self {
            n: r.usize_or("N", d.n),
            ts: r.f64_or("Ts", d.ts),
            w_v: r.f64_or("W_V", d.w_v),
            w_alpha: r.f64_or("W_alpha", d.w_alpha),
            w_tau: r.f64_or("W_tau", d.w_tau),
            alpha_r_max: r.f64_or("alpha_R_max_deg", d.alpha_r_max.to_degrees()).to_radians(),
            tau_min: r.f64_or("tau_min", d.tau_min),
            v_veh_max: r.f64_or("V_veh_max", d.v_veh_max),
            fs: r.f64_or("Fs", d.fs),
            mu_mode: if mu_mode == "variable" { MuMode::Variable } else { MuMode::Constant },
            motor_min: r.f64_or("motor_min", d.motor_min),
            sqp_iters: r.usize_or("sqp_iters", d.sqp_iters),
            regularization: r.f64_or("regularization", d.regularization),
        };
        let mut errs = Vec::new();
        cfg.collect_errors(&mut errs);
        for e in errs {
            r.error(e);
        }
        cfg
    }

    pub fn from_kv(kv: &KeyValues) -> Result<Self, ConfigError> {
        let mut r = KvReader::new(kv);
        let cfg = Self::from_reader(&mut r);
        r.finish()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_horizon_is_3_4_s() {
        assert!((DtNmpcConfig::default().horizon_time() - 3.4).abs() < 1e-12);
    }

    #[test]
    fn every_bad_key_is_reported() {
        let kv = KeyValues::parse("Fs = 1.5\ntau_min = 10\nW_V = -1\n").unwrap();
        let msg = DtNmpcConfig::from_kv(&kv).unwrap_err().to_string();
        for k in ["Fs", "tau_min", "W_V"] {
            assert!(msg.contains(k), "{msg}");
        }
    }

    #[test]
    fn degrees_are_converted() {
        let kv = KeyValues::parse("alpha_R_max_deg = 3\nmu_mode = variable\n").unwrap();
        let cfg = DtNmpcConfig::from_kv(&kv).unwrap();
        assert!((cfg.alpha_r_max - 3f64.to_radians()).abs() < 1e-15);
        assert_eq!(cfg.mu_mode, MuMode::Variable);
    }
}
