use crate::error::ConfigError;
use crate::kv::{KeyValues, KvReader};
use crate::preview::PreviewMode;

#[derive(Debug, Clone, PartialEq)]
pub struct TractionNmpcConfig {
    pub n: usize,
    pub ts: f64,
    pub w_slack_fl: f64,
    pub w_slack_fr: f64,
    pub w_tau: f64,
    pub dt_delay: f64,
    pub mode: PreviewMode,
    pub t_m: f64,
    /// Fraction of the force-peak slip used as reference.
    pub slip_margin: f64,
    pub sqp_iters: usize,
}

impl Default for TractionNmpcConfig {
    fn default() -> Self {
        Self {
            n: 10,
            ts: 0.025,
            w_slack_fl: 1e3,
            w_slack_fr: 1e3,
            w_tau: 1e-4,
            dt_delay: 0.1,
            mode: PreviewMode::Preemptive,
            t_m: 0.02,
            slip_margin: 0.6,
            sqp_iters: 2,
        }
    }
}

impl TractionNmpcConfig {
    /// Long-horizon setting: 50 steps over 250 ms.
    pub fn sensitivity() -> Self {
        Self {
            n: 50,
            ts: 0.005,
            ..Self::default()
        }
    }

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
        for (k, v) in [("W_slack_FL", self.w_slack_fl), ("W_slack_FR", self.w_slack_fr), ("W_tau", self.w_tau)] {
            if !(v >= 0.0 && v.is_finite()) {
                errs.push(format!("{k}: must be >= 0, got {v}"));
            }
        }
        if !(self.dt_delay >= 0.0 && self.dt_delay.is_finite()) {
            errs.push(format!("dt_delay: must be >= 0, got {}", self.dt_delay));
        }
        if !(self.t_m > 0.0 && self.t_m.is_finite()) {
            errs.push(format!("T_m: must be > 0, got {}", self.t_m));
        }
        if !(self.slip_margin > 0.0 && self.slip_margin <= 1.0) {
            errs.push(format!("slip_margin: must be in (0, 1], got {}", self.slip_margin));
        }
        if self.sqp_iters == 0 {
            errs.push("sqp_iters: must be >= 1".into());
        }
    }

    /// Read from key-value pairs; missing keys keep their defaults.
    pub fn from_reader(r: &mut KvReader) -> Self {
        let d = Self::default();
        let mode = r.choice_or("mode", &["preemptive", "reactive"], "preemptive");
        let cfg = Self {
            n: r.usize_or("N", d.n),
            ts: r.f64_or("Ts", d.ts),
            w_slack_fl: r.f64_or("W_slack_FL", d.w_slack_fl),
            w_slack_fr: r.f64_or("W_slack_FR", d.w_slack_fr),
            w_tau: r.f64_or("W_tau", d.w_tau),
            dt_delay: r.f64_or("dt_delay", d.dt_delay),
            mode: if mode == "reactive" { PreviewMode::Reactive } else { PreviewMode::Preemptive },
            t_m: r.f64_or("T_m", d.t_m),
            slip_margin: r.f64_or("slip_margin", d.slip_margin),
            sqp_iters: r.usize_or("sqp_iters", d.sqp_iters),
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
    fn defaults_give_quarter_second_horizon() {
        assert!((TractionNmpcConfig::default().horizon_time() - 0.25).abs() < 1e-12);
        assert!((TractionNmpcConfig::sensitivity().horizon_time() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn parses_and_validates() {
        let kv = KeyValues::parse("mode = reactive\nN = 20\nTs = 0.0125\nW_tau = -1\n").unwrap();
        let err = TractionNmpcConfig::from_kv(&kv).unwrap_err();
        assert!(err.to_string().contains("W_tau"));
        let kv = KeyValues::parse("mode = reactive\nN = 20\nTs = 0.0125\n").unwrap();
        let cfg = TractionNmpcConfig::from_kv(&kv).unwrap();
        assert_eq!(cfg.mode, PreviewMode::Reactive);
        assert_eq!(cfg.n, 20);
    }
}
