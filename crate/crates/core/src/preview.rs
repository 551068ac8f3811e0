//! Distance-indexed road maps and horizon-aligned preview vectors.
//!
//! A [`PathMap`] stands in for road data received ahead of time: friction
//! along the route, or the curvature of the reference path. Controllers
//! sample it at the distances the vehicle is expected to cover over the
//! prediction horizon.

use std::path::Path;

use crate::error::ConfigError;
use crate::plant::GRAVITY;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Hold,
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathMap {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    interpolation: Interpolation,
}

impl PathMap {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>, interpolation: Interpolation) -> Result<Self, ConfigError> {
        if breakpoints.is_empty() {
            return Err(ConfigError::EmptyMap);
        }
        if breakpoints.len() != values.len() {
            return Err(ConfigError::invalid(format!(
                "map has {} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        let mut errs = Vec::new();
        for (i, w) in breakpoints.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                errs.push(format!("breakpoint {} ({}) does not increase past {}", i + 1, w[1], w[0]));
            }
        }
        if let Some(i) = breakpoints.iter().chain(&values).position(|v| !v.is_finite()) {
            errs.push(format!("non-finite entry at position {i}"));
        }
        if !errs.is_empty() {
            return Err(ConfigError::Invalid(errs));
        }
        Ok(Self {
            breakpoints,
            values,
            interpolation,
        })
    }

    pub fn constant(value: f64, interpolation: Interpolation) -> Self {
        Self {
            breakpoints: vec![0.0],
            values: vec![value],
            interpolation,
        }
    }

    /// Friction map: every value must lie in (0, 1.2].
    pub fn friction(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self, ConfigError> {
        let m = Self::new(breakpoints, values, Interpolation::Hold)?;
        m.check_range(|v| v > 0.0 && v <= 1.2, "friction values must be in (0, 1.2]")?;
        Ok(m)
    }

    /// Curvature map: every value must satisfy |K| < 1 1/m.
    pub fn curvature(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self, ConfigError> {
        let m = Self::new(breakpoints, values, Interpolation::Linear)?;
        m.check_range(|v| v.abs() < 1.0, "curvature values must satisfy |K| < 1")?;
        Ok(m)
    }

    fn check_range(&self, ok: impl Fn(f64) -> bool, msg: &str) -> Result<(), ConfigError> {
        let bad: Vec<String> = self
            .breakpoints
            .iter()
            .zip(&self.values)
            .filter(|(_, v)| !ok(**v))
            .map(|(s, v)| format!("s = {s}: {v}: {msg}"))
            .collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(bad))
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    /// Parse two-column `s value` text. `#` starts a comment; columns may be
    /// separated by whitespace or a comma.
    pub fn parse(text: &str, interpolation: Interpolation) -> Result<Self, ConfigError> {
        let mut s = Vec::new();
        let mut v = Vec::new();
        let mut errs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|c| !c.is_empty()).collect();
            match cols.as_slice() {
                [a, b] => match (a.parse::<f64>(), b.parse::<f64>()) {
                    (Ok(a), Ok(b)) => {
                        s.push(a);
                        v.push(b);
                    }
                    _ => errs.push(format!("line {}: cannot parse '{line}'", i + 1)),
                },
                _ => errs.push(format!("line {}: expected two columns, got '{line}'", i + 1)),
            }
        }
        if !errs.is_empty() {
            return Err(ConfigError::Invalid(errs));
        }
        Self::new(s, v, interpolation)
    }

    pub fn load(path: &Path, interpolation: Interpolation) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::io(path, e))?;
        Self::parse(&text, interpolation).map_err(|e| match e {
            ConfigError::Invalid(v) => ConfigError::Invalid(v.into_iter().map(|m| format!("{}: {m}", path.display())).collect()),
            other => other,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# s_m value\n");
        for (s, v) in self.breakpoints.iter().zip(&self.values) {
            out.push_str(&format!("{s} {v}\n"));
        }
        out
    }

    pub fn sample(&self, s: f64) -> f64 {
        let bp = &self.breakpoints;
        let i = bp.partition_point(|b| *b <= s);
        if i == 0 {
            return self.values[0];
        }
        if i == bp.len() {
            return self.values[bp.len() - 1];
        }
        match self.interpolation {
            Interpolation::Hold => self.values[i - 1],
            Interpolation::Linear => {
                let (s0, s1) = (bp[i - 1], bp[i]);
                let (v0, v1) = (self.values[i - 1], self.values[i]);
                v0 + (v1 - v0) * (s - s0) / (s1 - s0)
            }
        }
    }
}

/// Sample a map at `s`.
pub fn sample_map(map: &PathMap, s: f64) -> f64 {
    map.sample(s)
}

/// `N + 1` horizon-aligned values starting at the current instant.
#[derive(Debug, Clone, PartialEq)]
pub struct PreviewVector {
    pub values: Vec<f64>,
    pub t0: f64,
}

impl PreviewVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.values.len().saturating_sub(1)
    }
}

/// Expected future distances under constant speed: `S + V n Ts`, n = 0..=N.
pub fn future_distances(s: f64, v: f64, n: usize, ts: f64) -> PreviewVector {
    PreviewVector {
        values: (0..=n).map(|k| s + v * k as f64 * ts).collect(),
        t0: 0.0,
    }
}

/// Distance covered during the actuator dead time.
pub fn delay_advance(v: f64, dt_delay: f64) -> f64 {
    v * dt_delay
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreviewMode {
    Preemptive,
    Reactive,
}

impl PreviewMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PreviewMode::Preemptive => "preemptive",
            PreviewMode::Reactive => "reactive",
        }
    }
}

/// Friction along the horizon. Pre-emptive mode samples the map at each
/// future distance shifted by `dx_delay`; reactive mode repeats the value at
/// the current position.
pub fn friction_preview(map: &PathMap, s_fut: &PreviewVector, dx_delay: f64, mode: PreviewMode) -> PreviewVector {
    let values = match mode {
        PreviewMode::Preemptive => s_fut.values.iter().map(|s| map.sample(s + dx_delay)).collect(),
        PreviewMode::Reactive => {
            let now = s_fut.values.first().map(|s| map.sample(*s)).unwrap_or(f64::NAN);
            vec![now; s_fut.values.len()]
        }
    };
    PreviewVector { values, t0: s_fut.t0 }
}

/// Reference curvature along the horizon.
pub fn curvature_preview(map: &PathMap, s_fut: &PreviewVector) -> PreviewVector {
    PreviewVector {
        values: s_fut.values.iter().map(|s| map.sample(*s)).collect(),
        t0: s_fut.t0,
    }
}

/// Curvature-based speed limit `min(V_veh_max, sqrt(Fs mu g / |K|))`.
pub fn speed_limit(mu: f64, k: f64, fs: f64, v_veh_max: f64) -> f64 {
    if k == 0.0 {
        return v_veh_max;
    }
    v_veh_max.min((fs * mu * GRAVITY / k.abs()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_map() -> PathMap {
        PathMap::friction(vec![0.0, 30.0], vec![1.0, 0.2]).unwrap()
    }

    #[test]
    fn hold_semantics() {
        let m = step_map();
        assert_eq!(m.sample(-5.0), 1.0);
        assert_eq!(m.sample(29.99), 1.0);
        assert_eq!(m.sample(30.0), 0.2);
        assert_eq!(m.sample(1e6), 0.2);
    }

    #[test]
    fn linear_interpolates_and_clamps() {
        let m = PathMap::new(vec![0.0, 100.0], vec![0.0, 0.1], Interpolation::Linear).unwrap();
        assert!((m.sample(50.0) - 0.05).abs() < 1e-15);
        assert_eq!(m.sample(-1.0), 0.0);
        assert_eq!(m.sample(200.0), 0.1);
    }

    #[test]
    fn empty_map_is_rejected() {
        assert!(matches!(PathMap::new(vec![], vec![], Interpolation::Hold), Err(ConfigError::EmptyMap)));
    }

    #[test]
    fn unsorted_or_out_of_range_maps_are_rejected() {
        assert!(PathMap::new(vec![0.0, 0.0], vec![1.0, 1.0], Interpolation::Hold).is_err());
        assert!(PathMap::friction(vec![0.0], vec![1.5]).is_err());
        assert!(PathMap::curvature(vec![0.0], vec![-1.0]).is_err());
    }

    #[test]
    fn parse_round_trip() {
        let m = PathMap::parse("# friction\n0 1.0\n30, 0.2 # wet boards\n\n", Interpolation::Hold).unwrap();
        assert_eq!(m, step_map());
        assert_eq!(PathMap::parse(&m.to_text(), Interpolation::Hold).unwrap(), m);
        assert!(PathMap::parse("0 1 2\n", Interpolation::Hold).is_err());
    }
}
