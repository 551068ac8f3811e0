use std::path::Path;

use crate::braking::DtNmpcConfig;
use crate::error::ConfigError;
use crate::kv::{KeyValues, KvReader};
use crate::plant::{TireParams, VehicleParams, VehicleSet};
use crate::preview::{Interpolation, PathMap, PreviewMode};
use crate::traction::TractionNmpcConfig;

use super::driver::{PiGains, SteerGains};
use super::path::{LaneChangeCourse, ReferencePath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ScenarioKind {
    FrictionStep,
    DelaySweep,
    Iso3888,
    UTurn,
    Custom,
}

impl ScenarioKind {
    pub const NAMES: [&'static str; 5] = ["friction_step", "delay_sweep", "iso3888", "u_turn", "custom"];

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "friction_step" => Self::FrictionStep,
            "delay_sweep" => Self::DelaySweep,
            "iso3888" => Self::Iso3888,
            "u_turn" => Self::UTurn,
            "custom" => Self::Custom,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::FrictionStep => "friction_step",
            Self::DelaySweep => "delay_sweep",
            Self::Iso3888 => "iso3888",
            Self::UTurn => "u_turn",
            Self::Custom => "custom",
        }
    }

    fn default_controller(&self) -> &'static str {
        match self {
            Self::FrictionStep | Self::DelaySweep => "traction",
            Self::Iso3888 | Self::UTurn => "braking",
            Self::Custom => "none",
        }
    }

    fn default_path(&self) -> &'static str {
        match self {
            Self::Iso3888 => "iso3888",
            Self::UTurn => "u_turn",
            _ => "straight",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControllerSpec {
    /// Driver commands go straight to the actuators.
    Passive,
    Traction(TractionNmpcConfig),
    Braking(DtNmpcConfig),
}

impl ControllerSpec {
    pub fn label(&self) -> &'static str {
        match self {
            ControllerSpec::Passive => "passive",
            ControllerSpec::Traction(c) => c.mode.as_str(),
            ControllerSpec::Braking(_) => "dt_nmpc",
        }
    }

    /// Controller sample time, if there is a controller.
    pub fn ts(&self) -> Option<f64> {
        match self {
            ControllerSpec::Passive => None,
            ControllerSpec::Traction(c) => Some(c.ts),
            ControllerSpec::Braking(c) => Some(c.ts),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriverKind {
    FullThrottle,
    SpeedPi,
    PathTracking,
}

/// Torque units the driver request is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TorqueUnit {
    /// Motor torque; used with the traction controller.
    Motor,
    /// Total torque at the wheels; used with the braking controller.
    Wheel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriverSpec {
    pub kind: DriverKind,
    pub v_target: f64,
    pub speed_gains: PiGains,
    pub steer: SteerGains,
    /// Path station after which the driver asks for zero torque.
    pub release_s: f64,
    pub tau_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathSpec {
    Straight { length: f64 },
    UTurn { straight: f64, radius: f64 },
    Iso3888 { x_start: f64, x_end: f64 },
}

impl PathSpec {
    pub fn build(&self, vehicle_width: f64) -> ReferencePath {
        match *self {
            PathSpec::Straight { length } => ReferencePath::straight(0.0, length),
            PathSpec::UTurn { straight, radius } => ReferencePath::u_turn(straight, radius),
            PathSpec::Iso3888 { x_start, x_end } => LaneChangeCourse::iso3888_2(vehicle_width).reference_path(x_start, x_end),
        }
    }

    /// Station range the maneuver statistics are taken over.
    pub fn window(&self) -> (f64, f64) {
        match *self {
            PathSpec::Straight { length } => (0.0, length),
            PathSpec::UTurn { straight, radius } => (straight, straight + std::f64::consts::PI * radius),
            PathSpec::Iso3888 { x_start, .. } => (-x_start, -x_start + 61.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub delays: Vec<f64>,
    pub modes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub kind: ScenarioKind,
    pub vehicle: VehicleParams,
    pub tires: TireParams,
    pub controller: ControllerSpec,
    /// Friction under the wheels.
    pub friction: PathMap,
    /// Friction map handed to the controller.
    pub friction_estimate: PathMap,
    pub path: PathSpec,
    pub driver: DriverSpec,
    pub torque_unit: TorqueUnit,
    pub v0: f64,
    pub s0: f64,
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
    /// Powertrain dead time and first-order lag of the plant.
    pub delay: f64,
    pub lag: f64,
    /// Standard deviation of wheel-speed measurement noise (rad/s).
    pub omega_noise: f64,
    /// Time before which peak statistics are not collected.
    pub warmup: f64,
    pub sweep: Option<SweepSpec>,
}

fn friction_step_map() -> PathMap {
    PathMap::friction(vec![0.0, 30.0], vec![1.0, 0.2]).expect("static map")
}

impl ScenarioSpec {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_kv(&KeyValues::load(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_kv(&KeyValues::parse(text)?)
    }

    /// Build a scenario from a flat key-value file. Every problem found, in
    /// this file and the files it references, is reported together.
    pub fn from_kv(kv: &KeyValues) -> Result<Self, ConfigError> {
        let mut r = KvReader::new(kv);
        let mut extra: Vec<String> = Vec::new();
        let absorb = |res: Result<(), ConfigError>, extra: &mut Vec<String>| match res {
            Ok(()) => {}
            Err(ConfigError::Invalid(v)) => extra.extend(v),
            Err(e) => extra.push(e.to_string()),
        };

        let name = r.string("name");
        let kind = ScenarioKind::parse(&name);
        if kind.is_none() && !name.is_empty() {
            r.error(format!("name: '{name}' is not one of {}", ScenarioKind::NAMES.join(", ")));
        }
        let kind = kind.unwrap_or(ScenarioKind::Custom);
        let is_sweep = kind == ScenarioKind::DelaySweep;

        let controller_kind = r.choice_or("controller", &["none", "traction", "braking"], kind.default_controller());
        let torque_unit = if controller_kind == "traction" || matches!(kind, ScenarioKind::FrictionStep | ScenarioKind::DelaySweep) {
            TorqueUnit::Motor
        } else {
            TorqueUnit::Wheel
        };

        // vehicle
        let default_set = match torque_unit {
            TorqueUnit::Motor => VehicleSet {
                vehicle: VehicleParams::traction_default(),
                tires: TireParams::default(),
            },
            TorqueUnit::Wheel => VehicleSet {
                vehicle: VehicleParams::braking_default(),
                tires: TireParams::default(),
            },
        };
        let set = match kv.get("vehicle") {
            Some(p) => {
                r.allow(&["vehicle"]);
                match VehicleSet::load(&kv.resolve(p)) {
                    Ok(s) => s,
                    Err(e) => {
                        absorb(Err(e), &mut extra);
                        default_set
                    }
                }
            }
            None => default_set,
        };

        // controller configuration: optional file, then inline `ctrl.` keys
        let mut ctrl_kv = match kv.get("controller_config") {
            Some(p) => {
                r.allow(&["controller_config"]);
                match KeyValues::load(&kv.resolve(p)) {
                    Ok(k) => k,
                    Err(e) => {
                        absorb(Err(e), &mut extra);
                        KeyValues::default()
                    }
                }
            }
            None => KeyValues::default(),
        };
        let inline = kv.section("ctrl");
        r.allow_section("ctrl");
        for k in inline.keys() {
            ctrl_kv.set(k, inline.get(k).unwrap_or_default());
        }

        let delay = r.f64_or("delay", if torque_unit == TorqueUnit::Motor { 0.1 } else { 0.0 });
        let lag = r.f64_or("lag", 0.02);
        r.check(delay >= 0.0 && delay.is_finite(), "delay", "must be >= 0");
        r.check(lag >= 0.0 && lag.is_finite(), "lag", "must be >= 0");

        let controller = match controller_kind.as_str() {
            "traction" => {
                let mut c = ctrl_kv.clone();
                if is_sweep {
                    for (k, v) in [("N", "50"), ("Ts", "0.005")] {
                        if !c.contains(k) {
                            c.set(k, v);
                        }
                    }
                }
                if !c.contains("dt_delay") {
                    c.set("dt_delay", delay);
                }
                match TractionNmpcConfig::from_kv(&c) {
                    Ok(cfg) => ControllerSpec::Traction(cfg),
                    Err(e) => {
                        absorb(Err(e), &mut extra);
                        ControllerSpec::Traction(TractionNmpcConfig::default())
                    }
                }
            }
            "braking" => match DtNmpcConfig::from_kv(&ctrl_kv) {
                Ok(cfg) => ControllerSpec::Braking(cfg),
                Err(e) => {
                    absorb(Err(e), &mut extra);
                    ControllerSpec::Braking(DtNmpcConfig::default())
                }
            },
            _ => {
                if ctrl_kv.keys().next().is_some() {
                    r.error("ctrl.*: controller settings given but controller = none");
                }
                ControllerSpec::Passive
            }
        };

        // maps
        let load_map = |key: &str, r: &mut KvReader, extra: &mut Vec<String>| -> Option<PathMap> {
            let p = kv.get(key)?;
            r.allow(&[key]);
            let path = kv.resolve(p);
            match PathMap::load(&path, Interpolation::Hold) {
                Ok(m) => {
                    if let Some(bad) = m.values().iter().find(|v| !(**v > 0.0 && **v <= 1.2)) {
                        extra.push(format!("{}: friction values must be in (0, 1.2], got {bad}", path.display()));
                    }
                    Some(m)
                }
                Err(e) => {
                    extra.push(e.to_string());
                    None
                }
            }
        };
        let mu_const = r.f64_or("friction", 1.0);
        r.check(mu_const > 0.0 && mu_const <= 1.2, "friction", "must be in (0, 1.2]");
        let friction = load_map("friction_map", &mut r, &mut extra).unwrap_or_else(|| {
            if matches!(kind, ScenarioKind::FrictionStep | ScenarioKind::DelaySweep) && !kv.contains("friction") {
                friction_step_map()
            } else {
                PathMap::constant(mu_const, Interpolation::Hold)
            }
        });
        let friction_estimate = load_map("estimate_map", &mut r, &mut extra).unwrap_or_else(|| friction.clone());
        if matches!(kind, ScenarioKind::FrictionStep | ScenarioKind::DelaySweep) {
            let v = friction.values();
            let drops = v.windows(2).filter(|w| w[1] < w[0]).count();
            let rises = v.windows(2).filter(|w| w[1] > w[0]).count();
            if drops != 1 || rises != 0 {
                extra.push(format!("friction_map: a {} scenario needs exactly one high-to-low transition", kind.as_str()));
            }
        }

        // path
        let path_kind = r.choice_or("path", &["straight", "u_turn", "iso3888"], kind.default_path());
        let path = match path_kind.as_str() {
            "u_turn" => PathSpec::UTurn {
                straight: r.f64_or("path.straight", 40.0),
                radius: r.f64_or("path.radius", 10.0),
            },
            "iso3888" => PathSpec::Iso3888 {
                x_start: r.f64_or("path.x_start", -80.0),
                x_end: r.f64_or("path.x_end", 100.0),
            },
            _ => PathSpec::Straight {
                length: r.f64_or("path.length", 400.0),
            },
        };
        match path {
            PathSpec::UTurn { straight, radius } => {
                r.check(straight > 0.0, "path.straight", "must be > 0");
                r.check(radius > 1.0, "path.radius", "must be > 1 m");
            }
            PathSpec::Iso3888 { x_start, x_end } => {
                r.check(x_start < 0.0, "path.x_start", "must be < 0 (before the course)");
                r.check(x_end > 61.0, "path.x_end", "must be past the end of the course (61 m)");
            }
            PathSpec::Straight { length } => r.check(length > 0.0, "path.length", "must be > 0"),
        }

        // driver
        let default_driver = match kind {
            ScenarioKind::FrictionStep | ScenarioKind::DelaySweep => "full_throttle",
            ScenarioKind::Iso3888 | ScenarioKind::UTurn => "path_tracking",
            ScenarioKind::Custom => "speed_pi",
        };
        let driver_kind = match r.choice_or("driver", &["full_throttle", "speed_pi", "path_tracking"], default_driver).as_str() {
            "full_throttle" => DriverKind::FullThrottle,
            "speed_pi" => DriverKind::SpeedPi,
            _ => DriverKind::PathTracking,
        };
        let (v0_default, target_default) = match kind {
            ScenarioKind::Iso3888 => (85.0 / 3.6, 85.0 / 3.6),
            ScenarioKind::UTurn => (20.0 / 3.6, 50.0 / 3.6),
            ScenarioKind::DelaySweep => (10.4, 0.0),
            _ => (2.0, 10.0),
        };
        let tau_min_default = match &controller {
            ControllerSpec::Braking(c) => c.tau_min,
            _ => DtNmpcConfig::default().tau_min,
        };
        let d_steer = SteerGains::default();
        let driver = DriverSpec {
            kind: driver_kind,
            v_target: r.f64_or("driver.v_target", target_default),
            speed_gains: PiGains {
                kp: r.f64_or("driver.kp", 400.0),
                ki: r.f64_or("driver.ki", 40.0),
            },
            steer: SteerGains {
                kp_lat: r.f64_or("steer.kp_lat", d_steer.kp_lat),
                ki_lat: r.f64_or("steer.ki_lat", d_steer.ki_lat),
                kp_heading: r.f64_or("steer.kp_heading", d_steer.kp_heading),
                lookahead: r.f64_or("steer.lookahead", d_steer.lookahead),
                max_steer: r.f64_or("steer.max", d_steer.max_steer),
            },
            release_s: r.f64_or(
                "driver.release_s",
                match path {
                    PathSpec::Iso3888 { x_start, .. } => -x_start,
                    _ => f64::INFINITY,
                },
            ),
            tau_min: r.f64_or("driver.tau_min", tau_min_default),
        };
        for (k, v) in [
            ("driver.kp", driver.speed_gains.kp),
            ("driver.ki", driver.speed_gains.ki),
            ("steer.kp_lat", driver.steer.kp_lat),
            ("steer.ki_lat", driver.steer.ki_lat),
            ("steer.kp_heading", driver.steer.kp_heading),
            ("steer.lookahead", driver.steer.lookahead),
        ] {
            r.check(v >= 0.0 && v.is_finite(), k, "must be >= 0");
        }
        r.check(driver.steer.max_steer > 0.0, "steer.max", "must be > 0");
        r.check(driver.tau_min <= 0.0, "driver.tau_min", "must be <= 0");

        let v0 = r.f64_or("v0", v0_default);
        let s0 = r.f64_or("s0", if is_sweep { 15.0 } else { 0.0 });
        let duration = r.f64_or(
            "duration",
            match kind {
                ScenarioKind::FrictionStep => 7.0,
                ScenarioKind::DelaySweep => 3.0,
                ScenarioKind::Iso3888 => 12.0,
                ScenarioKind::UTurn => 16.0,
                ScenarioKind::Custom => 10.0,
            },
        );
        let dt = r.f64_or("dt", 0.001);
        let seed = r.u64_or("seed", 0);
        let omega_noise = r.f64_or("noise.omega", 0.0);
        let warmup = r.f64_or("warmup", 0.5);
        r.check(v0 >= 0.0 && v0.is_finite(), "v0", "must be >= 0");
        r.check(s0.is_finite(), "s0", "must be finite");
        r.check(duration > 0.0 && duration.is_finite(), "duration", "must be > 0");
        r.check(dt > 0.0 && dt <= 0.01, "dt", "must be in (0, 0.01]");
        r.check(omega_noise >= 0.0, "noise.omega", "must be >= 0");
        r.check(warmup >= 0.0, "warmup", "must be >= 0");
        if let Some(ts) = controller.ts() {
            let ratio = ts / dt;
            if (ratio - ratio.round()).abs() > 1e-6 * ratio.max(1.0) || ratio.round() < 1.0 {
                r.error(format!("dt: controller Ts = {ts} is not an integer multiple of dt = {dt}"));
            }
        }

        let sweep = if is_sweep {
            let delays = r.f64_list_or("sweep.delays", &[0.0, 0.05, 0.1, 0.15]);
            let modes_raw = r.string_or("sweep.modes", "preemptive, reactive, passive");
            let modes: Vec<String> = modes_raw.split(',').map(|m| m.trim().to_string()).filter(|m| !m.is_empty()).collect();
            for m in &modes {
                if !["preemptive", "reactive", "passive"].contains(&m.as_str()) {
                    r.error(format!("sweep.modes: '{m}' is not one of preemptive, reactive, passive"));
                }
            }
            if delays.iter().any(|d| !(*d >= 0.0)) {
                r.error("sweep.delays: delays must be >= 0");
            }
            if delays.is_empty() || modes.is_empty() {
                r.error("sweep: needs at least one delay and one mode");
            }
            Some(SweepSpec { delays, modes })
        } else {
            None
        };

        let mut errs = match r.finish() {
            Ok(()) => Vec::new(),
            Err(ConfigError::Invalid(v)) => v,
            Err(e) => vec![e.to_string()],
        };
        errs.extend(extra);
        if !errs.is_empty() {
            return Err(ConfigError::Invalid(errs));
        }
        Ok(Self {
            name,
            kind,
            vehicle: set.vehicle,
            tires: set.tires,
            controller,
            friction,
            friction_estimate,
            path,
            driver,
            torque_unit,
            v0,
            s0,
            duration,
            dt,
            seed,
            delay,
            lag,
            omega_noise,
            warmup,
            sweep,
        })
    }

    /// Copy of this scenario with a different traction mode or no
    /// controller, and a matched dead time.
    pub fn with_cell(&self, mode: &str, delay: f64) -> Self {
        let mut s = self.clone();
        s.delay = delay;
        s.controller = match (&self.controller, mode) {
            (_, "passive") => ControllerSpec::Passive,
            (ControllerSpec::Traction(c), m) => {
                let mut c = c.clone();
                c.mode = if m == "reactive" { PreviewMode::Reactive } else { PreviewMode::Preemptive };
                c.dt_delay = delay;
                ControllerSpec::Traction(c)
            }
            (other, _) => other.clone(),
        };
        s.sweep = None;
        s
    }
}
