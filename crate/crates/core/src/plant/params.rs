use std::path::Path;

use crate::error::ConfigError;
use crate::kv::{KeyValues, KvReader};

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrivenAxle {
    Front,
    Rear,
}

impl DrivenAxle {
    pub fn as_str(&self) -> &'static str {
        match self {
            DrivenAxle::Front => "front",
            DrivenAxle::Rear => "rear",
        }
    }

    /// Corner indices (FL, FR, RL, RR order) of the driven wheels.
    pub fn wheels(&self) -> [usize; 2] {
        match self {
            DrivenAxle::Front => [0, 1],
            DrivenAxle::Rear => [2, 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    pub m: f64,
    pub iz: f64,
    pub a: f64,
    pub b: f64,
    pub tw_f: f64,
    pub tw_r: f64,
    pub h: f64,
    pub r_wheel: f64,
    pub jw: f64,
    pub gear_ratio: f64,
    pub tau_m_max: f64,
    pub drag_coeff: f64,
    pub roll_res: f64,
    pub driven_axle: DrivenAxle,
    /// Overall body width, used for cone clearance.
    pub width: f64,
}

impl VehicleParams {
    pub fn wheelbase(&self) -> f64 {
        self.a + self.b
    }

    /// Body-frame (x forward, y left) position of each corner.
    pub fn corner_positions(&self) -> [(f64, f64); 4] {
        [
            (self.a, 0.5 * self.tw_f),
            (self.a, -0.5 * self.tw_f),
            (-self.b, 0.5 * self.tw_r),
            (-self.b, -0.5 * self.tw_r),
        ]
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let fields = [
            ("m", self.m),
            ("Iz", self.iz),
            ("a", self.a),
            ("b", self.b),
            ("tw_f", self.tw_f),
            ("tw_r", self.tw_r),
            ("h", self.h),
            ("R", self.r_wheel),
            ("Jw", self.jw),
            ("gear_ratio", self.gear_ratio),
            ("tau_m_max", self.tau_m_max),
            ("width", self.width),
        ];
        for (k, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("{k}: must be positive, got {v}"));
            }
        }
        for (k, v) in [("drag_coeff", self.drag_coeff), ("roll_res", self.roll_res)] {
            if !(v >= 0.0 && v.is_finite()) {
                errs.push(format!("{k}: must be >= 0, got {v}"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    fn read(r: &mut KvReader) -> Self {
        let driven = r.choice_or("driven_axle", &["front", "rear"], "front");
        Self {
            m: r.f64("m"),
            iz: r.f64("Iz"),
            a: r.f64("a"),
            b: r.f64("b"),
            tw_f: r.f64("tw_f"),
            tw_r: r.f64("tw_r"),
            h: r.f64("h"),
            r_wheel: r.f64("R"),
            jw: r.f64("Jw"),
            gear_ratio: r.f64("gear_ratio"),
            tau_m_max: r.f64("tau_m_max"),
            drag_coeff: r.f64_or("drag_coeff", 0.0),
            roll_res: r.f64_or("roll_res", 0.0),
            driven_axle: if driven == "rear" { DrivenAxle::Rear } else { DrivenAxle::Front },
            width: r.f64("width"),
        }
    }

    pub fn traction_default() -> Self {
        Self {
            m: 900.0,
            iz: 1100.0,
            a: 1.0,
            b: 1.2,
            tw_f: 1.40,
            tw_r: 1.40,
            h: 0.50,
            r_wheel: 0.28,
            jw: 1.0,
            gear_ratio: 9.0,
            tau_m_max: 100.0,
            drag_coeff: 0.45,
            roll_res: 0.012,
            driven_axle: DrivenAxle::Front,
            width: 1.60,
        }
    }

    pub fn braking_default() -> Self {
        Self {
            m: 550.0,
            iz: 420.0,
            a: 0.93,
            b: 0.756,
            tw_f: 1.094,
            tw_r: 1.080,
            h: 0.45,
            r_wheel: 0.28,
            jw: 0.8,
            gear_ratio: 9.23,
            tau_m_max: 57.0,
            drag_coeff: 0.40,
            roll_res: 0.012,
            driven_axle: DrivenAxle::Rear,
            width: 1.24,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Longitudinal,
    Lateral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TireParams {
    pub bx: f64,
    pub cx: f64,
    pub dx: f64,
    pub ex: f64,
    pub by: f64,
    pub cy: f64,
    pub dy: f64,
    pub ey: f64,
    pub fz0: f64,
}

impl TireParams {
    pub fn shape(&self, axis: Axis) -> (f64, f64, f64, f64) {
        match axis {
            Axis::Longitudinal => (self.bx, self.cx, self.dx, self.ex),
            Axis::Lateral => (self.by, self.cy, self.dy, self.ey),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        for (axis, (b, c, d, e)) in [("x", self.shape(Axis::Longitudinal)), ("y", self.shape(Axis::Lateral))] {
            if !(b > 0.0 && b.is_finite()) {
                errs.push(format!("tire.B{axis}: must be > 0, got {b}"));
            }
            if !(c > 1.0 && c <= 2.5) {
                errs.push(format!("tire.C{axis}: must be in (1, 2.5], got {c}"));
            }
            if !(d > 0.5 && d <= 1.5) {
                errs.push(format!("tire.D{axis}: must be in (0.5, 1.5], got {d}"));
            }
            if !(e.is_finite() && e <= 1.0) {
                errs.push(format!("tire.E{axis}: must be finite and <= 1, got {e}"));
            }
        }
        if !(self.fz0 > 0.0) {
            errs.push(format!("tire.Fz0: must be > 0, got {}", self.fz0));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    fn read(r: &mut KvReader) -> Self {
        Self {
            bx: r.f64("tire.Bx"),
            cx: r.f64("tire.Cx"),
            dx: r.f64("tire.Dx"),
            ex: r.f64("tire.Ex"),
            by: r.f64("tire.By"),
            cy: r.f64("tire.Cy"),
            dy: r.f64("tire.Dy"),
            ey: r.f64("tire.Ey"),
            fz0: r.f64("tire.Fz0"),
        }
    }
}

impl Default for TireParams {
    fn default() -> Self {
        Self {
            bx: 12.0,
            cx: 1.65,
            dx: 1.0,
            ex: 0.0,
            by: 10.0,
            cy: 1.45,
            dy: 1.0,
            ey: 0.0,
            fz0: 2500.0,
        }
    }
}

/// A vehicle parameter file: body keys at the top level, tire keys under
/// `tire.`.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleSet {
    pub vehicle: VehicleParams,
    pub tires: TireParams,
}

impl VehicleSet {
    pub fn from_kv(kv: &KeyValues) -> Result<Self, ConfigError> {
        let mut r = KvReader::new(kv);
        let vehicle = VehicleParams::read(&mut r);
        let tires = TireParams::read(&mut r);
        let mut errs = match r.finish() {
            Ok(()) => Vec::new(),
            Err(ConfigError::Invalid(v)) => v,
            Err(e) => return Err(e),
        };
        if errs.is_empty() {
            for res in [vehicle.validate(), tires.validate()] {
                if let Err(ConfigError::Invalid(v)) = res {
                    errs.extend(v);
                }
            }
        }
        if errs.is_empty() {
            Ok(Self { vehicle, tires })
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_kv(&KeyValues::load(path)?)
    }

    pub fn to_kv_text(&self) -> String {
        let v = &self.vehicle;
        let t = &self.tires;
        format!(
            "m = {}\nIz = {}\na = {}\nb = {}\ntw_f = {}\ntw_r = {}\nh = {}\nR = {}\nJw = {}\ngear_ratio = {}\n\
             tau_m_max = {}\ndrag_coeff = {}\nroll_res = {}\ndriven_axle = {}\nwidth = {}\n\
             tire.Bx = {}\ntire.Cx = {}\ntire.Dx = {}\ntire.Ex = {}\ntire.By = {}\ntire.Cy = {}\ntire.Dy = {}\ntire.Ey = {}\ntire.Fz0 = {}\n",
            v.m,
            v.iz,
            v.a,
            v.b,
            v.tw_f,
            v.tw_r,
            v.h,
            v.r_wheel,
            v.jw,
            v.gear_ratio,
            v.tau_m_max,
            v.drag_coeff,
            v.roll_res,
            v.driven_axle.as_str(),
            v.width,
            t.bx,
            t.cx,
            t.dx,
            t.ex,
            t.by,
            t.cy,
            t.dy,
            t.ey,
            t.fz0
        )
    }
}
