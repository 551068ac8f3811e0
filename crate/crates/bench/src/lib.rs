//! Shared fixtures for the benchmarks.

use preempt_core::braking::{DtController, DtNmpcConfig, DtState};
use preempt_core::plant::{vertical_loads, PlantState, TireParams, VehicleParams};
use preempt_core::preview::{PathMap, PreviewMode};
use preempt_core::traction::{TractionController, TractionMeasurement, TractionNmpcConfig};

/// Launch toward a friction drop 5 m ahead, wheels slipping a little.
pub struct TractionCase {
    pub controller: TractionController,
    pub meas: TractionMeasurement,
    pub tau_driver: f64,
    pub friction: PathMap,
}

impl TractionCase {
    pub fn new(mode: PreviewMode) -> Self {
        let p = VehicleParams::traction_default();
        let cfg = TractionNmpcConfig { mode, ..Default::default() };
        let v = 8.0;
        let fz = vertical_loads(1.0, 0.0, &p);
        Self {
            controller: TractionController::new(cfg, p.clone(), TireParams::default()),
            meas: TractionMeasurement {
                s: 25.0,
                v,
                tau_m: 60.0,
                omega: [v * 1.06 / p.r_wheel; 2],
                fz: [fz[0], fz[1]],
            },
            tau_driver: p.tau_m_max,
            friction: PathMap::friction(vec![0.0, 30.0], vec![1.0, 0.2]).unwrap(),
        }
    }
}

/// Approaching a 10 m radius arc slightly too fast.
pub struct BrakingCase {
    pub controller: DtController,
    pub state: DtState,
    pub tau_driver: f64,
    pub curvature: PathMap,
    pub friction: PathMap,
}

impl BrakingCase {
    pub fn new() -> Self {
        let p = VehicleParams::braking_default();
        let v = 12.0;
        Self {
            controller: DtController::new(DtNmpcConfig::default(), p.clone(), TireParams::default()),
            state: DtState {
                s: 30.0,
                v,
                omega: [v / p.r_wheel; 4],
                ..Default::default()
            },
            tau_driver: 150.0,
            curvature: PathMap::curvature(vec![0.0, 39.999, 40.0, 80.0], vec![0.0, 0.0, 0.1, 0.1]).unwrap(),
            friction: PathMap::friction(vec![0.0], vec![0.9]).unwrap(),
        }
    }
}

impl Default for BrakingCase {
    fn default() -> Self {
        Self::new()
    }
}

pub fn cruising_plant(v: f64) -> (PlantState, VehicleParams, TireParams) {
    let p = VehicleParams::braking_default();
    (PlantState::rolling(v, p.r_wheel), p, TireParams::default())
}
