use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{ConfigError, SimError};

use super::scenario::ScenarioSpec;
use super::sim::{simulate, write_text, RunSummary};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub mode: String,
    pub delay: f64,
    pub summary: RunSummary,
}

fn mode_rank(m: &str) -> usize {
    match m {
        "preemptive" => 0,
        "reactive" => 1,
        "passive" => 2,
        _ => 3,
    }
}

/// Run every (mode, delay) cell of a sweep scenario in parallel. Cells come
/// back sorted by mode then delay whatever order they finish in. When
/// `out_dir` is given, each cell's log and a `sweep_summary.csv` are
/// written there.
pub fn run_sweep(spec: &ScenarioSpec, out_dir: Option<&Path>) -> Result<Vec<SweepCell>, SimError> {
    let sweep = spec
        .sweep
        .as_ref()
        .ok_or_else(|| ConfigError::invalid(format!("scenario '{}' has no sweep grid", spec.name)))?;
    let cells: Vec<(String, f64)> = sweep
        .modes
        .iter()
        .flat_map(|m| sweep.delays.iter().map(move |d| (m.clone(), *d)))
        .collect();
    let mut results: Vec<(SweepCell, Option<SimError>)> = cells
        .into_par_iter()
        .map(|(mode, delay)| -> Result<(SweepCell, Option<SimError>), SimError> {
            let run = simulate(&spec.with_cell(&mode, delay));
            if let Some(dir) = out_dir {
                write_text(&dir.join(format!("cell_{mode}_{:03}ms.csv", (delay * 1e3).round() as i64)), &run.csv())?;
            }
            Ok((SweepCell { mode, delay, summary: run.summary }, run.fault))
        })
        .collect::<Result<_, _>>()?;
    results.sort_by(|a, b| (mode_rank(&a.0.mode), &a.0.mode).cmp(&(mode_rank(&b.0.mode), &b.0.mode)).then(a.0.delay.total_cmp(&b.0.delay)));
    let cells: Vec<SweepCell> = results.iter().map(|(c, _)| c.clone()).collect();
    if let Some(dir) = out_dir {
        write_text(&dir.join("sweep_summary.csv"), &summary_csv(&cells))?;
    }
    if let Some((_, Some(f))) = results.into_iter().find(|(_, f)| f.is_some()) {
        return Err(f);
    }
    Ok(cells)
}

pub fn summary_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from("mode,delay,peak_sigma_fr,peak_wheel_speed_ratio,solver_failures,fault\n");
    for c in cells {
        let _ = writeln!(
            out,
            "{},{:.8e},{:.8e},{:.8e},{},{}",
            c.mode,
            c.delay,
            c.summary.peak_sigma_fr,
            c.summary.peak_wheel_speed_ratio,
            c.summary.solver_failures,
            c.summary.fault.is_some() as u8
        );
    }
    out
}
