use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::PlotError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl Figure {
    pub fn parse(s: &str) -> Result<Self, PlotError> {
        Ok(match s {
            "fig3" => Figure::Fig3,
            "fig4" => Figure::Fig4,
            "fig5" => Figure::Fig5,
            "fig6" => Figure::Fig6,
            other => return Err(PlotError::UnknownFigure(other.to_string())),
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
        }
    }

    /// Panels as (name, columns). The first column is the abscissa.
    pub fn panels(&self) -> &'static [(&'static str, &'static [&'static str])] {
        match self {
            Figure::Fig3 => &[
                ("a_torques", &["t", "tau_driver", "tau_ctrl", "tau_m_actual"]),
                ("b_speeds", &["t", "v", "omega_r_fr"]),
                ("c_slip", &["t", "sigma_fr"]),
            ],
            Figure::Fig4 => &[("a_slip", &["t", "sigma_fr"]), ("b_peak", &["sigma_fr"])],
            Figure::Fig5 => &[
                ("a_path", &["x", "y", "lat_dev"]),
                ("b_speed", &["x", "v", "v_max_now"]),
                ("c_sideslip", &["x", "beta", "alpha_r"]),
            ],
            Figure::Fig6 => &[
                ("a_trajectory", &["x", "y"]),
                ("b_speed", &["s_path", "v", "v_max_now"]),
                ("c_motor", &["s_path", "tau_m_cmd", "tau_m_actual"]),
                ("d_brakes", &["s_path", "brake_fl", "brake_fr", "brake_rl", "brake_rr"]),
            ],
        }
    }
}

/// A parsed numeric CSV. Reading stops at a `FAULT` row.
#[derive(Debug, Clone, PartialEq)]
pub struct LogTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl LogTable {
    pub fn read(path: &Path) -> Result<Self, PlotError> {
        let text = fs::read_to_string(path).map_err(|e| PlotError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let t = Self::parse(&text)?;
        if t.rows.is_empty() {
            return Err(PlotError::EmptyLog(path.to_path_buf()));
        }
        Ok(t)
    }

    pub fn parse(text: &str) -> Result<Self, PlotError> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
        let columns: Vec<String> = rdr
            .headers()
            .map_err(|e| PlotError::Malformed(e.to_string()))?
            .iter()
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| PlotError::Malformed(e.to_string()))?;
            if rec.get(0) == Some("FAULT") {
                break;
            }
            if rec.len() != columns.len() {
                return Err(PlotError::Malformed(format!("row {} has {} fields, header has {}", i + 1, rec.len(), columns.len())));
            }
            let row = rec
                .iter()
                .map(|f| f.trim().parse::<f64>().or_else(|_| if f.trim().chars().all(|c| c.is_alphabetic() || c == '_') { Ok(f64::NAN) } else { Err(()) }))
                .collect::<Result<Vec<f64>, ()>>()
                .map_err(|_| PlotError::Malformed(format!("row {} has a non-numeric field", i + 1)))?;
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// Write one CSV per panel of `figure` next to `out_dir/<stem>_<fig>_<panel>.csv`.
/// Nothing is written unless every panel can be produced.
pub fn emit_plot_data(log: &Path, figure: Figure, out_dir: &Path) -> Result<Vec<PathBuf>, PlotError> {
    let table = LogTable::read(log)?;
    let stem = log.file_stem().and_then(|s| s.to_str()).unwrap_or("log");
    let panels = panel_tables(&table, figure)?;
    fs::create_dir_all(out_dir).map_err(|e| PlotError::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    let mut written = Vec::new();
    for (name, text) in panels {
        let path = out_dir.join(format!("{stem}_{}_{name}.csv", figure.as_str()));
        fs::write(&path, text).map_err(|e| PlotError::Io { path: path.clone(), source: e })?;
        written.push(path);
    }
    Ok(written)
}

/// Panel CSV texts for `figure`, or the first panel whose columns are
/// missing from the log.
pub fn panel_tables(table: &LogTable, figure: Figure) -> Result<Vec<(&'static str, String)>, PlotError> {
    let mut out = Vec::new();
    for &(name, cols) in figure.panels() {
        let idx: Vec<Option<usize>> = cols.iter().map(|c| table.column(c)).collect();
        let missing: Vec<String> = cols.iter().zip(&idx).filter(|(_, i)| i.is_none()).map(|(c, _)| c.to_string()).collect();
        if !missing.is_empty() {
            return Err(PlotError::MissingColumns {
                figure: figure.as_str().to_string(),
                panel: name.to_string(),
                missing,
            });
        }
        let idx: Vec<usize> = idx.into_iter().flatten().collect();
        let text = if figure == Figure::Fig4 && name == "b_peak" {
            let peak = table.rows.iter().map(|r| r[idx[0]]).fold(f64::NEG_INFINITY, f64::max);
            format!("peak_sigma_fr\n{peak:.8e}\n")
        } else {
            let mut s = cols.join(",");
            s.push('\n');
            for r in &table.rows {
                let line: Vec<String> = idx.iter().map(|&i| format!("{:.8e}", r[i])).collect();
                let _ = writeln!(s, "{}", line.join(","));
            }
            s
        };
        out.push((name, text));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fault_row_ends_the_table() {
        let t = LogTable::parse("t,sigma_fr\n0,0.1\n1,0.2\nFAULT,boom\n").unwrap();
        assert_eq!(t.rows.len(), 2);
    }

    #[test]
    fn missing_column_names_the_panel() {
        let t = LogTable::parse("t,v\n0,1\n").unwrap();
        match panel_tables(&t, Figure::Fig3).unwrap_err() {
            PlotError::MissingColumns { panel, missing, .. } => {
                assert_eq!(panel, "a_torques");
                assert!(missing.contains(&"tau_driver".to_string()));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn fig4_peak() {
        let t = LogTable::parse("t,sigma_fr\n0,0.1\n1,0.3\n2,0.2\n").unwrap();
        let p = panel_tables(&t, Figure::Fig4).unwrap();
        assert_eq!(p[1].1, "peak_sigma_fr\n3.00000000e-1\n");
    }
}
