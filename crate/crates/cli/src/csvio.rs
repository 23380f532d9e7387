//! CSV emission and parsing.
//!
//! All files are UTF-8 with a mandatory header row, `.` decimal separator,
//! and values written with 17 significant digits so every f64 reloads
//! exactly. Files are written atomically (temp file + rename).

use std::path::Path;

use photospring::fit::{PhasePoint, ResponseDataset};
use photospring::sim::TimeSeries;

use crate::error::{CliError, ExitCode};

/// 17 significant digits: enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write a file atomically: write to a sibling temp file, then rename.
pub fn write_atomic(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::io(&format!("creating {}", parent.display()), e))?;
        }
    }
    let tmp = path.with_extension("tmp~");
    std::fs::write(&tmp, content)
        .map_err(|e| CliError::io(&format!("writing {}", tmp.display()), e))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::io(&format!("renaming into {}", path.display()), e))?;
    Ok(())
}

/// A generic numeric table: header names and rows of f64.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, &self.to_csv())
    }
}

/// Columns `time_s, xi, x_act_m, x_th_m, p_trans_norm`.
pub fn time_series_table(series: &TimeSeries) -> Table {
    Table {
        columns: vec!["time_s", "xi", "x_act_m", "x_th_m", "p_trans_norm"],
        rows: series
            .samples
            .iter()
            .map(|s| {
                vec![
                    s.time,
                    s.xi,
                    s.x_act,
                    s.x_th,
                    s.transmitted_power_normalized,
                ]
            })
            .collect(),
    }
}

/// Columns `freq_hz, phase_deg[, mag][, phase_sigma_deg]`; optional columns
/// appear only when every point carries them.
pub fn response_dataset_table(data: &ResponseDataset) -> Table {
    let with_mag = data.points().iter().all(|p| p.magnitude.is_some());
    let with_sigma = data.points().iter().all(|p| p.phase_sigma_deg.is_some());
    let mut columns = vec!["freq_hz", "phase_deg"];
    if with_mag {
        columns.push("mag");
    }
    if with_sigma {
        columns.push("phase_sigma_deg");
    }
    let rows = data
        .points()
        .iter()
        .map(|p| {
            let mut row = vec![p.frequency_hz, p.phase_deg];
            if with_mag {
                row.push(p.magnitude.unwrap());
            }
            if with_sigma {
                row.push(p.phase_sigma_deg.unwrap());
            }
            row
        })
        .collect();
    Table { columns, rows }
}

/// Parse a numeric CSV into (header, rows).
pub fn parse_csv(
    text: &str,
    path_for_errors: &str,
) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| CliError::new(ExitCode::Data, format!("{path_for_errors}: empty file")))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells = line.split(',').collect::<Vec<_>>();
        if cells.len() != header.len() {
            return Err(CliError::new(
                ExitCode::Data,
                format!(
                    "{path_for_errors}: line {}: expected {} columns, got {}",
                    i + 2,
                    header.len(),
                    cells.len()
                ),
            ));
        }
        let row = cells
            .iter()
            .map(|c| {
                c.trim().parse::<f64>().map_err(|e| {
                    CliError::new(
                        ExitCode::Data,
                        format!("{path_for_errors}: line {}: {c:?}: {e}", i + 2),
                    )
                })
            })
            .collect::<Result<Vec<f64>, CliError>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Load a phase-response dataset. Requires `freq_hz` and `phase_deg`
/// columns; `mag` and `phase_sigma_deg` are picked up when present and other
/// columns are ignored.
pub fn read_response_dataset(path: &Path) -> Result<ResponseDataset, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(&format!("reading {}", path.display()), e))?;
    let name = path.display().to_string();
    let (header, rows) = parse_csv(&text, &name)?;
    let col = |want: &str| header.iter().position(|h| h == want);
    let f_col = col("freq_hz").ok_or_else(|| {
        CliError::new(
            ExitCode::Data,
            format!("{name}: missing required column freq_hz"),
        )
    })?;
    let p_col = col("phase_deg").ok_or_else(|| {
        CliError::new(
            ExitCode::Data,
            format!("{name}: missing required column phase_deg"),
        )
    })?;
    let m_col = col("mag");
    let s_col = col("phase_sigma_deg");
    let points = rows
        .iter()
        .map(|r| PhasePoint {
            frequency_hz: r[f_col],
            phase_deg: r[p_col],
            magnitude: m_col.map(|c| r[c]),
            phase_sigma_deg: s_col.map(|c| r[c]),
        })
        .collect();
    ResponseDataset::new(points).map_err(CliError::from_core)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_formatting_round_trips_exactly() {
        for x in [
            0.1,
            -1.0951462600632867e7,
            3.7593984962406017e-4,
            f64::MIN_POSITIVE,
            1.0 / 3.0,
            6.02214076e23,
        ] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn parse_rejects_ragged_rows() {
        let err = parse_csv("a,b\n1.0,2.0\n3.0\n", "t.csv").unwrap_err();
        assert_eq!(err.code, ExitCode::Data);
    }
}
