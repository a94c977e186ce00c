//! On-disk formats. All tables are comma-separated with one header row;
//! amplitudes are written in MHz, times in ns.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use gateopt::krotov::IterationRecord;
use gateopt::lindblad::{ControlPulse, TimeGrid};
use gateopt::units::{mhz, to_mhz};
use gateopt::{CMatrix, C64};

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FileError + '_ {
    move |source| FileError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> FileError + '_ {
    move |source| FileError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub const PULSE_FILE: &str = "pulse.csv";
pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const POPULATIONS_FILE: &str = "populations.csv";
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved.toml";

pub fn pulse_header(labels: &[String]) -> Vec<String> {
    let mut h = vec!["time_ns".to_string()];
    for l in labels {
        h.push(format!("{l}_re_mhz"));
        h.push(format!("{l}_im_mhz"));
    }
    h
}

/// One row per interval, stamped with the interval midpoint.
pub fn write_pulse(path: &Path, pulse: &ControlPulse, labels: &[String]) -> Result<(), FileError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(pulse_header(labels)).map_err(csv_err(path))?;
    let grid = pulse.grid();
    for k in 0..grid.nt {
        let mut row = vec![grid.midpoint(k).to_string()];
        for c in 0..pulse.n_controls() {
            let v = pulse.values()[c][k];
            row.push(to_mhz(v.re).to_string());
            row.push(to_mhz(v.im).to_string());
        }
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads a pulse written by [`write_pulse`]; the header and time stamps must
/// match `grid` and `labels`.
pub fn read_pulse(path: &Path, grid: TimeGrid, labels: &[String]) -> Result<ControlPulse, FileError> {
    let bad = |message: String| FileError::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header: Vec<String> = r
        .headers()
        .map_err(csv_err(path))?
        .iter()
        .map(str::to_string)
        .collect();
    let expected = pulse_header(labels);
    if header != expected {
        return Err(bad(format!("header {header:?}, expected {expected:?}")));
    }
    let mut values = vec![Vec::with_capacity(grid.nt); labels.len()];
    let tol = 1e-9 * grid.t_final.max(1.0);
    let mut rows = 0;
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let nums = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("row {}: {e}", k + 1)))?;
        if nums.iter().any(|x| !x.is_finite()) {
            return Err(bad(format!("row {}: non-finite value", k + 1)));
        }
        if k >= grid.nt {
            return Err(bad(format!("more than {} rows; grid mismatch", grid.nt)));
        }
        let t = grid.midpoint(k);
        if (nums[0] - t).abs() > tol {
            return Err(bad(format!(
                "row {}: time {} ns, grid midpoint is {t} ns; grid mismatch",
                k + 1,
                nums[0]
            )));
        }
        for (c, v) in values.iter_mut().enumerate() {
            v.push(C64::new(mhz(nums[1 + 2 * c]), mhz(nums[2 + 2 * c])));
        }
        rows += 1;
    }
    if rows != grid.nt {
        return Err(bad(format!("{rows} rows, grid has {} intervals; grid mismatch", grid.nt)));
    }
    ControlPulse::new(grid, values).map_err(|e| bad(e.to_string()))
}

pub const CONVERGENCE_HEADER: [&str; 6] = [
    "iteration",
    "j_t",
    "j_total",
    "gate_error",
    "n_propagations_cumulative",
    "wall_time_seconds",
];

/// Convergence log streamed row by row; a missing gate error is left empty.
pub struct ConvergenceLog {
    path: PathBuf,
    w: csv::Writer<File>,
}

impl ConvergenceLog {
    pub fn create(path: &Path) -> Result<Self, FileError> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
        w.write_record(CONVERGENCE_HEADER).map_err(csv_err(path))?;
        Ok(Self {
            path: path.to_path_buf(),
            w,
        })
    }

    pub fn push(&mut self, r: &IterationRecord) -> Result<(), FileError> {
        let row = [
            r.iteration.to_string(),
            r.j_t.to_string(),
            r.j_total.to_string(),
            r.gate_error.map(|g| g.to_string()).unwrap_or_default(),
            r.n_propagations.to_string(),
            format!("{:.3}", r.wall_time),
        ];
        self.w.write_record(row).map_err(csv_err(&self.path))?;
        self.w.flush().map_err(io_err(&self.path))
    }
}

pub const LOGICAL_LABELS: [&str; 4] = ["00", "01", "10", "11"];

/// Population table: for each logical initial state and grid time, the
/// populations of the logical levels, the population outside them
/// (`leaked`) and the trace deficit (`lost`).
pub fn write_populations(
    path: &Path,
    grid: &TimeGrid,
    logical: &[usize],
    trajectories: &[(usize, Vec<CMatrix>)],
) -> Result<(), FileError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header = vec!["initial".to_string(), "time_ns".to_string()];
    header.extend(logical.iter().enumerate().map(|(i, _)| format!("p{}", label(i))));
    header.extend(["leaked".to_string(), "lost".to_string()]);
    w.write_record(&header).map_err(csv_err(path))?;
    for (init, traj) in trajectories {
        for (k, rho) in traj.iter().enumerate() {
            let diag: Vec<f64> = (0..rho.nrows()).map(|i| rho[(i, i)].re).collect();
            let total: f64 = diag.iter().sum();
            let pops: Vec<f64> = logical.iter().map(|&i| diag[i]).collect();
            let inside: f64 = pops.iter().sum();
            let mut row = vec![label(*init), grid.time(k).to_string()];
            row.extend(pops.iter().map(f64::to_string));
            row.push((total - inside).to_string());
            row.push((1.0 - total).to_string());
            w.write_record(&row).map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

fn label(i: usize) -> String {
    LOGICAL_LABELS
        .get(i)
        .map(|s| s.to_string())
        .unwrap_or_else(|| i.to_string())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FileError> {
    let text = serde_json::to_string_pretty(value).expect("summary serializes");
    write_text(path, &(text + "\n"))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FileError> {
    let mut f = File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}
