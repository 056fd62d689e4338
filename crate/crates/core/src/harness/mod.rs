//! Seeded experiment drivers. Every run is a pure function of its config
//! (including the master seed) and writes a directory with `config.json`,
//! `summary.json` and a plot-ready CSV.

mod early_stop;
mod fit;
mod random_cc;
mod sweep;
mod table;
mod trace;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use early_stop::EarlyStop;
pub use fit::{fit_cc_error_line, reference_table_points, CcFit, CcPoint};
pub use random_cc::{gp_two_class_split, run_random_label_cc, RandomCcConfig, RandomCcReport};
pub use sweep::{
    peak_ratio_run, run_datasize, run_depth_width, DatasizeConfig, DepthWidthConfig, SweepRun,
    SweepSettings,
};
pub use table::{run_table_onedim, TableConfig, TableReport, TableRow};
pub use trace::{
    run_trace, run_trace_on, trace_datasets, HighDimSource, SmoothnessTrace, TraceConfig,
    TraceProblem, TraceRecord,
};

/// Mean, sample standard deviation and count of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// `None` for fewer than two values.
    pub std: Option<f64>,
    pub count: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.len() > 1).then(|| {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        });
        Some(Stat {
            mean,
            std,
            count: values.len(),
        })
    }
}

/// One cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub label: String,
    /// Hidden layer widths of the cell's network.
    pub hidden: Vec<usize>,
    pub n: usize,
    pub stat: Option<Stat>,
    /// Repetitions whose statistic was never defined.
    pub excluded: usize,
    /// Datasets redrawn because they held a single class.
    pub resampled: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub schema_version: u32,
    pub experiment: String,
    pub parameters: serde_json::Value,
    pub cells: Vec<Cell>,
    pub seeds: Vec<u64>,
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub(crate) fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Writes a CSV with the given header; cells are already formatted.
pub(crate) fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let path = dir.join(name);
    let io = |e: csv::Error| Error::Format {
        path: path.clone(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(&path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stat_edge_cases() {
        assert!(Stat::of(&[]).is_none());
        let s = Stat::of(&[0.4]).unwrap();
        assert_eq!((s.mean, s.std, s.count), (0.4, None, 1));
        let s = Stat::of(&[1.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert!((s.std.unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }
}
