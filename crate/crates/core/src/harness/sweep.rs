use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trace::Evaluator;
use super::{create_dir, write_csv, write_json, Cell, EarlyStop, ExperimentSummary, Stat};
use crate::cover::empirical_separation_gap;
use crate::dataset::gp_binary_dataset;
use crate::error::{Error, Result};
use crate::mlp::{train, Mlp, TrainConfig};
use crate::rng::stream_seed;
use crate::smoothness::{Grid, LossKind};

const MAX_REDRAWS: u64 = 1000;

/// Outcome of one early-stopped training run on a GP-labeled problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub seed: u64,
    /// Peak `delta_f / delta_T`; `None` when `delta_f` was never defined.
    pub ratio: Option<f64>,
    pub peak_delta: Option<f64>,
    pub peak_iteration: Option<usize>,
    #[serde(rename = "delta_T")]
    pub delta_t: f64,
    pub stopped_at: Option<usize>,
    /// Datasets redrawn because every point had the same label.
    pub resampled: usize,
}

/// Shared knobs of the depth/width and data-size sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub length_scale: f64,
    pub reps: usize,
    pub train: TrainConfig,
    pub grid: Grid,
    pub patience: usize,
    pub seed: u64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            length_scale: 0.2,
            reps: 50,
            train: TrainConfig {
                learning_rate: 1e-2,
                iterations: 10000,
                eval_interval: 10,
                ..TrainConfig::default()
            },
            grid: Grid::new(1, 2001).expect("valid grid"),
            patience: 3,
            seed: 0,
        }
    }
}

/// Draws a two-class GP problem, trains `hidden` on it with the early-stop
/// monitor watching `delta_f(e^{-L_max} - 1/2)`, and reports the peak
/// relative to the empirical separation gap.
pub fn peak_ratio_run(
    hidden: &[usize],
    n: usize,
    settings: &SweepSettings,
    seed: u64,
) -> Result<SweepRun> {
    let mut resampled = 0;
    let data = loop {
        let ds = gp_binary_dataset(n, settings.length_scale, stream_seed(seed, resampled))?;
        if ds.class_count(1) > 0 && ds.class_count(2) > 0 {
            break ds;
        }
        resampled += 1;
        if resampled >= MAX_REDRAWS {
            return Err(Error::Run {
                seed,
                message: "every drawn dataset held a single class".into(),
            });
        }
    };
    let delta_t = empirical_separation_gap(&data)?;
    let mut sizes = vec![1];
    sizes.extend(hidden);
    sizes.push(2);
    let mut net = Mlp::new(&sizes, stream_seed(seed, u64::MAX))?;
    let eval = Evaluator {
        train: &data,
        measure: &data,
        c: 0.5,
        loss_kind: LossKind::Max,
        grid: Some(settings.grid),
        delta0: None,
        rho_t: 0.0,
        full: false,
    };
    let mut monitor = EarlyStop::new(settings.patience);
    let cfg = TrainConfig {
        seed,
        ..settings.train
    };
    train(&mut net, &data, &cfg, |it, net| {
        let rec = eval.evaluate(it, net)?;
        Ok(monitor.observe(it, rec.delta))
    })
    .map_err(|e| match e {
        Error::Run { message, .. } => Error::Run { seed, message },
        e => e,
    })?;
    let peak = monitor.peak();
    Ok(SweepRun {
        seed,
        ratio: peak.map(|(_, d)| d / delta_t),
        peak_delta: peak.map(|(_, d)| d),
        peak_iteration: peak.map(|(i, _)| i),
        delta_t,
        stopped_at: monitor.stopped_at(),
        resampled: resampled as usize,
    })
}

fn run_cell(
    label: String,
    hidden: Vec<usize>,
    n: usize,
    settings: &SweepSettings,
    cell_index: u64,
) -> Result<(Cell, Vec<u64>)> {
    let cell_seed = stream_seed(settings.seed, cell_index);
    let seeds: Vec<u64> = (0..settings.reps as u64)
        .map(|r| stream_seed(cell_seed, r))
        .collect();
    let runs: Vec<SweepRun> = seeds
        .par_iter()
        .map(|&s| peak_ratio_run(&hidden, n, settings, s))
        .collect::<Result<_>>()?;
    let values: Vec<f64> = runs.iter().filter_map(|r| r.ratio).collect();
    Ok((
        Cell {
            label,
            hidden,
            n,
            stat: Stat::of(&values),
            excluded: runs.len() - values.len(),
            resampled: runs.iter().map(|r| r.resampled).sum(),
            values,
        },
        seeds,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthWidthConfig {
    pub n: usize,
    /// Hidden-layer counts of the depth sweep, at `depth_width` units each.
    pub depths: Vec<usize>,
    pub depth_width: usize,
    /// Layer widths of the width sweep, at `width_depth` layers each.
    pub widths: Vec<usize>,
    pub width_depth: usize,
    pub settings: SweepSettings,
}

impl Default for DepthWidthConfig {
    fn default() -> Self {
        DepthWidthConfig {
            n: 10,
            depths: vec![1, 2, 3, 4],
            depth_width: 30,
            widths: vec![10, 20, 40, 80],
            width_depth: 2,
            settings: SweepSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasizeConfig {
    pub sizes: Vec<usize>,
    pub hidden: Vec<usize>,
    pub settings: SweepSettings,
}

impl Default for DatasizeConfig {
    fn default() -> Self {
        DatasizeConfig {
            sizes: vec![10, 20, 40, 80],
            hidden: vec![30, 30],
            settings: SweepSettings::default(),
        }
    }
}

fn summary(
    experiment: &str,
    parameters: serde_json::Value,
    cells: Vec<(Cell, Vec<u64>)>,
) -> ExperimentSummary {
    let mut seeds = Vec::new();
    let cells = cells
        .into_iter()
        .map(|(c, s)| {
            seeds.extend(s);
            c
        })
        .collect();
    ExperimentSummary {
        schema_version: crate::SCHEMA_VERSION,
        experiment: experiment.into(),
        parameters,
        cells,
        seeds,
    }
}

/// Normalized smoothness against depth (cells `depth-*`) and width
/// (cells `width-*`).
pub fn run_depth_width(cfg: &DepthWidthConfig) -> Result<ExperimentSummary> {
    let mut cells = Vec::new();
    let mut index = 0;
    for &d in &cfg.depths {
        cells.push(run_cell(
            format!("depth-{d}"),
            vec![cfg.depth_width; d],
            cfg.n,
            &cfg.settings,
            index,
        )?);
        index += 1;
    }
    for &w in &cfg.widths {
        cells.push(run_cell(
            format!("width-{w}"),
            vec![w; cfg.width_depth],
            cfg.n,
            &cfg.settings,
            index,
        )?);
        index += 1;
    }
    Ok(summary("depth-width", serde_json::to_value(cfg)?, cells))
}

/// Normalized smoothness against the training-set size.
pub fn run_datasize(cfg: &DatasizeConfig) -> Result<ExperimentSummary> {
    let cells = cfg
        .sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| run_cell(format!("n-{n}"), cfg.hidden.clone(), n, &cfg.settings, i as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok(summary("datasize", serde_json::to_value(cfg)?, cells))
}

impl ExperimentSummary {
    pub fn cell(&self, label: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.label == label)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        write_json(dir, "config.json", &self.parameters)?;
        write_json(dir, "summary.json", self)?;
        let rows: Vec<Vec<String>> = self
            .cells
            .iter()
            .map(|c| {
                let (mean, std, count) = c.stat.map_or((String::new(), String::new(), 0), |s| {
                    (s.mean.to_string(), s.std.map_or_else(String::new, |v| v.to_string()), s.count)
                });
                vec![
                    c.label.clone(),
                    c.hidden.len().to_string(),
                    c.hidden.first().copied().unwrap_or(0).to_string(),
                    c.n.to_string(),
                    mean,
                    std,
                    count.to_string(),
                    c.excluded.to_string(),
                ]
            })
            .collect();
        write_csv(
            dir,
            "table.csv",
            &["cell", "depth", "width", "n", "mean", "std", "count", "excluded"],
            &rows,
        )
    }
}
