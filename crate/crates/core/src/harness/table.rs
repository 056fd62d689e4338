use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{create_dir, fmt_opt, write_csv, write_json};
use crate::bounds::{c_accuracy_on_d, thm_lower_bound};
use crate::cover::{h_curve, nn_distances, total_cover};
use crate::dataset::synth_1d;
use crate::error::{Error, Result};
use crate::mlp::{losses, train, Control, Mlp, TrainConfig};
use crate::rng::stream_seed;
use crate::smoothness::{delta_f_grid, epsilon_from_loss, Grid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableConfig {
    pub sizes: Vec<usize>,
    pub gap: f64,
    pub n_test: usize,
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
    pub c: f64,
    pub grid: Grid,
    pub seed: u64,
}

impl Default for TableConfig {
    fn default() -> Self {
        TableConfig {
            sizes: vec![10, 20, 40, 80],
            gap: 0.1,
            n_test: 10000,
            hidden: vec![30, 30],
            train: TrainConfig {
                learning_rate: 3e-4,
                iterations: 1000,
                eval_interval: 0,
                ..TrainConfig::default()
            },
            c: 0.5,
            grid: Grid::DEFAULT_1D,
            seed: 0,
        }
    }
}

/// One row of the bound table. `delta` is `min(gap, delta_f - spacing)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub n: usize,
    pub l_max: f64,
    #[serde(rename = "rho_T")]
    pub rho_t: f64,
    pub delta_f: Option<f64>,
    pub delta: Option<f64>,
    pub p_c: f64,
    /// Fraction of the distribution sample within `delta` of the training set.
    pub h_at_delta: Option<f64>,
    pub bound: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub schema_version: u32,
    pub config: TableConfig,
    pub rows: Vec<TableRow>,
    pub grid_spacing: f64,
    /// Multi-label test points left out of the distribution sample.
    pub n_test_excluded: usize,
}

impl TableReport {
    pub fn write(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        write_json(dir, "config.json", &self.config)?;
        write_json(dir, "summary.json", self)?;
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    r.l_max.to_string(),
                    r.rho_t.to_string(),
                    fmt_opt(r.delta),
                    r.p_c.to_string(),
                    fmt_opt(r.h_at_delta),
                    fmt_opt(r.bound),
                ]
            })
            .collect();
        write_csv(
            dir,
            "table.csv",
            &["n", "L_max", "rho_T", "delta", "p_c", "h_T_delta", "bound"],
            &rows,
        )
    }
}

/// Trains one network per training-set size on the separated-interval
/// problem and tabulates the `c`-accuracy next to its lower bound.
pub fn run_table_onedim(cfg: &TableConfig) -> Result<TableReport> {
    if cfg.grid.dim != 1 {
        return Err(Error::validation("the table needs a one-dimensional grid"));
    }
    let mut rows = Vec::new();
    let mut excluded = 0;
    for &n in &cfg.sizes {
        let (tr, te) = synth_1d(n, cfg.gap, cfg.n_test)?;
        let measure = te.single_label_part()?;
        excluded = te.len() - measure.len();
        let dists = nn_distances(tr.points(), measure.points(), 1)?;
        let rho_t = total_cover(&dists, 1)?;

        let seed = stream_seed(cfg.seed, n as u64);
        let mut sizes = vec![1];
        sizes.extend(&cfg.hidden);
        sizes.push(2);
        let mut net = Mlp::new(&sizes, seed)?;
        let tcfg = TrainConfig { seed, ..cfg.train };
        train(&mut net, &tr, &tcfg, |_, _| Ok(Control::Continue)).map_err(|e| match e {
            Error::Run { message, .. } => Error::Run { seed, message },
            e => e,
        })?;

        let l_max = losses(&net, &tr)?.max;
        let eps = epsilon_from_loss(l_max, cfg.c);
        let delta_f = if eps > 0.0 {
            Some(delta_f_grid(&net, &cfg.grid, eps)?)
        } else {
            None
        };
        let delta = delta_f
            .map(|df| cfg.gap.min(df - cfg.grid.spacing()))
            .filter(|&d| d > 0.0);
        let p_c = c_accuracy_on_d(&net, &measure, cfg.c)?;
        let bound = delta
            .map(|d| thm_lower_bound(rho_t, 1, d).map(|b| b.value))
            .transpose()?;
        let h_at_delta = delta
            .map(|d| h_curve(&dists, 1, &[d]).map(|h| h.values[0]))
            .transpose()?;
        if let Some(b) = bound {
            if l_max < -cfg.c.ln() && p_c < b - 1e-9 {
                return Err(Error::Run {
                    seed,
                    message: format!("n = {n}: measured p_c = {p_c} below bound {b}"),
                });
            }
        }
        rows.push(TableRow {
            n,
            l_max,
            rho_t,
            delta_f,
            delta,
            p_c,
            h_at_delta,
            bound,
            seed,
        });
    }
    Ok(TableReport {
        schema_version: crate::SCHEMA_VERSION,
        config: cfg.clone(),
        rows,
        grid_spacing: cfg.grid.spacing(),
        n_test_excluded: excluded,
    })
}
