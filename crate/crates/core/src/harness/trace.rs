use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{create_dir, fmt_opt, write_csv, write_json, EarlyStop};
use crate::bounds::{thm_lower_bound, DeltaEstimator};
use crate::cover::{empirical_separation_gap, total_cover_of};
use crate::dataset::{gp_multiclass_split, load_idx_pair, synth_1d, synth_2d, LabeledDataset};
use crate::error::{Error, Result};
use crate::mlp::{
    cross_entropy_from_logits, lipschitz_product, losses, softmax_in_place, train, Control, Mlp,
    TrainConfig,
};
use crate::rng::{seeded, stream_seed};
use crate::smoothness::{delta_f_grid, delta_spectral, epsilon_from_loss, Grid, LossKind};

/// Where the high-dimensional trace gets its data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HighDimSource {
    /// Random subsamples of IDX image/label files.
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        n_train: usize,
        n_test: usize,
    },
    /// Uniform points in the unit cube labeled by the argmax of GP draws.
    Gp {
        dim: usize,
        classes: usize,
        length_scale: f64,
        n_train: usize,
        n_test: usize,
    },
}

impl Default for HighDimSource {
    fn default() -> Self {
        HighDimSource::Gp {
            dim: 16,
            classes: 4,
            length_scale: 2.0,
            n_train: 500,
            n_test: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceProblem {
    OneD { n: usize, gap: f64, n_test: usize },
    TwoD { m: usize, gap: f64, m_test: usize },
    HighDim { source: HighDimSource },
}

impl TraceProblem {
    pub fn one_d() -> Self {
        TraceProblem::OneD {
            n: 20,
            gap: 0.1,
            n_test: 10000,
        }
    }

    pub fn two_d() -> Self {
        TraceProblem::TwoD {
            m: 20,
            gap: 0.1,
            m_test: 200,
        }
    }

    pub fn high_dim() -> Self {
        TraceProblem::HighDim {
            source: HighDimSource::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub problem: TraceProblem,
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
    pub c: f64,
    pub loss_kind: LossKind,
    /// Grid for `delta_f` in one or two dimensions.
    pub grid: Option<Grid>,
    /// Stop once `delta` falls below its peak this many evaluations in a row.
    pub patience: Option<usize>,
    pub seed: u64,
}

impl TraceConfig {
    /// Defaults per problem: 30-wide layers with `c = 0.5` and the maximum
    /// loss in low dimension; 100-wide layers, `c = 0.9`, the mean loss and
    /// one evaluation per epoch in high dimension.
    pub fn for_problem(problem: TraceProblem, seed: u64) -> Self {
        let train = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        match problem {
            TraceProblem::OneD { .. } => TraceConfig {
                problem,
                hidden: vec![30, 30],
                train: TrainConfig {
                    learning_rate: 1e-3,
                    iterations: 1000,
                    eval_interval: 10,
                    ..train
                },
                c: 0.5,
                loss_kind: LossKind::Max,
                grid: Some(Grid::DEFAULT_1D),
                patience: None,
                seed,
            },
            TraceProblem::TwoD { .. } => TraceConfig {
                problem,
                hidden: vec![30, 30],
                train: TrainConfig {
                    learning_rate: 1e-3,
                    iterations: 2000,
                    eval_interval: 10,
                    ..train
                },
                c: 0.5,
                loss_kind: LossKind::Max,
                grid: Some(Grid::DEFAULT_2D),
                patience: None,
                seed,
            },
            TraceProblem::HighDim { .. } => TraceConfig {
                problem,
                hidden: vec![100, 100],
                train: TrainConfig {
                    learning_rate: 1e-3,
                    iterations: 3000,
                    batch_size: 50,
                    eval_interval: 10,
                    ..train
                },
                c: 0.9,
                loss_kind: LossKind::Mean,
                grid: None,
                patience: None,
                seed,
            },
        }
    }
}

/// One evaluation of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub l_mean: f64,
    pub l_max: f64,
    pub test_loss: f64,
    pub epsilon: f64,
    /// The traced smoothness estimate.
    pub delta: Option<f64>,
    pub estimator: DeltaEstimator,
    pub defined: bool,
    /// Spectral surrogate at the same loss, when defined.
    pub delta_spectral: Option<f64>,
    /// Measured `c`-accuracy and the lower bound, when the bound applies.
    pub p_c: Option<f64>,
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessTrace {
    pub schema_version: u32,
    pub dataset: String,
    pub config: TraceConfig,
    pub d: usize,
    #[serde(rename = "rho_T")]
    pub rho_t: f64,
    #[serde(rename = "delta_T")]
    pub delta_t: f64,
    pub delta0: Option<f64>,
    pub grid_spacing: Option<f64>,
    pub records: Vec<TraceRecord>,
    pub peak_iteration: Option<usize>,
    pub test_loss_min_iteration: Option<usize>,
    pub early_stop_iteration: Option<usize>,
    /// `delta_f <= delta_T / 2 + spacing` failures among evaluations with
    /// `c = 0.5` and `L_max < ln 2`.
    pub half_gap_violations: usize,
    pub bound_violations: usize,
}

impl SmoothnessTrace {
    /// True when the peak is neither the first nor the last defined
    /// evaluation.
    pub fn peak_is_interior(&self) -> bool {
        let defined: Vec<usize> = self
            .records
            .iter()
            .filter(|r| r.defined)
            .map(|r| r.iteration)
            .collect();
        match (self.peak_iteration, defined.first(), defined.last()) {
            (Some(p), Some(&a), Some(&b)) => p != a && p != b,
            _ => false,
        }
    }

    /// `|argmax delta - argmin test loss|` in iterations.
    pub fn alignment_gap(&self) -> Option<usize> {
        Some(self.peak_iteration?.abs_diff(self.test_loss_min_iteration?))
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        write_json(dir, "config.json", &self.config)?;
        write_json(dir, "summary.json", self)?;
        let rows: Vec<Vec<String>> = self
            .records
            .iter()
            .map(|r| {
                vec![
                    r.iteration.to_string(),
                    r.l_mean.to_string(),
                    r.l_max.to_string(),
                    r.test_loss.to_string(),
                    fmt_opt(r.delta),
                    fmt_opt(r.delta_spectral),
                    (self.delta_t / 2.0).to_string(),
                    fmt_opt(r.p_c),
                    fmt_opt(r.bound),
                ]
            })
            .collect();
        write_csv(
            dir,
            "trace.csv",
            &[
                "iteration",
                "train_loss_mean",
                "train_loss_max",
                "test_loss",
                "delta",
                "delta_spectral",
                "half_delta_T",
                "p_c",
                "bound",
            ],
            &rows,
        )
    }
}

fn subsample(ds: &LabeledDataset, n: usize, seed: u64) -> Result<LabeledDataset> {
    if n >= ds.len() {
        return Ok(ds.clone());
    }
    let mut idx = sample(&mut seeded(seed), ds.len(), n).into_vec();
    idx.sort_unstable();
    ds.subset(&idx)
}

/// Builds the train/test pair of a problem, with its known separation gap
/// when there is one.
pub fn trace_datasets(
    problem: &TraceProblem,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset, Option<f64>)> {
    match problem {
        TraceProblem::OneD { n, gap, n_test } => {
            let (tr, te) = synth_1d(*n, *gap, *n_test)?;
            Ok((tr, te, Some(*gap)))
        }
        TraceProblem::TwoD { m, gap, m_test } => {
            let (tr, te) = synth_2d(*m, *gap, *m_test)?;
            Ok((tr, te, Some(*gap)))
        }
        TraceProblem::HighDim { source } => match source {
            HighDimSource::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
                n_train,
                n_test,
            } => {
                let tr = load_idx_pair(train_images, train_labels)?;
                let te = load_idx_pair(test_images, test_labels)?;
                let classes = tr.classes().max(te.classes());
                let widen = |ds: LabeledDataset| {
                    LabeledDataset::new(
                        ds.name(),
                        ds.dim(),
                        classes,
                        ds.points().to_vec(),
                        ds.labels().to_vec(),
                    )
                };
                let tr = widen(subsample(&tr, *n_train, stream_seed(seed, 1))?)?;
                let te = widen(subsample(&te, *n_test, stream_seed(seed, 2))?)?;
                Ok((tr, te, None))
            }
            HighDimSource::Gp {
                dim,
                classes,
                length_scale,
                n_train,
                n_test,
            } => {
                let (tr, te) =
                    gp_multiclass_split(*n_train, *n_test, *dim, *classes, *length_scale, seed)?;
                Ok((tr, te, None))
            }
        },
    }
}

/// Mean cross-entropy and `c`-accuracy on a single-label sample from one
/// batched forward pass.
fn loss_and_c_accuracy(net: &Mlp, measure: &LabeledDataset, c: f64) -> Result<(f64, f64)> {
    let labels = measure.single_labels()?;
    let k = net.classes();
    let mut z = net.logits_batch(measure.points())?;
    let mut loss = 0.0;
    let mut hits = 0usize;
    for (row, &l) in z.chunks_exact_mut(k).zip(&labels) {
        let l = l as usize - 1;
        loss += cross_entropy_from_logits(row, l);
        softmax_in_place(row);
        if row[l] > c {
            hits += 1;
        }
    }
    let n = labels.len() as f64;
    Ok((loss / n, hits as f64 / n))
}

/// Shared evaluation of one network snapshot against a fixed problem.
pub(crate) struct Evaluator<'a> {
    pub train: &'a LabeledDataset,
    pub measure: &'a LabeledDataset,
    pub c: f64,
    pub loss_kind: LossKind,
    pub grid: Option<Grid>,
    pub delta0: Option<f64>,
    pub rho_t: f64,
    /// Also compute the test loss, the spectral surrogate and the bound.
    pub full: bool,
}

impl Evaluator<'_> {
    pub fn evaluate(&self, iteration: usize, net: &Mlp) -> Result<TraceRecord> {
        let loss = losses(net, self.train)?;
        let l = match self.loss_kind {
            LossKind::Max => loss.max,
            LossKind::Mean => loss.mean,
        };
        let epsilon = epsilon_from_loss(l, self.c);
        let defined = epsilon > 0.0;
        let spectral = if defined && (self.full || self.grid.is_none()) {
            Some(delta_spectral(lipschitz_product(net)?, l, self.c)?)
        } else {
            None
        };
        let (delta, estimator) = match self.grid {
            Some(g) if defined => (Some(delta_f_grid(net, &g, epsilon)?), DeltaEstimator::Grid),
            Some(_) => (None, DeltaEstimator::Grid),
            None => (spectral, DeltaEstimator::Spectral),
        };
        let mut p_c = None;
        let mut bound = None;
        let mut test_loss = f64::NAN;
        if self.full {
            let (mean, acc) = loss_and_c_accuracy(net, self.measure, self.c)?;
            test_loss = mean;
            if let (Some(g), Some(df), LossKind::Max) = (self.grid, delta, self.loss_kind) {
                let shrunk = df - g.spacing();
                let delta = self.delta0.map_or(shrunk, |d0| d0.min(shrunk));
                if loss.max < -self.c.ln() && delta > 0.0 {
                    bound = Some(thm_lower_bound(self.rho_t, self.train.dim(), delta)?.value);
                    p_c = Some(acc);
                }
            }
        }
        Ok(TraceRecord {
            iteration,
            l_mean: loss.mean,
            l_max: loss.max,
            test_loss,
            epsilon,
            delta,
            estimator,
            defined,
            delta_spectral: spectral,
            p_c,
            bound,
        })
    }
}

/// Runs a trace on the problem's generated data.
pub fn run_trace(cfg: &TraceConfig) -> Result<SmoothnessTrace> {
    let (tr, te, delta0) = trace_datasets(&cfg.problem, cfg.seed)?;
    run_trace_on(cfg, &tr, &te, delta0)
}

/// Trains a fresh network on `train` and records losses, smoothness and
/// (in low dimension) the accuracy bound at every evaluation.
pub fn run_trace_on(
    cfg: &TraceConfig,
    train_set: &LabeledDataset,
    test: &LabeledDataset,
    delta0: Option<f64>,
) -> Result<SmoothnessTrace> {
    if !(0.5..1.0).contains(&cfg.c) {
        return Err(Error::validation(format!("c = {} not in [0.5, 1)", cfg.c)));
    }
    let measure = test.single_label_part()?;
    let dim = train_set.dim();
    let rho_t = total_cover_of(train_set.points(), measure.points(), dim)?;
    let delta_t = empirical_separation_gap(train_set)?;
    let grid = cfg.grid.filter(|g| g.dim == dim);
    let mut sizes = vec![dim];
    sizes.extend(&cfg.hidden);
    sizes.push(train_set.classes());
    let mut net = Mlp::new(&sizes, stream_seed(cfg.seed, 0))?;
    let eval = Evaluator {
        train: train_set,
        measure: &measure,
        c: cfg.c,
        loss_kind: cfg.loss_kind,
        grid,
        delta0,
        rho_t,
        full: true,
    };
    let mut records = Vec::new();
    let mut monitor = cfg.patience.map(EarlyStop::new);
    train(&mut net, train_set, &cfg.train, |it, net| {
        let rec = eval.evaluate(it, net)?;
        if let (Some(p), Some(b)) = (rec.p_c, rec.bound) {
            if p < b - 1e-9 {
                return Err(Error::Run {
                    seed: cfg.seed,
                    message: format!(
                        "bound violated at iteration {it}: p_c = {p} < bound = {b}"
                    ),
                });
            }
        }
        let delta = rec.delta;
        records.push(rec);
        Ok(match monitor.as_mut() {
            Some(m) => m.observe(it, delta),
            None => Control::Continue,
        })
    })?;

    let peak_iteration = records
        .iter()
        .filter_map(|r| r.delta.map(|d| (r.iteration, d)))
        .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
            Some((_, b)) if b >= d => best,
            _ => Some((i, d)),
        })
        .map(|(i, _)| i);
    let test_loss_min_iteration = records
        .iter()
        .fold(None, |best: Option<(usize, f64)>, r| match best {
            Some((_, b)) if b <= r.test_loss => best,
            _ => Some((r.iteration, r.test_loss)),
        })
        .map(|(i, _)| i);
    let spacing = grid.map(|g| g.spacing());
    let half_gap_violations = match spacing {
        Some(h) if cfg.c == 0.5 => records
            .iter()
            .filter(|r| r.l_max < 2f64.ln())
            .filter(|r| r.delta.is_some_and(|d| d > delta_t / 2.0 + h))
            .count(),
        _ => 0,
    };
    Ok(SmoothnessTrace {
        schema_version: crate::SCHEMA_VERSION,
        dataset: train_set.name().to_string(),
        config: cfg.clone(),
        d: dim,
        rho_t,
        delta_t,
        delta0,
        grid_spacing: spacing,
        records,
        peak_iteration,
        test_loss_min_iteration,
        early_stop_iteration: monitor.and_then(|m| m.stopped_at()),
        half_gap_violations,
        bound_violations: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_one_d_trace_is_consistent() {
        let mut cfg = TraceConfig::for_problem(
            TraceProblem::OneD {
                n: 20,
                gap: 0.1,
                n_test: 1001,
            },
            3,
        );
        cfg.train.iterations = 200;
        cfg.grid = Some(Grid::new(1, 1001).unwrap());
        let t = run_trace(&cfg).unwrap();
        assert_eq!(t.records.len(), 21);
        assert!(t.records.windows(2).all(|w| w[0].iteration < w[1].iteration));
        // random init: loss near ln 2, so the estimate starts undefined
        assert!(!t.records[0].defined && t.records[0].delta.is_none());
        for r in &t.records {
            assert_eq!(r.defined, r.epsilon > 0.0);
            assert_eq!(r.delta.is_some(), r.defined);
        }
        assert_eq!(t.half_gap_violations, 0);
    }

    #[test]
    fn high_dim_trace_uses_spectral_surrogate() {
        let mut cfg = TraceConfig::for_problem(
            TraceProblem::HighDim {
                source: HighDimSource::Gp {
                    dim: 4,
                    classes: 3,
                    length_scale: 1.0,
                    n_train: 60,
                    n_test: 40,
                },
            },
            1,
        );
        cfg.hidden = vec![16];
        cfg.train.iterations = 40;
        let t = run_trace(&cfg).unwrap();
        assert!(t.records.iter().all(|r| r.estimator == DeltaEstimator::Spectral));
        assert!(t.records.iter().all(|r| r.bound.is_none()));
    }
}
