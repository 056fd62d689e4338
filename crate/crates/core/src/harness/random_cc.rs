use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{create_dir, fmt_opt, write_csv, write_json};
use crate::cover::{class_covers, cover_complexity, cover_difference, total_cover_of};
use crate::dataset::{gp_binary_split, LabelSet, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng::{seeded, stream_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomCcConfig {
    pub reps: usize,
    pub seed: u64,
    /// Number of log10-spaced histogram bins over the observed `|CC|` range.
    pub bins: usize,
}

impl Default for RandomCcConfig {
    fn default() -> Self {
        RandomCcConfig {
            reps: 50,
            seed: 0,
            bins: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomCcReport {
    pub schema_version: u32,
    pub dataset: String,
    pub config: RandomCcConfig,
    pub original_cc: f64,
    /// One entry per repetition; `None` where the cover difference vanished.
    pub cc: Vec<Option<f64>>,
    pub undefined: usize,
    pub positive: usize,
    pub negative: usize,
    pub min_abs: Option<f64>,
    pub median_abs: Option<f64>,
    pub histogram: Vec<HistogramBin>,
    pub seeds: Vec<u64>,
}

impl RandomCcReport {
    /// Repetitions whose `|CC|` is at least `factor` times the original.
    pub fn count_at_least(&self, factor: f64) -> usize {
        self.cc
            .iter()
            .flatten()
            .filter(|v| v.abs() >= factor * self.original_cc.abs())
            .count()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        write_json(dir, "config.json", &self.config)?;
        write_json(dir, "summary.json", self)?;
        let rows: Vec<Vec<String>> = self
            .cc
            .iter()
            .zip(&self.seeds)
            .enumerate()
            .map(|(i, (cc, s))| {
                vec![
                    i.to_string(),
                    s.to_string(),
                    fmt_opt(*cc),
                    fmt_opt(cc.map(f64::abs)),
                ]
            })
            .collect();
        write_csv(dir, "trace.csv", &["rep", "seed", "cc", "abs_cc"], &rows)
    }
}

/// A GP-labeled train/test pair on the unit interval in which both classes
/// occur in both sets, redrawing with derived seeds until they do. Returns
/// the pair and the number of redraws.
pub fn gp_two_class_split(
    n_train: usize,
    n_test: usize,
    length_scale: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset, usize)> {
    for redraw in 0..1000u64 {
        let (tr, te) = gp_binary_split(n_train, n_test, length_scale, stream_seed(seed, redraw))?;
        if (1..=2).all(|c| tr.class_count(c) > 0 && te.class_count(c) > 0) {
            return Ok((tr, te, redraw as usize));
        }
    }
    Err(Error::Run {
        seed,
        message: "every drawn dataset lacked a class".into(),
    })
}

fn cc_of(train: &LabeledDataset, test: &LabeledDataset, rho: f64) -> Result<Option<f64>> {
    let covers = class_covers(train, test)?;
    let cd = cover_difference(&covers.sc, &covers.mc, train.classes().max(test.classes()))?;
    match cover_complexity(rho, cd) {
        Ok(v) => Ok(Some(v)),
        Err(Error::Undefined(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn shuffled(ds: &LabeledDataset, seed: u64) -> Result<LabeledDataset> {
    let mut labels: Vec<LabelSet> = ds.labels().to_vec();
    labels.shuffle(&mut seeded(seed));
    ds.relabeled(labels)
}

fn histogram(values: &[f64], bins: usize) -> Vec<HistogramBin> {
    let positive: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
    if positive.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = positive.iter().copied().fold(f64::INFINITY, f64::min).log10();
    let hi = positive.iter().copied().fold(f64::NEG_INFINITY, f64::max).log10();
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|b| HistogramBin {
            lo: 10f64.powf(lo + b as f64 * width),
            hi: 10f64.powf(lo + (b + 1) as f64 * width),
            count: 0,
        })
        .collect();
    for v in positive {
        let b = (((v.log10() - lo) / width) as usize).min(bins - 1);
        out[b].count += 1;
    }
    out
}

/// Permutes the train and test labels independently in each repetition
/// and records the cover complexity of the relabeled pair. Class counts are
/// preserved, so every class stays present.
pub fn run_random_label_cc(
    train: &LabeledDataset,
    test: &LabeledDataset,
    cfg: &RandomCcConfig,
) -> Result<RandomCcReport> {
    let measure = test.single_label_part()?;
    train.single_labels()?;
    // labels do not move the points, so the total cover is fixed
    let rho = total_cover_of(train.points(), measure.points(), train.dim())?;
    let original_cc = cc_of(train, &measure, rho)?
        .ok_or_else(|| Error::Undefined("original cover difference is zero".into()))?;
    let seeds: Vec<u64> = (0..cfg.reps as u64)
        .map(|r| stream_seed(cfg.seed, r))
        .collect();
    let cc: Vec<Option<f64>> = seeds
        .par_iter()
        .map(|&s| {
            let tr = shuffled(train, stream_seed(s, 0))?;
            let te = shuffled(&measure, stream_seed(s, 1))?;
            cc_of(&tr, &te, rho)
        })
        .collect::<Result<_>>()?;
    let defined: Vec<f64> = cc.iter().flatten().copied().collect();
    let mut abs: Vec<f64> = defined.iter().map(|v| v.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let median_abs = (!abs.is_empty()).then(|| {
        let m = abs.len();
        if m % 2 == 1 {
            abs[m / 2]
        } else {
            0.5 * (abs[m / 2 - 1] + abs[m / 2])
        }
    });
    Ok(RandomCcReport {
        schema_version: crate::SCHEMA_VERSION,
        dataset: train.name().to_string(),
        config: cfg.clone(),
        original_cc,
        undefined: cc.len() - defined.len(),
        positive: defined.iter().filter(|v| **v > 0.0).count(),
        negative: defined.iter().filter(|v| **v < 0.0).count(),
        min_abs: abs.first().copied(),
        median_abs,
        histogram: histogram(&abs, cfg.bins),
        cc,
        seeds,
    })
}
