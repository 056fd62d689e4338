//! Nearest-neighbor cover statistics of a training set against a test
//! sample standing in for the data distribution.
//!
//! For a training set `T` and test sample of size `m`, `h(r)` is the fraction
//! of test points strictly within distance `r` of some training point, and
//! the total cover is the normalized integral of `h` over `[0, sqrt(d)]`.
//! For the empirical estimator that integral has the closed form
//! `1 - sum_i min(dist_i, sqrt(d)) / (m sqrt(d))`, where `dist_i` is the
//! nearest-train distance of test point `i`.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

const QUERY_BLOCK: usize = 64;
const TRAIN_BLOCK: usize = 256;

fn check_points(points: &[f64], dim: usize, what: &str) -> Result<usize> {
    if dim == 0 {
        return Err(Error::validation("dimension must be positive"));
    }
    if points.is_empty() {
        return Err(Error::validation(format!("{what} set is empty")));
    }
    if !points.len().is_multiple_of(dim) {
        return Err(Error::validation(format!(
            "{what} coordinates ({}) are not a multiple of dimension {dim}",
            points.len()
        )));
    }
    Ok(points.len() / dim)
}

/// Exact Euclidean distance from every query point to its nearest training
/// point. Both inputs are row-major with `dim` columns.
///
/// Queries are processed in parallel blocks; each result is an exact
/// minimum, so the output does not depend on the blocking.
pub fn nn_distances(train: &[f64], query: &[f64], dim: usize) -> Result<Vec<f64>> {
    let n = check_points(train, dim, "train")?;
    let m = check_points(query, dim, "query")?;
    let mut out = vec![0.0; m];
    out.par_chunks_mut(QUERY_BLOCK)
        .enumerate()
        .for_each(|(block, dst)| {
            let q0 = block * QUERY_BLOCK;
            let mut best = [f64::INFINITY; QUERY_BLOCK];
            for t0 in (0..n).step_by(TRAIN_BLOCK) {
                let t1 = (t0 + TRAIN_BLOCK).min(n);
                for (qi, b) in best.iter_mut().take(dst.len()).enumerate() {
                    let q = &query[(q0 + qi) * dim..(q0 + qi + 1) * dim];
                    for t in t0..t1 {
                        let p = &train[t * dim..(t + 1) * dim];
                        let sq: f64 = q.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
                        if sq < *b {
                            *b = sq;
                        }
                    }
                }
            }
            for (d, b) in dst.iter_mut().zip(best) {
                *d = b.sqrt();
            }
        });
    Ok(out)
}

/// Sampled `h(r)` curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HCurve {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub dim: usize,
}

impl HCurve {
    /// `count` radii `k sqrt(d) / count`, `k = 1..=count`.
    pub fn uniform_radii(dim: usize, count: usize) -> Vec<f64> {
        let top = (dim as f64).sqrt();
        (1..=count).map(|k| top * (k as f64 / count as f64)).collect()
    }

    /// Writes `r,h` rows with a header.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("r,h\n");
        for (r, h) in self.radii.iter().zip(&self.values) {
            out.push_str(&format!("{r},{h}\n"));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Fraction of distances strictly below each radius (open balls).
pub fn h_curve(dists: &[f64], dim: usize, radii: &[f64]) -> Result<HCurve> {
    if dists.is_empty() {
        return Err(Error::validation("empty distance sequence"));
    }
    let top = (dim as f64).sqrt();
    if radii.iter().any(|&r| !(r > 0.0 && r <= top)) {
        return Err(Error::validation(format!("radii must lie in (0, {top}]")));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("radii must be strictly increasing"));
    }
    let mut sorted = dists.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let values = radii
        .iter()
        .map(|&r| sorted.partition_point(|&d| d < r) as f64 / m)
        .collect();
    Ok(HCurve {
        radii: radii.to_vec(),
        values,
        dim,
    })
}

/// Total cover from nearest-train distances.
pub fn total_cover(dists: &[f64], dim: usize) -> Result<f64> {
    if dists.is_empty() {
        return Err(Error::validation("empty distance sequence"));
    }
    if dim == 0 {
        return Err(Error::validation("dimension must be positive"));
    }
    let top = (dim as f64).sqrt();
    let sum: f64 = dists.iter().map(|&d| d.min(top)).sum();
    Ok(1.0 - sum / (dists.len() as f64 * top))
}

/// Total cover of `train` measured against `test`, both row-major.
pub fn total_cover_of(train: &[f64], test: &[f64], dim: usize) -> Result<f64> {
    total_cover(&nn_distances(train, test, dim)?, dim)
}

/// Self covers and mutual covers per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCovers {
    /// `sc[i]`: class `i+1` train points against class `i+1` test points.
    pub sc: Vec<f64>,
    /// `mc[i][j]`: class `i+1` train points against class `j+1` test
    /// points; `None` on the diagonal.
    pub mc: Vec<Vec<Option<f64>>>,
}

/// Self and mutual covers of a single-label train/test pair. Every class
/// must occur in both sets.
pub fn class_covers(train: &LabeledDataset, test: &LabeledDataset) -> Result<ClassCovers> {
    if train.dim() != test.dim() {
        return Err(Error::validation("train and test dimensions differ"));
    }
    train.single_labels()?;
    test.single_labels()?;
    let k = train.classes().max(test.classes());
    let dim = train.dim();
    let mut train_parts = Vec::with_capacity(k);
    let mut test_parts = Vec::with_capacity(k);
    for c in 1..=k as u32 {
        let tr = train.class_points(c);
        if tr.is_empty() {
            return Err(Error::validation(format!("class {c} is missing from the train set")));
        }
        let te = test.class_points(c);
        if te.is_empty() {
            return Err(Error::validation(format!("class {c} is missing from the test set")));
        }
        train_parts.push(tr);
        test_parts.push(te);
    }
    let mut sc = Vec::with_capacity(k);
    let mut mc = vec![vec![None; k]; k];
    for i in 0..k {
        for j in 0..k {
            let rho = total_cover_of(&train_parts[i], &test_parts[j], dim)?;
            if i == j {
                sc.push(rho);
            } else {
                mc[i][j] = Some(rho);
            }
        }
    }
    Ok(ClassCovers { sc, mc })
}

/// Mean self cover minus mean mutual cover.
pub fn cover_difference(sc: &[f64], mc: &[Vec<Option<f64>>], classes: usize) -> Result<f64> {
    if classes < 2 {
        return Err(Error::validation("cover difference needs at least 2 classes"));
    }
    if sc.len() != classes || mc.len() != classes || mc.iter().any(|row| row.len() != classes) {
        return Err(Error::validation("cover tables do not match the class count"));
    }
    let k = classes as f64;
    let self_mean = sc.iter().sum::<f64>() / k;
    let mut mutual = 0.0;
    for (i, row) in mc.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if i != j {
                mutual += v.ok_or_else(|| {
                    Error::validation(format!("mutual cover ({}, {}) missing", i + 1, j + 1))
                })?;
            }
        }
    }
    Ok(self_mean - mutual / (k * (k - 1.0)))
}

/// `(1 - rho) / cd`, sign preserved.
pub fn cover_complexity(rho: f64, cd: f64) -> Result<f64> {
    if cd == 0.0 {
        return Err(Error::Undefined("cover difference is zero".into()));
    }
    Ok((1.0 - rho) / cd)
}

/// Smallest distance between two differently labeled training points.
pub fn empirical_separation_gap(train: &LabeledDataset) -> Result<f64> {
    let labels = train.single_labels()?;
    let mut present: Vec<u32> = labels.clone();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(Error::validation(
            "separation gap needs at least two distinct labels",
        ));
    }
    let dim = train.dim();
    let mut best = f64::INFINITY;
    // the last class is covered by the pairs of all earlier ones
    for &c in &present[..present.len() - 1] {
        let mine = train.class_points(c);
        let others: Vec<f64> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > c)
            .flat_map(|(i, _)| train.point(i).iter().copied())
            .collect();
        let d = nn_distances(&others, &mine, dim)?;
        best = d.into_iter().fold(best, f64::min);
    }
    Ok(best)
}

/// Outcome of checking `h(r) >= 1 - (sqrt(d)/r)(1 - rho)` along a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HBoundCheck {
    pub holds: bool,
    pub min_slack: f64,
}

pub fn h_bound_check(curve: &HCurve, rho: f64) -> HBoundCheck {
    let top = (curve.dim as f64).sqrt();
    let min_slack = curve
        .radii
        .iter()
        .zip(&curve.values)
        .map(|(&r, &h)| h - (1.0 - top / r * (1.0 - rho)))
        .fold(f64::INFINITY, f64::min);
    HBoundCheck {
        holds: min_slack >= -1e-9,
        min_slack,
    }
}

/// Full cover summary of a train/test pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub schema_version: u32,
    #[serde(rename = "rho_T")]
    pub rho_t: f64,
    pub sc: Vec<f64>,
    pub mc: Vec<Vec<Option<f64>>>,
    pub cd: f64,
    /// `None` when the cover difference is exactly zero.
    pub cc: Option<f64>,
    pub cc_abs: Option<f64>,
    #[serde(rename = "delta_T")]
    pub delta_t: f64,
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Multi-label test points left out of the distribution sample.
    pub n_test_excluded: usize,
    pub train_counts: Vec<usize>,
    pub test_counts: Vec<usize>,
    pub normalized: bool,
    pub warnings: Vec<String>,
}

/// Computes every cover quantity of a single-label training set against
/// the single-label points of `test`.
pub fn cover_report(train: &LabeledDataset, test: &LabeledDataset) -> Result<CoverReport> {
    if train.dim() != test.dim() {
        return Err(Error::validation(format!(
            "train dimension {} differs from test dimension {}",
            train.dim(),
            test.dim()
        )));
    }
    let k = train.classes().max(test.classes());
    if k < 2 {
        return Err(Error::validation("cover report needs at least 2 classes"));
    }
    let measure = test.single_label_part()?;
    let excluded = test.len() - measure.len();
    let mut warnings = Vec::new();
    if excluded > 0 {
        warnings.push(format!(
            "{excluded} multi-label test points excluded from the distribution sample"
        ));
    }
    let dim = train.dim();
    let rho_t = total_cover_of(train.points(), measure.points(), dim)?;
    let covers = class_covers(train, &measure)?;
    let cd = cover_difference(&covers.sc, &covers.mc, k)?;
    let cc = match cover_complexity(rho_t, cd) {
        Ok(v) => Some(v),
        Err(_) => {
            warnings.push("cover difference is zero; cover complexity undefined".into());
            None
        }
    };
    let delta_t = empirical_separation_gap(train)?;
    if delta_t == 0.0 {
        warnings.push("identical points carry different labels; separation gap is 0".into());
    }
    let normalized = train.normalization().is_some() || test.normalization().is_some();
    Ok(CoverReport {
        schema_version: crate::SCHEMA_VERSION,
        rho_t,
        sc: covers.sc,
        mc: covers.mc,
        cd,
        cc,
        cc_abs: cc.map(f64::abs),
        delta_t,
        d: dim,
        k,
        n_train: train.len(),
        n_test: measure.len(),
        n_test_excluded: excluded,
        train_counts: (1..=k as u32).map(|c| train.class_count(c)).collect(),
        test_counts: (1..=k as u32).map(|c| measure.class_count(c)).collect(),
        normalized,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth_1d;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    fn line(points: &[f64], labels: &[u32]) -> LabeledDataset {
        LabeledDataset::from_single_labels("t", 1, 2, points.to_vec(), labels).unwrap()
    }

    #[test]
    fn nn_distance_examples() {
        let d = nn_distances(&[0.2, 0.8], &[0.1, 0.5, 0.9], 1).unwrap();
        assert!(close(d[0], 0.1) && close(d[1], 0.3) && close(d[2], 0.1), "{d:?}");
        assert_eq!(nn_distances(&[0.3, 0.7], &[0.7], 1).unwrap(), vec![0.0]);
        let d = nn_distances(&[0.0, 0.0], &[1.0, 1.0], 2).unwrap();
        assert!(close(d[0], 2f64.sqrt()));
        assert!(nn_distances(&[0.0, 0.0], &[1.0, 1.0, 1.0], 2).is_err());
    }

    #[test]
    fn nn_distances_match_naive_across_blocks() {
        let mut rng = crate::rng::seeded(3);
        use rand::Rng;
        let train: Vec<f64> = (0..3 * 700).map(|_| rng.random()).collect();
        let query: Vec<f64> = (0..3 * 150).map(|_| rng.random()).collect();
        let fast = nn_distances(&train, &query, 3).unwrap();
        for (qi, q) in query.chunks(3).enumerate() {
            let naive = train
                .chunks(3)
                .map(|p| q.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
                .sqrt();
            assert_eq!(fast[qi], naive);
        }
    }

    #[test]
    fn h_curve_examples() {
        let dists = [0.1, 0.3, 0.1];
        let c = h_curve(&dists, 1, &[0.1, 0.2]).unwrap();
        assert_eq!(c.values[0], 0.0);
        assert!(close(c.values[1], 2.0 / 3.0));
        let c = h_curve(&[0.0; 4], 1, &[0.01, 0.5, 1.0]).unwrap();
        assert!(c.values.iter().all(|&v| v == 1.0));
        assert!(h_curve(&[], 1, &[0.5]).is_err());
        assert!(h_curve(&dists, 1, &[0.5, 0.4]).is_err());
        assert!(h_curve(&dists, 1, &[1.5]).is_err());
    }

    #[test]
    fn total_cover_examples() {
        assert!(close(total_cover(&[0.1, 0.3, 0.1], 1).unwrap(), 1.0 - 0.5 / 3.0));
        assert_eq!(total_cover(&[0.0, 0.0], 3).unwrap(), 1.0);
        let top = 2f64.sqrt();
        assert!(close(total_cover(&[top, 0.0, 0.0, 0.0], 2).unwrap(), 0.75));
        // truncation at sqrt(d)
        assert!(close(total_cover(&[5.0, 0.0], 1).unwrap(), 0.5));
    }

    #[test]
    fn class_cover_example() {
        let train = line(&[0.1, 0.9], &[1, 2]);
        let test = line(&[0.2, 0.8], &[1, 2]);
        let cov = class_covers(&train, &test).unwrap();
        assert!(close(cov.sc[0], 0.9) && close(cov.sc[1], 0.9));
        assert!(close(cov.mc[0][1].unwrap(), 0.3) && close(cov.mc[1][0].unwrap(), 0.3));
        assert_eq!(cov.mc[0][0], None);
        let cd = cover_difference(&cov.sc, &cov.mc, 2).unwrap();
        assert!(close(cd, 0.6));
    }

    #[test]
    fn class_covers_identical_sets_and_single_class() {
        let ds = line(&[0.1, 0.4, 0.9], &[1, 2, 1]);
        let cov = class_covers(&ds, &ds).unwrap();
        assert!(cov.sc.iter().all(|&v| v == 1.0));

        let one = LabeledDataset::from_single_labels("o", 1, 1, vec![0.1, 0.2], &[1, 1]).unwrap();
        let cov = class_covers(&one, &one).unwrap();
        assert_eq!(cov.mc, vec![vec![None]]);
    }

    #[test]
    fn class_covers_missing_class() {
        let train = line(&[0.1, 0.9], &[1, 1]);
        let test = line(&[0.2, 0.8], &[1, 2]);
        let err = class_covers(&train, &test).unwrap_err().to_string();
        assert!(err.contains("class 2"), "{err}");
    }

    #[test]
    fn cover_difference_cases() {
        let mc = vec![vec![None, Some(0.4)], vec![Some(0.4), None]];
        assert!(close(cover_difference(&[0.4, 0.4], &mc, 2).unwrap(), 0.0));
        let mc = vec![vec![None, Some(0.0)], vec![Some(0.0), None]];
        assert_eq!(cover_difference(&[1.0, 1.0], &mc, 2).unwrap(), 1.0);
        assert!(cover_difference(&[1.0], &[vec![None]], 1).is_err());
    }

    #[test]
    fn cover_complexity_cases() {
        assert!(close(cover_complexity(0.9, 0.6).unwrap(), 1.0 / 6.0));
        assert_eq!(cover_complexity(1.0, 0.3).unwrap(), 0.0);
        assert!(cover_complexity(0.5, 0.0).is_err());
        let cc = cover_complexity(0.8480, 0.1053).unwrap();
        // table entries are rounded, so the match is to about 3 significant digits
        assert!((cc - 1.442).abs() < 2e-3, "{cc}");
    }

    #[test]
    fn separation_gap_cases() {
        assert!(close(empirical_separation_gap(&line(&[0.1, 0.9], &[1, 2])).unwrap(), 0.8));
        let (train, _) = synth_1d(20, 0.1, 10).unwrap();
        assert!(close(empirical_separation_gap(&train).unwrap(), 0.1));
        assert_eq!(empirical_separation_gap(&line(&[0.3, 0.3], &[1, 2])).unwrap(), 0.0);
        assert!(empirical_separation_gap(&line(&[0.3, 0.4], &[2, 2])).is_err());
    }

    #[test]
    fn separation_gap_three_classes_brute_force() {
        use rand::Rng;
        let mut rng = crate::rng::seeded(9);
        let pts: Vec<f64> = (0..2 * 60).map(|_| rng.random()).collect();
        let labels: Vec<u32> = (0..60).map(|_| rng.random_range(1..=3)).collect();
        let ds = LabeledDataset::from_single_labels("r", 2, 3, pts, &labels).unwrap();
        let mut best = f64::INFINITY;
        for i in 0..60 {
            for j in 0..60 {
                if labels[i] != labels[j] {
                    let (a, b) = (ds.point(i), ds.point(j));
                    best = best.min(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
                }
            }
        }
        assert_eq!(empirical_separation_gap(&ds).unwrap(), best);
    }

    #[test]
    fn h_bound_examples() {
        let dists = [0.1, 0.3, 0.1];
        let rho = total_cover(&dists, 1).unwrap();
        let curve = h_curve(&dists, 1, &[0.2]).unwrap();
        let check = h_bound_check(&curve, rho);
        assert!(check.holds);
        assert!((check.min_slack - 0.5).abs() < 1e-12);

        let curve = h_curve(&[0.0, 0.0], 1, &[0.25, 0.5, 1.0]).unwrap();
        let check = h_bound_check(&curve, 1.0);
        assert!(check.holds && check.min_slack == 0.0);
    }

    #[test]
    fn report_has_identity() {
        let (train, test) = synth_1d(10, 0.1, 2001).unwrap();
        let r = cover_report(&train, &test).unwrap();
        assert!((r.cc.unwrap() * r.cd - (1.0 - r.rho_t)).abs() < 1e-12);
        assert!(r.n_test_excluded > 0);
        let json = serde_json::to_value(&r).unwrap();
        for key in ["rho_T", "sc", "mc", "cd", "cc", "delta_T", "d", "K", "n_train", "n_test"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
    }
}
