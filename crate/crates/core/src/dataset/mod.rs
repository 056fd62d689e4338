//! Labeled point sets in the unit cube `[0,1]^d`.
//!
//! Every point carries a nonempty set of class labels drawn from `1..=K`.
//! Real datasets are single-label; the synthetic test grids carry the full
//! label set `{1,2}` inside the buffer band between class regions.

mod csv_io;
mod gp;
mod idx;
mod synth;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{load_csv_dataset, load_csv_pair, write_csv_dataset};
pub use gp::{gp_binary_dataset, gp_binary_split, gp_multiclass_split, sample_rbf_gp};
pub use idx::{load_idx_pair, read_idx_images, read_idx_labels};
pub use synth::{annulus_tag, interval_tag, synth_1d, synth_2d};

/// A nonempty, sorted set of 1-based class labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelSet(Vec<u32>);

impl LabelSet {
    pub fn single(label: u32) -> Self {
        LabelSet(vec![label])
    }

    /// Builds a set from arbitrary labels; duplicates are dropped.
    pub fn new(mut labels: Vec<u32>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::validation("empty label set"));
        }
        labels.sort_unstable();
        labels.dedup();
        Ok(LabelSet(labels))
    }

    pub fn contains(&self, label: u32) -> bool {
        self.0.binary_search(&label).is_ok()
    }

    pub fn as_single(&self) -> Option<u32> {
        match self.0.as_slice() {
            [only] => Some(*only),
            _ => None,
        }
    }

    pub fn labels(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Per-dimension min-max statistics used to map raw coordinates into `[0,1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Coordinates that fell outside the fitted range and were clamped.
    pub clamped: usize,
}

impl Normalization {
    pub fn fit(points: &[f64], dim: usize) -> Self {
        let mut min = vec![f64::INFINITY; dim];
        let mut max = vec![f64::NEG_INFINITY; dim];
        for row in points.chunks_exact(dim) {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Normalization {
            min,
            max,
            clamped: 0,
        }
    }

    /// Maps points in place; constant dimensions map to 0.
    pub fn apply(&mut self, points: &mut [f64]) {
        let dim = self.min.len();
        for row in points.chunks_exact_mut(dim) {
            for (j, v) in row.iter_mut().enumerate() {
                let span = self.max[j] - self.min[j];
                let mapped = if span > 0.0 {
                    (*v - self.min[j]) / span
                } else {
                    0.0
                };
                if !(0.0..=1.0).contains(&mapped) {
                    self.clamped += 1;
                }
                *v = mapped.clamp(0.0, 1.0);
            }
        }
    }
}

/// A finite sample of labeled points in `[0,1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    name: String,
    dim: usize,
    classes: usize,
    points: Vec<f64>,
    labels: Vec<LabelSet>,
    normalization: Option<Normalization>,
}

impl LabeledDataset {
    /// Validates and builds a dataset from row-major points.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        classes: usize,
        points: Vec<f64>,
        labels: Vec<LabelSet>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("dimension must be positive"));
        }
        if classes == 0 {
            return Err(Error::validation("class count must be positive"));
        }
        if labels.is_empty() {
            return Err(Error::validation("dataset must contain at least one point"));
        }
        if points.len() != labels.len() * dim {
            return Err(Error::validation(format!(
                "{} coordinates do not form {} points of dimension {}",
                points.len(),
                labels.len(),
                dim
            )));
        }
        if let Some(pos) = points.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Range(format!(
                "point {} has coordinate {} outside [0,1]",
                pos / dim,
                points[pos]
            )));
        }
        for (i, set) in labels.iter().enumerate() {
            if set.is_empty() {
                return Err(Error::validation(format!("point {i} has an empty label set")));
            }
            if let Some(&bad) = set.labels().iter().find(|&&l| l == 0 || l as usize > classes) {
                return Err(Error::validation(format!(
                    "point {i} has label {bad} outside 1..={classes}"
                )));
            }
        }
        Ok(LabeledDataset {
            name: name.into(),
            dim,
            classes,
            points,
            labels,
            normalization: None,
        })
    }

    /// Single-label convenience constructor.
    pub fn from_single_labels(
        name: impl Into<String>,
        dim: usize,
        classes: usize,
        points: Vec<f64>,
        labels: &[u32],
    ) -> Result<Self> {
        let sets = labels.iter().map(|&l| LabelSet::single(l)).collect();
        Self::new(name, dim, classes, points, sets)
    }

    pub(crate) fn with_normalization(mut self, norm: Option<Normalization>) -> Self {
        self.normalization = norm;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Row-major coordinates, `len() * dim()` values.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> &[LabelSet] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &LabelSet {
        &self.labels[i]
    }

    pub fn normalization(&self) -> Option<&Normalization> {
        self.normalization.as_ref()
    }

    pub fn is_single_label(&self) -> bool {
        self.labels.iter().all(|s| s.len() == 1)
    }

    /// Labels of a single-label dataset, or a validation error naming the
    /// first multi-label point.
    pub fn single_labels(&self) -> Result<Vec<u32>> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.as_single().ok_or_else(|| {
                    Error::validation(format!(
                        "point {i} of '{}' has label set {{{s}}}; a single-label dataset is required",
                        self.name
                    ))
                })
            })
            .collect()
    }

    /// Row-major coordinates of all points whose label set contains `label`.
    pub fn class_points(&self, label: u32) -> Vec<f64> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, s)| s.contains(label))
            .flat_map(|(i, _)| self.point(i).iter().copied())
            .collect()
    }

    pub fn class_count(&self, label: u32) -> usize {
        self.labels.iter().filter(|s| s.contains(label)).count()
    }

    /// Keeps the points at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let points = indices
            .iter()
            .flat_map(|&i| self.point(i).iter().copied())
            .collect();
        let labels = indices.iter().map(|&i| self.labels[i].clone()).collect();
        Ok(Self::new(self.name.clone(), self.dim, self.classes, points, labels)?
            .with_normalization(self.normalization.clone()))
    }

    /// The single-label points only; errors if none remain.
    pub fn single_label_part(&self) -> Result<Self> {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i].len() == 1).collect();
        if keep.is_empty() {
            return Err(Error::validation(format!(
                "'{}' has no single-label points",
                self.name
            )));
        }
        self.subset(&keep)
    }

    /// Same points, new labels.
    pub fn relabeled(&self, labels: Vec<LabelSet>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::validation("relabeling must keep the point count"));
        }
        Ok(Self::new(
            self.name.clone(),
            self.dim,
            self.classes,
            self.points.clone(),
            labels,
        )?
        .with_normalization(self.normalization.clone()))
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// Maps every point `x` to `scale * x + shift`, keeping labels.
pub fn affine_transform(ds: &LabeledDataset, scale: f64, shift: &[f64]) -> Result<LabeledDataset> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::validation(format!("scale {scale} must be positive")));
    }
    if shift.len() != ds.dim() {
        return Err(Error::validation(format!(
            "shift has {} entries for dimension {}",
            shift.len(),
            ds.dim()
        )));
    }
    let mut points = ds.points().to_vec();
    for row in points.chunks_exact_mut(ds.dim()) {
        for (v, s) in row.iter_mut().zip(shift) {
            *v = scale * *v + s;
            if !(0.0..=1.0).contains(v) {
                return Err(Error::Range(format!(
                    "transformed coordinate {v} leaves [0,1]"
                )));
            }
        }
    }
    LabeledDataset::new(
        ds.name().to_string(),
        ds.dim(),
        ds.classes(),
        points,
        ds.labels().to_vec(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64], labels: &[u32]) -> LabeledDataset {
        LabeledDataset::from_single_labels("t", 1, 2, points.to_vec(), labels).unwrap()
    }

    #[test]
    fn rejects_out_of_range_labels_and_points() {
        assert!(LabeledDataset::from_single_labels("t", 1, 2, vec![0.5], &[3]).is_err());
        assert!(LabeledDataset::from_single_labels("t", 1, 2, vec![0.5], &[0]).is_err());
        assert!(matches!(
            LabeledDataset::from_single_labels("t", 1, 2, vec![1.5], &[1]),
            Err(Error::Range(_))
        ));
        assert!(LabeledDataset::new("t", 1, 2, vec![], vec![]).is_err());
    }

    #[test]
    fn affine_identity() {
        let ds = line(&[0.2, 0.8], &[1, 2]);
        assert_eq!(affine_transform(&ds, 1.0, &[0.0]).unwrap(), ds);
    }

    #[test]
    fn affine_arithmetic() {
        let ds = line(&[0.2, 0.8], &[1, 2]);
        let t = affine_transform(&ds, 0.5, &[0.1]).unwrap();
        assert!((t.point(0)[0] - 0.2).abs() < 1e-15);
        assert!((t.point(1)[0] - 0.5).abs() < 1e-15);
        assert_eq!(t.labels(), ds.labels());
    }

    #[test]
    fn affine_range_error() {
        let ds = line(&[0.6], &[1]);
        assert!(matches!(
            affine_transform(&ds, 2.0, &[0.0]),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            affine_transform(&ds, 1.0, &[0.5]),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn label_set_display_and_membership() {
        let s = LabelSet::new(vec![2, 1, 2]).unwrap();
        assert_eq!(s.to_string(), "1|2");
        assert!(s.contains(1) && s.contains(2) && !s.contains(3));
        assert_eq!(s.as_single(), None);
        assert!(LabelSet::new(vec![]).is_err());
    }

    #[test]
    fn normalization_maps_extremes() {
        let mut pts = vec![0.0, 10.0, 255.0, 20.0, 128.0, 10.0];
        let mut norm = Normalization::fit(&pts, 2);
        norm.apply(&mut pts);
        assert_eq!(pts[0], 0.0);
        assert_eq!(pts[2], 1.0);
        assert_eq!(pts[1], 0.0);
        assert_eq!(pts[3], 1.0);
        assert_eq!(norm.clamped, 0);
    }
}
