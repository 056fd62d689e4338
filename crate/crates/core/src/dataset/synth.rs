//! The synthetic interval (1D) and annulus (2D) problems with a known
//! separation gap.

use super::{LabelSet, LabeledDataset};
use crate::error::{Error, Result};

/// Label set of the interval problem: `{1}` up to `0.5 - gap/2`, `{2}` from
/// `0.5 + gap/2`, both labels in the open band between.
pub fn interval_tag(x: f64, gap: f64) -> LabelSet {
    let (lo, hi) = (0.5 - gap / 2.0, 0.5 + gap / 2.0);
    if x <= lo {
        LabelSet::single(1)
    } else if x >= hi {
        LabelSet::single(2)
    } else {
        LabelSet(vec![1, 2])
    }
}

/// Label set of the annulus problem: `{1}` within radius `0.4 - gap/2` of the
/// center, `{2}` beyond `0.4 + gap/2`, both labels between (closed regions
/// on the single-label side).
pub fn annulus_tag(x: f64, y: f64, gap: f64) -> LabelSet {
    let r = ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt();
    if r <= 0.4 - gap / 2.0 {
        LabelSet::single(1)
    } else if r >= 0.4 + gap / 2.0 {
        LabelSet::single(2)
    } else {
        LabelSet(vec![1, 2])
    }
}

fn linspace(n: usize) -> impl Iterator<Item = f64> {
    let denom = (n.max(2) - 1) as f64;
    (0..n).map(move |i| if n == 1 { 0.5 } else { i as f64 / denom })
}

/// Interval problem: `n` equispaced training points outside the buffer band
/// (`n/2` per class, including both band edges and both ends of `[0,1]`) and
/// `n_test` equispaced test points labeled by [`interval_tag`].
pub fn synth_1d(n: usize, gap: f64, n_test: usize) -> Result<(LabeledDataset, LabeledDataset)> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::validation(format!(
            "training size must be an even number >= 4, got {n}"
        )));
    }
    if !(gap > 0.0 && gap < 1.0) {
        return Err(Error::validation(format!("separation gap {gap} not in (0,1)")));
    }
    if n_test == 0 {
        return Err(Error::validation("test size must be positive"));
    }
    let (lo, hi) = (0.5 - gap / 2.0, 0.5 + gap / 2.0);
    let half = n / 2;
    let last = (half - 1) as f64;
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for k in 0..half {
        points.push(lo * (k as f64 / last));
        labels.push(1);
    }
    for k in 0..half {
        points.push(hi + (1.0 - hi) * (k as f64 / last));
        labels.push(2);
    }
    let train = LabeledDataset::from_single_labels(format!("interval-n{n}"), 1, 2, points, &labels)?;

    let test_points: Vec<f64> = linspace(n_test).collect();
    let test_labels = test_points.iter().map(|&x| interval_tag(x, gap)).collect();
    let test = LabeledDataset::new(format!("interval-test{n_test}"), 1, 2, test_points, test_labels)?;
    Ok((train, test))
}

/// Annulus problem: the `m x m` grid minus its buffer-band points as the
/// training set, and the full `m_test x m_test` grid as the test set.
pub fn synth_2d(m: usize, gap: f64, m_test: usize) -> Result<(LabeledDataset, LabeledDataset)> {
    if m < 2 {
        return Err(Error::validation(format!("grid size must be >= 2, got {m}")));
    }
    if !(gap > 0.0 && gap < 0.8) {
        return Err(Error::validation(format!("separation gap {gap} not in (0,0.8)")));
    }
    if m_test < 2 {
        return Err(Error::validation("test grid size must be >= 2"));
    }
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let axis: Vec<f64> = linspace(m).collect();
    for &x in &axis {
        for &y in &axis {
            let tag = annulus_tag(x, y, gap);
            if tag.len() == 1 {
                points.extend_from_slice(&[x, y]);
                labels.push(tag);
            }
        }
    }
    let train = LabeledDataset::new(format!("annulus-m{m}"), 2, 2, points, labels)?;

    let axis: Vec<f64> = linspace(m_test).collect();
    let mut test_points = Vec::with_capacity(2 * m_test * m_test);
    let mut test_labels = Vec::with_capacity(m_test * m_test);
    for &x in &axis {
        for &y in &axis {
            test_points.extend_from_slice(&[x, y]);
            test_labels.push(annulus_tag(x, y, gap));
        }
    }
    let test = LabeledDataset::new(format!("annulus-test{m_test}"), 2, 2, test_points, test_labels)?;
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_points() {
        let (train, _) = synth_1d(4, 0.1, 11).unwrap();
        let xs = train.points();
        let expect = [0.0, 0.45, 0.55, 1.0];
        for (a, b) in xs.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15, "{xs:?}");
        }
        assert_eq!(train.single_labels().unwrap(), vec![1, 1, 2, 2]);
    }

    #[test]
    fn twenty_points_hit_band_edges() {
        let (train, _) = synth_1d(20, 0.1, 100).unwrap();
        let labels = train.single_labels().unwrap();
        let max1 = (0..20).filter(|&i| labels[i] == 1).map(|i| train.point(i)[0]).fold(f64::MIN, f64::max);
        let min2 = (0..20).filter(|&i| labels[i] == 2).map(|i| train.point(i)[0]).fold(f64::MAX, f64::min);
        assert_eq!(max1, 0.5 - 0.05);
        assert_eq!(min2, 0.5 + 0.05);
        // equispaced with step (1 - gap) / (n - 2)
        let step = 0.9 / 18.0;
        for i in 1..10 {
            assert!((train.point(i)[0] - train.point(i - 1)[0] - step).abs() < 1e-12);
        }
    }

    #[test]
    fn buffer_band_labels() {
        assert_eq!(interval_tag(0.5, 0.1).labels(), &[1, 2]);
        assert_eq!(interval_tag(0.45, 0.1).labels(), &[1]);
        assert_eq!(interval_tag(0.55, 0.1).labels(), &[2]);
        let (train, test) = synth_1d(10, 0.1, 10001).unwrap();
        assert!(train.is_single_label());
        for i in 0..train.len() {
            let x = train.point(i)[0];
            assert!(!(x > 0.45 && x < 0.55));
        }
        assert_eq!(test.label(5000).labels(), &[1, 2]);
    }

    #[test]
    fn rejects_odd_or_small() {
        assert!(synth_1d(5, 0.1, 10).is_err());
        assert!(synth_1d(2, 0.1, 10).is_err());
        assert!(synth_1d(4, 1.5, 10).is_err());
    }

    #[test]
    fn corners_grid() {
        let (train, _) = synth_2d(2, 0.1, 2).unwrap();
        assert_eq!(train.len(), 4);
        assert!(train.labels().iter().all(|s| s.labels() == [2]));
    }

    #[test]
    fn point_near_top_removed_iff_in_band() {
        let m = 20;
        let (train, _) = synth_2d(m, 0.1, 2).unwrap();
        // grid point nearest (0.5, 0.9)
        let g = |v: f64| ((v * (m - 1) as f64).round()) / (m - 1) as f64;
        let (x, y) = (g(0.5), g(0.9));
        let r = ((x - 0.5f64).powi(2) + (y - 0.5f64).powi(2)).sqrt();
        let present = (0..train.len()).any(|i| train.point(i) == [x, y]);
        assert_eq!(present, !(r > 0.35 && r < 0.45));
    }

    #[test]
    fn twenty_grid_count_matches_enumeration() {
        let (train, test) = synth_2d(20, 0.1, 20).unwrap();
        let mut kept = 0;
        for i in 0..20 {
            for j in 0..20 {
                let (x, y) = (i as f64 / 19.0, j as f64 / 19.0);
                let r = ((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5)).sqrt();
                if !(r > 0.35 && r < 0.45) {
                    kept += 1;
                }
            }
        }
        assert_eq!(train.len(), kept);
        assert!(kept < 400);
        assert_eq!(test.len(), 400);
    }
}
