use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcPoint {
    pub cc: f64,
    pub error: f64,
    #[serde(rename = "K")]
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcFit {
    pub slope: f64,
    pub r2: f64,
    pub points: usize,
    pub normalized: bool,
}

/// Least-squares line through the origin of error (optionally divided by
/// `sqrt(K)`) against CC. `R^2` takes the total sum of squares about the
/// mean of the responses.
pub fn fit_cc_error_line(points: &[CcPoint], normalize: bool) -> Result<CcFit> {
    if points.len() < 2 {
        return Err(Error::validation("need at least 2 points to fit"));
    }
    let ys: Vec<f64> = points
        .iter()
        .map(|p| if normalize { p.error / (p.k as f64).sqrt() } else { p.error })
        .collect();
    let sxx: f64 = points.iter().map(|p| p.cc * p.cc).sum();
    if sxx == 0.0 {
        return Err(Error::validation("all CC values are zero"));
    }
    let sxy: f64 = points.iter().zip(&ys).map(|(p, y)| p.cc * y).sum();
    let slope = sxy / sxx;
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_res: f64 = points
        .iter()
        .zip(&ys)
        .map(|(p, y)| (y - slope * p.cc).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let r2 = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(CcFit {
        slope,
        r2,
        points: points.len(),
        normalized: normalize,
    })
}

/// Reference (CC, best error, K) rows for fifteen image classification
/// setups: MNIST, CIFAR-10 and SVHN with and without convolutional features,
/// CIFAR-100 and COIL variants.
pub fn reference_table_points() -> Vec<CcPoint> {
    const ROWS: [(f64, f64, usize); 15] = [
        (1.442, 0.01, 10),
        (10.23, 0.45, 10),
        (12.11, 0.53, 10),
        (5.280, 0.18, 10),
        (12.68, 0.49, 10),
        (10.48, 0.56, 10),
        (2.995, 0.23, 10),
        (9.012, 0.62, 20),
        (11.08, 0.72, 20),
        (5.326, 0.40, 20),
        (0.3453, 0.03, 20),
        (6.149, 0.73, 100),
        (7.380, 0.81, 100),
        (4.000, 0.52, 100),
        (0.2930, 0.01, 100),
    ];
    ROWS.iter()
        .map(|&(cc, error, k)| CcPoint { cc, error, k })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(xy: &[(f64, f64)]) -> Vec<CcPoint> {
        xy.iter()
            .map(|&(cc, error)| CcPoint { cc, error, k: 1 })
            .collect()
    }

    #[test]
    fn exact_line() {
        let f = fit_cc_error_line(&pts(&[(1.0, 2.0), (2.0, 4.0), (3.0, 6.0)]), false).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15);
        assert!((f.r2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn off_line_point_lowers_r2() {
        let f = fit_cc_error_line(&pts(&[(1.0, 2.0), (2.0, 4.0), (3.0, 7.0)]), false).unwrap();
        assert!(f.r2 < 1.0);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(fit_cc_error_line(&pts(&[(1.0, 2.0)]), false).is_err());
        assert!(fit_cc_error_line(&pts(&[(0.0, 2.0), (0.0, 1.0)]), false).is_err());
    }

    #[test]
    fn normalization_divides_by_root_k() {
        let p = [CcPoint { cc: 1.0, error: 0.4, k: 4 }, CcPoint { cc: 2.0, error: 0.8, k: 4 }];
        let f = fit_cc_error_line(&p, true).unwrap();
        assert!((f.slope - 0.2).abs() < 1e-15);
    }

    #[test]
    fn reference_rows_reproduce_the_fit() {
        // y values agree with the printed E/sqrt(K) column
        let printed = [
            0.0032, 0.1423, 0.1676, 0.0569, 0.1550, 0.1771, 0.0727, 0.1386, 0.1610, 0.0894,
            0.0067, 0.0730, 0.0810, 0.0520, 0.0010,
        ];
        for (p, y) in reference_table_points().iter().zip(printed) {
            assert!((p.error / (p.k as f64).sqrt() - y).abs() < 6e-5, "{p:?}");
        }
        let f = fit_cc_error_line(&reference_table_points(), true).unwrap();
        assert!((f.slope - 0.014).abs() / 0.014 < 0.1, "{}", f.slope);
        assert!((f.r2 - 0.92).abs() / 0.92 < 0.1, "{}", f.r2);
    }
}
