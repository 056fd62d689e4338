//! Random label functions drawn from a zero-mean Gaussian process with the
//! squared-exponential kernel `k(x, y) = exp(-|x - y|^2 / (2 l^2))`.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::{seeded, Rng};

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

fn kernel_matrix(points: &[f64], dim: usize, length_scale: f64) -> DMatrix<f64> {
    let n = points.len() / dim;
    let scale = 1.0 / (2.0 * length_scale * length_scale);
    DMatrix::from_fn(n, n, |i, j| {
        let sq: f64 = points[i * dim..(i + 1) * dim]
            .iter()
            .zip(&points[j * dim..(j + 1) * dim])
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (-sq * scale).exp()
    })
}

/// Draws `draws` joint samples of the process at `points` (row-major,
/// `dim` columns). The Cholesky factor is taken of the kernel matrix plus a
/// diagonal jitter that grows tenfold from 1e-10 until it succeeds or
/// passes 1e-4.
pub fn sample_rbf_gp(
    points: &[f64],
    dim: usize,
    length_scale: f64,
    draws: usize,
    rng: &mut Rng,
) -> Result<Vec<Vec<f64>>> {
    if !(length_scale > 0.0) {
        return Err(Error::validation(format!(
            "length scale must be positive, got {length_scale}"
        )));
    }
    let n = points.len() / dim;
    let kernel = kernel_matrix(points, dim, length_scale);
    let mut jitter = JITTER_START;
    let factor = loop {
        let mut k = kernel.clone();
        for i in 0..n {
            k[(i, i)] += jitter;
        }
        if let Some(chol) = k.cholesky() {
            break chol.l();
        }
        jitter *= 10.0;
        if jitter > JITTER_MAX * 1.000_001 {
            return Err(Error::Numerical(format!(
                "kernel matrix of {n} points not positive definite with jitter up to {JITTER_MAX:e}"
            )));
        }
    };
    Ok((0..draws)
        .map(|_| {
            let z = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
            (&factor * z).iter().copied().collect()
        })
        .collect())
}

fn binary_labels(g1: &[f64], g2: &[f64]) -> Vec<u32> {
    // ties go to class 2
    g1.iter()
        .zip(g2)
        .map(|(a, b)| if a > b { 1 } else { 2 })
        .collect()
}

/// `n` equispaced points on `[0,1]` labeled 1 where the first of two GP
/// draws exceeds the second and 2 elsewhere.
pub fn gp_binary_dataset(n: usize, length_scale: f64, seed: u64) -> Result<LabeledDataset> {
    if n < 2 {
        return Err(Error::validation(format!("need at least 2 points, got {n}")));
    }
    let points: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let mut rng = seeded(seed);
    let g = sample_rbf_gp(&points, 1, length_scale, 2, &mut rng)?;
    let labels = binary_labels(&g[0], &g[1]);
    LabeledDataset::from_single_labels(format!("gp-binary-n{n}-s{seed}"), 1, 2, points, &labels)
}

/// The same label rule sampled jointly on `n_train` equispaced training
/// points and `n_test` cell-centered test points `(j + 1/2) / n_test`.
pub fn gp_binary_split(
    n_train: usize,
    n_test: usize,
    length_scale: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if n_train < 2 || n_test < 1 {
        return Err(Error::validation("need n_train >= 2 and n_test >= 1"));
    }
    let mut points: Vec<f64> = (0..n_train).map(|i| i as f64 / (n_train - 1) as f64).collect();
    points.extend((0..n_test).map(|j| (j as f64 + 0.5) / n_test as f64));
    let mut rng = seeded(seed);
    let g = sample_rbf_gp(&points, 1, length_scale, 2, &mut rng)?;
    let labels = binary_labels(&g[0], &g[1]);
    let train = LabeledDataset::from_single_labels(
        format!("gp-binary-train-s{seed}"),
        1,
        2,
        points[..n_train].to_vec(),
        &labels[..n_train],
    )?;
    let test = LabeledDataset::from_single_labels(
        format!("gp-binary-test-s{seed}"),
        1,
        2,
        points[n_train..].to_vec(),
        &labels[n_train..],
    )?;
    Ok((train, test))
}

/// Uniform random points in `[0,1]^dim` labeled by the argmax of `classes`
/// independent GP draws.
pub fn gp_multiclass_split(
    n_train: usize,
    n_test: usize,
    dim: usize,
    classes: usize,
    length_scale: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if n_train < 1 || n_test < 1 || dim < 1 || classes < 2 {
        return Err(Error::validation(
            "need n_train, n_test, dim >= 1 and at least 2 classes",
        ));
    }
    let mut rng = seeded(seed);
    let total = n_train + n_test;
    let points: Vec<f64> = (0..total * dim).map(|_| rng.random::<f64>()).collect();
    let g = sample_rbf_gp(&points, dim, length_scale, classes, &mut rng)?;
    let labels: Vec<u32> = (0..total)
        .map(|i| {
            let mut best = 0;
            for k in 1..classes {
                if g[k][i] > g[best][i] {
                    best = k;
                }
            }
            best as u32 + 1
        })
        .collect();
    let train = LabeledDataset::from_single_labels(
        format!("gp-{dim}d-{classes}c-train-s{seed}"),
        dim,
        classes,
        points[..n_train * dim].to_vec(),
        &labels[..n_train],
    )?;
    let test = LabeledDataset::from_single_labels(
        format!("gp-{dim}d-{classes}c-test-s{seed}"),
        dim,
        classes,
        points[n_train * dim..].to_vec(),
        &labels[n_train..],
    )?;
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_given_seed() {
        let a = gp_binary_dataset(50, 0.2, 11).unwrap();
        let b = gp_binary_dataset(50, 0.2, 11).unwrap();
        assert_eq!(a, b);
        let c = gp_binary_dataset(50, 0.2, 12).unwrap();
        assert_ne!(a.labels(), c.labels());
    }

    #[test]
    fn huge_length_scale_gives_one_label() {
        // Independent route: an eigen-decomposition square root of the same
        // kernel, driven by the same normals, yields functions that are
        // nearly constant too, so the sign of g1 - g2 never flips.
        for seed in 0..20 {
            let ds = gp_binary_dataset(40, 1e3, seed).unwrap();
            let labels = ds.single_labels().unwrap();
            assert!(labels.iter().all(|&l| l == labels[0]), "seed {seed}");

            let pts: Vec<f64> = (0..40).map(|i| i as f64 / 39.0).collect();
            let k = kernel_matrix(&pts, 1, 1e3);
            let eig = k.symmetric_eigen();
            let mut rng = seeded(seed);
            let draw = |rng: &mut Rng| {
                let z = DVector::from_iterator(40, (0..40).map(|_| rng.sample::<f64, _>(StandardNormal)));
                let scaled = DVector::from_iterator(
                    40,
                    eig.eigenvalues.iter().zip(z.iter()).map(|(l, z)| l.max(0.0).sqrt() * z),
                );
                &eig.eigenvectors * scaled
            };
            let g1 = draw(&mut rng);
            let g2 = draw(&mut rng);
            let oracle = binary_labels(g1.as_slice(), g2.as_slice());
            assert!(oracle.iter().all(|&l| l == oracle[0]), "oracle seed {seed}");
        }
    }

    #[test]
    fn label_rule_and_ties() {
        assert_eq!(binary_labels(&[1.0, 2.0], &[0.0, 1.0]), vec![1, 1]);
        assert_eq!(binary_labels(&[0.5], &[0.5]), vec![2]);
    }

    #[test]
    fn sample_variance_matches_kernel_diagonal() {
        let mut rng = seeded(5);
        let pts = [0.0, 0.5, 1.0];
        let draws = sample_rbf_gp(&pts, 1, 0.2, 20000, &mut rng).unwrap();
        let var: f64 = draws.iter().map(|g| g[1] * g[1]).sum::<f64>() / draws.len() as f64;
        assert!((var - 1.0).abs() < 0.05, "{var}");
        let cov: f64 = draws.iter().map(|g| g[0] * g[1]).sum::<f64>() / draws.len() as f64;
        let expect = (-0.25f64 / (2.0 * 0.04)).exp();
        assert!((cov - expect).abs() < 0.05, "{cov} vs {expect}");
    }

    #[test]
    fn bad_length_scale() {
        assert!(gp_binary_dataset(10, 0.0, 1).is_err());
        assert!(gp_binary_dataset(1, 0.2, 1).is_err());
    }

    #[test]
    fn multiclass_shapes() {
        let (tr, te) = gp_multiclass_split(30, 20, 3, 4, 0.5, 2).unwrap();
        assert_eq!((tr.len(), te.len(), tr.dim(), tr.classes()), (30, 20, 3, 4));
    }
}
