//! Largest singular value by power iteration on `W^T W`.

use rand::Rng as _;
use rand_distr::StandardNormal;

use super::Mlp;
use crate::error::{Error, Result};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    /// Stop once the relative change of the estimate falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        PowerIteration {
            tolerance: 1e-8,
            max_iterations: 10_000,
            seed: 0x5eed,
        }
    }
}

const MAX_RESTARTS: usize = 8;

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}

/// `out = W^T (W v)` for row-major `rows x cols` `W`; returns `|W v|^2`.
fn gram_apply(w: &[f64], rows: usize, cols: usize, v: &[f64], tmp: &mut [f64], out: &mut [f64]) -> f64 {
    for (r, t) in tmp.iter_mut().enumerate().take(rows) {
        *t = w[r * cols..(r + 1) * cols].iter().zip(v).map(|(a, b)| a * b).sum();
    }
    out.iter_mut().for_each(|o| *o = 0.0);
    for (r, &t) in tmp.iter().enumerate() {
        for (o, a) in out.iter_mut().zip(&w[r * cols..(r + 1) * cols]) {
            *o += a * t;
        }
    }
    tmp.iter().map(|t| t * t).sum()
}

pub fn spectral_norm(w: &[f64], rows: usize, cols: usize) -> Result<f64> {
    spectral_norm_with(w, rows, cols, &PowerIteration::default())
}

/// Spectral norm of a row-major `rows x cols` matrix.
///
/// The estimate is `sqrt(v^T W^T W v)` for the current unit iterate `v`.
/// A start vector that collapses to zero (orthogonal to the row space) is
/// replaced by a fresh random one.
pub fn spectral_norm_with(w: &[f64], rows: usize, cols: usize, cfg: &PowerIteration) -> Result<f64> {
    if w.len() != rows * cols || rows == 0 || cols == 0 {
        return Err(Error::validation("matrix buffer does not match its shape"));
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    if w.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let mut rng = seeded(cfg.seed);
    let mut tmp = vec![0.0; rows];
    let mut next = vec![0.0; cols];
    'restart: for _ in 0..MAX_RESTARTS {
        let mut v: Vec<f64> = (0..cols).map(|_| rng.sample(StandardNormal)).collect();
        normalize(&mut v);
        let mut estimate = 0.0f64;
        for _ in 0..cfg.max_iterations {
            let rayleigh = gram_apply(w, rows, cols, &v, &mut tmp, &mut next);
            let sigma = rayleigh.sqrt();
            if normalize(&mut next) == 0.0 {
                continue 'restart;
            }
            std::mem::swap(&mut v, &mut next);
            if estimate > 0.0 && ((sigma - estimate) / sigma).abs() < cfg.tolerance {
                // one more Rayleigh quotient on the refined vector
                let final_sq = gram_apply(w, rows, cols, &v, &mut tmp, &mut next);
                return Ok(final_sq.sqrt().max(sigma));
            }
            estimate = sigma;
        }
        return Ok(estimate);
    }
    Err(Error::Numerical(
        "power iteration kept collapsing to the null space".into(),
    ))
}

/// Product of the spectral norms of all weight matrices.
pub fn lipschitz_product(net: &Mlp) -> Result<f64> {
    net.layers().iter().try_fold(1.0, |acc, l| {
        Ok(acc * spectral_norm(&l.weights, l.outputs, l.inputs)?)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let eye = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        assert!((spectral_norm(&eye, 3, 3).unwrap() - 1.0).abs() < 1e-12);
        let diag = [3.0, 0.0, 0.0, 1.0];
        assert!((spectral_norm(&diag, 2, 2).unwrap() - 3.0).abs() < 1e-7);
    }

    #[test]
    fn homogeneous_in_scale() {
        let mut rng = seeded(8);
        let w: Vec<f64> = (0..20).map(|_| rng.sample(StandardNormal)).collect();
        let base = spectral_norm(&w, 4, 5).unwrap();
        for c in [-2.5, 0.1, 7.0] {
            let scaled: Vec<f64> = w.iter().map(|x| c * x).collect();
            let s = spectral_norm(&scaled, 4, 5).unwrap();
            assert!(((s - c.abs() * base) / s).abs() < 1e-8, "{c}");
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(spectral_norm(&[1.0, f64::NAN], 1, 2), Err(Error::Numerical(_))));
    }

    #[test]
    fn rank_one_matrix() {
        // u v^T with |u| = 3, |v| = 2
        let u = [1.0, 2.0, 2.0];
        let v = [0.0, 2.0];
        let w: Vec<f64> = u.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
        assert!((spectral_norm(&w, 3, 2).unwrap() - 6.0).abs() < 1e-9);
    }

    #[test]
    fn product_over_layers() {
        let mut net = Mlp::zeros(&[2, 2, 2]).unwrap();
        net.layers_mut()[0].weights = vec![2.0, 0.0, 0.0, 1.0];
        net.layers_mut()[1].weights = vec![0.0, 3.0, 1.0, 0.0];
        assert!((lipschitz_product(&net).unwrap() - 6.0).abs() < 1e-7);
        net.layers_mut()[0].weights = vec![1.0, 0.0, 0.0, 1.0];
        net.layers_mut()[1].weights = vec![1.0, 0.0, 0.0, 1.0];
        assert!((lipschitz_product(&net).unwrap() - 1.0).abs() < 1e-12);
    }
}
