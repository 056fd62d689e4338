//! Inverse modulus of continuity `delta_f(eps)` of a probability-valued map:
//! the largest `delta` such that inputs closer than `delta` always have
//! outputs closer than `eps` in the sup norm. Equivalently, the smallest
//! distance between two inputs whose outputs differ by at least `eps`.
//!
//! On `[0,1]` and `[0,1]^2` it is computed over a regular grid by a ring
//! search that stops expanding a point's neighborhood once the ring radius
//! reaches the best violating distance found so far. The grid value can
//! only overestimate the continuum value. In higher dimensions only the
//! spectral surrogate `(e^{-L} - c) / prod ||W_i||_2` is available.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlp::Mlp;

/// A map from `[0,1]^d` to the probability simplex, evaluated in batches.
pub trait ProbabilityMap: Sync {
    fn input_dim(&self) -> usize;
    fn classes(&self) -> usize;
    /// Row-major `n x classes()` outputs for row-major inputs.
    fn evaluate(&self, points: &[f64]) -> Result<Vec<f64>>;
}

impl ProbabilityMap for Mlp {
    fn input_dim(&self) -> usize {
        Mlp::input_dim(self)
    }

    fn classes(&self) -> usize {
        Mlp::classes(self)
    }

    fn evaluate(&self, points: &[f64]) -> Result<Vec<f64>> {
        self.predict_batch(points)
    }
}

/// Adapts a closure `x -> probabilities` to [`ProbabilityMap`].
pub struct FnMap<F> {
    pub dim: usize,
    pub classes: usize,
    pub f: F,
}

impl<F> ProbabilityMap for FnMap<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn classes(&self) -> usize {
        self.classes
    }

    fn evaluate(&self, points: &[f64]) -> Result<Vec<f64>> {
        Ok(points.chunks_exact(self.dim).flat_map(|x| (self.f)(x)).collect())
    }
}

/// Regular grid on `[0,1]^dim` with `resolution` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub resolution: usize,
}

impl Grid {
    pub const DEFAULT_1D: Grid = Grid {
        dim: 1,
        resolution: 10_001,
    };
    pub const DEFAULT_2D: Grid = Grid {
        dim: 2,
        resolution: 250,
    };

    pub fn new(dim: usize, resolution: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::validation(format!(
                "grid search supports dimension 1 or 2, got {dim}"
            )));
        }
        if resolution < 2 {
            return Err(Error::validation("grid resolution must be at least 2"));
        }
        Ok(Grid { dim, resolution })
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.resolution - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.resolution.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cap returned when no violating pair exists: the diameter `sqrt(d)`.
    pub fn cap(&self) -> f64 {
        (self.dim as f64).sqrt()
    }

    /// Row-major grid coordinates; in 2D the second axis varies fastest.
    pub fn points(&self) -> Vec<f64> {
        let h = self.spacing();
        let axis = |i: usize| i as f64 * h;
        match self.dim {
            1 => (0..self.resolution).map(axis).collect(),
            _ => (0..self.resolution)
                .flat_map(|i| (0..self.resolution).flat_map(move |j| [axis(i), axis(j)]))
                .collect(),
        }
    }

    /// Euclidean distance between grid nodes `di`, `dj` steps apart.
    pub fn offset_distance(&self, di: usize, dj: usize) -> f64 {
        (((di * di + dj * dj) as f64).sqrt()) * self.spacing()
    }
}

/// Sup-norm gap between two output rows is at least `eps`.
#[inline]
pub fn violates(a: &[f64], b: &[f64], eps: f64) -> bool {
    a.iter().zip(b).any(|(x, y)| (x - y).abs() >= eps)
}

/// `e^{-loss} - c`, the output tolerance paired with a training loss.
pub fn epsilon_from_loss(loss: f64, c: f64) -> f64 {
    (-loss).exp() - c
}

fn atomic_min(cell: &AtomicU64, value: f64) {
    // non-negative floats order like their bit patterns
    cell.fetch_min(value.to_bits(), Ordering::Relaxed);
}

/// Grid `delta_f(eps)` from precomputed outputs (`grid.len() x classes`,
/// row-major, in [`Grid::points`] order).
pub fn delta_f_from_values(values: &[f64], classes: usize, grid: &Grid, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Undefined(format!(
            "output tolerance {eps} is not positive; the loss is above -ln c"
        )));
    }
    if values.len() != grid.len() * classes {
        return Err(Error::validation("output buffer does not match the grid"));
    }
    let cap = grid.cap();
    if eps >= 1.0 {
        return Ok(cap);
    }
    // per-class range: points whose outputs are within eps of every other
    // output can be skipped outright
    let mut lo = vec![f64::INFINITY; classes];
    let mut hi = vec![f64::NEG_INFINITY; classes];
    for row in values.chunks_exact(classes) {
        for k in 0..classes {
            lo[k] = lo[k].min(row[k]);
            hi[k] = hi[k].max(row[k]);
        }
    }
    if (0..classes).all(|k| hi[k] - lo[k] < eps) {
        return Ok(cap);
    }
    let may_violate = |row: &[f64]| (0..classes).any(|k| row[k] - lo[k] >= eps || hi[k] - row[k] >= eps);
    let best = AtomicU64::new(cap.to_bits());
    let res = grid.resolution;
    let row = |i: usize| &values[i * classes..(i + 1) * classes];

    match grid.dim {
        1 => {
            (0..res).into_par_iter().for_each(|i| {
                let a = row(i);
                if !may_violate(a) {
                    return;
                }
                for j in i + 1..res {
                    let dist = grid.offset_distance(j - i, 0);
                    if dist >= f64::from_bits(best.load(Ordering::Relaxed)) {
                        break;
                    }
                    if violates(a, row(j), eps) {
                        atomic_min(&best, dist);
                        break;
                    }
                }
            });
        }
        _ => {
            let idx = |x: usize, y: usize| x * res + y;
            (0..res * res).into_par_iter().for_each(|p| {
                let (px, py) = (p / res, p % res);
                let a = row(p);
                if !may_violate(a) {
                    return;
                }
                for r in 1..res {
                    // every node on Chebyshev ring r is at least r steps away
                    if grid.offset_distance(r, 0) >= f64::from_bits(best.load(Ordering::Relaxed)) {
                        break;
                    }
                    // half of the ring: offsets with dx > 0, or dx == 0 and dy > 0
                    let ri = r as isize;
                    let visit = |dx: isize, dy: isize| {
                        let (qx, qy) = (px as isize + dx, py as isize + dy);
                        if qx < 0 || qy < 0 || qx >= res as isize || qy >= res as isize {
                            return;
                        }
                        let dist = grid.offset_distance(dx.unsigned_abs(), dy.unsigned_abs());
                        if dist < f64::from_bits(best.load(Ordering::Relaxed))
                            && violates(a, row(idx(qx as usize, qy as usize)), eps)
                        {
                            atomic_min(&best, dist);
                        }
                    };
                    for dy in -ri..=ri {
                        visit(ri, dy);
                    }
                    for dx in 1..ri {
                        visit(dx, ri);
                        visit(dx, -ri);
                    }
                    visit(0, ri);
                }
            });
        }
    }
    Ok(f64::from_bits(best.into_inner()))
}

/// Evaluates `f` on the grid and returns the grid `delta_f(eps)`, capped at
/// `sqrt(d)` when no pair of grid outputs differs by `eps`.
pub fn delta_f_grid<F: ProbabilityMap + ?Sized>(f: &F, grid: &Grid, eps: f64) -> Result<f64> {
    if f.input_dim() != grid.dim {
        return Err(Error::validation(format!(
            "map has input dimension {}, grid has {}",
            f.input_dim(),
            grid.dim
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::Undefined(format!(
            "output tolerance {eps} is not positive; the loss is above -ln c"
        )));
    }
    if eps >= 1.0 {
        return Ok(grid.cap());
    }
    let values = f.evaluate(&grid.points())?;
    delta_f_from_values(&values, f.classes(), grid, eps)
}

/// `(e^{-loss} - c) / lipschitz`, the spectral lower estimate of
/// `delta_f(e^{-loss} - c)` with the softmax factor dropped.
pub fn delta_spectral(lipschitz: f64, loss: f64, c: f64) -> Result<f64> {
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(Error::validation(format!(
            "Lipschitz product must be positive, got {lipschitz}"
        )));
    }
    let eps = epsilon_from_loss(loss, c);
    if !(eps > 0.0) {
        return Err(Error::Undefined(format!(
            "e^(-{loss}) - {c} = {eps} is not positive"
        )));
    }
    Ok(eps / lipschitz)
}

/// Which training loss an output tolerance was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Max,
    Mean,
}

/// A smoothness query: tolerance `eps = e^{-loss} - c` on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessQuery {
    pub c: f64,
    pub loss_kind: LossKind,
    pub loss: f64,
    pub epsilon: f64,
    pub grid: Option<Grid>,
}

impl SmoothnessQuery {
    pub fn new(c: f64, loss_kind: LossKind, loss: f64, grid: Option<Grid>) -> Result<Self> {
        if !(0.5..1.0).contains(&c) {
            return Err(Error::validation(format!("c = {c} not in [0.5, 1)")));
        }
        Ok(SmoothnessQuery {
            c,
            loss_kind,
            loss,
            epsilon: epsilon_from_loss(loss, c),
            grid,
        })
    }

    pub fn is_defined(&self) -> bool {
        self.epsilon > 0.0
    }
}
