//! Accuracy estimators and the accuracy bounds built from total cover,
//! separation gaps and network smoothness.
//!
//! `f` is `c`-accurate at `x` when some label in `tag(x)` gets probability
//! strictly above `c`. With `delta = min(delta_0, delta_f(e^{-L_max} - c))`
//! and `L_max < -ln c` on a single-label training set,
//! `p_c(f) >= 1 - (sqrt(d) / delta) (1 - rho_T)`.

use serde::{Deserialize, Serialize};

use crate::cover::{empirical_separation_gap, total_cover_of};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::mlp::{lipschitz_product, losses, Mlp};
use crate::smoothness::{delta_f_grid, delta_spectral, epsilon_from_loss, Grid, ProbabilityMap};

fn check_c(c: f64) -> Result<()> {
    if !(0.5..1.0).contains(&c) {
        return Err(Error::validation(format!("c = {c} not in [0.5, 1)")));
    }
    Ok(())
}

fn outputs<F: ProbabilityMap + ?Sized>(f: &F, data: &LabeledDataset) -> Result<Vec<f64>> {
    if f.input_dim() != data.dim() {
        return Err(Error::validation(format!(
            "map input dimension {} does not match data dimension {}",
            f.input_dim(),
            data.dim()
        )));
    }
    f.evaluate(data.points())
}

/// Per-point `c`-accuracy flags.
pub fn c_accurate_flags<F: ProbabilityMap + ?Sized>(
    f: &F,
    data: &LabeledDataset,
    c: f64,
) -> Result<Vec<bool>> {
    let k = f.classes();
    let probs = outputs(f, data)?;
    Ok(probs
        .chunks_exact(k)
        .zip(data.labels())
        .map(|(p, tag)| {
            tag.labels()
                .iter()
                .any(|&l| (l as usize) <= k && p[l as usize - 1] > c)
        })
        .collect())
}

/// Fraction of `test` at which `f` is `c`-accurate.
pub fn c_accuracy_on_d<F: ProbabilityMap + ?Sized>(
    f: &F,
    test: &LabeledDataset,
    c: f64,
) -> Result<f64> {
    check_c(c)?;
    let flags = c_accurate_flags(f, test, c)?;
    Ok(flags.iter().filter(|&&b| b).count() as f64 / flags.len() as f64)
}

/// Fraction of `test` whose strict argmax lies in the label set; ties
/// count as failures.
pub fn expected_accuracy<F: ProbabilityMap + ?Sized>(f: &F, test: &LabeledDataset) -> Result<f64> {
    let k = f.classes();
    let probs = outputs(f, test)?;
    let correct = probs
        .chunks_exact(k)
        .zip(test.labels())
        .filter(|(p, tag)| {
            let mut best = 0;
            let mut tied = false;
            for i in 1..k {
                if p[i] > p[best] {
                    best = i;
                    tied = false;
                } else if p[i] == p[best] {
                    tied = true;
                }
            }
            !tied && tag.contains(best as u32 + 1)
        })
        .count();
    Ok(correct as f64 / test.len() as f64)
}

/// `rho(T~_c) / rho(T)`, where `T~_c` are the training points at which `f`
/// is `c`-accurate; 0 when there are none.
pub fn c_accuracy_on_t<F: ProbabilityMap + ?Sized>(
    f: &F,
    train: &LabeledDataset,
    test: &LabeledDataset,
    c: f64,
) -> Result<f64> {
    check_c(c)?;
    train.single_labels()?;
    let rho = total_cover_of(train.points(), test.points(), train.dim())?;
    if !(rho > 0.0) {
        return Err(Error::validation("total cover of the training set is zero"));
    }
    let flags = c_accurate_flags(f, train, c)?;
    let kept: Vec<usize> = (0..train.len()).filter(|&i| flags[i]).collect();
    if kept.is_empty() {
        return Ok(0.0);
    }
    let sub = train.subset(&kept)?;
    Ok(total_cover_of(sub.points(), test.points(), train.dim())? / rho)
}

/// A bound value with a flag for the vacuous (non-positive) case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    pub vacuous: bool,
}

impl BoundValue {
    fn new(value: f64) -> Self {
        BoundValue {
            value,
            vacuous: value <= 0.0,
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) {
        return Err(Error::validation(format!("delta must be positive, got {delta}")));
    }
    Ok(())
}

/// `1 - (sqrt(d) / delta) (1 - rho)`.
pub fn thm_lower_bound(rho: f64, dim: usize, delta: f64) -> Result<BoundValue> {
    check_delta(delta)?;
    Ok(BoundValue::new(1.0 - (dim as f64).sqrt() / delta * (1.0 - rho)))
}

/// `1 - (sqrt(d) / delta) (1 - p_{c1}^T rho)`, the bound on `p_{c2}` from the
/// empirical `c1`-accuracy, with `delta = min(delta_0, delta_f(c1 - c2))`.
pub fn prop31_bound(p_c1_on_t: f64, rho: f64, dim: usize, delta: f64) -> Result<BoundValue> {
    check_delta(delta)?;
    if !(0.0..=1.0).contains(&p_c1_on_t) || !(0.0..=1.0).contains(&rho) {
        return Err(Error::validation("accuracy and cover must lie in [0,1]"));
    }
    Ok(BoundValue::new(
        1.0 - (dim as f64).sqrt() / delta * (1.0 - p_c1_on_t * rho),
    ))
}

/// Both forms of the expected-error upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBound {
    /// `sqrt(d) (1 - rho) / min(delta_0, kappa delta_T)`.
    pub min_form: f64,
    /// `alpha(T) CC(T)` with `alpha = sqrt(d) CD / min(delta_0, kappa delta_T)`.
    pub alpha_cc_form: f64,
    pub alpha: f64,
}

pub fn error_bound_cc(
    dim: usize,
    delta0: f64,
    delta_t: f64,
    kappa: f64,
    cd: f64,
    rho: f64,
) -> Result<ErrorBound> {
    if !(kappa > 0.0 && delta_t > 0.0 && delta0 > 0.0) {
        return Err(Error::validation("kappa, delta_T and delta_0 must be positive"));
    }
    if cd == 0.0 {
        return Err(Error::Undefined("cover difference is zero".into()));
    }
    let denom = delta0.min(kappa * delta_t);
    let root_d = (dim as f64).sqrt();
    let alpha = root_d * cd / denom;
    let cc = (1.0 - rho) / cd;
    Ok(ErrorBound {
        min_form: root_d * (1.0 - rho) / denom,
        alpha_cc_form: alpha * cc,
        alpha,
    })
}

/// How `delta_f` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaEstimator {
    /// Ring search over a regular grid, shrunk by one grid spacing.
    Grid,
    /// Spectral-norm surrogate.
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Precondition {
    pub name: String,
    pub held: bool,
    pub detail: String,
}

/// Inputs for [`bound_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    pub c: f64,
    /// Known separation gap of the ground-truth labels.
    pub delta0: Option<f64>,
    /// Grid for `delta_f` in one or two dimensions; `None` uses the default
    /// grid there and the spectral surrogate elsewhere.
    pub grid: Option<Grid>,
}

impl Default for BoundConfig {
    fn default() -> Self {
        BoundConfig {
            c: 0.5,
            delta0: None,
            grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub schema_version: u32,
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "rho_T")]
    pub rho_t: f64,
    pub delta0: Option<f64>,
    #[serde(rename = "delta_T")]
    pub delta_t: f64,
    pub c: f64,
    pub l_max: f64,
    pub l_mean: f64,
    pub epsilon: f64,
    /// Raw estimate of `delta_f(e^{-L_max} - c)`; `None` when undefined.
    pub delta_f: Option<f64>,
    /// The value entering `delta` (grid estimates shrunk by one spacing).
    pub delta_f_used: Option<f64>,
    pub estimator: DeltaEstimator,
    pub grid_spacing: Option<f64>,
    pub delta: Option<f64>,
    /// `min(delta_T, delta_f)`, reported only when `delta_0` is unknown; it
    /// is not a sound replacement for `delta_0` and never enters the bound.
    #[serde(rename = "delta_T_proxy")]
    pub delta_t_proxy: Option<f64>,
    pub lower_bound: Option<BoundValue>,
    pub p_c: f64,
    pub p: f64,
    pub preconditions: Vec<Precondition>,
    pub preconditions_met: bool,
    /// `p_c >= lower_bound - 1e-9`, when the preconditions are met.
    pub bound_holds: Option<bool>,
    pub n_test_excluded: usize,
}

/// Evaluates the `c`-accuracy lower bound for a trained network and
/// measures the accuracies it bounds. The distribution sample is the
/// single-label part of `test`.
pub fn bound_report(
    net: &Mlp,
    train: &LabeledDataset,
    test: &LabeledDataset,
    cfg: &BoundConfig,
) -> Result<BoundReport> {
    check_c(cfg.c)?;
    let mut preconditions = Vec::new();
    let single = train.is_single_label();
    preconditions.push(Precondition {
        name: "single_label_train".into(),
        held: single,
        detail: format!("{} training points", train.len()),
    });
    if !single {
        return Err(Error::validation("the training set must be single-label"));
    }
    let measure = test.single_label_part()?;
    let dim = train.dim();
    let rho_t = total_cover_of(train.points(), measure.points(), dim)?;
    let delta_t = empirical_separation_gap(train)?;
    let loss = losses(net, train)?;
    let epsilon = epsilon_from_loss(loss.max, cfg.c);
    let loss_ok = loss.max < -cfg.c.ln();
    preconditions.push(Precondition {
        name: "max_loss_below_neg_ln_c".into(),
        held: loss_ok,
        detail: format!("L_max = {} vs -ln c = {}", loss.max, -cfg.c.ln()),
    });

    let grid = match (cfg.grid, dim) {
        (Some(g), _) => Some(g),
        (None, 1) => Some(Grid::DEFAULT_1D),
        (None, 2) => Some(Grid::DEFAULT_2D),
        _ => None,
    };
    let (estimator, delta_f, delta_f_used) = if let Some(g) = grid {
        let raw = if epsilon > 0.0 {
            Some(delta_f_grid(net, &g, epsilon)?)
        } else {
            None
        };
        (DeltaEstimator::Grid, raw, raw.map(|v| v - g.spacing()))
    } else {
        let raw = if epsilon > 0.0 {
            Some(delta_spectral(lipschitz_product(net)?, loss.max, cfg.c)?)
        } else {
            None
        };
        (DeltaEstimator::Spectral, raw, raw)
    };
    let delta = delta_f_used.map(|df| cfg.delta0.map_or(df, |d0| d0.min(df)));
    let delta_ok = delta.is_some_and(|d| d > 0.0);
    preconditions.push(Precondition {
        name: "delta_positive".into(),
        held: delta_ok,
        detail: format!("delta = {delta:?}"),
    });
    preconditions.push(Precondition {
        name: "delta0_known".into(),
        held: cfg.delta0.is_some(),
        detail: if cfg.delta0.is_some() {
            "delta = min(delta_0, delta_f)".into()
        } else {
            "delta_0 unknown: delta uses delta_f only; min(delta_T, delta_f) reported as a flagged proxy".into()
        },
    });
    let lower_bound = match delta {
        Some(d) if d > 0.0 => Some(thm_lower_bound(rho_t, dim, d)?),
        _ => None,
    };
    let p_c = c_accuracy_on_d(net, &measure, cfg.c)?;
    let p = expected_accuracy(net, &measure)?;
    let preconditions_met = loss_ok && delta_ok;
    let bound_holds = if preconditions_met {
        lower_bound.map(|b| p_c >= b.value - 1e-9)
    } else {
        None
    };
    Ok(BoundReport {
        schema_version: crate::SCHEMA_VERSION,
        d: dim,
        k: train.classes(),
        rho_t,
        delta0: cfg.delta0,
        delta_t,
        c: cfg.c,
        l_max: loss.max,
        l_mean: loss.mean,
        epsilon,
        delta_f,
        delta_f_used,
        estimator,
        grid_spacing: grid.map(|g| g.spacing()),
        delta,
        delta_t_proxy: if cfg.delta0.is_none() {
            delta_f.map(|df| delta_t.min(df))
        } else {
            None
        },
        lower_bound,
        p_c,
        p,
        preconditions,
        preconditions_met,
        bound_holds,
        n_test_excluded: test.len() - measure.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smoothness::FnMap;

    fn line(points: &[f64], labels: &[u32]) -> LabeledDataset {
        LabeledDataset::from_single_labels("t", 1, 2, points.to_vec(), labels).unwrap()
    }

    fn uniform() -> FnMap<impl Fn(&[f64]) -> Vec<f64> + Sync> {
        FnMap {
            dim: 1,
            classes: 2,
            f: |_: &[f64]| vec![0.5, 0.5],
        }
    }

    #[test]
    fn uniform_predictor_scores_zero() {
        let test = line(&[0.1, 0.6, 0.9], &[1, 2, 2]);
        assert_eq!(c_accuracy_on_d(&uniform(), &test, 0.5).unwrap(), 0.0);
        assert_eq!(expected_accuracy(&uniform(), &test).unwrap(), 0.0);
    }

    #[test]
    fn confident_predictor_scores_one() {
        // 0.99 on the true label: class 1 left of 0.5
        let f = FnMap {
            dim: 1,
            classes: 2,
            f: |x: &[f64]| if x[0] < 0.5 { vec![0.99, 0.01] } else { vec![0.01, 0.99] },
        };
        let test = line(&[0.1, 0.6, 0.9], &[1, 2, 2]);
        assert_eq!(c_accuracy_on_d(&f, &test, 0.9).unwrap(), 1.0);
        assert_eq!(expected_accuracy(&f, &test).unwrap(), 1.0);
    }

    #[test]
    fn c_accuracy_on_train_cases() {
        let train = line(&[0.1, 0.9], &[1, 2]);
        let test = line(&[0.2, 0.8], &[1, 2]);
        let all = FnMap {
            dim: 1,
            classes: 2,
            f: |x: &[f64]| if x[0] < 0.5 { vec![0.9, 0.1] } else { vec![0.1, 0.9] },
        };
        assert_eq!(c_accuracy_on_t(&all, &train, &test, 0.5).unwrap(), 1.0);
        assert_eq!(c_accuracy_on_t(&uniform(), &train, &test, 0.5).unwrap(), 0.0);
        let first_only = FnMap {
            dim: 1,
            classes: 2,
            f: |_: &[f64]| vec![0.9, 0.1],
        };
        let r = c_accuracy_on_t(&first_only, &train, &test, 0.5).unwrap();
        assert!((r - 0.6 / 0.9).abs() < 1e-12, "{r}");
    }

    #[test]
    fn theorem_bound_cases() {
        assert_eq!(thm_lower_bound(1.0, 3, 0.2).unwrap().value, 1.0);
        let b = thm_lower_bound(0.972, 1, 0.045).unwrap();
        assert!((b.value - 0.3778).abs() < 1e-4, "{}", b.value);
        let b = thm_lower_bound(0.997, 1, 0.038).unwrap();
        assert!((b.value - 0.9211).abs() < 1e-4, "{}", b.value);
        assert!(thm_lower_bound(0.9, 1, 0.0).is_err());
    }

    #[test]
    fn prop31_cases() {
        let a = prop31_bound(1.0, 0.93, 2, 0.07).unwrap();
        let b = thm_lower_bound(0.93, 2, 0.07).unwrap();
        assert_eq!(a, b);
        assert_eq!(prop31_bound(1.0, 1.0, 1, 0.1).unwrap().value, 1.0);
        let v = prop31_bound(0.9, 0.9, 1, 0.1).unwrap();
        assert!((v.value + 0.9).abs() < 1e-12 && v.vacuous);
        assert!(prop31_bound(0.9, 0.9, 1, -0.1).is_err());
    }

    #[test]
    fn error_bound_forms() {
        let e = error_bound_cc(1, 0.1, 0.1, 0.3, 0.6, 0.9).unwrap();
        assert!((e.min_form - 0.1 / 0.03).abs() < 1e-12);
        assert!(((e.alpha_cc_form - e.min_form) / e.min_form).abs() < 1e-12);
        let z = error_bound_cc(4, 0.2, 0.3, 0.5, 0.4, 1.0).unwrap();
        assert_eq!(z.min_form, 0.0);
        assert!(error_bound_cc(1, 0.1, 0.1, 0.0, 0.6, 0.9).is_err());
    }

    #[test]
    fn accuracy_family_is_ordered() {
        let net = Mlp::new(&[1, 8, 2], 5).unwrap();
        let (_, test) = crate::dataset::synth_1d(10, 0.1, 501).unwrap();
        let test = test.single_label_part().unwrap();
        let p = expected_accuracy(&net, &test).unwrap();
        let mut prev = p;
        for c in [0.5, 0.6, 0.8, 0.95] {
            let pc = c_accuracy_on_d(&net, &test, c).unwrap();
            assert!(pc <= prev + 1e-15);
            prev = pc;
        }
    }
}
