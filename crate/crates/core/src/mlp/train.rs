use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Adam, AdamConfig, Mlp};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    /// 0 means full batch.
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Evaluation callback period in iterations (0 disables callbacks
    /// after the initial one).
    pub eval_interval: usize,
    /// Seeds the batch order.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            iterations: 1000,
            batch_size: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            eval_interval: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::validation("learning rate must be positive"));
        }
        if self.iterations < 1 {
            return Err(Error::validation("iterations must be at least 1"));
        }
        Ok(())
    }
}

/// What an evaluation callback asks the training loop to do next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub iterations_run: usize,
    pub stopped_early: bool,
    /// Mean batch loss of the last step.
    pub last_batch_loss: f64,
}

/// Trains `net` with Adam on the cross-entropy of a single-label dataset.
///
/// `on_eval(iteration, net)` runs before the first step (iteration 0) and
/// after every `eval_interval` steps.
pub fn train<F>(
    net: &mut Mlp,
    data: &LabeledDataset,
    cfg: &TrainConfig,
    mut on_eval: F,
) -> Result<TrainOutcome>
where
    F: FnMut(usize, &Mlp) -> Result<Control>,
{
    cfg.validate()?;
    let labels = data.single_labels()?;
    if data.dim() != net.input_dim() {
        return Err(Error::validation(format!(
            "dataset dimension {} does not match network input {}",
            data.dim(),
            net.input_dim()
        )));
    }
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    let full_batch = cfg.batch_size == 0 || cfg.batch_size >= n;
    let mut rng = seeded(cfg.seed);
    let mut cursor = n;
    let mut adam = Adam::new(net, cfg.adam());

    let mut outcome = TrainOutcome {
        iterations_run: 0,
        stopped_early: false,
        last_batch_loss: f64::NAN,
    };
    if on_eval(0, net)? == Control::Stop {
        outcome.stopped_early = true;
        return Ok(outcome);
    }
    for it in 1..=cfg.iterations {
        let batch: &[usize] = if full_batch {
            &order
        } else {
            if cursor + cfg.batch_size > n {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            cursor += cfg.batch_size;
            &order[cursor - cfg.batch_size..cursor]
        };
        let (loss, grads) = net.backward(data.points(), &labels, batch)?;
        if !loss.is_finite() {
            return Err(Error::Run {
                seed: cfg.seed,
                message: format!("non-finite loss at iteration {it}"),
            });
        }
        adam.step(net, &grads);
        outcome.iterations_run = it;
        outcome.last_batch_loss = loss;
        if cfg.eval_interval > 0 && it % cfg.eval_interval == 0 && on_eval(it, net)? == Control::Stop {
            outcome.stopped_early = true;
            break;
        }
    }
    Ok(outcome)
}
