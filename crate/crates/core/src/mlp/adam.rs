use serde::{Deserialize, Serialize};

use super::{Gradients, Mlp};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam update of `params` at step `t >= 1`.
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    cfg: &AdamConfig,
) {
    let c1 = 1.0 - cfg.beta1.powf(t as f64);
    let c2 = 1.0 - cfg.beta2.powf(t as f64);
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut()) {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        *p -= cfg.learning_rate * (*m / c1) / ((*v / c2).sqrt() + cfg.epsilon);
    }
}

/// Adam moment buffers for one network.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    pub fn new(net: &Mlp, config: AdamConfig) -> Self {
        Adam {
            config,
            step: 0,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) {
        self.step += 1;
        let t = self.step;
        for (l, layer) in net.layers_mut().iter_mut().enumerate() {
            adam_update(
                &mut layer.weights,
                &grads.weights[l],
                &mut self.m.weights[l],
                &mut self.v.weights[l],
                t,
                &self.config,
            );
            adam_update(
                &mut layer.bias,
                &grads.biases[l],
                &mut self.m.biases[l],
                &mut self.v.biases[l],
                t,
                &self.config,
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = AdamConfig::default();
        let mut p = [1.0, 1.0];
        let (mut m, mut v) = ([0.0; 2], [0.0; 2]);
        adam_update(&mut p, &[0.3, -2.0], &mut m, &mut v, 1, &cfg);
        let expect0 = 1.0 - 0.001 * 0.3 / (0.3 + 1e-8);
        let expect1 = 1.0 + 0.001 * 2.0 / (2.0 + 1e-8);
        assert!((p[0] - expect0).abs() < 1e-15);
        assert!((p[1] - expect1).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let cfg = AdamConfig::default();
        let mut p = [0.7, -0.2];
        let (mut m, mut v) = ([0.0; 2], [0.0; 2]);
        for t in 1..=100 {
            adam_update(&mut p, &[0.0, 0.0], &mut m, &mut v, t, &cfg);
        }
        assert_eq!(p, [0.7, -0.2]);
    }

    #[test]
    fn equal_gradients_equal_updates() {
        let cfg = AdamConfig::default();
        let mut p = [0.5, 0.5];
        let (mut m, mut v) = ([0.0; 2], [0.0; 2]);
        for t in 1..=10 {
            adam_update(&mut p, &[0.2, 0.2], &mut m, &mut v, t, &cfg);
        }
        assert_eq!(p[0], p[1]);
    }
}
