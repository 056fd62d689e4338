use serde::{Deserialize, Serialize};

use crate::mlp::Control;

/// Stops training once `delta` has stayed below its running peak for
/// `patience` consecutive defined evaluations. Undefined evaluations are
/// ignored entirely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    pub patience: usize,
    peak: Option<(usize, f64)>,
    below: usize,
    stopped_at: Option<usize>,
}

impl Default for EarlyStop {
    fn default() -> Self {
        EarlyStop::new(3)
    }
}

impl EarlyStop {
    pub fn new(patience: usize) -> Self {
        EarlyStop {
            patience: patience.max(1),
            peak: None,
            below: 0,
            stopped_at: None,
        }
    }

    pub fn observe(&mut self, iteration: usize, delta: Option<f64>) -> Control {
        if self.stopped_at.is_some() {
            return Control::Stop;
        }
        let Some(d) = delta else {
            return Control::Continue;
        };
        match self.peak {
            Some((_, p)) if d < p => {
                self.below += 1;
                if self.below >= self.patience {
                    self.stopped_at = Some(iteration);
                    return Control::Stop;
                }
            }
            // ties count as a new peak
            _ => {
                self.peak = Some((iteration, d));
                self.below = 0;
            }
        }
        Control::Continue
    }

    /// True when the value just observed became the new peak.
    pub fn is_peak(&self, iteration: usize) -> bool {
        self.peak.is_some_and(|(i, _)| i == iteration)
    }

    pub fn peak(&self) -> Option<(usize, f64)> {
        self.peak
    }

    pub fn stopped_at(&self) -> Option<usize> {
        self.stopped_at
    }
}
