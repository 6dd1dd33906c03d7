use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduce-on-plateau and early-stopping thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauPolicy {
    /// Multiplier applied to the rate on a plateau.
    pub factor: f64,
    /// Epochs without improvement before the rate is reduced.
    pub patience: usize,
    /// A loss must beat the best so far by more than this to count.
    pub min_delta: f64,
    /// Epochs without improvement before training stops.
    pub early_stop_patience: usize,
}

impl Default for PlateauPolicy {
    fn default() -> Self {
        PlateauPolicy {
            factor: 0.1,
            patience: 5,
            min_delta: 1e-4,
            early_stop_patience: 12,
        }
    }
}

impl PlateauPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.factor > 0.0 && self.factor < 1.0) {
            return Err(Error::Validation(format!(
                "plateau factor must lie in (0, 1), got {}",
                self.factor
            )));
        }
        if self.patience == 0 || self.early_stop_patience == 0 {
            return Err(Error::Validation("patience values must be at least 1".into()));
        }
        if !(self.min_delta >= 0.0) {
            return Err(Error::Validation(format!(
                "min_delta must be non-negative, got {}",
                self.min_delta
            )));
        }
        Ok(())
    }
}

/// Outcome of feeding one epoch's monitored loss to a [`PlateauTracker`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlateauDecision {
    pub reduce: bool,
    pub stop: bool,
}

/// Per-run state behind [`PlateauPolicy`].
#[derive(Debug, Clone)]
pub struct PlateauTracker {
    policy: PlateauPolicy,
    best: Option<f64>,
    since_reduce: usize,
    since_best: usize,
}

impl PlateauTracker {
    pub fn new(policy: PlateauPolicy) -> Self {
        PlateauTracker {
            policy,
            best: None,
            since_reduce: 0,
            since_best: 0,
        }
    }

    pub fn policy(&self) -> &PlateauPolicy {
        &self.policy
    }

    pub fn observe(&mut self, loss: f64) -> PlateauDecision {
        let improved = match self.best {
            None => true,
            Some(best) => loss < best - self.policy.min_delta,
        };
        if improved {
            self.best = Some(loss);
            self.since_reduce = 0;
            self.since_best = 0;
            return PlateauDecision {
                reduce: false,
                stop: false,
            };
        }
        self.since_reduce += 1;
        self.since_best += 1;
        let reduce = self.since_reduce >= self.policy.patience;
        if reduce {
            self.since_reduce = 0;
        }
        PlateauDecision {
            reduce,
            stop: self.since_best >= self.policy.early_stop_patience,
        }
    }
}

/// Replays `loss_history` through a fresh tracker and returns the rate and
/// stop flag that follow its last entry.
pub fn plateau_step(policy: &PlateauPolicy, loss_history: &[f64], current_rate: f64) -> Result<(f64, bool)> {
    policy.validate()?;
    if loss_history.is_empty() {
        return Err(Error::Validation("loss history is empty".into()));
    }
    let mut tracker = PlateauTracker::new(policy.clone());
    let mut last = PlateauDecision {
        reduce: false,
        stop: false,
    };
    for &loss in loss_history {
        last = tracker.observe(loss);
    }
    let rate = if last.reduce {
        current_rate * policy.factor
    } else {
        current_rate
    };
    Ok((rate, last.stop))
}
