use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a layer's rate travels from its initial value to the common target
/// over the ramp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RampRule {
    /// Straight line in `log_c` space:
    /// `η_j(l) = η_j(0) · c^{(l/k)·(log_c η_target − log_c η_j(0))}`.
    #[default]
    Exponential,
    /// Straight line in rate space:
    /// `η_j(l) = η_j(0) + (l/k)·(η_target − η_j(0))`.
    Linear,
}

impl fmt::Display for RampRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RampRule::Exponential => "exponential",
            RampRule::Linear => "linear",
        })
    }
}

impl FromStr for RampRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" | "exp" => Ok(RampRule::Exponential),
            "linear" => Ok(RampRule::Linear),
            other => Err(Error::Config(format!("unknown ramp rule {other:?}"))),
        }
    }
}

/// Learning rate curriculum parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeracConfig {
    /// Rate of the conventional regime and the ramp target.
    pub eta_base: f64,
    /// Initial rate of the first (input-side) trainable layer.
    pub eta_first: f64,
    /// Initial rate of the last (output-side) trainable layer.
    pub eta_last: f64,
    /// Ramp horizon in epochs.
    pub k: usize,
    /// Logarithm base of the exponential rule.
    pub c: f64,
    pub rule: RampRule,
}

impl LeracConfig {
    /// `eta_first = eta_base`, `c = 10`, exponential rule.
    pub fn new(eta_base: f64, eta_last: f64, k: usize) -> Self {
        LeracConfig {
            eta_base,
            eta_first: eta_base,
            eta_last,
            k,
            c: 10.0,
            rule: RampRule::Exponential,
        }
    }

    pub fn with_rule(mut self, rule: RampRule) -> Self {
        self.rule = rule;
        self
    }

    /// A curriculum that never leaves `eta_base`: the conventional regime.
    pub fn degenerate(eta_base: f64, k: usize) -> Self {
        Self::new(eta_base, eta_base, k)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.eta_base) || !positive(self.eta_first) || !positive(self.eta_last) {
            return Err(Error::Validation(format!(
                "learning rates must be finite and positive (base {}, first {}, last {})",
                self.eta_base, self.eta_first, self.eta_last
            )));
        }
        if self.eta_last > self.eta_first {
            return Err(Error::Validation(format!(
                "last-layer rate {} exceeds first-layer rate {}",
                self.eta_last, self.eta_first
            )));
        }
        if self.eta_first > self.eta_base {
            return Err(Error::Validation(format!(
                "first-layer rate {} exceeds base rate {}",
                self.eta_first, self.eta_base
            )));
        }
        if self.k == 0 {
            return Err(Error::Validation("ramp horizon k must be at least 1".into()));
        }
        if !(self.c > 1.0) || !self.c.is_finite() {
            return Err(Error::Validation(format!("log base c must exceed 1, got {}", self.c)));
        }
        Ok(())
    }
}

/// Resolved per-layer curriculum for a network of depth `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSchedule {
    initial_rates: Vec<f64>,
    target_rate: f64,
    k: usize,
    c: f64,
    rule: RampRule,
}

/// Spreads initial rates over `n` layers, evenly in `log_c` space between
/// `eta_first` (layer 1) and `eta_last` (layer n).
pub fn assign_initial_rates(n: usize, cfg: &LeracConfig) -> Result<RateSchedule> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::Validation("network has no trainable layers".into()));
    }
    let log = |v: f64| v.ln() / cfg.c.ln();
    let (lo, hi) = (log(cfg.eta_first), log(cfg.eta_last));
    let span = hi - lo;
    let initial_rates = (0..n)
        .map(|i| {
            if i == 0 {
                cfg.eta_first
            } else if i == n - 1 {
                cfg.eta_last
            } else {
                let t = i as f64 / (n - 1) as f64;
                cfg.c.powf(lo + t * span).clamp(cfg.eta_last, cfg.eta_first)
            }
        })
        .collect();
    Ok(RateSchedule {
        initial_rates,
        target_rate: cfg.eta_base,
        k: cfg.k,
        c: cfg.c,
        rule: cfg.rule,
    })
}

impl RateSchedule {
    /// Every layer at `rate` from the start: the conventional regime.
    pub fn constant(n: usize, rate: f64) -> Result<Self> {
        assign_initial_rates(n, &LeracConfig::degenerate(rate, 1))
    }

    pub fn initial_rates(&self) -> &[f64] {
        &self.initial_rates
    }

    pub fn target_rate(&self) -> f64 {
        self.target_rate
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn rule(&self) -> RampRule {
        self.rule
    }

    pub fn depth(&self) -> usize {
        self.initial_rates.len()
    }

    /// Rate of layer `j` (1-based) after `epoch` completed epochs. Epochs at
    /// or past the horizon return the target rate.
    pub fn rate_at(&self, j: usize, epoch: usize) -> Result<f64> {
        let n = self.initial_rates.len();
        if j == 0 || j > n {
            return Err(Error::Validation(format!("layer index {j} outside 1..={n}")));
        }
        let start = self.initial_rates[j - 1];
        let target = self.target_rate;
        if epoch == 0 {
            return Ok(start);
        }
        if epoch >= self.k || start == target {
            return Ok(target);
        }
        let w = epoch as f64 / self.k as f64;
        let rate = match self.rule {
            RampRule::Exponential => {
                // Same quantity as start · c^{w·(log_c target − log_c start)},
                // evaluated as a convex combination of logs so that rounding
                // stays monotone in `start`.
                let ln_c = self.c.ln();
                let exponent = (1.0 - w) * (start.ln() / ln_c) + w * (target.ln() / ln_c);
                self.c.powf(exponent)
            }
            RampRule::Linear => (1.0 - w) * start + w * target,
        };
        Ok(rate.clamp(start, target))
    }

    /// Rates of all layers at `epoch`, in depth order.
    pub fn rates_at(&self, epoch: usize) -> Vec<f64> {
        (1..=self.depth())
            .map(|j| self.rate_at(j, epoch).expect("index in range"))
            .collect()
    }
}
