use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Curriculum-by-smoothing parameters: the blur σ starts at `sigma0` and is
/// multiplied by `decay` every `step` epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbsConfig {
    pub sigma0: f64,
    pub decay: f64,
    pub step: usize,
    pub kernel_size: usize,
}

impl Default for CbsConfig {
    fn default() -> Self {
        CbsConfig {
            sigma0: 1.0,
            decay: 0.9,
            step: 2,
            kernel_size: 3,
        }
    }
}

impl CbsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0 >= 0.0) || !self.sigma0.is_finite() {
            return Err(Error::Validation(format!(
                "sigma0 must be non-negative, got {}",
                self.sigma0
            )));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::Validation(format!(
                "decay must lie in (0, 1], got {}",
                self.decay
            )));
        }
        if self.step == 0 {
            return Err(Error::Validation("decay step must be at least 1 epoch".into()));
        }
        if self.kernel_size.is_multiple_of(2) {
            return Err(Error::Validation(format!(
                "kernel size must be odd, got {}",
                self.kernel_size
            )));
        }
        Ok(())
    }
}

/// `σ0 · d^⌊epoch / u⌋`.
pub fn cbs_sigma_at(cfg: &CbsConfig, epoch: usize) -> f64 {
    let steps = (epoch / cfg.step) as i32;
    cfg.sigma0 * cfg.decay.powi(steps)
}
