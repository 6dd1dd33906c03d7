//! Learning-rate and curriculum policies.
//!
//! * [`RateSchedule`]: per-layer rates that start low for deep layers and
//!   ramp to a common target by epoch `k`.
//! * [`cbs_sigma_at`]: step decay of the smoothing σ.
//! * [`PlateauTracker`]: reduce-on-plateau and early stopping.

mod cbs;
mod plateau;
pub mod presets;
mod rate;

pub use cbs::{cbs_sigma_at, CbsConfig};
pub use plateau::{plateau_step, PlateauDecision, PlateauPolicy, PlateauTracker};
pub use presets::{hyperparameter_row, hyperparameter_rows, HyperparameterRow};
pub use rate::{assign_initial_rates, LeracConfig, RampRule, RateSchedule};
