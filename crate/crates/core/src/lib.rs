//! Per-layer learning-rate curricula for neural-network training.
//!
//! The crate bundles a small training engine (tensors, layers with explicit
//! backward passes, SGD and Adam) with the schedules that drive it:
//!
//! * a learning-rate curriculum that starts deep layers at lower rates and
//!   ramps every layer to a shared rate by epoch `k`,
//! * curriculum by smoothing, which blurs convolutional activations with a
//!   decaying Gaussian kernel,
//! * reduce-on-plateau and early stopping.
//!
//! The [`experiment`] module runs repeated seeded comparisons of these
//! regimes and writes per-epoch metrics, checkpoints and summary tables.
//!
//! ```
//! use lerac::schedulers::{assign_initial_rates, LeracConfig};
//!
//! let cfg = LeracConfig::new(1e-1, 1e-8, 5);
//! let schedule = assign_initial_rates(4, &cfg).unwrap();
//! let start = schedule.rates_at(0);
//! assert!(start.windows(2).all(|w| w[0] >= w[1]));
//! assert!(schedule.rates_at(5).iter().all(|&r| r == 1e-1));
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod experiment;
pub mod network;
pub mod optimizers;
pub mod schedulers;
pub mod tensor;

pub use error::{Error, Result};
pub use network::Network;
pub use tensor::{Scalar, Tensor};

/// Guide chapters, compiled so their listings run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/curriculum.md")]
    mod curriculum {}
    #[doc = include_str!("../../../book/src/smoothing.md")]
    mod smoothing {}
    #[doc = include_str!("../../../book/src/plateau.md")]
    mod plateau {}
    #[doc = include_str!("../../../book/src/networks.md")]
    mod networks {}
    #[doc = include_str!("../../../book/src/optimizers.md")]
    mod optimizers {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
