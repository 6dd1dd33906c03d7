//! Parameter updates with a separate learning rate per trainable layer.
//!
//! For plain SGD the update is `θ_j ← θ_j − η_j · g_j`. With momentum or
//! Adam, the buffers accumulate raw gradients and `η_j` scales the final
//! update direction, so a rate ramp never leaks into the moment estimates.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{GradientSet, Network};
use crate::schedulers::RateSchedule;
use crate::tensor::{Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd { momentum: f64 },
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl OptimizerKind {
    pub fn sgd() -> Self {
        OptimizerKind::Sgd { momentum: 0.0 }
    }

    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..1.0).contains(&v);
        match *self {
            OptimizerKind::Sgd { momentum } if !unit(momentum) => Err(Error::Validation(format!(
                "momentum must lie in [0, 1), got {momentum}"
            ))),
            OptimizerKind::Adam { beta1, beta2, epsilon } if !unit(beta1) || !unit(beta2) || !(epsilon > 0.0) => {
                Err(Error::Validation(format!(
                    "adam needs betas in [0, 1) and positive epsilon, got ({beta1}, {beta2}, {epsilon})"
                )))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptimizerKind::Sgd { momentum } => write!(f, "sgd(momentum={momentum})"),
            OptimizerKind::Adam { beta1, beta2, epsilon } => write!(f, "adam({beta1}, {beta2}, {epsilon})"),
        }
    }
}

#[derive(Debug, Clone)]
enum Buffers<T: Scalar> {
    Plain,
    Momentum {
        weights: Vec<T>,
        bias: Vec<T>,
    },
    Adam {
        m_w: Vec<T>,
        v_w: Vec<T>,
        m_b: Vec<T>,
        v_b: Vec<T>,
        steps: u64,
    },
}

/// Auxiliary buffers for every trainable layer of one network.
#[derive(Debug, Clone)]
pub struct OptimizerState<T: Scalar> {
    kind: OptimizerKind,
    buffers: Vec<Buffers<T>>,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(kind: OptimizerKind, net: &Network<T>) -> Result<Self> {
        kind.validate()?;
        let buffers = net
            .trainable_layers()
            .map(|l| {
                let p = l.params().expect("trainable");
                let (nw, nb) = (p.weights.len(), p.bias.len());
                match kind {
                    OptimizerKind::Sgd { momentum: 0.0 } => Buffers::Plain,
                    OptimizerKind::Sgd { .. } => Buffers::Momentum {
                        weights: vec![T::zero(); nw],
                        bias: vec![T::zero(); nb],
                    },
                    OptimizerKind::Adam { .. } => Buffers::Adam {
                        m_w: vec![T::zero(); nw],
                        v_w: vec![T::zero(); nw],
                        m_b: vec![T::zero(); nb],
                        v_b: vec![T::zero(); nb],
                        steps: 0,
                    },
                }
            })
            .collect();
        Ok(OptimizerState { kind, buffers })
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    /// Applies one update with `rates[j - 1]` as the rate of layer `j`.
    pub fn step(&mut self, net: &mut Network<T>, grads: &GradientSet<T>, rates: &[f64]) -> Result<()> {
        let n = net.depth();
        if self.buffers.len() != n {
            return Err(Error::Validation(format!(
                "optimizer state covers {} layers, network has {n}",
                self.buffers.len()
            )));
        }
        if grads.len() != n {
            return Err(Error::Validation(format!(
                "gradients cover {} layers, network has {n}",
                grads.len()
            )));
        }
        if rates.len() != n {
            return Err(Error::Validation(format!(
                "{} rates supplied for {n} layers",
                rates.len()
            )));
        }
        for j in 1..=n {
            let g = grads.get(j).expect("checked length");
            let p = net.params_mut(j).expect("depth index exists");
            if g.weights.dims() != p.weights.dims() || g.bias.dims() != p.bias.dims() {
                return Err(Error::shape(
                    format!("gradient block {j}"),
                    g.weights.dims(),
                    p.weights.dims(),
                ));
            }
            let eta = T::from_f64(rates[j - 1]);
            match (&mut self.buffers[j - 1], self.kind) {
                (Buffers::Plain, _) => {
                    sgd(&mut p.weights, &g.weights, eta);
                    sgd(&mut p.bias, &g.bias, eta);
                }
                (Buffers::Momentum { weights, bias }, OptimizerKind::Sgd { momentum }) => {
                    let mu = T::from_f64(momentum);
                    heavy_ball(&mut p.weights, weights, &g.weights, eta, mu);
                    heavy_ball(&mut p.bias, bias, &g.bias, eta, mu);
                }
                (
                    Buffers::Adam {
                        m_w,
                        v_w,
                        m_b,
                        v_b,
                        steps,
                    },
                    OptimizerKind::Adam { beta1, beta2, epsilon },
                ) => {
                    *steps += 1;
                    let h = AdamStep {
                        eta,
                        beta1: T::from_f64(beta1),
                        beta2: T::from_f64(beta2),
                        epsilon: T::from_f64(epsilon),
                        bias1: T::from_f64(1.0 - beta1.powi(*steps as i32)),
                        bias2: T::from_f64(1.0 - beta2.powi(*steps as i32)),
                    };
                    h.apply(&mut p.weights, m_w, v_w, &g.weights);
                    h.apply(&mut p.bias, m_b, v_b, &g.bias);
                }
                _ => unreachable!("buffers are built from the optimizer kind"),
            }
        }
        Ok(())
    }
}

fn sgd<T: Scalar>(theta: &mut Tensor<T>, grad: &Tensor<T>, eta: T) {
    for (t, &g) in theta.data_mut().iter_mut().zip(grad.data()) {
        *t = *t - eta * g;
    }
}

fn heavy_ball<T: Scalar>(theta: &mut Tensor<T>, velocity: &mut [T], grad: &Tensor<T>, eta: T, mu: T) {
    for ((t, v), &g) in theta.data_mut().iter_mut().zip(velocity).zip(grad.data()) {
        *v = mu * *v + g;
        *t = *t - eta * *v;
    }
}

struct AdamStep<T> {
    eta: T,
    beta1: T,
    beta2: T,
    epsilon: T,
    bias1: T,
    bias2: T,
}

impl<T: Scalar> AdamStep<T> {
    fn apply(&self, theta: &mut Tensor<T>, m: &mut [T], v: &mut [T], grad: &Tensor<T>) {
        let one = T::one();
        for (((t, m), v), &g) in theta.data_mut().iter_mut().zip(m).zip(v).zip(grad.data()) {
            *m = self.beta1 * *m + (one - self.beta1) * g;
            *v = self.beta2 * *v + (one - self.beta2) * g * g;
            let m_hat = *m / self.bias1;
            let v_hat = *v / self.bias2;
            *t = *t - self.eta * (m_hat / (v_hat.sqrt() + self.epsilon));
        }
    }
}

/// Per-layer rates for `epoch`: the schedule's ramp value times the
/// accumulated plateau scale.
pub fn resolve_rates(schedule: &RateSchedule, epoch: usize, plateau_scale: f64) -> Result<Vec<f64>> {
    if !(plateau_scale > 0.0 && plateau_scale <= 1.0) {
        return Err(Error::Validation(format!(
            "plateau scale must lie in (0, 1], got {plateau_scale}"
        )));
    }
    Ok(schedule
        .rates_at(epoch)
        .into_iter()
        .map(|r| r * plateau_scale)
        .collect())
}
