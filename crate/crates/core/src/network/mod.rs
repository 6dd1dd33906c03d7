//! Sequential networks `f_n(… f_2(f_1(x, θ_1), θ_2) …, θ_n)`.
//!
//! Trainable layers carry a depth index `j` in `1..=n`, counted along the
//! forward order. Learning-rate curricula are keyed on that index.

pub mod checkpoint;
mod layer;
mod presets;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

pub use layer::{gaussian_kernel, gaussian_smooth_apply, Layer, LayerKind, Mode, Params};
pub use presets::Architecture;

#[derive(Debug, Clone)]
pub struct Network<T: Scalar = f32> {
    layers: Vec<Layer<T>>,
    trainable: usize,
}

/// Parameter gradients, one block per depth index.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet<T: Scalar> {
    blocks: Vec<Params<T>>,
}

impl<T: Scalar> GradientSet<T> {
    /// Blocks in depth order: `blocks[j - 1]` belongs to layer `j`.
    pub fn new(blocks: Vec<Params<T>>) -> Self {
        GradientSet { blocks }
    }

    /// All-zero gradients shaped like the parameters of `net`.
    pub fn zeros_like(net: &Network<T>) -> Result<Self> {
        let blocks = net
            .trainable_layers()
            .map(|l| {
                let p = l.params().expect("trainable");
                Ok(Params {
                    weights: Tensor::zeros(p.weights.dims())?,
                    bias: Tensor::zeros(p.bias.dims())?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(GradientSet { blocks })
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Gradient block of depth index `j` (1-based).
    pub fn get(&self, j: usize) -> Option<&Params<T>> {
        j.checked_sub(1).and_then(|i| self.blocks.get(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Params<T>)> {
        self.blocks.iter().enumerate().map(|(i, p)| (i + 1, p))
    }
}

impl<T: Scalar> Network<T> {
    /// Builds a network with zero parameters; depth indices are assigned in
    /// forward order.
    pub fn new(kinds: Vec<LayerKind>) -> Result<Self> {
        let mut next = 0;
        let layers = kinds
            .into_iter()
            .map(|kind| {
                let depth = kind.is_trainable().then(|| {
                    next += 1;
                    next
                });
                Layer::new(kind, depth)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_layers(layers)
    }

    /// Assembles already-built layers, checking that the depth indices run
    /// `1, 2, …, n` along the forward order.
    pub fn from_layers(layers: Vec<Layer<T>>) -> Result<Self> {
        let mut expected = 1;
        for (pos, layer) in layers.iter().enumerate() {
            if let Some(j) = layer.depth_index() {
                if j != expected {
                    return Err(Error::Validation(format!(
                        "layer {pos} has depth index {j}, expected {expected}"
                    )));
                }
                expected += 1;
            }
        }
        Ok(Network {
            layers,
            trainable: expected - 1,
        })
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    /// Number of trainable layers `n`.
    pub fn depth(&self) -> usize {
        self.trainable
    }

    pub fn trainable_layers(&self) -> impl Iterator<Item = &Layer<T>> {
        self.layers.iter().filter(|l| l.depth_index().is_some())
    }

    /// Parameters of depth index `j` (1-based).
    pub fn params(&self, j: usize) -> Option<&Params<T>> {
        self.layers
            .iter()
            .find(|l| l.depth_index() == Some(j))
            .and_then(Layer::params)
    }

    pub fn params_mut(&mut self, j: usize) -> Option<&mut Params<T>> {
        self.layers
            .iter_mut()
            .find(|l| l.depth_index() == Some(j))
            .and_then(Layer::params_mut)
    }

    pub fn parameter_count(&self) -> usize {
        self.trainable_layers()
            .map(|l| {
                let p = l.params().expect("trainable");
                p.weights.len() + p.bias.len()
            })
            .sum()
    }

    /// Draws weights from `U(-b, b)` with `b = sqrt(6 / fan_in)` and zeroes
    /// biases. Values are sampled in `f64`, so `f32` and `f64` networks built
    /// from the same seed agree up to rounding.
    pub fn init_weights(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut self.layers {
            let Some(fan_in) = layer.kind().fan_in() else { continue };
            let bound = (6.0 / fan_in as f64).sqrt();
            let p = layer.params_mut().expect("trainable");
            for w in p.weights.data_mut() {
                *w = T::from_f64(rng.random_range(-bound..bound));
            }
            p.bias.data_mut().fill(T::zero());
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.init_weights(seed);
        self
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let mut h = x.clone();
        for (pos, layer) in self.layers.iter_mut().enumerate() {
            h = layer.forward(h, mode, pos)?;
        }
        Ok(h)
    }

    /// Back-propagates `loss_grad` (gradient of the loss with respect to the
    /// network output) through the layers cached by the last train-mode
    /// forward pass. Parameters are not modified.
    pub fn backward(&mut self, loss_grad: &Tensor<T>) -> Result<GradientSet<T>> {
        let mut grad = loss_grad.clone();
        let mut blocks = Vec::with_capacity(self.trainable);
        let count = self.layers.len();
        for (rev, layer) in self.layers.iter_mut().rev().enumerate() {
            let (g, params) = match layer.backward(grad, count - 1 - rev) {
                Ok(v) => v,
                Err(e) => {
                    self.clear_caches();
                    return Err(e);
                }
            };
            grad = g;
            if let Some(p) = params {
                blocks.push(p);
            }
        }
        blocks.reverse();
        Ok(GradientSet { blocks })
    }

    pub fn clear_caches(&mut self) {
        self.layers.iter_mut().for_each(Layer::clear_cache);
    }

    /// Sets σ on every smoothing layer; returns how many were updated.
    pub fn set_smoothing_sigma(&mut self, sigma: f64) -> Result<usize> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::Validation(format!(
                "smoothing sigma must be finite and non-negative, got {sigma}"
            )));
        }
        Ok(self
            .layers
            .iter_mut()
            .filter_map(|l| l.set_sigma(sigma).then_some(()))
            .count())
    }

    pub fn has_smoothing(&self) -> bool {
        self.layers
            .iter()
            .any(|l| matches!(l.kind(), LayerKind::GaussianSmooth { .. }))
    }

    /// Converts every parameter to another precision.
    pub fn cast<U: Scalar>(&self) -> Network<U> {
        let layers = self
            .layers
            .iter()
            .map(|l| {
                let params = l.params().map(|p| Params {
                    weights: p.weights.cast(),
                    bias: p.bias.cast(),
                });
                Layer::with_params(l.kind().clone(), params, l.depth_index()).expect("validated layer")
            })
            .collect();
        Network {
            layers,
            trainable: self.trainable,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_layer() -> Network<f64> {
        Network::new(vec![
            LayerKind::Dense { inputs: 3, outputs: 4 },
            LayerKind::Relu,
            LayerKind::Dense { inputs: 4, outputs: 2 },
        ])
        .unwrap()
    }

    #[test]
    fn depth_indices_follow_forward_order() {
        let net = two_layer();
        assert_eq!(net.depth(), 2);
        let depths: Vec<_> = net.layers().iter().map(Layer::depth_index).collect();
        assert_eq!(depths, vec![Some(1), None, Some(2)]);
    }

    #[test]
    fn from_layers_rejects_gaps() {
        let a = Layer::<f32>::new(LayerKind::Dense { inputs: 1, outputs: 1 }, Some(1)).unwrap();
        let b = Layer::<f32>::new(LayerKind::Dense { inputs: 1, outputs: 1 }, Some(3)).unwrap();
        assert!(Network::from_layers(vec![a.clone(), b]).is_err());
        let c = Layer::<f32>::new(LayerKind::Dense { inputs: 1, outputs: 1 }, Some(2)).unwrap();
        assert!(Network::from_layers(vec![c.clone(), a]).is_err());
    }

    #[test]
    fn seeding_is_deterministic_and_biases_start_at_zero() {
        let a = two_layer().with_seed(7);
        let b = two_layer().with_seed(7);
        let c = two_layer().with_seed(8);
        for j in 1..=2 {
            assert_eq!(a.params(j), b.params(j));
            assert!(a.params(j).unwrap().bias.data().iter().all(|&v| v == 0.0));
        }
        assert_ne!(a.params(1), c.params(1));
    }

    #[test]
    fn empty_network_is_identity() {
        let mut net = Network::<f64>::new(vec![]).unwrap();
        let x = Tensor::from_f64(&[2, 3], &[1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(net.forward(&x, Mode::Eval).unwrap(), x);
    }

    #[test]
    fn identity_dense_layer() {
        let mut net = Network::<f64>::new(vec![LayerKind::Dense { inputs: 3, outputs: 3 }]).unwrap();
        let w = net.params_mut(1).unwrap();
        for i in 0..3 {
            w.weights.data_mut()[i * 3 + i] = 1.0;
        }
        let x = Tensor::from_f64(&[2, 3], &[1., -2., 3., 0.5, 0., -7.]).unwrap();
        assert_eq!(net.forward(&x, Mode::Eval).unwrap(), x);
    }

    #[test]
    fn shape_error_names_position() {
        let mut net = two_layer();
        let x = Tensor::<f64>::zeros(&[2, 5]).unwrap();
        let msg = net.forward(&x, Mode::Eval).unwrap_err().to_string();
        assert!(
            msg.contains("layer 0") && msg.contains("[2, 5]") && msg.contains("[2, 3]"),
            "{msg}"
        );
    }

    #[test]
    fn backward_requires_train_forward() {
        let mut net = two_layer().with_seed(1);
        let x = Tensor::<f64>::full(&[1, 3], 0.5).unwrap();
        let out = net.forward(&x, Mode::Eval).unwrap();
        assert!(matches!(net.backward(&out), Err(Error::State(_))));

        let out = net.forward(&x, Mode::Train).unwrap();
        assert!(net.backward(&out).is_ok());
        // caches are consumed
        assert!(matches!(net.backward(&out), Err(Error::State(_))));
    }

    #[test]
    fn zero_loss_gradient_gives_zero_gradients_with_matching_shapes() {
        let mut net = two_layer().with_seed(3);
        let before = net.clone();
        let x = Tensor::<f64>::from_f64(&[2, 3], &[0.1, 0.2, -0.3, 1.0, -1.0, 0.5]).unwrap();
        let out = net.forward(&x, Mode::Train).unwrap();
        let grads = net.backward(&Tensor::zeros(out.dims()).unwrap()).unwrap();
        assert_eq!(grads.len(), 2);
        for (j, g) in grads.iter() {
            let p = net.params(j).unwrap();
            assert_eq!(g.weights.dims(), p.weights.dims());
            assert_eq!(g.bias.dims(), p.bias.dims());
            assert!(g.weights.data().iter().chain(g.bias.data()).all(|&v| v == 0.0));
            assert_eq!(Some(p), before.params(j));
        }
    }

    #[test]
    fn smoothing_sigma_only_touches_smoothing_layers() {
        let mut net = Network::<f32>::new(vec![
            LayerKind::Conv2d {
                in_channels: 1,
                out_channels: 2,
                kernel_size: 3,
                stride: 1,
                padding: 1,
            },
            LayerKind::GaussianSmooth {
                sigma: 1.0,
                kernel_size: 3,
            },
            LayerKind::Relu,
        ])
        .unwrap();
        assert!(net.has_smoothing());
        assert_eq!(net.set_smoothing_sigma(0.5).unwrap(), 1);
        assert!(net.set_smoothing_sigma(-1.0).is_err());
    }
}
