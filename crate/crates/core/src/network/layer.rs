use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::ops::{
    conv2d, conv2d_backward, depthwise_conv2d_same, matmul, matmul_nt, matmul_tn, maxpool2d_backward,
    maxpool2d_with_indices, relu, relu_backward,
};
use crate::tensor::{Scalar, Shape, Tensor};

/// Structural description of one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerKind {
    /// `y = x·W + b` with `W` stored as inputs×outputs.
    Dense {
        inputs: usize,
        outputs: usize,
    },
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        stride: usize,
        padding: usize,
    },
    Relu,
    MaxPool2d {
        window: usize,
        stride: usize,
    },
    /// Collapses every axis after the batch axis.
    Flatten,
    /// Depthwise Gaussian blur used by curriculum-by-smoothing; the identity
    /// while `sigma` is zero.
    GaussianSmooth {
        sigma: f64,
        kernel_size: usize,
    },
}

impl LayerKind {
    pub fn is_trainable(&self) -> bool {
        matches!(self, LayerKind::Dense { .. } | LayerKind::Conv2d { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            LayerKind::Dense { .. } => "dense",
            LayerKind::Conv2d { .. } => "conv2d",
            LayerKind::Relu => "relu",
            LayerKind::MaxPool2d { .. } => "maxpool2d",
            LayerKind::Flatten => "flatten",
            LayerKind::GaussianSmooth { .. } => "gaussian_smooth",
        }
    }

    /// Weight and bias shapes for trainable kinds.
    pub fn param_shapes(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        match *self {
            LayerKind::Dense { inputs, outputs } => Some((vec![inputs, outputs], vec![outputs])),
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel_size,
                ..
            } => Some((
                vec![out_channels, in_channels, kernel_size, kernel_size],
                vec![out_channels],
            )),
            _ => None,
        }
    }

    /// Number of inputs feeding each output unit.
    pub fn fan_in(&self) -> Option<usize> {
        match *self {
            LayerKind::Dense { inputs, .. } => Some(inputs),
            LayerKind::Conv2d {
                in_channels,
                kernel_size,
                ..
            } => Some(in_channels * kernel_size * kernel_size),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = match *self {
            LayerKind::Dense { inputs, outputs } => inputs == 0 || outputs == 0,
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel_size,
                stride,
                ..
            } => in_channels == 0 || out_channels == 0 || kernel_size == 0 || stride == 0,
            LayerKind::MaxPool2d { window, stride } => window == 0 || stride == 0,
            LayerKind::GaussianSmooth { sigma, kernel_size } => {
                !(sigma >= 0.0 && sigma.is_finite()) || kernel_size % 2 == 0
            }
            LayerKind::Relu | LayerKind::Flatten => false,
        };
        if bad {
            return Err(Error::Validation(format!("invalid layer description {self:?}")));
        }
        Ok(())
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Weights and bias of one trainable layer. Also used for the matching
/// gradient block.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<T: Scalar> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

#[derive(Debug, Clone)]
enum Cache<T: Scalar> {
    Input(Tensor<T>),
    Pool { input_shape: Shape, argmax: Vec<usize> },
    Dims(Vec<usize>),
    Passthrough,
}

/// Whether a forward pass records what backward needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone)]
pub struct Layer<T: Scalar> {
    kind: LayerKind,
    params: Option<Params<T>>,
    depth_index: Option<usize>,
    cache: Option<Cache<T>>,
}

/// Normalized `size`×`size` Gaussian kernel with standard deviation `sigma`,
/// built as the outer product of a 1-D kernel. `sigma == 0` yields the
/// discrete delta.
pub fn gaussian_kernel(sigma: f64, size: usize) -> Result<Vec<f64>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Validation(format!(
            "gaussian sigma must be finite and non-negative, got {sigma}"
        )));
    }
    if size.is_multiple_of(2) {
        return Err(Error::Validation(format!(
            "gaussian kernel size must be odd, got {size}"
        )));
    }
    let half = (size / 2) as f64;
    let taps: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - half;
            if sigma == 0.0 {
                if d == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (-d * d / (2.0 * sigma * sigma)).exp()
            }
        })
        .collect();
    let norm: f64 = taps.iter().sum();
    let taps: Vec<f64> = taps.iter().map(|t| t / norm).collect();
    Ok(taps.iter().flat_map(|a| taps.iter().map(move |b| a * b)).collect())
}

/// Blurs each channel of an N×C×H×W tensor with a normalized Gaussian of
/// standard deviation `sigma` ("same" zero padding). `sigma == 0` returns the
/// input unchanged.
pub fn gaussian_smooth_apply<T: Scalar>(x: &Tensor<T>, sigma: f64, kernel_size: usize) -> Result<Tensor<T>> {
    let kernel = gaussian_kernel(sigma, kernel_size)?;
    if x.shape().rank() != 4 {
        return Err(Error::Validation(format!(
            "gaussian smoothing expects N×C×H×W input, got {}",
            x.shape()
        )));
    }
    if sigma == 0.0 {
        return Ok(x.clone());
    }
    let kernel: Vec<T> = kernel.into_iter().map(T::from_f64).collect();
    depthwise_conv2d_same(x, &kernel, kernel_size)
}

impl<T: Scalar> Layer<T> {
    /// Creates a layer with zero-valued parameters. `depth_index` must be
    /// given exactly when the kind is trainable.
    pub fn new(kind: LayerKind, depth_index: Option<usize>) -> Result<Self> {
        kind.validate()?;
        let params = match kind.param_shapes() {
            Some((w, b)) => Some(Params {
                weights: Tensor::zeros(&w)?,
                bias: Tensor::zeros(&b)?,
            }),
            None => None,
        };
        Self::with_params(kind, params, depth_index)
    }

    pub fn with_params(kind: LayerKind, params: Option<Params<T>>, depth_index: Option<usize>) -> Result<Self> {
        kind.validate()?;
        match (kind.param_shapes(), &params, depth_index) {
            (Some((w, b)), Some(p), Some(j)) if j >= 1 => {
                if p.weights.dims() != w {
                    return Err(Error::shape(format!("{kind} weights"), p.weights.dims(), &w));
                }
                if p.bias.dims() != b {
                    return Err(Error::shape(format!("{kind} bias"), p.bias.dims(), &b));
                }
            }
            (None, None, None) => {}
            _ => {
                return Err(Error::Validation(format!(
                    "{kind} layer: parameters and depth index must be present exactly for trainable layers"
                )))
            }
        }
        Ok(Layer {
            kind,
            params,
            depth_index,
            cache: None,
        })
    }

    pub fn kind(&self) -> &LayerKind {
        &self.kind
    }

    pub fn params(&self) -> Option<&Params<T>> {
        self.params.as_ref()
    }

    pub fn params_mut(&mut self) -> Option<&mut Params<T>> {
        self.params.as_mut()
    }

    pub fn depth_index(&self) -> Option<usize> {
        self.depth_index
    }

    pub(crate) fn set_sigma(&mut self, value: f64) -> bool {
        if let LayerKind::GaussianSmooth { sigma, .. } = &mut self.kind {
            *sigma = value;
            true
        } else {
            false
        }
    }

    pub(crate) fn clear_cache(&mut self) {
        self.cache = None;
    }

    pub(crate) fn forward(&mut self, x: Tensor<T>, mode: Mode, position: usize) -> Result<Tensor<T>> {
        let context = |what: &str| format!("layer {position} ({}) {what}", self.kind);
        let (out, cache) = match self.kind {
            LayerKind::Dense { inputs, .. } => {
                if x.shape().rank() != 2 || x.dims()[1] != inputs {
                    return Err(Error::shape(context("input"), x.dims(), &[x.dims()[0], inputs]));
                }
                let p = self.params.as_ref().expect("trainable layer has params");
                let mut y = matmul(&x, &p.weights)?;
                let b = p.bias.data();
                for row in y.data_mut().chunks_exact_mut(b.len()) {
                    for (v, &bv) in row.iter_mut().zip(b) {
                        *v = *v + bv;
                    }
                }
                (y, Cache::Input(x))
            }
            LayerKind::Conv2d {
                in_channels,
                stride,
                padding,
                ..
            } => {
                if x.shape().rank() != 4 || x.dims()[1] != in_channels {
                    let mut expected = x.dims().to_vec();
                    expected.resize(4, 1);
                    expected[1] = in_channels;
                    return Err(Error::shape(context("input"), x.dims(), &expected));
                }
                let p = self.params.as_ref().expect("trainable layer has params");
                let mut y = conv2d(&x, &p.weights, stride, padding).map_err(|e| match e {
                    Error::Shape { left, right, .. } => Error::Shape {
                        context: context("input"),
                        left,
                        right,
                    },
                    other => other,
                })?;
                let (f, plane) = (y.dims()[1], y.dims()[2] * y.dims()[3]);
                let b = p.bias.data();
                for (i, chunk) in y.data_mut().chunks_exact_mut(plane).enumerate() {
                    let bv = b[i % f];
                    for v in chunk {
                        *v = *v + bv;
                    }
                }
                (y, Cache::Input(x))
            }
            LayerKind::Relu => (relu(&x), Cache::Input(x)),
            LayerKind::MaxPool2d { window, stride } => {
                let (y, argmax) = maxpool2d_with_indices(&x, window, stride).map_err(|e| match e {
                    Error::Shape { left, right, .. } => Error::Shape {
                        context: context("input"),
                        left,
                        right,
                    },
                    other => other,
                })?;
                (
                    y,
                    Cache::Pool {
                        input_shape: x.shape().clone(),
                        argmax,
                    },
                )
            }
            LayerKind::Flatten => {
                let dims = x.dims().to_vec();
                let rest: usize = dims[1..].iter().product();
                (x.reshape(&[dims[0], rest])?, Cache::Dims(dims))
            }
            LayerKind::GaussianSmooth { sigma, kernel_size } => {
                if sigma == 0.0 {
                    (x, Cache::Passthrough)
                } else {
                    if x.shape().rank() != 4 {
                        let mut expected = x.dims().to_vec();
                        expected.resize(4, 1);
                        return Err(Error::shape(context("input"), x.dims(), &expected));
                    }
                    (gaussian_smooth_apply(&x, sigma, kernel_size)?, Cache::Passthrough)
                }
            }
        };
        self.cache = match mode {
            Mode::Train => Some(cache),
            Mode::Eval => None,
        };
        Ok(out)
    }

    /// Returns the gradient with respect to the layer input and, for
    /// trainable layers, the parameter gradients. Consumes the forward cache.
    pub(crate) fn backward(&mut self, grad_out: Tensor<T>, position: usize) -> Result<(Tensor<T>, Option<Params<T>>)> {
        let cache = self.cache.take().ok_or_else(|| {
            Error::State(format!(
                "layer {position} ({}): backward called without a preceding train-mode forward",
                self.kind
            ))
        })?;
        match (&self.kind, cache) {
            (LayerKind::Dense { .. }, Cache::Input(x)) => {
                let p = self.params.as_ref().expect("trainable layer has params");
                let grad_w = matmul_tn(&x, &grad_out)?;
                let outputs = grad_out.dims()[1];
                let mut grad_b = vec![T::zero(); outputs];
                for row in grad_out.data().chunks_exact(outputs) {
                    for (g, &v) in grad_b.iter_mut().zip(row) {
                        *g = *g + v;
                    }
                }
                let grad_x = matmul_nt(&grad_out, &p.weights)?;
                Ok((
                    grad_x,
                    Some(Params {
                        weights: grad_w,
                        bias: Tensor::new(&[outputs], grad_b)?,
                    }),
                ))
            }
            (&LayerKind::Conv2d { stride, padding, .. }, Cache::Input(x)) => {
                let p = self.params.as_ref().expect("trainable layer has params");
                let (grad_x, grad_w) = conv2d_backward(&x, &p.weights, &grad_out, stride, padding)?;
                let (f, plane) = (grad_out.dims()[1], grad_out.dims()[2] * grad_out.dims()[3]);
                let mut grad_b = vec![T::zero(); f];
                for (i, chunk) in grad_out.data().chunks_exact(plane).enumerate() {
                    grad_b[i % f] = grad_b[i % f] + chunk.iter().copied().sum::<T>();
                }
                Ok((
                    grad_x,
                    Some(Params {
                        weights: grad_w,
                        bias: Tensor::new(&[f], grad_b)?,
                    }),
                ))
            }
            (LayerKind::Relu, Cache::Input(x)) => Ok((relu_backward(&x, &grad_out)?, None)),
            (LayerKind::MaxPool2d { .. }, Cache::Pool { input_shape, argmax }) => {
                Ok((maxpool2d_backward(&input_shape, &argmax, &grad_out)?, None))
            }
            (LayerKind::Flatten, Cache::Dims(dims)) => Ok((grad_out.reshape(&dims)?, None)),
            (&LayerKind::GaussianSmooth { sigma, kernel_size }, Cache::Passthrough) => {
                if sigma == 0.0 {
                    return Ok((grad_out, None));
                }
                // The kernel is symmetric, so the adjoint of the blur is the blur.
                Ok((gaussian_smooth_apply(&grad_out, sigma, kernel_size)?, None))
            }
            _ => Err(Error::State(format!(
                "layer {position}: cache does not match layer kind"
            ))),
        }
    }
}
