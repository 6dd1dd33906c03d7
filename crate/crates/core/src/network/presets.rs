use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{LayerKind, Network};
use crate::error::{Error, Result};
use crate::tensor::Scalar;

pub(crate) const MLP_HIDDEN: [usize; 2] = [128, 64];

/// Desk-scale reference architectures.
///
/// * `Mlp`: flatten → dense(128) → relu → dense(64) → relu → dense(C)
/// * `Cnn`: conv(8, 3×3) → relu → maxpool(2) → conv(16, 3×3) → relu →
///   maxpool(2) → flatten → dense(C). With smoothing enabled a Gaussian blur
///   follows each convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Mlp,
    Cnn,
}

impl Architecture {
    /// Layer stack for per-sample input dims (`[features]` or `[C, H, W]`).
    /// `smoothing_kernel` inserts σ = 0 Gaussian layers of that size after
    /// each convolution.
    pub fn layers(
        self,
        sample_dims: &[usize],
        classes: usize,
        smoothing_kernel: Option<usize>,
    ) -> Result<Vec<LayerKind>> {
        if classes < 2 {
            return Err(Error::Validation(format!("need at least two classes, got {classes}")));
        }
        match self {
            Architecture::Mlp => {
                let inputs: usize = sample_dims.iter().product();
                let [h1, h2] = MLP_HIDDEN;
                Ok(vec![
                    LayerKind::Flatten,
                    LayerKind::Dense { inputs, outputs: h1 },
                    LayerKind::Relu,
                    LayerKind::Dense {
                        inputs: h1,
                        outputs: h2,
                    },
                    LayerKind::Relu,
                    LayerKind::Dense {
                        inputs: h2,
                        outputs: classes,
                    },
                ])
            }
            Architecture::Cnn => {
                let &[channels, h, w] = sample_dims else {
                    return Err(Error::Validation(format!(
                        "cnn expects C×H×W samples, got dims {sample_dims:?}"
                    )));
                };
                if h < 4 || w < 4 {
                    return Err(Error::Validation(format!("cnn needs at least 4×4 inputs, got {h}×{w}")));
                }
                let conv = |in_channels, out_channels| LayerKind::Conv2d {
                    in_channels,
                    out_channels,
                    kernel_size: 3,
                    stride: 1,
                    padding: 1,
                };
                let mut layers = Vec::new();
                for (cin, cout) in [(channels, 8), (8, 16)] {
                    layers.push(conv(cin, cout));
                    if let Some(kernel_size) = smoothing_kernel {
                        layers.push(LayerKind::GaussianSmooth {
                            sigma: 0.0,
                            kernel_size,
                        });
                    }
                    layers.push(LayerKind::Relu);
                    layers.push(LayerKind::MaxPool2d { window: 2, stride: 2 });
                }
                layers.push(LayerKind::Flatten);
                layers.push(LayerKind::Dense {
                    inputs: 16 * (h / 2 / 2) * (w / 2 / 2),
                    outputs: classes,
                });
                Ok(layers)
            }
        }
    }

    pub fn build<T: Scalar>(
        self,
        sample_dims: &[usize],
        classes: usize,
        smoothing_kernel: Option<usize>,
    ) -> Result<Network<T>> {
        Network::new(self.layers(sample_dims, classes, smoothing_kernel)?)
    }

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Mlp => "mlp",
            Architecture::Cnn => "cnn",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mlp" => Ok(Architecture::Mlp),
            "cnn" => Ok(Architecture::Cnn),
            other => Err(Error::Config(format!(
                "unknown architecture {other:?} (expected mlp or cnn)"
            ))),
        }
    }
}
