use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::Dataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Synthetic classification tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// Interleaved 2-D spiral arms, one per class.
    Spirals,
    /// 2-D isotropic Gaussian clusters with means on a circle of radius 4.
    Blobs,
    /// `size`×`size` single-channel images of stripes whose orientation
    /// encodes the class; the phase is random per sample.
    Bars { size: usize },
}

/// Generates `classes × per_class` samples, class-major, all in the
/// training split.
pub fn synth_dataset(kind: SynthKind, classes: usize, per_class: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if classes < 2 {
        return Err(Error::Validation(format!("need at least two classes, got {classes}")));
    }
    if per_class == 0 {
        return Err(Error::Validation("per_class must be at least 1".into()));
    }
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(Error::Validation(format!(
            "noise must be finite and non-negative, got {noise}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = move |rng: &mut ChaCha8Rng| -> f64 { rng.sample::<f64, _>(StandardNormal) * noise };
    let m = classes * per_class;
    let mut labels = Vec::with_capacity(m);
    let (dims, data) = match kind {
        SynthKind::Spirals => {
            let mut data = Vec::with_capacity(2 * m);
            for c in 0..classes {
                for i in 0..per_class {
                    let r = (i + 1) as f64 / per_class as f64;
                    let theta = 2.0 * PI * c as f64 / classes as f64 + 4.0 * r + gauss(&mut rng);
                    data.extend([r * theta.sin(), r * theta.cos()]);
                    labels.push(c);
                }
            }
            (vec![m, 2], data)
        }
        SynthKind::Blobs => {
            let mut data = Vec::with_capacity(2 * m);
            for c in 0..classes {
                let angle = 2.0 * PI * c as f64 / classes as f64;
                let (cx, cy) = (4.0 * angle.cos(), 4.0 * angle.sin());
                for _ in 0..per_class {
                    data.extend([cx + gauss(&mut rng), cy + gauss(&mut rng)]);
                    labels.push(c);
                }
            }
            (vec![m, 2], data)
        }
        SynthKind::Bars { size } => {
            if size < 4 {
                return Err(Error::Validation(format!("bar images need size >= 4, got {size}")));
            }
            let freq = 2.0 * PI / 4.0;
            let mut data = Vec::with_capacity(m * size * size);
            for c in 0..classes {
                let angle = PI * c as f64 / classes as f64;
                let (ca, sa) = (angle.cos(), angle.sin());
                for _ in 0..per_class {
                    let phase = rng.random_range(0.0..2.0 * PI);
                    for y in 0..size {
                        for x in 0..size {
                            let u = x as f64 * ca + y as f64 * sa;
                            data.push(0.5 + 0.5 * (freq * u + phase).cos() + gauss(&mut rng));
                        }
                    }
                    labels.push(c);
                }
            }
            (vec![m, 1, size, size], data)
        }
    };
    Dataset::new(Tensor::new(&dims, data)?, labels, classes)
}
