//! Datasets, splits, normalization and seeded batching.

mod batch;
mod csv_source;
mod idx;
mod synth;

use serde::{Deserialize, Serialize};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

pub use batch::BatchStream;
pub use csv_source::load_csv;
pub use idx::{load_idx, read_idx, write_idx, IdxArray};
pub use synth::{synth_dataset, SynthKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// Samples `inputs[i]` with labels `labels[i]`, partitioned into train,
/// validation and test index sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Tensor<f64>,
    labels: Vec<usize>,
    classes: usize,
    train: Vec<usize>,
    validation: Vec<usize>,
    test: Vec<usize>,
}

/// Per-channel standardization statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Dataset {
    /// Every sample starts in the training split.
    pub fn new(inputs: Tensor<f64>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        let m = inputs.dims()[0];
        if labels.len() != m {
            return Err(Error::shape("dataset labels", &[labels.len()], inputs.dims()));
        }
        if classes == 0 {
            return Err(Error::Validation("class count must be positive".into()));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
            return Err(Error::Validation(format!(
                "label {l} of sample {i} is outside [0, {classes})"
            )));
        }
        if !inputs.is_finite() {
            return Err(Error::Numeric("dataset inputs contain NaN or infinity".into()));
        }
        Ok(Dataset {
            inputs,
            labels,
            classes,
            train: (0..m).collect(),
            validation: Vec::new(),
            test: Vec::new(),
        })
    }

    /// Appends `test`'s samples as this dataset's test split.
    pub fn with_test(self, test: Dataset) -> Result<Self> {
        if test.sample_dims() != self.sample_dims() {
            return Err(Error::shape(
                "test split samples",
                test.sample_dims(),
                self.sample_dims(),
            ));
        }
        if test.classes > self.classes {
            return Err(Error::Validation(format!(
                "test split has {} classes, training data {}",
                test.classes, self.classes
            )));
        }
        let m = self.len();
        let mut dims = self.inputs.dims().to_vec();
        dims[0] += test.len();
        let mut data = self.inputs.into_data();
        data.extend_from_slice(test.inputs.data());
        let mut labels = self.labels;
        labels.extend_from_slice(&test.labels);
        let mut test_idx = self.test;
        test_idx.extend((0..test.len()).map(|i| m + i));
        Ok(Dataset {
            inputs: Tensor::new(&dims, data)?,
            labels,
            classes: self.classes,
            train: self.train,
            validation: self.validation,
            test: test_idx,
        })
    }

    /// Moves `fraction` of the training split, chosen by a seeded
    /// permutation, into the validation split.
    pub fn hold_out_validation(mut self, fraction: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::Validation(format!(
                "validation fraction must lie in [0, 1), got {fraction}"
            )));
        }
        let count = (self.train.len() as f64 * fraction).round() as usize;
        if count == 0 {
            return Ok(self);
        }
        if count >= self.train.len() {
            return Err(Error::DatasetEmpty(
                "validation hold-out leaves no training samples".into(),
            ));
        }
        let mut order = self.train.clone();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut held: Vec<usize> = order[..count].to_vec();
        held.sort_unstable();
        self.train.retain(|i| held.binary_search(i).is_err());
        self.validation.extend(held);
        self.validation.sort_unstable();
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn inputs(&self) -> &Tensor<f64> {
        &self.inputs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Dims of one sample (everything after the batch axis).
    pub fn sample_dims(&self) -> &[usize] {
        &self.inputs.dims()[1..]
    }

    pub fn split(&self, split: Split) -> &[usize] {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }

    /// Copies the listed samples into a batch tensor of precision `T`.
    pub fn gather<T: Scalar>(&self, indices: &[usize]) -> Result<(Tensor<T>, Vec<usize>)> {
        if indices.is_empty() {
            return Err(Error::DatasetEmpty("cannot gather an empty batch".into()));
        }
        let per: usize = self.sample_dims().iter().product();
        let src = self.inputs.data();
        let mut data = Vec::with_capacity(per * indices.len());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::Validation(format!("sample index {i} out of range")));
            }
            data.extend(src[i * per..(i + 1) * per].iter().map(|&v| T::from_f64(v)));
            labels.push(self.labels[i]);
        }
        let mut dims = self.inputs.dims().to_vec();
        dims[0] = indices.len();
        Ok((Tensor::new(&dims, data)?, labels))
    }

    /// Channel axis layout: `(channels, elements per channel per sample)`.
    /// Images (N×C×H×W) have C channels; flat features (N×D) treat each
    /// feature as its own channel.
    fn channel_layout(&self) -> (usize, usize) {
        let dims = self.sample_dims();
        match dims.len() {
            0 => (1, 1),
            1 => (dims[0], 1),
            _ => (dims[0], dims[1..].iter().product()),
        }
    }

    /// Per-channel mean and population standard deviation over the training split.
    pub fn channel_stats(&self) -> Result<ChannelStats> {
        if self.train.is_empty() {
            return Err(Error::DatasetEmpty("training split is empty".into()));
        }
        let (channels, inner) = self.channel_layout();
        let per = channels * inner;
        let src = self.inputs.data();
        let count = (self.train.len() * inner) as f64;
        let mut mean = vec![0.0; channels];
        for &i in &self.train {
            for (c, m) in mean.iter_mut().enumerate() {
                *m += src[i * per + c * inner..i * per + (c + 1) * inner].iter().sum::<f64>();
            }
        }
        mean.iter_mut().for_each(|m| *m /= count);
        let mut var = vec![0.0; channels];
        for &i in &self.train {
            for (c, v) in var.iter_mut().enumerate() {
                *v += src[i * per + c * inner..i * per + (c + 1) * inner]
                    .iter()
                    .map(|x| (x - mean[c]).powi(2))
                    .sum::<f64>();
            }
        }
        let std = var.into_iter().map(|v| (v / count).sqrt()).collect();
        Ok(ChannelStats { mean, std })
    }

    /// Standardizes every split channel-wise. Without `stats`, they are
    /// computed from the training split. Returns the statistics applied.
    pub fn normalize(mut self, stats: Option<&ChannelStats>) -> Result<(Self, ChannelStats)> {
        let stats = match stats {
            Some(s) => s.clone(),
            None => self.channel_stats()?,
        };
        let (channels, inner) = self.channel_layout();
        if stats.mean.len() != channels || stats.std.len() != channels {
            return Err(Error::shape(
                "normalization statistics",
                &[stats.mean.len(), stats.std.len()],
                &[channels, channels],
            ));
        }
        if let Some(c) = stats.std.iter().position(|&s| !(s > 0.0)) {
            return Err(Error::Validation(format!("channel {c} has zero standard deviation")));
        }
        let per = channels * inner;
        for (k, v) in self.inputs.data_mut().iter_mut().enumerate() {
            let c = (k % per) / inner;
            *v = (*v - stats.mean[c]) / stats.std[c];
        }
        Ok((self, stats))
    }
}
