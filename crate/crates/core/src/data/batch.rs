use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seeded mini-batch order over one split. The permutation for an epoch is
/// a pure function of `(seed, epoch)`; the last partial batch is kept.
#[derive(Debug, Clone)]
pub struct BatchStream {
    indices: Vec<usize>,
    batch_size: usize,
    seed: u64,
}

impl BatchStream {
    pub fn new(indices: &[usize], batch_size: usize, seed: u64) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::Validation("batch size must be at least 1".into()));
        }
        if indices.is_empty() {
            return Err(Error::DatasetEmpty("cannot batch an empty split".into()));
        }
        Ok(BatchStream {
            indices: indices.to_vec(),
            batch_size,
            seed,
        })
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.indices.len().div_ceil(self.batch_size)
    }

    pub fn permutation(&self, epoch: usize) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(epoch as u64);
        let mut order = self.indices.clone();
        order.shuffle(&mut rng);
        order
    }

    pub fn epoch(&self, epoch: usize) -> Vec<Vec<usize>> {
        self.permutation(epoch)
            .chunks(self.batch_size)
            .map(<[usize]>::to_vec)
            .collect()
    }
}
