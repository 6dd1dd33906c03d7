use std::time::Instant;

use super::config::ExperimentConfig;
use crate::data::{BatchStream, Dataset, Split};
use crate::error::Result;
use crate::network::{Mode, Network};
use crate::optimizers::{resolve_rates, OptimizerState};
use crate::schedulers::{assign_initial_rates, cbs_sigma_at, CbsConfig, PlateauTracker, RateSchedule};
use crate::tensor::fpu::FlushToZero;
use crate::tensor::ops::softmax_xent_backward;
use crate::tensor::{softmax_xent, Scalar};

const EVAL_BATCH: usize = 512;
const BATCH_SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

/// Metrics of one completed epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// Completed epochs before this one (the curriculum's `l`).
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Percent.
    pub val_acc: f64,
    /// Percent.
    pub test_acc: f64,
    pub epoch_seconds: f64,
    /// Learning rate of each trainable layer during the epoch.
    pub rates: Vec<f64>,
    pub cbs_sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Running,
    Completed,
    EarlyStopped,
    /// A non-finite loss aborted the run.
    Diverged,
}

/// One training run: a network, its optimizer, and the schedules driving it.
pub struct Trainer<T: Scalar> {
    net: Network<T>,
    optimizer: OptimizerState<T>,
    schedule: RateSchedule,
    cbs: Option<CbsConfig>,
    tracker: PlateauTracker,
    plateau_scale: f64,
    batches: BatchStream,
    epoch: usize,
    max_epochs: usize,
    status: RunStatus,
    records: Vec<EpochRecord>,
}

impl<T: Scalar> Trainer<T> {
    pub fn new(cfg: &ExperimentConfig, data: &Dataset, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let regime = cfg.experiment.regime;
        let smoothing = regime.uses_smoothing().then_some(cfg.cbs.kernel_size);
        let net: Network<T> = cfg
            .experiment
            .architecture
            .build::<T>(data.sample_dims(), data.classes(), smoothing)?
            .with_seed(seed);
        let schedule = match regime.curriculum() {
            Some(_) => assign_initial_rates(net.depth(), &cfg.lerac_config())?,
            None => RateSchedule::constant(net.depth(), cfg.optimizer.learning_rate)?,
        };
        let optimizer = OptimizerState::new(cfg.optimizer.kind(), &net)?;
        let batches = BatchStream::new(
            data.split(Split::Train),
            cfg.experiment.batch_size,
            seed ^ BATCH_SEED_MIX,
        )?;
        Ok(Trainer {
            net,
            optimizer,
            schedule,
            cbs: regime.uses_smoothing().then(|| cfg.cbs.clone()),
            tracker: PlateauTracker::new(cfg.plateau.clone()),
            plateau_scale: 1.0,
            batches,
            epoch: 0,
            max_epochs: cfg.experiment.epochs,
            status: RunStatus::Running,
            records: Vec::new(),
        })
    }

    pub fn status(&self) -> RunStatus {
        self.status
    }

    pub fn is_done(&self) -> bool {
        self.status != RunStatus::Running
    }

    pub fn records(&self) -> &[EpochRecord] {
        &self.records
    }

    pub fn network(&self) -> &Network<T> {
        &self.net
    }

    pub fn schedule(&self) -> &RateSchedule {
        &self.schedule
    }

    pub fn into_parts(self) -> (Network<T>, Vec<EpochRecord>, RunStatus) {
        (self.net, self.records, self.status)
    }

    /// Trains one epoch and evaluates. Returns `Ok(None)` once the run has
    /// finished, diverged or stopped early.
    pub fn run_epoch(&mut self, data: &Dataset) -> Result<Option<&EpochRecord>> {
        if self.is_done() {
            return Ok(None);
        }
        let l = self.epoch;
        let rates = resolve_rates(&self.schedule, l, self.plateau_scale)?;
        let sigma = self.cbs.as_ref().map_or(0.0, |c| cbs_sigma_at(c, l));
        self.net.set_smoothing_sigma(sigma)?;

        let _flush = FlushToZero::enable();
        let start = Instant::now();
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for batch in self.batches.epoch(l) {
            let (x, y) = data.gather::<T>(&batch)?;
            let logits = self.net.forward(&x, Mode::Train)?;
            let (loss, probs) = softmax_xent(&logits, &y)?;
            if !loss.is_finite() {
                self.net.clear_caches();
                self.status = RunStatus::Diverged;
                log::warn!("non-finite training loss in epoch {l}; run aborted");
                return Ok(None);
            }
            let grads = self.net.backward(&softmax_xent_backward(&probs, &y)?)?;
            self.optimizer.step(&mut self.net, &grads, &rates)?;
            loss_sum += loss.as_f64() * batch.len() as f64;
            seen += batch.len();
        }
        let train_loss = loss_sum / seen as f64;
        let (val_loss, val_acc) = match evaluate(&mut self.net, data, Split::Validation)? {
            Some(v) => v,
            None => (train_loss, f64::NAN),
        };
        let (_, test_acc) = evaluate(&mut self.net, data, Split::Test)?.unwrap_or((f64::NAN, f64::NAN));
        let epoch_seconds = start.elapsed().as_secs_f64();

        if !val_loss.is_finite() {
            self.status = RunStatus::Diverged;
            log::warn!("non-finite validation loss in epoch {l}; run aborted");
            return Ok(None);
        }

        self.records.push(EpochRecord {
            epoch: l,
            train_loss,
            val_loss,
            val_acc,
            test_acc,
            epoch_seconds,
            rates,
            cbs_sigma: sigma,
        });
        let decision = self.tracker.observe(val_loss);
        if decision.reduce {
            self.plateau_scale *= self.tracker.policy().factor;
        }
        self.epoch += 1;
        if decision.stop {
            self.status = RunStatus::EarlyStopped;
        } else if self.epoch >= self.max_epochs {
            self.status = RunStatus::Completed;
        }
        Ok(self.records.last())
    }

    /// Runs epochs until the trainer finishes.
    pub fn run(mut self, data: &Dataset) -> Result<Self> {
        while self.run_epoch(data)?.is_some() {}
        Ok(self)
    }
}

/// Mean loss and accuracy (percent) over a split, or `None` for an empty
/// split.
pub fn evaluate<T: Scalar>(net: &mut Network<T>, data: &Dataset, split: Split) -> Result<Option<(f64, f64)>> {
    let indices = data.split(split);
    if indices.is_empty() {
        return Ok(None);
    }
    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    for chunk in indices.chunks(EVAL_BATCH) {
        let (x, y) = data.gather::<T>(chunk)?;
        let logits = net.forward(&x, Mode::Eval)?;
        let (loss, probs) = softmax_xent(&logits, &y)?;
        loss_sum += loss.as_f64() * chunk.len() as f64;
        let classes = probs.dims()[1];
        for (row, &label) in logits.data().chunks_exact(classes).zip(&y) {
            if argmax(row) == label {
                correct += 1;
            }
        }
    }
    let n = indices.len() as f64;
    Ok(Some((loss_sum / n, 100.0 * correct as f64 / n)))
}

fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

impl RunStatus {
    pub fn name(self) -> &'static str {
        match self {
            RunStatus::Running => "running",
            RunStatus::Completed => "completed",
            RunStatus::EarlyStopped => "early-stopped",
            RunStatus::Diverged => "diverged",
        }
    }
}
