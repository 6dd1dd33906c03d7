//! Regime-comparison harness: repeated seeded runs, aggregation, and the
//! files each run leaves behind.
//!
//! A run directory `<output_dir>/<label>/repeat_<i>/` holds
//!
//! * `config.toml`: the resolved configuration,
//! * `metrics.csv`: one row per epoch,
//! * `checkpoint.bin`: the final network,
//! * `walltime.csv`: per-epoch wall-clock seconds, only in deterministic
//!   mode (where `metrics.csv` records zero seconds so that it is
//!   reproducible byte for byte).

mod config;
pub mod presets;
mod report;
mod trainer;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::network::{checkpoint, Network};
use crate::tensor::{Scalar, ScalarKind};

pub use config::{
    DataSource, DatasetSpec, ExperimentConfig, LeracSection, OptimizerName, OptimizerSection, Regime, RunSection,
};
pub use presets::{preset, preset_names};
pub use report::{mean_and_std, timing_report, Comparison, ComparisonRow, TimingReport, TimingRow};
pub use trainer::{evaluate, EpochRecord, RunStatus, Trainer};

/// Outcome of one seeded training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatOutcome {
    pub repeat: usize,
    pub seed: u64,
    pub status: RunStatus,
    /// Test accuracy (percent) of the final model; `None` when the run
    /// diverged.
    pub final_test_acc: Option<f64>,
    pub epochs: Vec<EpochRecord>,
}

/// Aggregate of all repeats of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub label: String,
    pub config: ExperimentConfig,
    pub repeats: Vec<RepeatOutcome>,
    /// Mean final test accuracy over the repeats that did not diverge.
    pub mean: f64,
    /// Population standard deviation matching `mean`.
    pub std: f64,
}

impl RunResult {
    fn from_repeats(config: ExperimentConfig, repeats: Vec<RepeatOutcome>) -> Self {
        let accs: Vec<f64> = repeats.iter().filter_map(|r| r.final_test_acc).collect();
        let (mean, std) = mean_and_std(&accs);
        RunResult {
            label: config.label(),
            config,
            repeats,
            mean,
            std,
        }
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.repeats.iter().filter_map(|r| r.final_test_acc).collect()
    }

    pub fn diverged(&self) -> usize {
        self.repeats.iter().filter(|r| r.status == RunStatus::Diverged).count()
    }
}

fn finish<T: Scalar>(cfg: &ExperimentConfig, repeat: usize, seed: u64, trainer: Trainer<T>) -> Result<RepeatOutcome> {
    let (net, epochs, status) = trainer.into_parts();
    let final_test_acc = match status {
        RunStatus::Diverged => None,
        _ => epochs.last().map(|r| r.test_acc),
    };
    let outcome = RepeatOutcome {
        repeat,
        seed,
        status,
        final_test_acc,
        epochs,
    };
    if let Some(dir) = &cfg.experiment.output_dir {
        write_repeat(cfg, &dir.join(cfg.label()), &outcome, &net)?;
    }
    Ok(outcome)
}

fn run_repeat<T: Scalar>(cfg: &ExperimentConfig, data: &Dataset, repeat: usize) -> Result<RepeatOutcome> {
    let seed = cfg.experiment.base_seed.wrapping_add(repeat as u64);
    let trainer = Trainer::<T>::new(cfg, data, seed)?.run(data)?;
    log::info!("{} repeat {repeat}: {}", cfg.label(), trainer.status().name());
    finish(cfg, repeat, seed, trainer)
}

fn run_typed<T: Scalar>(cfg: &ExperimentConfig, data: &Dataset) -> Result<RunResult> {
    let repeats = cfg.experiment.repeats;
    let outcomes: Vec<RepeatOutcome> = if cfg.experiment.deterministic || cfg.experiment.serial {
        (0..repeats)
            .map(|i| run_repeat::<T>(cfg, data, i))
            .collect::<Result<_>>()?
    } else {
        (0..repeats)
            .into_par_iter()
            .map(|i| run_repeat::<T>(cfg, data, i))
            .collect::<Result<_>>()?
    };
    Ok(RunResult::from_repeats(cfg.clone(), outcomes))
}

/// Trains `repeats` independent runs with seeds `base_seed + i`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult> {
    cfg.validate()?;
    let data = cfg.dataset.load()?;
    run_on(cfg, &data)
}

/// As [`run_experiment`], on an already loaded dataset.
pub fn run_on(cfg: &ExperimentConfig, data: &Dataset) -> Result<RunResult> {
    cfg.validate()?;
    match cfg.experiment.precision {
        ScalarKind::F32 => run_typed::<f32>(cfg, data),
        ScalarKind::F64 => run_typed::<f64>(cfg, data),
    }
}

/// Checks that configurations differ only in regime-level settings.
fn check_comparable(cfgs: &[ExperimentConfig]) -> Result<()> {
    if cfgs.len() < 2 {
        return Err(Error::Validation(
            "a comparison needs at least two configurations".into(),
        ));
    }
    let first = &cfgs[0];
    for cfg in &cfgs[1..] {
        let (a, b) = (&first.experiment, &cfg.experiment);
        let same = first.dataset == cfg.dataset
            && a.architecture == b.architecture
            && a.base_seed == b.base_seed
            && a.repeats == b.repeats
            && a.precision == b.precision;
        if !same {
            return Err(Error::Validation(format!(
                "configurations {} and {} differ in dataset, architecture, precision or seed set",
                first.label(),
                cfg.label()
            )));
        }
    }
    Ok(())
}

/// Runs every configuration and tabulates mean ± std test accuracy.
pub fn compare_regimes(cfgs: &[ExperimentConfig]) -> Result<(Comparison, Vec<RunResult>)> {
    check_comparable(cfgs)?;
    for cfg in cfgs {
        cfg.validate()?;
    }
    let data = cfgs[0].dataset.load()?;
    let results = cfgs.iter().map(|c| run_on(c, &data)).collect::<Result<Vec<_>>>()?;
    Ok((Comparison::from_results(&results), results))
}

fn interleave_typed<T: Scalar>(cfgs: &[ExperimentConfig], data: &Dataset) -> Result<Vec<RunResult>> {
    let repeats = cfgs[0].experiment.repeats;
    let mut outcomes: Vec<Vec<RepeatOutcome>> = vec![Vec::new(); cfgs.len()];
    for repeat in 0..repeats {
        let seed = cfgs[0].experiment.base_seed.wrapping_add(repeat as u64);
        let mut trainers = cfgs
            .iter()
            .map(|c| Trainer::<T>::new(c, data, seed))
            .collect::<Result<Vec<_>>>()?;
        let mut round = 0;
        while trainers.iter().any(|t| !t.is_done()) {
            // rotate the starting trainer so no regime always runs first
            for offset in 0..trainers.len() {
                let i = (round + offset) % trainers.len();
                trainers[i].run_epoch(data)?;
            }
            round += 1;
        }
        for (i, (cfg, trainer)) in cfgs.iter().zip(trainers).enumerate() {
            outcomes[i].push(finish(cfg, repeat, seed, trainer)?);
        }
    }
    Ok(cfgs
        .iter()
        .cloned()
        .zip(outcomes)
        .map(|(c, o)| RunResult::from_repeats(c, o))
        .collect())
}

/// Serial timing sweep: for every repeat, the configurations train in
/// lockstep, one epoch each in rotating order, so machine load affects all
/// regimes alike.
pub fn run_timing(cfgs: &[ExperimentConfig]) -> Result<(TimingReport, Vec<RunResult>)> {
    check_comparable(cfgs)?;
    for cfg in cfgs {
        cfg.validate()?;
        if !cfg.experiment.serial {
            return Err(Error::Config(format!(
                "timing runs must be serial; set experiment.serial for {}",
                cfg.label()
            )));
        }
    }
    let data = cfgs[0].dataset.load()?;
    let results = match cfgs[0].experiment.precision {
        ScalarKind::F32 => interleave_typed::<f32>(cfgs, &data)?,
        ScalarKind::F64 => interleave_typed::<f64>(cfgs, &data)?,
    };
    Ok((timing_report(&results), results))
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Per-epoch metrics as CSV text. `include_seconds = false` writes zero
/// in the `epoch_seconds` column.
pub fn metrics_csv(records: &[EpochRecord], include_seconds: bool) -> String {
    let n = records.first().map_or(0, |r| r.rates.len());
    let mut out = String::from("epoch,train_loss,val_acc,test_acc,epoch_seconds");
    for j in 1..=n {
        out.push_str(&format!(",rate_layer_{j}"));
    }
    out.push_str(",cbs_sigma\n");
    for r in records {
        let seconds = if include_seconds { r.epoch_seconds } else { 0.0 };
        let mut fields = vec![
            r.epoch.to_string(),
            fmt_f64(r.train_loss),
            fmt_f64(r.val_acc),
            fmt_f64(r.test_acc),
            fmt_f64(seconds),
        ];
        fields.extend(r.rates.iter().map(|&v| fmt_f64(v)));
        fields.push(fmt_f64(r.cbs_sigma));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_repeat<T: Scalar>(
    cfg: &ExperimentConfig,
    dir: &Path,
    outcome: &RepeatOutcome,
    net: &Network<T>,
) -> Result<()> {
    let dir: PathBuf = dir.join(format!("repeat_{}", outcome.repeat));
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write(&dir.join("config.toml"), cfg.to_toml())?;
    let deterministic = cfg.experiment.deterministic;
    write(&dir.join("metrics.csv"), metrics_csv(&outcome.epochs, !deterministic))?;
    if deterministic {
        let mut wall = String::from("epoch,epoch_seconds\n");
        for r in &outcome.epochs {
            wall.push_str(&format!("{},{}\n", r.epoch, r.epoch_seconds));
        }
        write(&dir.join("walltime.csv"), wall)?;
    }
    write(
        &dir.join("status.txt"),
        format!("{}\nseed {}\n", outcome.status.name(), outcome.seed),
    )?;
    checkpoint::save(net, dir.join("checkpoint.bin"))
}

/// Reads a `metrics.csv` back into epoch records. Validation loss is not
/// stored and comes back as NaN.
pub fn read_metrics_csv(path: impl AsRef<Path>) -> Result<Vec<EpochRecord>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let rate_cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("rate_layer_"))
        .map(|(i, _)| i)
        .collect();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Validation(format!("{} lacks column {name}", path.display())))
    };
    let (e, tl, va, ta, es, cs) = (
        col("epoch")?,
        col("train_loss")?,
        col("val_acc")?,
        col("test_acc")?,
        col("epoch_seconds")?,
        col("cbs_sigma")?,
    );
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let num = |i: usize| -> Result<f64> {
            row[i]
                .parse::<f64>()
                .map_err(|_| Error::Validation(format!("{}: {:?} is not numeric", path.display(), &row[i])))
        };
        records.push(EpochRecord {
            epoch: num(e)? as usize,
            train_loss: num(tl)?,
            val_loss: f64::NAN,
            val_acc: num(va)?,
            test_acc: num(ta)?,
            epoch_seconds: num(es)?,
            rates: rate_cols.iter().map(|&i| num(i)).collect::<Result<_>>()?,
            cbs_sigma: num(cs)?,
        });
    }
    Ok(records)
}
