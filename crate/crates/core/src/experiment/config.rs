use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{load_csv, load_idx, synth_dataset, Dataset, SynthKind};
use crate::error::{Error, Result};
use crate::network::Architecture;
use crate::optimizers::OptimizerKind;
use crate::schedulers::{CbsConfig, LeracConfig, PlateauPolicy, RampRule};
use crate::tensor::ScalarKind;

/// Training regimes that can be compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "conventional")]
    Conventional,
    #[serde(rename = "lerac-exp")]
    LeracExponential,
    #[serde(rename = "lerac-linear")]
    LeracLinear,
    #[serde(rename = "cbs")]
    Cbs,
    #[serde(rename = "cbs-lerac")]
    CbsLerac,
}

impl Regime {
    pub const ALL: [Regime; 5] = [
        Regime::Conventional,
        Regime::LeracExponential,
        Regime::LeracLinear,
        Regime::Cbs,
        Regime::CbsLerac,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Regime::Conventional => "conventional",
            Regime::LeracExponential => "lerac-exp",
            Regime::LeracLinear => "lerac-linear",
            Regime::Cbs => "cbs",
            Regime::CbsLerac => "cbs-lerac",
        }
    }

    /// Ramp rule when the regime applies a learning rate curriculum.
    pub fn curriculum(self) -> Option<RampRule> {
        match self {
            Regime::LeracExponential | Regime::CbsLerac => Some(RampRule::Exponential),
            Regime::LeracLinear => Some(RampRule::Linear),
            Regime::Conventional | Regime::Cbs => None,
        }
    }

    pub fn uses_smoothing(self) -> bool {
        matches!(self, Regime::Cbs | Regime::CbsLerac)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL.into_iter().find(|r| r.name() == s).ok_or_else(|| {
            let names: Vec<_> = Regime::ALL.iter().map(|r| r.name()).collect();
            Error::Config(format!("unknown regime {s:?}; valid regimes: {}", names.join(", ")))
        })
    }
}

/// Where samples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    Spirals {
        classes: usize,
        per_class: usize,
        noise: f64,
        test_per_class: usize,
        seed: u64,
    },
    Blobs {
        classes: usize,
        per_class: usize,
        noise: f64,
        test_per_class: usize,
        seed: u64,
    },
    Bars {
        classes: usize,
        per_class: usize,
        size: usize,
        noise: f64,
        test_per_class: usize,
        seed: u64,
    },
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        classes: Option<usize>,
    },
    Csv {
        train: PathBuf,
        test: PathBuf,
        label_column: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        classes: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    #[serde(flatten)]
    pub source: DataSource,
    /// Fraction of the training data held out for validation.
    #[serde(default = "default_validation_fraction")]
    pub validation_fraction: f64,
    #[serde(default = "default_true")]
    pub normalize: bool,
    /// Seed of the validation hold-out permutation.
    #[serde(default)]
    pub split_seed: u64,
}

fn default_validation_fraction() -> f64 {
    0.1
}

fn default_true() -> bool {
    true
}

/// Offset between the training and test generator seeds of synthetic data.
const TEST_SEED_OFFSET: u64 = 0x7E57;

impl DatasetSpec {
    /// Loads the dataset with validation hold-out and, when enabled,
    /// train-split normalization applied.
    pub fn load(&self) -> Result<Dataset> {
        let synth = |kind, classes, per_class, noise, test_per_class, seed: u64| -> Result<Dataset> {
            let train = synth_dataset(kind, classes, per_class, noise, seed)?;
            let test = synth_dataset(
                kind,
                classes,
                test_per_class,
                noise,
                seed.wrapping_add(TEST_SEED_OFFSET),
            )?;
            train.with_test(test)
        };
        let ds = match &self.source {
            &DataSource::Spirals {
                classes,
                per_class,
                noise,
                test_per_class,
                seed,
            } => synth(SynthKind::Spirals, classes, per_class, noise, test_per_class, seed)?,
            &DataSource::Blobs {
                classes,
                per_class,
                noise,
                test_per_class,
                seed,
            } => synth(SynthKind::Blobs, classes, per_class, noise, test_per_class, seed)?,
            &DataSource::Bars {
                classes,
                per_class,
                size,
                noise,
                test_per_class,
                seed,
            } => synth(
                SynthKind::Bars { size },
                classes,
                per_class,
                noise,
                test_per_class,
                seed,
            )?,
            DataSource::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
                classes,
            } => {
                let train = load_idx(train_images, train_labels, *classes)?;
                let test = load_idx(test_images, test_labels, Some(train.classes()))?;
                train.with_test(test)?
            }
            DataSource::Csv {
                train,
                test,
                label_column,
                classes,
            } => {
                let train = load_csv(train, label_column, *classes)?;
                let test = load_csv(test, label_column, Some(train.classes()))?;
                train.with_test(test)?
            }
        };
        let ds = ds.hold_out_validation(self.validation_fraction, self.split_seed)?;
        if self.normalize {
            Ok(ds.normalize(None)?.0)
        } else {
            Ok(ds)
        }
    }
}

/// `[experiment]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Row label in reports and name of the output subdirectory. Defaults to
    /// the regime name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub architecture: Architecture,
    pub regime: Regime,
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_precision")]
    pub precision: ScalarKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Run repeats serially and write reproducible metrics files (wall-clock
    /// times go to a separate file).
    #[serde(default)]
    pub deterministic: bool,
    /// Run repeats serially; required for timing sweeps.
    #[serde(default)]
    pub serial: bool,
}

fn default_repeats() -> usize {
    5
}

fn default_precision() -> ScalarKind {
    ScalarKind::F32
}

/// `[optimizer]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub kind: OptimizerName,
    /// Conventional learning rate; also the curriculum's target rate.
    pub learning_rate: f64,
    #[serde(default)]
    pub momentum: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_epsilon() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerName {
    Sgd,
    Adam,
}

impl OptimizerSection {
    pub fn sgd(learning_rate: f64, momentum: f64) -> Self {
        OptimizerSection {
            kind: OptimizerName::Sgd,
            learning_rate,
            momentum,
            beta1: default_beta1(),
            beta2: default_beta2(),
            epsilon: default_epsilon(),
        }
    }

    pub fn adam(learning_rate: f64) -> Self {
        OptimizerSection {
            kind: OptimizerName::Adam,
            ..Self::sgd(learning_rate, 0.0)
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        match self.kind {
            OptimizerName::Sgd => OptimizerKind::Sgd {
                momentum: self.momentum,
            },
            OptimizerName::Adam => OptimizerKind::Adam {
                beta1: self.beta1,
                beta2: self.beta2,
                epsilon: self.epsilon,
            },
        }
    }
}

/// `[lerac]` section. The base rate comes from `optimizer.learning_rate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeracSection {
    /// First-layer initial rate; defaults to the base rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_first: Option<f64>,
    pub eta_last: f64,
    pub k: usize,
    #[serde(default = "default_c")]
    pub c: f64,
    /// Used by `lerac-exp`/`lerac-linear` only through the regime; kept for
    /// completeness of the snapshot.
    #[serde(default)]
    pub rule: RampRule,
}

fn default_c() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: RunSection,
    pub dataset: DatasetSpec,
    pub optimizer: OptimizerSection,
    pub lerac: LeracSection,
    #[serde(default)]
    pub cbs: CbsConfig,
    #[serde(default)]
    pub plateau: PlateauPolicy,
}

impl ExperimentConfig {
    pub fn label(&self) -> String {
        self.experiment
            .label
            .clone()
            .unwrap_or_else(|| self.experiment.regime.name().to_string())
    }

    /// Same experiment under another regime (label reset).
    pub fn with_regime(&self, regime: Regime) -> Self {
        let mut cfg = self.clone();
        cfg.experiment.regime = regime;
        cfg.experiment.label = None;
        cfg.lerac.rule = regime.curriculum().unwrap_or(cfg.lerac.rule);
        cfg
    }

    /// Curriculum as configured, with the rule implied by the regime.
    pub fn lerac_config(&self) -> LeracConfig {
        LeracConfig {
            eta_base: self.optimizer.learning_rate,
            eta_first: self.lerac.eta_first.unwrap_or(self.optimizer.learning_rate),
            eta_last: self.lerac.eta_last,
            k: self.lerac.k,
            c: self.lerac.c,
            rule: self.experiment.regime.curriculum().unwrap_or(self.lerac.rule),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let run = &self.experiment;
        if run.repeats == 0 || run.epochs == 0 || run.batch_size == 0 {
            return Err(Error::Config(
                "repeats, epochs and batch_size must all be at least 1".into(),
            ));
        }
        if !(self.optimizer.learning_rate > 0.0) || !self.optimizer.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.optimizer.learning_rate
            )));
        }
        self.optimizer.kind().validate()?;
        self.plateau.validate()?;
        if run.regime.curriculum().is_some() {
            self.lerac_config().validate()?;
        }
        if run.regime.uses_smoothing() {
            self.cbs.validate()?;
            if run.architecture != Architecture::Cnn {
                return Err(Error::Config(format!(
                    "regime {} smooths convolutional activations and needs the cnn architecture",
                    run.regime
                )));
            }
        }
        if !(0.0..1.0).contains(&self.dataset.validation_fraction) {
            return Err(Error::Config(format!(
                "validation_fraction must lie in [0, 1), got {}",
                self.dataset.validation_fraction
            )));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    /// Parses a config file. A top-level `preset = "<name>"` key selects the
    /// base the file's sections are layered over; without it the base is
    /// `mlp-spirals`.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut user: toml::Table = text
            .parse()
            .map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        let preset = match user.remove("preset") {
            Some(toml::Value::String(name)) => name,
            Some(other) => return Err(Error::Config(format!("preset must be a string, got {other}"))),
            None => "mlp-spirals".to_string(),
        };
        let base = super::presets::preset(&preset)?;
        let mut merged: toml::Table = toml::Table::try_from(&base).expect("config is serializable");
        for (section, value) in user {
            match (merged.get_mut(&section), value) {
                (Some(toml::Value::Table(into)), toml::Value::Table(from)) => {
                    let kind_changed =
                        section == "dataset" && from.get("kind").is_some_and(|k| into.get("kind") != Some(k));
                    if kind_changed {
                        *into = from;
                    } else {
                        into.extend(from);
                    }
                }
                (_, value) => {
                    merged.insert(section, value);
                }
            }
        }
        let cfg: ExperimentConfig = toml::Value::Table(merged)
            .try_into()
            .map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}
