//! Named experiment presets.
//!
//! Desk-scale presets (`mlp-spirals`, `mlp-blobs`, `cnn-bars`) are tuned for
//! quick runs. The remaining names carry the published hyperparameter rows
//! (rates, ramp horizon, optimizer family, smoothing schedule) over to the
//! desk-scale architecture closest to the original one.

use super::config::{DataSource, DatasetSpec, ExperimentConfig, LeracSection, OptimizerSection, Regime, RunSection};
use crate::error::{Error, Result};
use crate::network::Architecture;
use crate::schedulers::presets::RowOptimizer;
use crate::schedulers::{hyperparameter_row, hyperparameter_rows, CbsConfig, PlateauPolicy, RampRule};
use crate::tensor::ScalarKind;

pub const DESK_PRESETS: [&str; 3] = ["mlp-spirals", "mlp-blobs", "cnn-bars"];

/// Epoch budget for presets derived from the published rows.
const DESK_EPOCHS: usize = 20;

pub fn preset_names() -> Vec<&'static str> {
    DESK_PRESETS
        .iter()
        .copied()
        .chain(hyperparameter_rows().into_iter().map(|r| r.name))
        .collect()
}

fn run(architecture: Architecture, epochs: usize, batch_size: usize) -> RunSection {
    RunSection {
        label: None,
        architecture,
        regime: Regime::Conventional,
        epochs,
        batch_size,
        repeats: 5,
        base_seed: 0,
        precision: ScalarKind::F32,
        output_dir: None,
        deterministic: false,
        serial: false,
    }
}

fn spec(source: DataSource) -> DatasetSpec {
    DatasetSpec {
        source,
        validation_fraction: 0.1,
        normalize: true,
        split_seed: 0,
    }
}

fn bars() -> DataSource {
    DataSource::Bars {
        classes: 4,
        per_class: 150,
        size: 12,
        noise: 0.3,
        test_per_class: 100,
        seed: 0,
    }
}

fn blobs() -> DataSource {
    DataSource::Blobs {
        classes: 4,
        per_class: 100,
        noise: 2.0,
        test_per_class: 100,
        seed: 0,
    }
}

fn lerac(eta_first: Option<f64>, eta_last: f64, k: usize) -> LeracSection {
    LeracSection {
        eta_first,
        eta_last,
        k,
        c: 10.0,
        rule: RampRule::Exponential,
    }
}

/// Looks up a preset by name; unknown names produce an error listing the
/// valid ones.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let cfg = match name {
        "mlp-spirals" => ExperimentConfig {
            experiment: run(Architecture::Mlp, 40, 16),
            dataset: spec(DataSource::Spirals {
                classes: 3,
                per_class: 100,
                noise: 0.2,
                test_per_class: 100,
                seed: 0,
            }),
            optimizer: OptimizerSection::sgd(0.05, 0.9),
            lerac: lerac(None, 0.05 * 1e-6, 5),
            cbs: CbsConfig::default(),
            plateau: PlateauPolicy::default(),
        },
        "mlp-blobs" => ExperimentConfig {
            experiment: run(Architecture::Mlp, 20, 32),
            dataset: spec(blobs()),
            optimizer: OptimizerSection::sgd(0.05, 0.9),
            lerac: lerac(None, 0.05 * 1e-6, 3),
            cbs: CbsConfig::default(),
            plateau: PlateauPolicy::default(),
        },
        "cnn-bars" => ExperimentConfig {
            experiment: run(Architecture::Cnn, 15, 32),
            dataset: spec(bars()),
            optimizer: OptimizerSection::sgd(0.01, 0.9),
            lerac: lerac(None, 1e-8, 3),
            cbs: CbsConfig::default(),
            plateau: PlateauPolicy::default(),
        },
        other => {
            let Some(row) = hyperparameter_row(other) else {
                return Err(Error::Config(format!(
                    "unknown preset {other:?}; valid presets: {}",
                    preset_names().join(", ")
                )));
            };
            let text_model = matches!(row.name, "bert" | "lstm");
            let (architecture, source) = if text_model {
                (Architecture::Mlp, blobs())
            } else {
                (Architecture::Cnn, bars())
            };
            let optimizer = match row.optimizer {
                RowOptimizer::Sgd => OptimizerSection::sgd(row.eta_base, 0.9),
                RowOptimizer::Adam | RowOptimizer::Adamax | RowOptimizer::AdamW => OptimizerSection::adam(row.eta_base),
            };
            let curriculum = row.lerac();
            ExperimentConfig {
                experiment: run(architecture, DESK_EPOCHS, *row.batch_size.start()),
                dataset: spec(source),
                optimizer,
                lerac: lerac(Some(curriculum.eta_first), curriculum.eta_last, curriculum.k),
                cbs: row.cbs(),
                plateau: PlateauPolicy::default(),
            }
        }
    };
    cfg.validate()?;
    Ok(cfg)
}
