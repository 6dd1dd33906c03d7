//! Published hyperparameter settings for the full-scale architectures,
//! kept as named rows so desk-scale experiments can borrow their rates,
//! ramp horizons and smoothing schedules.

use std::ops::RangeInclusive;

use super::{CbsConfig, LeracConfig};

/// Optimizer named by a hyperparameter row. Only SGD and Adam are
/// implemented; the Adam variants map onto Adam.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowOptimizer {
    Sgd,
    Adam,
    Adamax,
    AdamW,
}

impl RowOptimizer {
    pub fn name(self) -> &'static str {
        match self {
            RowOptimizer::Sgd => "SGD",
            RowOptimizer::Adam => "Adam",
            RowOptimizer::Adamax => "Adamax",
            RowOptimizer::AdamW => "AdamW",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperparameterRow {
    pub name: &'static str,
    /// Architecture the row was tuned for.
    pub architecture: &'static str,
    pub optimizer: RowOptimizer,
    pub batch_size: RangeInclusive<usize>,
    pub epochs: RangeInclusive<usize>,
    pub eta_base: f64,
    pub cbs_sigma: f64,
    pub cbs_decay: f64,
    pub cbs_step: RangeInclusive<usize>,
    pub k: RangeInclusive<usize>,
    pub eta_first: f64,
    pub eta_last: f64,
}

/// Integer midpoint of a range, rounded down.
pub fn midpoint(range: &RangeInclusive<usize>) -> usize {
    (range.start() + range.end()) / 2
}

impl HyperparameterRow {
    /// Curriculum at the midpoint of the row's `k` range.
    pub fn lerac(&self) -> LeracConfig {
        LeracConfig {
            eta_first: self.eta_first,
            ..LeracConfig::new(self.eta_base, self.eta_last, midpoint(&self.k))
        }
    }

    /// Curricula for every `k` in the row's range.
    pub fn lerac_sweep(&self) -> Vec<LeracConfig> {
        self.k.clone().map(|k| LeracConfig { k, ..self.lerac() }).collect()
    }

    /// Smoothing schedule at the midpoint of the row's decay-step range.
    pub fn cbs(&self) -> CbsConfig {
        CbsConfig {
            sigma0: self.cbs_sigma,
            decay: self.cbs_decay,
            step: midpoint(&self.cbs_step),
            ..CbsConfig::default()
        }
    }
}

pub fn hyperparameter_rows() -> Vec<HyperparameterRow> {
    use RowOptimizer::*;
    let row = |name, architecture, optimizer, batch_size, epochs, eta_base, cbs_sigma, cbs_step, k, eta_last| {
        HyperparameterRow {
            name,
            architecture,
            optimizer,
            batch_size,
            epochs,
            eta_base,
            cbs_sigma,
            cbs_decay: 0.9,
            cbs_step,
            k,
            eta_first: eta_base,
            eta_last,
        }
    };
    vec![
        row(
            "resnet18",
            "ResNet-18",
            Sgd,
            64..=64,
            100..=200,
            1e-1,
            1.0,
            2..=5,
            5..=7,
            1e-8,
        ),
        row(
            "wide-resnet50",
            "Wide-ResNet-50",
            Sgd,
            64..=64,
            100..=200,
            1e-1,
            1.0,
            2..=5,
            5..=7,
            1e-8,
        ),
        row(
            "cvt13",
            "CvT-13",
            Adamax,
            64..=128,
            150..=200,
            2e-3,
            1.0,
            2..=5,
            2..=5,
            2e-8,
        ),
        row(
            "cvt13-pretrained",
            "CvT-13 (pre-trained)",
            Adamax,
            64..=128,
            25..=25,
            5e-4,
            1.0,
            2..=5,
            3..=6,
            5e-10,
        ),
        row(
            "bert",
            "BERT large-uncased",
            Adamax,
            10..=10,
            7..=25,
            5e-5,
            1.0,
            1..=1,
            3..=3,
            5e-8,
        ),
        row("lstm", "LSTM", AdamW, 256..=512, 25..=70, 1e-3, 1.0, 2..=2, 3..=4, 1e-7),
        row("septr", "SepTr", Adam, 2..=2, 50..=50, 1e-4, 0.8, 1..=3, 2..=5, 1e-8),
        row(
            "densenet121",
            "DenseNet-121",
            Adam,
            64..=64,
            50..=50,
            1e-4,
            0.8,
            1..=3,
            2..=5,
            5e-8,
        ),
    ]
}

pub fn hyperparameter_row(name: &str) -> Option<HyperparameterRow> {
    hyperparameter_rows().into_iter().find(|r| r.name == name)
}
