use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::RunResult;
use crate::error::{Error, Result};

/// Arithmetic mean and population standard deviation; `(NaN, NaN)` for an
/// empty slice.
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
    pub diverged: usize,
    pub best: bool,
}

/// Mean ± std final test accuracy per configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    /// The best row has the highest mean; ties go to the lexicographically
    /// smallest label.
    pub fn from_results(results: &[RunResult]) -> Self {
        let mut rows: Vec<ComparisonRow> = results
            .iter()
            .map(|r| ComparisonRow {
                label: r.label.clone(),
                mean: r.mean,
                std: r.std,
                runs: r.repeats.len(),
                diverged: r.diverged(),
                best: false,
            })
            .collect();
        let best = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.mean.is_finite())
            .max_by(|(_, a), (_, b)| a.mean.total_cmp(&b.mean).then_with(|| b.label.cmp(&a.label)))
            .map(|(i, _)| i);
        if let Some(i) = best {
            rows[i].best = true;
        }
        Comparison { rows }
    }

    pub fn best(&self) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.best)
    }

    pub fn row(&self, label: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Aligned text table; the best row is marked with `*`.
    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.label.len())
            .max()
            .unwrap_or(0)
            .max("regime".len());
        let mut out = format!(
            "{:<width$}  {:>16}  {:>4}  {:>8}\n",
            "regime", "accuracy (%)", "runs", "diverged"
        );
        for r in &self.rows {
            let cell = format!("{:.2} ± {:.2}", r.mean, r.std);
            let mark = if r.best { " *" } else { "" };
            let _ = writeln!(
                out,
                "{:<width$}  {:>16}  {:>4}  {:>8}{mark}",
                r.label, cell, r.runs, r.diverged
            );
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("regime,mean,std,runs,diverged,best\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.label, r.mean, r.std, r.runs, r.diverged, r.best
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub label: String,
    /// Mean wall-clock seconds per epoch over all epochs of all repeats.
    pub mean_epoch_seconds: f64,
    /// Mean over repeats of the cumulative seconds until the epoch with
    /// the best validation accuracy.
    pub seconds_to_best: f64,
}

/// Per-regime timing summary plus the (time, validation accuracy) series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub rows: Vec<TimingRow>,
    /// `(label, repeat, epoch, cumulative seconds, validation accuracy)`.
    pub series: Vec<(String, usize, usize, f64, f64)>,
}

pub fn timing_report(results: &[RunResult]) -> TimingReport {
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for result in results {
        let mut seconds = Vec::new();
        let mut to_best = Vec::new();
        for rep in &result.repeats {
            let mut elapsed = 0.0;
            let mut best = (f64::NEG_INFINITY, 0.0);
            for rec in &rep.epochs {
                elapsed += rec.epoch_seconds;
                seconds.push(rec.epoch_seconds);
                if rec.val_acc > best.0 {
                    best = (rec.val_acc, elapsed);
                }
                series.push((result.label.clone(), rep.repeat, rec.epoch, elapsed, rec.val_acc));
            }
            if !rep.epochs.is_empty() {
                to_best.push(best.1);
            }
        }
        rows.push(TimingRow {
            label: result.label.clone(),
            mean_epoch_seconds: mean_and_std(&seconds).0,
            seconds_to_best: mean_and_std(&to_best).0,
        });
    }
    TimingReport { rows, series }
}

impl TimingReport {
    pub fn row(&self, label: &str) -> Option<&TimingRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.label.len())
            .max()
            .unwrap_or(0)
            .max("regime".len());
        let mut out = format!("{:<width$}  {:>14}  {:>15}\n", "regime", "s / epoch", "s to best val");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>14.6}  {:>15.4}",
                r.label, r.mean_epoch_seconds, r.seconds_to_best
            );
        }
        out
    }

    pub fn series_csv(&self) -> String {
        let mut out = String::from("regime,repeat,epoch,seconds,val_acc\n");
        for (label, rep, epoch, t, acc) in &self.series {
            let _ = writeln!(out, "{label},{rep},{epoch},{t},{acc}");
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("regime,mean_epoch_seconds,seconds_to_best\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{}", r.label, r.mean_epoch_seconds, r.seconds_to_best);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_statistics() {
        let (m, s) = mean_and_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        assert_eq!(s, 2.0);
        assert_eq!(mean_and_std(&[3.5]), (3.5, 0.0));
        assert!(mean_and_std(&[]).0.is_nan());
    }
}
