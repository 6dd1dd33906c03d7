use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Loads a headered CSV of numeric features plus an integer label column.
/// With `classes` unset the class count is one past the largest label.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str, classes: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let label_at = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::Validation(format!("label column {label_column:?} not found in {}", path.display())))?;
    let width = headers.len() - 1;
    if width == 0 {
        return Err(Error::Validation(format!("{} has no feature columns", path.display())));
    }
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        for (col, field) in record.iter().enumerate() {
            let field = field.trim();
            if col == label_at {
                let label = field
                    .parse::<usize>()
                    .map_err(|_| Error::Validation(format!("row {}: label {field:?} is not a class index", row + 1)))?;
                labels.push(label);
            } else {
                let v = field.parse::<f64>().map_err(|_| {
                    Error::Validation(format!("row {}, column {col}: {field:?} is not numeric", row + 1))
                })?;
                features.push(v);
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::DatasetEmpty(format!("{} has no data rows", path.display())));
    }
    let classes = classes.unwrap_or_else(|| labels.iter().max().map_or(1, |m| m + 1));
    Dataset::new(Tensor::new(&[labels.len(), width], features)?, labels, classes)
}
