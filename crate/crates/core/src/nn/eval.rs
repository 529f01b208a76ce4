use rayon::prelude::*;

use super::dataset::LabeledDataset;
use super::model::MlpModel;
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;

/// Predicted class of every row, evaluated in parallel.
pub fn predict_all(model: &MlpModel, data: &LabeledDataset) -> Result<Vec<usize>> {
    if data.n_in() != model.n_in() {
        return Err(Error::invalid(format!(
            "model takes {} features but the dataset has {}",
            model.n_in(),
            data.n_in()
        )));
    }
    (0..data.len())
        .into_par_iter()
        .map(|i| model.predict_label(data.row(i)))
        .collect()
}

/// Match rate and confusion matrix of `model` on `data`.
pub fn evaluate(model: &MlpModel, data: &LabeledDataset) -> Result<MetricsReport> {
    if data.n_classes() != model.n_classes() {
        return Err(Error::invalid(format!(
            "model predicts {} classes but the dataset has {}",
            model.n_classes(),
            data.n_classes()
        )));
    }
    let pred = predict_all(model, data)?;
    Ok(MetricsReport::from_predictions(
        "model",
        data.n_classes(),
        data.labels(),
        &pred,
    ))
}
