//! Naive Bayesian classifier over nominal attributes with add-one smoothing.

use std::collections::HashMap;

use serde::Serialize;

use super::{require_nominal_inputs, Classes, LearnError, Result};
use crate::tabular::{Dataset, Value};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalTable {
    pub attribute: String,
    #[serde(skip)]
    index: usize,
    /// Labels seen in training, in order of first appearance.
    pub labels: Vec<String>,
    /// `probabilities[class][label]`; each row sums to 1.
    pub probabilities: Vec<Vec<f64>>,
    /// Probability given to a label never seen in training, per class.
    pub unseen: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BayesModel {
    pub target: String,
    /// Classes in order of first appearance in the training data.
    pub classes: Vec<String>,
    pub priors: Vec<f64>,
    pub tables: Vec<ConditionalTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NbPrediction {
    pub label: String,
    /// Posterior per class, in [`BayesModel::classes`] order.
    pub posterior: Vec<f64>,
}

impl NbPrediction {
    pub fn probability(&self) -> f64 {
        self.posterior.iter().copied().fold(0.0, f64::max)
    }
}

/// Trains class priors and Laplace-smoothed conditional tables.
///
/// With `n_c` rows of class `c` observed on an attribute with `V` distinct
/// labels, `P(v | c) = (count(v, c) + 1) / (n_c + V)`.
pub fn nb_train(ds: &Dataset, target: &str) -> Result<BayesModel> {
    let classes = Classes::new(ds, target)?;
    require_nominal_inputs(ds, classes.target)?;
    let rows = classes.training_rows();
    if rows.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let n_classes = classes.labels.len();
    let class_counts = classes.counts(&rows);
    let priors = class_counts
        .iter()
        .map(|&c| c as f64 / rows.len() as f64)
        .collect();

    let mut tables = Vec::new();
    for j in 0..ds.n_attributes() {
        if j == classes.target {
            continue;
        }
        let mut labels: Vec<String> = Vec::new();
        let mut ids: HashMap<&str, usize> = HashMap::new();
        let mut counts: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
        let mut known = vec![0usize; n_classes];
        for &r in &rows {
            let Some(s) = ds.cell(r, j).as_label() else {
                continue;
            };
            let l = *ids.entry(s).or_insert_with(|| {
                labels.push(s.to_string());
                labels.len() - 1
            });
            let c = classes.class(r);
            if counts[c].len() < labels.len() {
                counts[c].resize(labels.len(), 0);
            }
            counts[c][l] += 1;
            known[c] += 1;
        }
        let v = labels.len() as f64;
        let probabilities = (0..n_classes)
            .map(|c| {
                let denom = known[c] as f64 + v;
                (0..labels.len())
                    .map(|l| (counts[c].get(l).copied().unwrap_or(0) as f64 + 1.0) / denom)
                    .collect()
            })
            .collect();
        let unseen = (0..n_classes)
            .map(|c| 1.0 / (known[c] as f64 + v.max(1.0)))
            .collect();
        tables.push(ConditionalTable {
            attribute: ds.schema().attribute(j).name.clone(),
            index: j,
            labels,
            probabilities,
            unseen,
        });
    }
    Ok(BayesModel {
        target: target.to_string(),
        classes: classes.labels,
        priors,
        tables,
    })
}

/// Posterior class distribution for `row` (same schema as training).
///
/// Missing attributes are skipped. Ties go to the class seen first in
/// training.
pub fn nb_predict(model: &BayesModel, row: &[Value]) -> NbPrediction {
    let mut log_score: Vec<f64> = model.priors.iter().map(|p| p.ln()).collect();
    for table in &model.tables {
        let Some(label) = row.get(table.index).and_then(Value::as_label) else {
            continue;
        };
        let pos = table.labels.iter().position(|l| l == label);
        for (c, score) in log_score.iter_mut().enumerate() {
            let p = match pos {
                Some(l) => table.probabilities[c][l],
                None => table.unseen[c],
            };
            *score += p.ln();
        }
    }
    let max = log_score.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_score.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let posterior: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let mut best = 0;
    for (c, &p) in posterior.iter().enumerate() {
        if p > posterior[best] {
            best = c;
        }
    }
    NbPrediction {
        label: model.classes[best].clone(),
        posterior,
    }
}
