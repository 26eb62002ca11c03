//! Multiclass gradient boosting on the softmax log-loss.
//!
//! Scores start at the log class priors. Each stage fits one squared-error
//! regression tree per class to the residual `onehot(y) - softmax(F)` and adds
//! `learning_rate * tree(x)` to that class's score. Leaves hold the mean
//! residual, so every stage moves along the projected negative gradient and
//! the training loss cannot increase for small learning rates.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learners::tree::{fit_tree_regressor, TreeParams, TreeRegressor};
use crate::learners::{ProbabilisticClassifier, Regressor};

/// Prior floor for classes absent from the training data.
const MIN_PRIOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostingParams {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// Recorded for provenance; this boosting variant has no random component.
    pub seed: u64,
}

impl Default for BoostingParams {
    fn default() -> Self {
        BoostingParams {
            n_trees: 100,
            learning_rate: 0.1,
            max_depth: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub n_classes: usize,
    pub initial_scores: Vec<f64>,
    pub learning_rate: f64,
    /// `stages[m][c]` is the tree for class `c` added at stage `m`.
    pub stages: Vec<Vec<TreeRegressor>>,
    /// Mean training log-loss after `0..=M` stages.
    pub training_loss: Vec<f64>,
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

impl BoostedModel {
    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    /// Accumulated scores after the first `n_stages` stages.
    pub fn scores(&self, x: &[f64], n_stages: usize) -> Vec<f64> {
        let mut f = self.initial_scores.clone();
        for stage in &self.stages[..n_stages] {
            self.add_stage(&mut f, stage, x);
        }
        f
    }

    pub(crate) fn add_stage(&self, scores: &mut [f64], stage: &[TreeRegressor], x: &[f64]) {
        for (s, tree) in scores.iter_mut().zip(stage) {
            *s += self.learning_rate * tree.predict_value(x);
        }
    }

    pub fn predict_proba_stages(&self, x: &[f64], n_stages: usize) -> Vec<f64> {
        softmax(&self.scores(x, n_stages))
    }
}

impl ProbabilisticClassifier for BoostedModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        self.predict_proba_stages(x, self.stages.len())
    }
}

fn mean_log_loss(scores: &[Vec<f64>], labels: &[usize]) -> f64 {
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(s, &y)| -softmax(s)[y].max(f64::MIN_POSITIVE).ln())
        .sum();
    total / labels.len() as f64
}

pub fn fit_gradient_boosting(ds: &Dataset, params: &BoostingParams) -> Result<BoostedModel> {
    if params.n_trees == 0 {
        return Err(Error::InvalidParameter("n_trees must be at least 1".into()));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate.is_finite()) {
        return Err(Error::InvalidParameter(
            "learning_rate must be positive".into(),
        ));
    }
    if ds.distinct_classes() < 2 {
        return Err(Error::SingleClass);
    }
    let n = ds.len();
    let c = ds.n_classes();
    let initial_scores: Vec<f64> = ds
        .class_counts()
        .iter()
        .map(|&k| (k as f64 / n as f64).max(MIN_PRIOR).ln())
        .collect();
    let mut model = BoostedModel {
        n_classes: c,
        initial_scores: initial_scores.clone(),
        learning_rate: params.learning_rate,
        stages: Vec::with_capacity(params.n_trees),
        training_loss: Vec::with_capacity(params.n_trees + 1),
    };
    let tree_params = TreeParams::with_depth(params.max_depth);
    let unit = vec![1.0; n];
    let mut scores = vec![initial_scores; n];
    model
        .training_loss
        .push(mean_log_loss(&scores, ds.labels()));
    for _ in 0..params.n_trees {
        let probs: Vec<Vec<f64>> = scores.iter().map(|s| softmax(s)).collect();
        let mut stage = Vec::with_capacity(c);
        for class in 0..c {
            let residual: Vec<f64> = probs
                .iter()
                .zip(ds.labels())
                .map(|(p, &y)| f64::from(u8::from(y == class)) - p[class])
                .collect();
            stage.push(fit_tree_regressor(ds, &residual, &unit, &tree_params)?);
        }
        for (i, s) in scores.iter_mut().enumerate() {
            model.add_stage(s, &stage, ds.row(i));
        }
        model.stages.push(stage);
        model
            .training_loss
            .push(mean_log_loss(&scores, ds.labels()));
    }
    Ok(model)
}
