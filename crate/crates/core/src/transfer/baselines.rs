//! Reference methods that also transfer from a complex model to a simple one.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learners::{
    argmax, Classifier, ProbabilisticClassifier, Regressor, WeightedLearner,
    WeightedRegressionLearner,
};

/// Weight of each example is the complex model's confidence in its true label.
pub fn confweight_weights<C: ProbabilisticClassifier + ?Sized>(
    complex: &C,
    ds: &Dataset,
) -> Vec<f64> {
    ds.rows()
        .zip(ds.labels())
        .map(|(x, &y)| complex.confidence(x, y))
        .collect()
}

/// Trains the simple model on the complex model's hard predictions.
pub fn distill_proxy1<C, L>(complex: &C, learner: &L, ds: &Dataset) -> Result<L::Model>
where
    C: ProbabilisticClassifier + ?Sized,
    L: WeightedLearner,
{
    let labels = ds.rows().map(|x| complex.predict(x)).collect();
    learner.fit_unweighted(&ds.relabeled(labels)?)
}

/// One regressor per class fit to the complex model's probabilities;
/// predicts the class with the largest output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftScoreClassifier<R> {
    pub regressors: Vec<R>,
}

impl<R: Regressor> SoftScoreClassifier<R> {
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.regressors.iter().map(|r| r.predict_value(x)).collect()
    }
}

impl<R: Regressor> Classifier for SoftScoreClassifier<R> {
    fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.scores(x))
    }
}

pub fn distill_proxy2<C, R>(
    complex: &C,
    learner: &R,
    ds: &Dataset,
) -> Result<SoftScoreClassifier<R::Model>>
where
    C: ProbabilisticClassifier + ?Sized,
    R: WeightedRegressionLearner,
{
    let probs: Vec<Vec<f64>> = ds.rows().map(|x| complex.predict_proba(x)).collect();
    let unit = vec![1.0; ds.len()];
    let regressors = (0..complex.n_classes())
        .map(|c| {
            let targets: Vec<f64> = probs.iter().map(|p| p[c]).collect();
            learner
                .fit(ds, &targets, &unit)
                .map_err(|e| Error::Regressor {
                    class: c,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    Ok(SoftScoreClassifier { regressors })
}
