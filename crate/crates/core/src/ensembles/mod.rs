//! Complex models and the graded classifiers derived from them.

pub mod boosting;
pub mod forest;
pub mod graded;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::learners::{Classifier, ProbabilisticClassifier};

pub use boosting::{fit_gradient_boosting, BoostedModel, BoostingParams};
pub use forest::{fit_random_forest, ForestModel, ForestOrdering, ForestParams};
pub use graded::{graded_from_boosting, graded_from_forest, measure_gradedness, GradedEnsemble};

/// Either complex model, behind one probabilistic interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComplexModel {
    Boosting(BoostedModel),
    Forest(ForestModel),
}

impl ProbabilisticClassifier for ComplexModel {
    fn n_classes(&self) -> usize {
        match self {
            ComplexModel::Boosting(m) => m.n_classes(),
            ComplexModel::Forest(m) => m.n_classes(),
        }
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ComplexModel::Boosting(m) => m.predict_proba(x),
            ComplexModel::Forest(m) => m.predict_proba(x),
        }
    }
}

/// Fraction of examples whose predicted class (lowest index on ties) differs
/// from the label.
pub fn error_rate<C: Classifier + ?Sized>(model: &C, ds: &Dataset) -> f64 {
    let wrong = ds
        .rows()
        .zip(ds.labels())
        .filter(|(x, &y)| model.predict(x) != y)
        .count();
    wrong as f64 / ds.len() as f64
}
