//! Simple models trainable under per-sample weights.
//!
//! Every classifier here implements [`ProbabilisticClassifier`]: it maps an
//! input to a probability vector over the classes. The weighted learning
//! algorithms implement [`WeightedLearner`], which is the only thing the
//! reweighting methods need to know about a simple model.

pub mod linear;
pub mod platt;
pub mod scaled;
pub mod tree;

use crate::data::Dataset;
use crate::error::{Error, Result};

pub use linear::{LinearModel, LinearRegressor, SvmLearner, SvmParams, SvrLearner};
pub use scaled::{ScaledModel, Standardized};
pub use tree::{TreeClassifier, TreeLearner, TreeParams, TreeRegressionLearner, TreeRegressor};

/// Anything that outputs a probability simplex over `n_classes()` classes.
pub trait ProbabilisticClassifier {
    fn n_classes(&self) -> usize;

    fn predict_proba(&self, x: &[f64]) -> Vec<f64>;

    /// Probability assigned to class `y`.
    fn confidence(&self, x: &[f64], y: usize) -> f64 {
        self.predict_proba(x)[y]
    }
}

impl<T: ProbabilisticClassifier + ?Sized> ProbabilisticClassifier for &T {
    fn n_classes(&self) -> usize {
        (**self).n_classes()
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        (**self).predict_proba(x)
    }

    fn confidence(&self, x: &[f64], y: usize) -> f64 {
        (**self).confidence(x, y)
    }
}

/// Hard-label prediction.
pub trait Classifier {
    fn predict(&self, x: &[f64]) -> usize;
}

impl<T: ProbabilisticClassifier + ?Sized> Classifier for T {
    fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.predict_proba(x))
    }
}

pub trait Regressor {
    fn predict_value(&self, x: &[f64]) -> f64;
}

/// A learning algorithm for a simple classifier that honours sample weights.
pub trait WeightedLearner: Sync {
    type Model: ProbabilisticClassifier + Clone + Send + Sync;

    fn fit(&self, ds: &Dataset, weights: &[f64]) -> Result<Self::Model>;

    fn fit_unweighted(&self, ds: &Dataset) -> Result<Self::Model> {
        self.fit(ds, &vec![1.0; ds.len()])
    }
}

/// A learning algorithm for a real-valued target, honouring sample weights.
/// Labels of `ds` are ignored.
pub trait WeightedRegressionLearner: Sync {
    type Model: Regressor + Clone + Send + Sync;

    fn fit(&self, ds: &Dataset, targets: &[f64], weights: &[f64]) -> Result<Self::Model>;
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: weights.len(),
        });
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidWeights(format!(
            "weights must be finite and non-negative, found {w}"
        )));
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::AllZeroWeights);
    }
    Ok(())
}

pub(crate) fn check_targets(targets: &[f64], n: usize) -> Result<()> {
    if targets.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: targets.len(),
        });
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("targets must be finite".into()));
    }
    Ok(())
}
