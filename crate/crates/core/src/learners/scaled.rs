//! Feature standardization as part of a learning algorithm.
//!
//! [`Standardized`] fits a [`ScalerParams`] on the (unweighted) training
//! features, trains the wrapped learner on standardized data, and applies the
//! same transform at prediction time. Callers keep working in raw features.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ScalerParams};
use crate::error::Result;

use super::{ProbabilisticClassifier, Regressor, WeightedLearner, WeightedRegressionLearner};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Standardized<L>(pub L);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledModel<M> {
    pub scaler: ScalerParams,
    pub model: M,
}

impl<M: ProbabilisticClassifier> ProbabilisticClassifier for ScaledModel<M> {
    fn n_classes(&self) -> usize {
        self.model.n_classes()
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        self.model.predict_proba(&self.scaler.transform_row(x))
    }
}

impl<M: Regressor> Regressor for ScaledModel<M> {
    fn predict_value(&self, x: &[f64]) -> f64 {
        self.model.predict_value(&self.scaler.transform_row(x))
    }
}

impl<L: WeightedLearner> WeightedLearner for Standardized<L> {
    type Model = ScaledModel<L::Model>;

    fn fit(&self, ds: &Dataset, weights: &[f64]) -> Result<Self::Model> {
        let scaler = ScalerParams::fit(ds);
        let model = self.0.fit(&scaler.transform(ds), weights)?;
        Ok(ScaledModel { scaler, model })
    }
}

impl<L: WeightedRegressionLearner> WeightedRegressionLearner for Standardized<L> {
    type Model = ScaledModel<L::Model>;

    fn fit(&self, ds: &Dataset, targets: &[f64], weights: &[f64]) -> Result<Self::Model> {
        let scaler = ScalerParams::fit(ds);
        let model = self.0.fit(&scaler.transform(ds), targets, weights)?;
        Ok(ScaledModel { scaler, model })
    }
}
