//! Self-describing JSON documents for fitted models.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensembles::{BoostedModel, ComplexModel, ForestModel};
use crate::error::{Error, Result};
use crate::learners::{LinearModel, LinearRegressor, ScaledModel, TreeClassifier, TreeRegressor};
use crate::transfer::SoftScoreClassifier;

pub const FORMAT: &str = "sratio-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum AnyModel {
    Tree(TreeClassifier),
    TreeRegressor(TreeRegressor),
    LinearSvm(LinearModel),
    ScaledLinearSvm(ScaledModel<LinearModel>),
    LinearSvr(LinearRegressor),
    ScaledLinearSvr(ScaledModel<LinearRegressor>),
    Boosting(BoostedModel),
    Forest(ForestModel),
    SoftScoreTrees(SoftScoreClassifier<TreeRegressor>),
    SoftScoreSvr(SoftScoreClassifier<LinearRegressor>),
    SoftScoreScaledSvr(SoftScoreClassifier<ScaledModel<LinearRegressor>>),
}

macro_rules! any_model_from {
    ($($variant:ident($ty:ty)),* $(,)?) => {
        $(impl From<$ty> for AnyModel {
            fn from(m: $ty) -> Self {
                AnyModel::$variant(m)
            }
        })*
    };
}

any_model_from!(
    Tree(TreeClassifier),
    TreeRegressor(TreeRegressor),
    LinearSvm(LinearModel),
    ScaledLinearSvm(ScaledModel<LinearModel>),
    LinearSvr(LinearRegressor),
    ScaledLinearSvr(ScaledModel<LinearRegressor>),
    Boosting(BoostedModel),
    Forest(ForestModel),
    SoftScoreTrees(SoftScoreClassifier<TreeRegressor>),
    SoftScoreSvr(SoftScoreClassifier<LinearRegressor>),
    SoftScoreScaledSvr(SoftScoreClassifier<ScaledModel<LinearRegressor>>),
);

impl From<ComplexModel> for AnyModel {
    fn from(m: ComplexModel) -> Self {
        match m {
            ComplexModel::Boosting(b) => AnyModel::Boosting(b),
            ComplexModel::Forest(f) => AnyModel::Forest(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub model: AnyModel,
}

impl ModelDocument {
    pub fn new(model: impl Into<AnyModel>) -> Self {
        ModelDocument {
            format: FORMAT.to_string(),
            version: FORMAT_VERSION,
            model: model.into(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(s)?;
        if doc.format != FORMAT || doc.version != FORMAT_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported model document {} v{}",
                doc.format, doc.version
            )));
        }
        Ok(doc)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}
