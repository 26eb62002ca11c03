//! Random forests of weighted CART classifiers.
//!
//! Tree `t` draws a bootstrap resample with the seed
//! `derive_seed(seed, "forest-tree", [t])`. The resample is passed to the tree
//! as integer sample weights (the number of times each row was drawn), which is
//! exactly equivalent to fitting on the resampled rows. Each split considers a
//! random subset of `round(sqrt(d))` features.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learners::tree::{
    fit_tree_classifier_sampled, FeatureSampler, TreeClassifier, TreeParams,
};
use crate::learners::{Classifier, ProbabilisticClassifier};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub seed: u64,
    /// Features tried per split; `None` means `round(sqrt(d))`.
    pub max_features: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: 10,
            seed: 0,
            max_features: None,
        }
    }
}

/// Which per-tree accuracy orders the trees when building graded classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForestOrdering {
    #[default]
    TrainingAccuracy,
    OutOfBag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_classes: usize,
    pub trees: Vec<TreeClassifier>,
    /// Accuracy of each tree on the whole training set.
    pub training_accuracy: Vec<f64>,
    /// Accuracy on the rows the tree's bootstrap left out; falls back to the
    /// training accuracy when every row was drawn.
    pub oob_accuracy: Vec<f64>,
}

impl ForestModel {
    pub fn accuracies(&self, ordering: ForestOrdering) -> &[f64] {
        match ordering {
            ForestOrdering::TrainingAccuracy => &self.training_accuracy,
            ForestOrdering::OutOfBag => &self.oob_accuracy,
        }
    }

    /// Tree indices sorted by ascending accuracy, ties by original index.
    pub fn order_by_accuracy(&self, ordering: ForestOrdering) -> Vec<usize> {
        let acc = self.accuracies(ordering);
        let mut order: Vec<usize> = (0..self.trees.len()).collect();
        order.sort_by(|&a, &b| acc[a].total_cmp(&acc[b]).then(a.cmp(&b)));
        order
    }
}

impl ProbabilisticClassifier for ForestModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_classes];
        for t in &self.trees {
            for (a, p) in acc.iter_mut().zip(&t.tree.leaf(x).distribution) {
                *a += p;
            }
        }
        let m = self.trees.len() as f64;
        acc.iter_mut().for_each(|a| *a /= m);
        acc
    }
}

fn fit_member(
    ds: &Dataset,
    params: &ForestParams,
    index: usize,
) -> Result<(TreeClassifier, f64, f64)> {
    let n = ds.len();
    let mut rng = seed::rng(seed::derive_seed(
        params.seed,
        "forest-tree",
        &[index as u64],
    ));
    let mut counts = vec![0.0; n];
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1.0;
    }
    let d = ds.n_features();
    let per_split = params
        .max_features
        .unwrap_or_else(|| ((d as f64).sqrt().round() as usize).max(1))
        .clamp(1, d);
    let tree = fit_tree_classifier_sampled(
        ds,
        &counts,
        &TreeParams::with_depth(params.max_depth),
        Some(FeatureSampler {
            per_split,
            rng: &mut rng,
        }),
    )?;
    let (mut right, mut oob, mut oob_right) = (0usize, 0usize, 0usize);
    for (i, (x, &y)) in ds.rows().zip(ds.labels()).enumerate() {
        let hit = tree.predict(x) == y;
        right += usize::from(hit);
        if counts[i] == 0.0 {
            oob += 1;
            oob_right += usize::from(hit);
        }
    }
    let train_acc = right as f64 / n as f64;
    let oob_acc = if oob > 0 {
        oob_right as f64 / oob as f64
    } else {
        train_acc
    };
    Ok((tree, train_acc, oob_acc))
}

pub fn fit_random_forest(ds: &Dataset, params: &ForestParams) -> Result<ForestModel> {
    if params.n_trees == 0 {
        return Err(Error::InvalidParameter("n_trees must be at least 1".into()));
    }
    if ds.distinct_classes() < 2 {
        return Err(Error::SingleClass);
    }
    let members = (0..params.n_trees)
        .into_par_iter()
        .map(|t| fit_member(ds, params, t))
        .collect::<Result<Vec<_>>>()?;
    let mut model = ForestModel {
        n_classes: ds.n_classes(),
        trees: Vec::with_capacity(params.n_trees),
        training_accuracy: Vec::with_capacity(params.n_trees),
        oob_accuracy: Vec::with_capacity(params.n_trees),
    };
    for (tree, train_acc, oob_acc) in members {
        model.trees.push(tree);
        model.training_accuracy.push(train_acc);
        model.oob_accuracy.push(oob_acc);
    }
    Ok(model)
}
