//! Weighted CART trees.
//!
//! Induction is greedy and top-down. At each node every feature is sorted and
//! the candidate thresholds are the midpoints between consecutive distinct
//! values of the examples that reach the node with positive weight. The split
//! cost is the summed weighted impurity of the two children (Gini for
//! classification, squared error for regression).
//!
//! Among candidates whose cost is within a relative `1e-12` of the minimum the
//! one with the smallest feature index, then the smallest threshold, is taken.
//! A node is split only when the best cost improves on the parent's.
//!
//! Examples with weight zero are dropped before induction, so they cannot
//! move a threshold or a leaf. With integer weights the fitted tree is
//! identical to the tree fit on the dataset with every row repeated
//! `weight` times.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::WeightedRegressionLearner;
use super::{check_targets, check_weights, ProbabilisticClassifier, Regressor, WeightedLearner};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seed::Rng;

/// Relative tolerance under which two split costs count as tied.
pub const SPLIT_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_weight_leaf: f64,
    pub laplace_alpha: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 5,
            min_weight_leaf: 0.0,
            laplace_alpha: 1.0,
        }
    }
}

impl TreeParams {
    pub fn with_depth(max_depth: usize) -> Self {
        TreeParams {
            max_depth,
            ..Self::default()
        }
    }

    fn validate(&self, classifier: bool) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::InvalidParameter(
                "max_depth must be at least 1".into(),
            ));
        }
        if !(self.min_weight_leaf >= 0.0 && self.min_weight_leaf.is_finite()) {
            return Err(Error::InvalidParameter(
                "min_weight_leaf must be >= 0".into(),
            ));
        }
        if classifier && !(self.laplace_alpha > 0.0 && self.laplace_alpha.is_finite()) {
            return Err(Error::InvalidParameter(
                "laplace_alpha must be positive for classifiers".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node<L> {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(L),
}

/// Flat node list; node 0 is the root and children follow their parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<L> {
    pub nodes: Vec<Node<L>>,
    pub n_features: usize,
}

impl<L> Tree<L> {
    /// Routes `x` left when `x[feature] <= threshold`.
    pub fn leaf(&self, x: &[f64]) -> &L {
        debug_assert_eq!(x.len(), self.n_features);
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    id = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
                Node::Leaf(l) => return l,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<L>(nodes: &[Node<L>], id: usize) -> usize {
            match &nodes[id] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Node::Leaf(_) => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf(_)))
            .count()
    }

    /// `(feature, threshold)` of the root, if it is a split.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes.first()? {
            Node::Split {
                feature, threshold, ..
            } => Some((*feature, *threshold)),
            Node::Leaf(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassLeaf {
    /// Summed training weight per class.
    pub class_weights: Vec<f64>,
    /// Laplace-smoothed class distribution.
    pub distribution: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueLeaf {
    pub value: f64,
    pub weight: f64,
}

/// `(W_c + alpha) / (W + C alpha)`.
pub fn laplace_distribution(class_weights: &[f64], alpha: f64) -> Vec<f64> {
    let total: f64 = class_weights.iter().sum();
    let denom = total + class_weights.len() as f64 * alpha;
    class_weights.iter().map(|w| (w + alpha) / denom).collect()
}

/// Gini impurity of a node times its weight: `W - sum_c W_c^2 / W`.
pub fn weighted_gini_cost(class_weights: &[f64]) -> f64 {
    let total: f64 = class_weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let sq: f64 = class_weights.iter().map(|w| w * w).sum();
    (total - sq / total).max(0.0)
}

trait Criterion {
    type Stats: Clone;
    type Leaf;

    fn zero(&self) -> Self::Stats;
    fn add(&self, s: &mut Self::Stats, i: usize, w: f64);
    fn cost(&self, s: &Self::Stats) -> f64;
    /// `(left weight, right weight, left cost + right cost)` given the node
    /// total and the left-side accumulation.
    fn split_cost(&self, total: &Self::Stats, left: &Self::Stats) -> (f64, f64, f64);
    fn is_pure(&self, idx: &[usize]) -> bool;
    fn leaf(&self, s: &Self::Stats) -> Self::Leaf;
}

struct Gini<'a> {
    labels: &'a [usize],
    n_classes: usize,
    alpha: f64,
}

impl Criterion for Gini<'_> {
    type Stats = Vec<f64>;
    type Leaf = ClassLeaf;

    fn zero(&self) -> Vec<f64> {
        vec![0.0; self.n_classes]
    }

    fn add(&self, s: &mut Vec<f64>, i: usize, w: f64) {
        s[self.labels[i]] += w;
    }

    fn cost(&self, s: &Vec<f64>) -> f64 {
        weighted_gini_cost(s)
    }

    fn split_cost(&self, total: &Vec<f64>, left: &Vec<f64>) -> (f64, f64, f64) {
        let (mut wl, mut wr, mut sql, mut sqr) = (0.0, 0.0, 0.0, 0.0);
        for (t, l) in total.iter().zip(left) {
            let r = t - l;
            wl += l;
            wr += r;
            sql += l * l;
            sqr += r * r;
        }
        let cl = if wl > 0.0 {
            (wl - sql / wl).max(0.0)
        } else {
            0.0
        };
        let cr = if wr > 0.0 {
            (wr - sqr / wr).max(0.0)
        } else {
            0.0
        };
        (wl, wr, cl + cr)
    }

    fn is_pure(&self, idx: &[usize]) -> bool {
        idx.windows(2)
            .all(|p| self.labels[p[0]] == self.labels[p[1]])
    }

    fn leaf(&self, s: &Vec<f64>) -> ClassLeaf {
        ClassLeaf {
            class_weights: s.clone(),
            distribution: laplace_distribution(s, self.alpha),
        }
    }
}

struct SquaredError<'a> {
    targets: &'a [f64],
}

/// `(W, sum w y, sum w y^2)`.
type Moments = [f64; 3];

fn sse(w: f64, wy: f64, wyy: f64) -> f64 {
    if w > 0.0 {
        (wyy - wy * wy / w).max(0.0)
    } else {
        0.0
    }
}

impl Criterion for SquaredError<'_> {
    type Stats = Moments;
    type Leaf = ValueLeaf;

    fn zero(&self) -> Moments {
        [0.0; 3]
    }

    fn add(&self, s: &mut Moments, i: usize, w: f64) {
        let y = self.targets[i];
        s[0] += w;
        s[1] += w * y;
        s[2] += w * y * y;
    }

    fn cost(&self, s: &Moments) -> f64 {
        sse(s[0], s[1], s[2])
    }

    fn split_cost(&self, t: &Moments, l: &Moments) -> (f64, f64, f64) {
        let r = [t[0] - l[0], t[1] - l[1], t[2] - l[2]];
        (l[0], r[0], sse(l[0], l[1], l[2]) + sse(r[0], r[1], r[2]))
    }

    fn is_pure(&self, idx: &[usize]) -> bool {
        idx.windows(2)
            .all(|p| self.targets[p[0]] == self.targets[p[1]])
    }

    fn leaf(&self, s: &Moments) -> ValueLeaf {
        ValueLeaf {
            value: s[1] / s[0],
            weight: s[0],
        }
    }
}

/// Per-node random feature subsets, as used by random forests.
pub(crate) struct FeatureSampler<'a> {
    pub per_split: usize,
    pub rng: &'a mut Rng,
}

struct Grower<'a, C: Criterion> {
    ds: &'a Dataset,
    weights: &'a [f64],
    crit: C,
    params: TreeParams,
    sampler: Option<FeatureSampler<'a>>,
    nodes: Vec<Node<C::Leaf>>,
}

impl<C: Criterion> Grower<'_, C> {
    fn stats(&self, idx: &[usize]) -> C::Stats {
        let mut s = self.crit.zero();
        for &i in idx {
            self.crit.add(&mut s, i, self.weights[i]);
        }
        s
    }

    fn features(&mut self) -> Vec<usize> {
        let d = self.ds.n_features();
        match &mut self.sampler {
            Some(s) if s.per_split < d => {
                let mut f = index::sample(s.rng, d, s.per_split).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    fn best_split(&mut self, idx: &[usize], total: &C::Stats) -> Option<(usize, f64)> {
        let parent = self.crit.cost(total);
        let tol = SPLIT_TIE_TOLERANCE * parent;
        let min_leaf = self.params.min_weight_leaf;
        let mut candidates: Vec<(usize, f64, f64)> = Vec::new();
        let mut sorted = idx.to_vec();
        for f in self.features() {
            let ds = self.ds;
            sorted.sort_by(|&a, &b| {
                ds.feature(a, f)
                    .total_cmp(&ds.feature(b, f))
                    .then(a.cmp(&b))
            });
            let mut left = self.crit.zero();
            for p in 0..sorted.len() - 1 {
                let i = sorted[p];
                self.crit.add(&mut left, i, self.weights[i]);
                let (a, b) = (ds.feature(i, f), ds.feature(sorted[p + 1], f));
                if a == b {
                    continue;
                }
                let (wl, wr, cost) = self.crit.split_cost(total, &left);
                if wl > 0.0 && wr > 0.0 && wl >= min_leaf && wr >= min_leaf {
                    candidates.push((f, midpoint(a, b), cost));
                }
            }
        }
        let best = candidates.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
        if best >= parent - tol {
            return None;
        }
        candidates
            .into_iter()
            .find(|c| c.2 <= best + tol)
            .map(|(f, t, _)| (f, t))
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let total = self.stats(&idx);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(self.crit.leaf(&total)));
        if depth >= self.params.max_depth || idx.len() < 2 || self.crit.is_pure(&idx) {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(&idx, &total) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.ds.feature(i, feature) <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

/// Midpoint of `a < b`, kept strictly below `b`.
fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m < b {
        m
    } else {
        a
    }
}

fn induce<C: Criterion>(
    ds: &Dataset,
    weights: &[f64],
    crit: C,
    params: TreeParams,
    sampler: Option<FeatureSampler<'_>>,
) -> Tree<C::Leaf> {
    let idx: Vec<usize> = (0..ds.len()).filter(|&i| weights[i] > 0.0).collect();
    let mut g = Grower {
        ds,
        weights,
        crit,
        params,
        sampler,
        nodes: Vec::new(),
    };
    g.grow(idx, 0);
    Tree {
        nodes: g.nodes,
        n_features: ds.n_features(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeClassifier {
    pub tree: Tree<ClassLeaf>,
    pub n_classes: usize,
    pub params: TreeParams,
}

impl ProbabilisticClassifier for TreeClassifier {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        self.tree.leaf(x).distribution.clone()
    }

    fn confidence(&self, x: &[f64], y: usize) -> f64 {
        self.tree.leaf(x).distribution[y]
    }
}

pub fn fit_tree_classifier(
    ds: &Dataset,
    weights: &[f64],
    params: &TreeParams,
) -> Result<TreeClassifier> {
    fit_tree_classifier_sampled(ds, weights, params, None)
}

pub(crate) fn fit_tree_classifier_sampled(
    ds: &Dataset,
    weights: &[f64],
    params: &TreeParams,
    sampler: Option<FeatureSampler<'_>>,
) -> Result<TreeClassifier> {
    params.validate(true)?;
    check_weights(weights, ds.len())?;
    let crit = Gini {
        labels: ds.labels(),
        n_classes: ds.n_classes(),
        alpha: params.laplace_alpha,
    };
    Ok(TreeClassifier {
        tree: induce(ds, weights, crit, *params, sampler),
        n_classes: ds.n_classes(),
        params: *params,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeRegressor {
    pub tree: Tree<ValueLeaf>,
    pub params: TreeParams,
}

impl Regressor for TreeRegressor {
    fn predict_value(&self, x: &[f64]) -> f64 {
        self.tree.leaf(x).value
    }
}

pub fn fit_tree_regressor(
    ds: &Dataset,
    targets: &[f64],
    weights: &[f64],
    params: &TreeParams,
) -> Result<TreeRegressor> {
    params.validate(false)?;
    check_weights(weights, ds.len())?;
    check_targets(targets, ds.len())?;
    Ok(TreeRegressor {
        tree: induce(ds, weights, SquaredError { targets }, *params, None),
        params: *params,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TreeLearner(pub TreeParams);

impl WeightedLearner for TreeLearner {
    type Model = TreeClassifier;

    fn fit(&self, ds: &Dataset, weights: &[f64]) -> Result<TreeClassifier> {
        fit_tree_classifier(ds, weights, &self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TreeRegressionLearner(pub TreeParams);

impl WeightedRegressionLearner for TreeRegressionLearner {
    type Model = TreeRegressor;

    fn fit(&self, ds: &Dataset, targets: &[f64], weights: &[f64]) -> Result<TreeRegressor> {
        fit_tree_regressor(ds, targets, weights, &self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64], ys: &[usize]) -> Dataset {
        Dataset::from_rows(xs.iter().map(|&x| vec![x]).collect(), ys.to_vec(), 2).unwrap()
    }

    #[test]
    fn stump_splits_between_classes() {
        let ds = line(&[0.0, 1.0, 2.0, 3.0], &[0, 0, 1, 1]);
        let t = fit_tree_classifier(&ds, &[1.0; 4], &TreeParams::with_depth(1)).unwrap();
        assert_eq!(t.tree.root_split(), Some((0, 1.5)));
        assert_eq!(t.predict(&[0.5]), 0);
        assert_eq!(t.predict(&[2.5]), 1);
        // leaf weights (2, 0), alpha 1 -> (3/4, 1/4)
        assert_eq!(t.predict_proba(&[0.0]), vec![0.75, 0.25]);
    }

    use crate::learners::Classifier;

    #[test]
    fn doubling_weights_keeps_structure() {
        let ds = line(&[0.0, 1.0, 2.0, 3.0, 4.0], &[0, 1, 0, 1, 1]);
        let w = [1.0, 2.0, 0.5, 3.0, 1.0];
        let w2: Vec<f64> = w.iter().map(|v| v * 2.0).collect();
        let a = fit_tree_classifier(&ds, &w, &TreeParams::with_depth(3)).unwrap();
        let b = fit_tree_classifier(&ds, &w2, &TreeParams::with_depth(3)).unwrap();
        assert_eq!(a.tree.nodes.len(), b.tree.nodes.len());
        for (na, nb) in a.tree.nodes.iter().zip(&b.tree.nodes) {
            match (na, nb) {
                (
                    Node::Split {
                        feature: fa,
                        threshold: ta,
                        ..
                    },
                    Node::Split {
                        feature: fb,
                        threshold: tb,
                        ..
                    },
                ) => {
                    assert_eq!((fa, ta), (fb, tb));
                }
                (Node::Leaf(la), Node::Leaf(lb)) => {
                    let doubled: Vec<f64> = la.class_weights.iter().map(|v| v * 2.0).collect();
                    assert_eq!(doubled, lb.class_weights);
                }
                _ => panic!("structure differs"),
            }
        }
    }

    #[test]
    fn zero_weight_examples_are_ignored() {
        let ds = line(&[0.0, 1.0, 2.0, 3.0], &[0, 0, 1, 1]);
        let t =
            fit_tree_classifier(&ds, &[1.0, 1.0, 0.0, 0.0], &TreeParams::with_depth(1)).unwrap();
        assert_eq!(t.tree.nodes.len(), 1);
        assert_eq!(t.predict(&[3.0]), 0);
        assert!(matches!(
            fit_tree_classifier(&ds, &[0.0; 4], &TreeParams::default()),
            Err(Error::AllZeroWeights)
        ));
    }

    #[test]
    fn laplace_formula() {
        let p = laplace_distribution(&[3.0, 1.0], 1.0);
        assert!((p[0] - 4.0 / 6.0).abs() < 1e-15 && (p[1] - 2.0 / 6.0).abs() < 1e-15);
        assert_eq!(
            laplace_distribution(&[0.0, 0.0, 0.0], 1.0),
            vec![1.0 / 3.0; 3]
        );
    }

    #[test]
    fn depth_limit_respected() {
        let xs: Vec<f64> = (0..32).map(f64::from).collect();
        let ys: Vec<usize> = (0..32).map(|i| i % 2).collect();
        let ds = line(&xs, &ys);
        for depth in 1..6 {
            let t = fit_tree_classifier(&ds, &[1.0; 32], &TreeParams::with_depth(depth)).unwrap();
            assert!(t.tree.depth() <= depth);
        }
    }

    #[test]
    fn regressor_leaves() {
        let ds = line(&[0.0, 1.0, 2.0], &[0, 1, 0]);
        let r = fit_tree_regressor(&ds, &[4.0; 3], &[1.0; 3], &TreeParams::default()).unwrap();
        assert_eq!(r.tree.n_leaves(), 1);
        assert_eq!(r.predict_value(&[7.0]), 4.0);

        let ds = line(&[0.0, 1.0], &[0, 1]);
        let r =
            fit_tree_regressor(&ds, &[0.0, 1.0], &[1.0; 2], &TreeParams::with_depth(1)).unwrap();
        assert_eq!(r.predict_value(&[0.0]), 0.0);
        assert_eq!(r.predict_value(&[1.0]), 1.0);

        // identical inputs cannot be separated, so the root leaf is the weighted mean
        let ds = line(&[0.0, 0.0], &[0, 1]);
        let r = fit_tree_regressor(&ds, &[0.0, 1.0], &[1.0, 3.0], &TreeParams::default()).unwrap();
        assert_eq!(r.predict_value(&[0.0]), 0.75);
    }

    #[test]
    fn invalid_params() {
        let ds = line(&[0.0, 1.0], &[0, 1]);
        let bad = TreeParams {
            laplace_alpha: 0.0,
            ..TreeParams::default()
        };
        assert!(fit_tree_classifier(&ds, &[1.0; 2], &bad).is_err());
        assert!(fit_tree_classifier(&ds, &[1.0; 2], &TreeParams::with_depth(0)).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let ds = line(&[0.0, 1.0, 2.0, 3.0], &[0, 0, 1, 1]);
        let t = fit_tree_classifier(&ds, &[1.0; 4], &TreeParams::default()).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("\"node\":\"split\""));
        let back: TreeClassifier = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
