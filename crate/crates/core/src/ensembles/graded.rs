//! Graded classifiers: an ordered sequence of simplifications of a complex
//! model, each expected to be at least as confident in the true class as the
//! one before it on most inputs.
//!
//! For boosting, the k-th graded classifier is the model truncated after
//! `k * step` stages. For a forest, trees are sorted from least to most
//! accurate and the k-th graded classifier averages the first `k * step` of
//! them. In both cases the last one is the full model. All graded outputs for
//! an input come from a single pass over the ensemble.

use std::sync::Arc;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learners::{argmax, ProbabilisticClassifier};

use super::boosting::{softmax, BoostedModel};
use super::forest::{ForestModel, ForestOrdering};

/// Tolerance for the non-strict confidence chain in [`measure_gradedness`].
pub const GRADEDNESS_TOLERANCE: f64 = 1e-12;

pub type SharedClassifier = Arc<dyn ProbabilisticClassifier + Send + Sync>;

#[derive(Clone)]
enum Source {
    Boosting(Arc<BoostedModel>),
    Forest {
        model: Arc<ForestModel>,
        order: Vec<usize>,
    },
    Explicit(Vec<SharedClassifier>),
}

#[derive(Clone)]
pub struct GradedEnsemble {
    source: Source,
    /// Members used by each graded classifier (stages, trees); ascending.
    cuts: Vec<usize>,
    n_classes: usize,
}

impl std::fmt::Debug for GradedEnsemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.source {
            Source::Boosting(_) => "boosting",
            Source::Forest { .. } => "forest",
            Source::Explicit(_) => "explicit",
        };
        f.debug_struct("GradedEnsemble")
            .field("source", &kind)
            .field("cuts", &self.cuts)
            .finish()
    }
}

/// `step, 2 step, ...` capped at `total`, always ending at `total`.
fn cut_points(total: usize, step: usize) -> Result<Vec<usize>> {
    if step == 0 {
        return Err(Error::InvalidParameter(
            "graded step must be positive".into(),
        ));
    }
    if total == 0 {
        return Err(Error::InvalidParameter("ensemble has no members".into()));
    }
    Ok((1..=total.div_ceil(step))
        .map(|k| (k * step).min(total))
        .collect())
}

pub fn graded_from_boosting(model: &BoostedModel, step: usize) -> Result<GradedEnsemble> {
    Ok(GradedEnsemble {
        cuts: cut_points(model.n_stages(), step)?,
        n_classes: model.n_classes,
        source: Source::Boosting(Arc::new(model.clone())),
    })
}

pub fn graded_from_forest(
    model: &ForestModel,
    step: usize,
    ordering: ForestOrdering,
) -> Result<GradedEnsemble> {
    Ok(GradedEnsemble {
        cuts: cut_points(model.trees.len(), step)?,
        n_classes: model.n_classes,
        source: Source::Forest {
            order: model.order_by_accuracy(ordering),
            model: Arc::new(model.clone()),
        },
    })
}

impl GradedEnsemble {
    /// Wraps an explicit, already ordered list of classifiers.
    pub fn from_classifiers(classifiers: Vec<SharedClassifier>) -> Result<Self> {
        let n_classes = classifiers
            .first()
            .map(|c| c.n_classes())
            .ok_or_else(|| Error::InvalidParameter("no graded classifiers".into()))?;
        if classifiers.iter().any(|c| c.n_classes() != n_classes) {
            return Err(Error::InvalidParameter(
                "graded classifiers disagree on class count".into(),
            ));
        }
        Ok(GradedEnsemble {
            cuts: (1..=classifiers.len()).collect(),
            n_classes,
            source: Source::Explicit(classifiers),
        })
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Number of ensemble members behind each graded classifier.
    pub fn member_counts(&self) -> &[usize] {
        &self.cuts
    }

    /// Tree order used for a forest source (least accurate first).
    pub fn forest_order(&self) -> Option<&[usize]> {
        match &self.source {
            Source::Forest { order, .. } => Some(order),
            _ => None,
        }
    }

    /// Probability vectors of every graded classifier at `x`, in order.
    pub fn graded_proba(&self, x: &[f64]) -> Vec<Vec<f64>> {
        match &self.source {
            Source::Boosting(m) => {
                let mut out = Vec::with_capacity(self.cuts.len());
                let mut scores = m.initial_scores.clone();
                let mut done = 0;
                for &cut in &self.cuts {
                    for stage in &m.stages[done..cut] {
                        m.add_stage(&mut scores, stage, x);
                    }
                    done = cut;
                    out.push(softmax(&scores));
                }
                out
            }
            Source::Forest { model, order } => {
                let mut out = Vec::with_capacity(self.cuts.len());
                let mut sum = vec![0.0; self.n_classes];
                let mut done = 0;
                for &cut in &self.cuts {
                    for &t in &order[done..cut] {
                        let dist = &model.trees[t].tree.leaf(x).distribution;
                        sum.iter_mut().zip(dist).for_each(|(s, p)| *s += p);
                    }
                    done = cut;
                    out.push(sum.iter().map(|s| s / cut as f64).collect());
                }
                out
            }
            Source::Explicit(cs) => cs.iter().map(|c| c.predict_proba(x)).collect(),
        }
    }

    /// The `k`-th graded classifier (0-based) as a standalone classifier.
    pub fn member(&self, k: usize) -> GradedMember<'_> {
        assert!(k < self.len(), "graded classifier {k} out of range");
        GradedMember { graded: self, k }
    }

    /// Training error of each graded classifier on `ds`.
    pub fn errors(&self, ds: &Dataset) -> Vec<f64> {
        let mut wrong = vec![0usize; self.len()];
        for (x, &y) in ds.rows().zip(ds.labels()) {
            for (w, p) in wrong.iter_mut().zip(self.graded_proba(x)) {
                *w += usize::from(argmax(&p) != y);
            }
        }
        wrong
            .into_iter()
            .map(|w| w as f64 / ds.len() as f64)
            .collect()
    }
}

pub struct GradedMember<'a> {
    graded: &'a GradedEnsemble,
    k: usize,
}

impl ProbabilisticClassifier for GradedMember<'_> {
    fn n_classes(&self) -> usize {
        self.graded.n_classes
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let g = self.graded;
        let cut = g.cuts[self.k];
        match &g.source {
            Source::Boosting(m) => m.predict_proba_stages(x, cut),
            Source::Forest { model, order } => {
                let mut sum = vec![0.0; g.n_classes];
                for &t in &order[..cut] {
                    let dist = &model.trees[t].tree.leaf(x).distribution;
                    sum.iter_mut().zip(dist).for_each(|(s, p)| *s += p);
                }
                sum.iter().map(|s| s / cut as f64).collect()
            }
            Source::Explicit(cs) => cs[self.k].predict_proba(x),
        }
    }
}

/// Fraction of examples on which the true-class confidences are
/// non-decreasing along the graded sequence. A single classifier is trivially
/// graded everywhere.
pub fn measure_gradedness(graded: &GradedEnsemble, ds: &Dataset) -> f64 {
    if graded.len() < 2 {
        return 1.0;
    }
    let ordered = ds
        .rows()
        .zip(ds.labels())
        .filter(|(x, &y)| {
            graded
                .graded_proba(x)
                .windows(2)
                .all(|w| w[1][y] >= w[0][y] - GRADEDNESS_TOLERANCE)
        })
        .count();
    ordered as f64 / ds.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{
        fit_gradient_boosting, fit_random_forest, BoostingParams, ForestParams,
    };
    use crate::synth;

    struct Fixed(Vec<Vec<f64>>);

    impl ProbabilisticClassifier for Fixed {
        fn n_classes(&self) -> usize {
            2
        }
        fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
            self.0[x[0] as usize].clone()
        }
    }

    #[test]
    fn cut_points_truncate() {
        assert_eq!(cut_points(100, 10).unwrap().len(), 10);
        assert_eq!(cut_points(100, 30).unwrap(), vec![30, 60, 90, 100]);
        assert_eq!(cut_points(5, 5).unwrap(), vec![5]);
        assert!(cut_points(5, 0).is_err());
    }

    #[test]
    fn boosting_prefixes() {
        let ds = synth::make_synthetic("gaussian-blobs-3", 150, 3).unwrap();
        let m = fit_gradient_boosting(
            &ds,
            &BoostingParams {
                n_trees: 20,
                ..Default::default()
            },
        )
        .unwrap();
        let g = graded_from_boosting(&m, 5).unwrap();
        assert_eq!(g.len(), 4);
        for x in ds.rows() {
            let all = g.graded_proba(x);
            assert_eq!(all[3], m.predict_proba(x));
            assert_eq!(all[1], m.predict_proba_stages(x, 10));
            assert_eq!(all[1], g.member(1).predict_proba(x));
        }
        let whole = graded_from_boosting(&m, 20).unwrap();
        assert_eq!(whole.len(), 1);
        assert_eq!(whole.graded_proba(ds.row(0))[0], m.predict_proba(ds.row(0)));
    }

    #[test]
    fn forest_prefixes_start_from_weakest_tree() {
        let ds = synth::make_synthetic("gaussian-blobs-3", 150, 3).unwrap();
        let f = fit_random_forest(
            &ds,
            &ForestParams {
                n_trees: 20,
                max_depth: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let g = graded_from_forest(&f, 5, ForestOrdering::TrainingAccuracy).unwrap();
        let order = g.forest_order().unwrap();
        let weakest = f
            .training_accuracy
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        assert_eq!(f.training_accuracy[order[0]], weakest);
        let one = graded_from_forest(&f, 1, ForestOrdering::TrainingAccuracy).unwrap();
        for x in ds.rows() {
            assert_eq!(
                one.member(0).predict_proba(x),
                f.trees[order[0]].predict_proba(x)
            );
            let last = g.graded_proba(x).pop().unwrap();
            for (a, b) in last.iter().zip(f.predict_proba(x)) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn gradedness_by_enumeration() {
        let ds = Dataset::from_rows(
            (0..4).map(|i| vec![i as f64]).collect(),
            vec![0, 1, 0, 1],
            2,
        )
        .unwrap();
        let z1 = vec![
            vec![0.3, 0.7],
            vec![0.6, 0.4],
            vec![0.8, 0.2],
            vec![0.1, 0.9],
        ];
        // z2 = 1 - z1 on rows 0 and 1, equal to z1 on rows 2 and 3
        let z2 = vec![
            vec![0.7, 0.3],
            vec![0.4, 0.6],
            vec![0.8, 0.2],
            vec![0.1, 0.9],
        ];
        let g = GradedEnsemble::from_classifiers(vec![
            Arc::new(Fixed(z1.clone())),
            Arc::new(Fixed(z2.clone())),
        ])
        .unwrap();
        let expected = (0..4)
            .filter(|&i| z2[i][ds.label(i)] >= z1[i][ds.label(i)])
            .count() as f64
            / 4.0;
        assert_eq!(measure_gradedness(&g, &ds), expected);
        assert_eq!(expected, 1.0);

        let flipped = GradedEnsemble::from_classifiers(vec![
            Arc::new(Fixed(z2)),
            Arc::new(Fixed(z1.clone())),
        ])
        .unwrap();
        assert_eq!(measure_gradedness(&flipped, &ds), 0.5);

        let same = GradedEnsemble::from_classifiers(vec![
            Arc::new(Fixed(z1.clone())),
            Arc::new(Fixed(z1.clone())),
            Arc::new(Fixed(z1.clone())),
        ])
        .unwrap();
        assert_eq!(measure_gradedness(&same, &ds), 1.0);
        let single = GradedEnsemble::from_classifiers(vec![Arc::new(Fixed(z1))]).unwrap();
        assert_eq!(measure_gradedness(&single, &ds), 1.0);
    }
}
