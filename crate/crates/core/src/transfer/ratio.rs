//! SRatio: weight each training example by the ratio of the graded
//! classifiers' confidence in its true label to the simple model's, and
//! retrain the simple model with those weights.
//!
//! 1. Fit the simple model with unit weights and measure its error `e_S`.
//! 2. Keep the graded classifiers that are at least `gamma` more accurate:
//!    `I = { i : e_S - e_i >= gamma }`.
//! 3. `w(x) = mean_{i in I} zeta_i(x)[y] / S(x)[y]`.
//! 4. Zero every weight above `beta`.
//! 5. Refit the simple model with the weights.
//!
//! When `I` is empty every weight is 1, so step 5 reproduces the unit-weight
//! model. `gamma` and `beta` are chosen by k-fold cross-validation over a grid.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{kfold, Dataset};
use crate::ensembles::{error_rate, GradedEnsemble};
use crate::error::{Error, Result};
use crate::learners::{argmax, ProbabilisticClassifier, WeightedLearner};
use crate::seed;

/// Relative tolerance when comparing mean CV errors.
const CV_TIE_TOLERANCE: f64 = 1e-12;

/// True-class confidence and correctness of every graded classifier on every
/// example of a dataset, computed once and sliced per fold.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedScores {
    n_graded: usize,
    confidence: Vec<f64>,
    correct: Vec<bool>,
}

impl GradedScores {
    pub fn compute(graded: &GradedEnsemble, ds: &Dataset) -> Self {
        let per_row: Vec<(Vec<f64>, Vec<bool>)> = (0..ds.len())
            .into_par_iter()
            .map(|i| {
                let y = ds.label(i);
                graded
                    .graded_proba(ds.row(i))
                    .into_iter()
                    .map(|p| (p[y], argmax(&p) == y))
                    .unzip()
            })
            .collect();
        let mut scores = GradedScores {
            n_graded: graded.len(),
            confidence: Vec::with_capacity(ds.len() * graded.len()),
            correct: Vec::with_capacity(ds.len() * graded.len()),
        };
        for (c, k) in per_row {
            scores.confidence.extend(c);
            scores.correct.extend(k);
        }
        scores
    }

    pub fn n_graded(&self) -> usize {
        self.n_graded
    }

    pub fn len(&self) -> usize {
        self.confidence.len() / self.n_graded
    }

    pub fn is_empty(&self) -> bool {
        self.confidence.is_empty()
    }

    /// True-class confidences of all graded classifiers on example `i`.
    pub fn confidences(&self, i: usize) -> &[f64] {
        &self.confidence[i * self.n_graded..(i + 1) * self.n_graded]
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let k = self.n_graded;
        let mut out = GradedScores {
            n_graded: k,
            confidence: Vec::with_capacity(indices.len() * k),
            correct: Vec::with_capacity(indices.len() * k),
        };
        for &i in indices {
            out.confidence
                .extend_from_slice(&self.confidence[i * k..(i + 1) * k]);
            out.correct
                .extend_from_slice(&self.correct[i * k..(i + 1) * k]);
        }
        out
    }

    /// Error rate of each graded classifier.
    pub fn errors(&self) -> Vec<f64> {
        let n = self.len();
        (0..self.n_graded)
            .map(|g| {
                let wrong = (0..n)
                    .filter(|&i| !self.correct[i * self.n_graded + g])
                    .count();
                wrong as f64 / n as f64
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightReport {
    pub weights: Vec<f64>,
    pub selected_gamma: f64,
    pub selected_beta: f64,
    /// Zero-based indices of the graded classifiers in the numerator.
    pub active_set: Vec<usize>,
    pub zero_fraction: f64,
    pub simple_error: f64,
    pub graded_errors: Vec<f64>,
}

/// Graded classifiers at least `gamma` more accurate than the simple model.
pub fn active_set(simple_error: f64, graded_errors: &[f64], gamma: f64) -> Vec<usize> {
    graded_errors
        .iter()
        .enumerate()
        .filter(|&(_, &e)| simple_error - e >= gamma)
        .map(|(i, _)| i)
        .collect()
}

/// Mean true-class confidence over the active set; ones when it is empty.
pub fn complex_only_weights(scores: &GradedScores, active: &[usize]) -> Vec<f64> {
    if active.is_empty() {
        return vec![1.0; scores.len()];
    }
    (0..scores.len())
        .map(|i| {
            let c = scores.confidences(i);
            active.iter().map(|&g| c[g]).sum::<f64>() / active.len() as f64
        })
        .collect()
}

fn clipped_ratios(numerators: &[f64], simple_confidence: &[f64], beta: f64) -> Vec<f64> {
    numerators
        .iter()
        .zip(simple_confidence)
        .map(|(&num, &s)| {
            let w = num / s;
            if w.is_nan() || w > beta {
                0.0
            } else {
                w
            }
        })
        .collect()
}

fn check_beta(beta: f64) -> Result<()> {
    if beta >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "beta must be >= 1, got {beta}"
        )))
    }
}

/// Steps 2-4 given precomputed confidences and errors.
pub fn sratio_weights_from_scores(
    scores: &GradedScores,
    simple_confidence: &[f64],
    simple_error: f64,
    gamma: f64,
    beta: f64,
) -> Result<WeightReport> {
    check_beta(beta)?;
    if simple_confidence.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            actual: simple_confidence.len(),
        });
    }
    let graded_errors = scores.errors();
    let active = active_set(simple_error, &graded_errors, gamma);
    let weights = if active.is_empty() {
        vec![1.0; scores.len()]
    } else {
        clipped_ratios(
            &complex_only_weights(scores, &active),
            simple_confidence,
            beta,
        )
    };
    let zeros = weights.iter().filter(|&&w| w == 0.0).count();
    Ok(WeightReport {
        zero_fraction: zeros as f64 / weights.len() as f64,
        weights,
        selected_gamma: gamma,
        selected_beta: beta,
        active_set: active,
        simple_error,
        graded_errors,
    })
}

/// SRatio weights for `ds`, where `simple` was fit on `ds` with unit weights.
/// Errors and confidences are all measured on `ds` at the true labels.
pub fn sratio_weights<S: ProbabilisticClassifier + ?Sized>(
    graded: &GradedEnsemble,
    simple: &S,
    ds: &Dataset,
    gamma: f64,
    beta: f64,
) -> Result<WeightReport> {
    check_beta(beta)?;
    if simple.n_classes() != ds.n_classes() || graded.n_classes() != ds.n_classes() {
        return Err(Error::DimensionMismatch {
            expected: ds.n_classes(),
            actual: simple.n_classes(),
        });
    }
    let scores = GradedScores::compute(graded, ds);
    let conf: Vec<f64> = ds
        .rows()
        .zip(ds.labels())
        .map(|(x, &y)| simple.confidence(x, y))
        .collect();
    sratio_weights_from_scores(&scores, &conf, error_rate(simple, ds), gamma, beta)
}

/// Where the error gap `e_S - e_i` is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapSource {
    /// On the data being weighted.
    #[default]
    Training,
    /// On held-out folds: the validation fold inside cross-validation, and the
    /// pooled out-of-fold error of the per-fold simple models for the final fit.
    HeldOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SRatioConfig {
    pub gamma_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    pub cv_folds: usize,
    pub seed: u64,
    /// Score CV folds with the simple model fit on all data instead of
    /// refitting it on each fold.
    pub reuse_full_simple: bool,
    pub gap_source: GapSource,
}

impl SRatioConfig {
    pub fn default_beta_grid() -> Vec<f64> {
        (0..18).map(|i| 1.5 + 0.5 * f64::from(i)).collect()
    }

    pub fn default_gamma_grid() -> Vec<f64> {
        vec![0.0, 0.01, 0.02, 0.05, 0.1]
    }

    pub fn single(gamma: f64, beta: f64) -> Self {
        SRatioConfig {
            gamma_grid: vec![gamma],
            beta_grid: vec![beta],
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.gamma_grid.is_empty() || self.beta_grid.is_empty() {
            return Err(Error::InvalidParameter(
                "gamma and beta grids must be nonempty".into(),
            ));
        }
        if self.gamma_grid.iter().any(|g| g.is_nan()) {
            return Err(Error::InvalidParameter("gamma grid contains NaN".into()));
        }
        self.beta_grid.iter().try_for_each(|&b| check_beta(b))
    }
}

impl Default for SRatioConfig {
    fn default() -> Self {
        SRatioConfig {
            gamma_grid: Self::default_gamma_grid(),
            beta_grid: Self::default_beta_grid(),
            cv_folds: 10,
            seed: 0,
            reuse_full_simple: false,
            gap_source: GapSource::Training,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    pub gamma: f64,
    pub beta: f64,
    pub mean_error: f64,
}

#[derive(Debug, Clone)]
pub struct SRatioFit<M> {
    pub model: M,
    pub report: WeightReport,
    /// Mean held-out error of every grid cell; empty when the grid has one cell.
    pub cv: Vec<CvCell>,
}

struct FoldOutcome {
    /// Held-out error per grid cell, gamma-major.
    cell_errors: Vec<f64>,
    /// Misclassified held-out examples of the unit-weight fold model.
    simple_wrong: usize,
}

fn grid_cells(cfg: &SRatioConfig) -> Vec<(f64, f64)> {
    cfg.gamma_grid
        .iter()
        .flat_map(|&g| cfg.beta_grid.iter().map(move |&b| (g, b)))
        .collect()
}

fn run_fold<L: WeightedLearner>(
    learner: &L,
    ds: &Dataset,
    scores: &GradedScores,
    full_simple: Option<&L::Model>,
    cfg: &SRatioConfig,
    train_idx: &[usize],
    val_idx: &[usize],
) -> Result<FoldOutcome> {
    let train = ds.subset(train_idx);
    let val = ds.subset(val_idx);
    let fold_scores = scores.subset(train_idx);
    let fitted;
    let simple = match full_simple {
        Some(s) => s,
        None => {
            fitted = learner
                .fit_unweighted(&train)
                .map_err(|e| Error::GridCell {
                    gamma: f64::NAN,
                    beta: f64::NAN,
                    source: Box::new(e),
                })?;
            &fitted
        }
    };
    let conf: Vec<f64> = train
        .rows()
        .zip(train.labels())
        .map(|(x, &y)| simple.confidence(x, y))
        .collect();
    let simple_val_error = error_rate(simple, &val);
    let (simple_error, graded_errors) = match cfg.gap_source {
        GapSource::Training => (error_rate(simple, &train), fold_scores.errors()),
        GapSource::HeldOut => (simple_val_error, scores.subset(val_idx).errors()),
    };

    let mut cache: HashMap<(Vec<usize>, u64), f64> = HashMap::new();
    let mut cell_errors = Vec::new();
    for (gamma, beta) in grid_cells(cfg) {
        let active = active_set(simple_error, &graded_errors, gamma);
        // with an empty active set the weights do not depend on beta
        let key = (
            active.clone(),
            if active.is_empty() { 0 } else { beta.to_bits() },
        );
        if let Some(&e) = cache.get(&key) {
            cell_errors.push(e);
            continue;
        }
        let weights = if active.is_empty() {
            vec![1.0; train.len()]
        } else {
            clipped_ratios(&complex_only_weights(&fold_scores, &active), &conf, beta)
        };
        let model = learner.fit(&train, &weights).map_err(|e| Error::GridCell {
            gamma,
            beta,
            source: Box::new(e),
        })?;
        let e = error_rate(&model, &val);
        cache.insert(key, e);
        cell_errors.push(e);
    }
    Ok(FoldOutcome {
        cell_errors,
        simple_wrong: (simple_val_error * val.len() as f64).round() as usize,
    })
}

/// Lowest mean error; ties go to the smaller beta, then the smaller gamma.
fn select(cells: &[CvCell]) -> &CvCell {
    let best = cells
        .iter()
        .map(|c| c.mean_error)
        .fold(f64::INFINITY, f64::min);
    let tol = CV_TIE_TOLERANCE * best.abs().max(1.0);
    cells
        .iter()
        .filter(|c| c.mean_error <= best + tol)
        .min_by(|a, b| a.beta.total_cmp(&b.beta).then(a.gamma.total_cmp(&b.gamma)))
        .expect("grid is nonempty")
}

/// Chooses `(gamma, beta)` by cross-validation, then weights and refits on
/// all of `ds`.
pub fn sratio_train<L: WeightedLearner>(
    graded: &GradedEnsemble,
    learner: &L,
    ds: &Dataset,
    cfg: &SRatioConfig,
) -> Result<SRatioFit<L::Model>> {
    cfg.validate()?;
    let scores = GradedScores::compute(graded, ds);
    let simple = learner.fit_unweighted(ds)?;
    let cells = grid_cells(cfg);

    let mut simple_oof_error = None;
    let cv = if cells.len() > 1 || cfg.gap_source == GapSource::HeldOut {
        let folds = kfold(
            ds,
            cfg.cv_folds,
            seed::derive_seed(cfg.seed, "sratio-folds", &[]),
        )?;
        let full = cfg.reuse_full_simple.then_some(&simple);
        let outcomes = (0..folds.k)
            .into_par_iter()
            .map(|f| {
                let (train_idx, val_idx) = folds.indices(f);
                run_fold(learner, ds, &scores, full, cfg, &train_idx, &val_idx)
            })
            .collect::<Result<Vec<_>>>()?;
        let wrong: usize = outcomes.iter().map(|o| o.simple_wrong).sum();
        simple_oof_error = Some(wrong as f64 / ds.len() as f64);
        cells
            .iter()
            .enumerate()
            .map(|(c, &(gamma, beta))| CvCell {
                gamma,
                beta,
                mean_error: outcomes.iter().map(|o| o.cell_errors[c]).sum::<f64>() / folds.k as f64,
            })
            .collect()
    } else {
        Vec::new()
    };
    let (gamma, beta) = if cv.len() > 1 {
        let best = select(&cv);
        (best.gamma, best.beta)
    } else {
        cells[0]
    };

    let conf: Vec<f64> = ds
        .rows()
        .zip(ds.labels())
        .map(|(x, &y)| simple.confidence(x, y))
        .collect();
    let simple_error = match (cfg.gap_source, simple_oof_error) {
        (GapSource::HeldOut, Some(e)) => e,
        _ => error_rate(&simple, ds),
    };
    let report = sratio_weights_from_scores(&scores, &conf, simple_error, gamma, beta)?;
    let model = learner
        .fit(ds, &report.weights)
        .map_err(|e| Error::GridCell {
            gamma,
            beta,
            source: Box::new(e),
        })?;
    Ok(SRatioFit { model, report, cv })
}
