//! Transferring information from a complex model to a simple one by
//! reweighting the training set.

pub mod baselines;
pub mod bound;
pub mod ratio;

pub use baselines::{confweight_weights, distill_proxy1, distill_proxy2, SoftScoreClassifier};
pub use bound::{bound_check, verify_bound, BoundSweep, BoundTerms};
pub use ratio::{
    complex_only_weights, sratio_train, sratio_weights, sratio_weights_from_scores, CvCell,
    GapSource, GradedScores, SRatioConfig, SRatioFit, WeightReport,
};
