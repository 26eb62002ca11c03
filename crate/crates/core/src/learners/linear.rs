//! Linear SVM (one-vs-rest, hinge loss) and linear SVR (epsilon-insensitive
//! loss), both trained by seeded stochastic subgradient descent.
//!
//! For class `c` the SVM minimizes
//! `sum_i w_i max(0, 1 - y_i (theta . x_i + b)) + lambda |theta|^2`
//! with `y_i = +1` for class `c` and `-1` otherwise. Weights are rescaled to
//! mean 1 before training so the regularizer has the same relative strength
//! whatever weighting scheme produced them. The learning rate follows
//! `eta_t = eta_0 / (1 + lambda eta_0 t)` and the example order is reshuffled
//! every epoch.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::platt::{self, PlattScaler};
use super::{check_targets, check_weights, ProbabilisticClassifier, Regressor};
use super::{WeightedLearner, WeightedRegressionLearner};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seed;

/// Lower bound on every SVM class probability.
pub const PROBABILITY_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub reg_lambda: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Width of the insensitive tube; only used by the SVR.
    pub epsilon_insensitive: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            reg_lambda: 1.0,
            epochs: 200,
            learning_rate: 0.1,
            seed: 0,
            epsilon_insensitive: 0.01,
        }
    }
}

impl SvmParams {
    fn validate(&self) -> Result<()> {
        if !(self.reg_lambda > 0.0 && self.reg_lambda.is_finite()) {
            return Err(Error::InvalidParameter(
                "reg_lambda must be positive".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(
                "learning_rate must be positive".into(),
            ));
        }
        if self.epsilon_insensitive.is_nan() || self.epsilon_insensitive < 0.0 {
            return Err(Error::InvalidParameter(
                "epsilon_insensitive must be >= 0".into(),
            ));
        }
        Ok(())
    }

    fn rate(&self, t: usize) -> f64 {
        self.learning_rate / (1.0 + self.reg_lambda * self.learning_rate * t as f64)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mean_normalized(weights: &[f64]) -> Vec<f64> {
    let mean = weights.iter().sum::<f64>() / weights.len() as f64;
    weights.iter().map(|w| w / mean).collect()
}

/// The per-class hinge objective at fixed parameters, with raw weights.
pub fn hinge_objective(
    ds: &Dataset,
    weights: &[f64],
    class: usize,
    theta: &[f64],
    bias: f64,
    lambda: f64,
) -> f64 {
    let loss: f64 = ds
        .rows()
        .zip(ds.labels())
        .zip(weights)
        .map(|((x, &l), &w)| {
            let y = if l == class { 1.0 } else { -1.0 };
            w * (1.0 - y * (dot(theta, x) + bias)).max(0.0)
        })
        .sum();
    loss + lambda * dot(theta, theta)
}

/// The SVR objective at fixed parameters, with raw weights.
pub fn epsilon_insensitive_objective(
    ds: &Dataset,
    targets: &[f64],
    weights: &[f64],
    theta: &[f64],
    bias: f64,
    lambda: f64,
    epsilon: f64,
) -> f64 {
    let loss: f64 = ds
        .rows()
        .zip(targets)
        .zip(weights)
        .map(|((x, &y), &w)| w * ((y - dot(theta, x) - bias).abs() - epsilon).max(0.0))
        .sum();
    loss + lambda * dot(theta, theta)
}

/// Runs the shared SGD loop; `step` returns the loss subgradient with respect
/// to the prediction for example `i` at prediction `f`.
fn sgd(
    ds: &Dataset,
    weights: &[f64],
    params: &SvmParams,
    seed: u64,
    init_bias: f64,
    step: impl Fn(usize, f64) -> f64,
) -> (Vec<f64>, f64) {
    let n = ds.len();
    let mut theta = vec![0.0; ds.n_features()];
    let mut bias = init_bias;
    let mut order: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
    let mut rng = seed::rng(seed);
    let shrink_per_step = 2.0 * params.reg_lambda / n as f64;
    let mut t = 0;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let eta = params.rate(t);
            t += 1;
            let x = ds.row(i);
            let g = weights[i] * step(i, dot(&theta, x) + bias);
            let decay = 1.0 - eta * shrink_per_step;
            for (th, xi) in theta.iter_mut().zip(x) {
                *th = *th * decay - eta * g * xi;
            }
            bias -= eta * g;
        }
    }
    (theta, bias)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// One weight vector per class.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub calibration: Vec<PlattScaler>,
    pub probability_floor: f64,
}

impl LinearModel {
    pub fn margins(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(th, b)| dot(th, x) + b)
            .collect()
    }
}

/// Normalizes calibrated per-class sigmoids to a simplex, then mixes in the
/// floor so every entry is at least `floor` and the total stays 1.
pub fn calibrated_simplex(margins: &[f64], calibration: &[PlattScaler], floor: f64) -> Vec<f64> {
    let c = margins.len();
    let q: Vec<f64> = margins
        .iter()
        .zip(calibration)
        .map(|(&m, s)| s.probability(m))
        .collect();
    let total: f64 = q.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return vec![1.0 / c as f64; c];
    }
    let scale = 1.0 - c as f64 * floor;
    q.iter().map(|v| scale * v / total + floor).collect()
}

impl ProbabilisticClassifier for LinearModel {
    fn n_classes(&self) -> usize {
        self.weights.len()
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        calibrated_simplex(&self.margins(x), &self.calibration, self.probability_floor)
    }
}

pub fn fit_linear_svm(ds: &Dataset, weights: &[f64], params: &SvmParams) -> Result<LinearModel> {
    params.validate()?;
    check_weights(weights, ds.len())?;
    let mut present = vec![false; ds.n_classes()];
    for (&l, &w) in ds.labels().iter().zip(weights) {
        if w > 0.0 {
            present[l] = true;
        }
    }
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::SingleClass);
    }
    let w = mean_normalized(weights);
    let mut model = LinearModel {
        weights: Vec::new(),
        biases: Vec::new(),
        calibration: Vec::new(),
        probability_floor: PROBABILITY_FLOOR,
    };
    for class in 0..ds.n_classes() {
        let sign = |i: usize| if ds.label(i) == class { 1.0 } else { -1.0 };
        let class_seed = seed::derive_seed(params.seed, "svm-class", &[class as u64]);
        let (theta, bias) = sgd(ds, &w, params, class_seed, 0.0, |i, f| {
            let y = sign(i);
            if y * f < 1.0 {
                -y
            } else {
                0.0
            }
        });
        let margins: Vec<f64> = ds.rows().map(|x| dot(&theta, x) + bias).collect();
        let positive: Vec<bool> = ds.labels().iter().map(|&l| l == class).collect();
        model.calibration.push(platt::fit(&margins, &positive, &w));
        model.weights.push(theta);
        model.biases.push(bias);
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRegressor {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Regressor for LinearRegressor {
    fn predict_value(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

/// The bias starts at the weighted mean target.
pub fn fit_linear_svr(
    ds: &Dataset,
    targets: &[f64],
    weights: &[f64],
    params: &SvmParams,
) -> Result<LinearRegressor> {
    params.validate()?;
    check_weights(weights, ds.len())?;
    check_targets(targets, ds.len())?;
    let w = mean_normalized(weights);
    let init = targets.iter().zip(&w).map(|(t, w)| t * w).sum::<f64>() / w.iter().sum::<f64>();
    let eps = params.epsilon_insensitive;
    let svr_seed = seed::derive_seed(params.seed, "svr", &[]);
    let (theta, bias) = sgd(ds, &w, params, svr_seed, init, |i, f| {
        let r = targets[i] - f;
        if r > eps {
            -1.0
        } else if r < -eps {
            1.0
        } else {
            0.0
        }
    });
    Ok(LinearRegressor {
        weights: theta,
        bias,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SvmLearner(pub SvmParams);

impl WeightedLearner for SvmLearner {
    type Model = LinearModel;

    fn fit(&self, ds: &Dataset, weights: &[f64]) -> Result<LinearModel> {
        fit_linear_svm(ds, weights, &self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SvrLearner(pub SvmParams);

impl WeightedRegressionLearner for SvrLearner {
    type Model = LinearRegressor;

    fn fit(&self, ds: &Dataset, targets: &[f64], weights: &[f64]) -> Result<LinearRegressor> {
        fit_linear_svr(ds, targets, weights, &self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::Classifier;

    fn separable() -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let t = i as f64 / 40.0;
            rows.push(vec![1.0 + t, 0.5 - t]);
            labels.push(0);
            rows.push(vec![-1.0 - t, -0.5 + t]);
            labels.push(1);
        }
        Dataset::from_rows(rows, labels, 2).unwrap()
    }

    #[test]
    fn separable_data_is_fit_perfectly() {
        let ds = separable();
        let params = SvmParams {
            reg_lambda: 1e-3,
            ..SvmParams::default()
        };
        let m = fit_linear_svm(&ds, &vec![1.0; ds.len()], &params).unwrap();
        let errors = ds
            .rows()
            .zip(ds.labels())
            .filter(|(x, &l)| m.predict(x) != l)
            .count();
        assert_eq!(errors, 0);
    }

    #[test]
    fn probabilities_form_a_floored_simplex() {
        let ds = separable();
        let m = fit_linear_svm(&ds, &vec![1.0; ds.len()], &SvmParams::default()).unwrap();
        for x in ds.rows() {
            let p = m.predict_proba(x);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&v| (PROBABILITY_FLOOR..=1.0).contains(&v)));
        }
    }

    #[test]
    fn simplex_symmetry_cases() {
        let cal = [PlattScaler { a: 1.5, b: 0.0 }; 2];
        let p = calibrated_simplex(&[0.8, -0.8], &cal, PROBABILITY_FLOOR);
        let s = platt::sigmoid(1.2);
        assert!((p[0] - s).abs() < 1e-5 && (p[1] - (1.0 - s)).abs() < 1e-5);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-15);
        let cal3 = [PlattScaler { a: 2.0, b: 0.0 }; 3];
        let p = calibrated_simplex(&[0.0; 3], &cal3, PROBABILITY_FLOOR);
        for v in p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_weight_rows_do_not_change_the_objective() {
        let ds = separable();
        let extra = ds.subset(&[0, 1, 2]);
        let both = {
            let idx: Vec<usize> = (0..ds.len()).collect();
            let mut rows: Vec<Vec<f64>> = idx.iter().map(|&i| ds.row(i).to_vec()).collect();
            rows.extend(
                extra
                    .rows()
                    .map(|r| r.iter().map(|v| v * 3.0).collect::<Vec<_>>()),
            );
            let mut labels = ds.labels().to_vec();
            labels.extend_from_slice(&[1, 0, 1]);
            Dataset::from_rows(rows, labels, 2).unwrap()
        };
        let mut w = vec![1.0; ds.len()];
        let theta = [0.3, -0.7];
        let base = hinge_objective(&ds, &w, 0, &theta, 0.2, 0.5);
        w.extend_from_slice(&[0.0; 3]);
        assert_eq!(hinge_objective(&both, &w, 0, &theta, 0.2, 0.5), base);
    }

    #[test]
    fn single_effective_class_is_rejected() {
        let ds = separable();
        let w: Vec<f64> = ds
            .labels()
            .iter()
            .map(|&l| if l == 0 { 1.0 } else { 0.0 })
            .collect();
        assert!(matches!(
            fit_linear_svm(&ds, &w, &SvmParams::default()),
            Err(Error::SingleClass)
        ));
        assert!(matches!(
            fit_linear_svm(&ds, &vec![0.0; ds.len()], &SvmParams::default()),
            Err(Error::AllZeroWeights)
        ));
    }

    #[test]
    fn same_seed_same_model() {
        let ds = separable();
        let w = vec![1.0; ds.len()];
        let a = fit_linear_svm(&ds, &w, &SvmParams::default()).unwrap();
        let b = fit_linear_svm(&ds, &w, &SvmParams::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn svr_fits_linear_targets() {
        let ds = separable();
        let targets: Vec<f64> = ds.rows().map(|x| 2.0 * x[0] - x[1] + 0.5).collect();
        let params = SvmParams {
            reg_lambda: 1e-4,
            learning_rate: 0.01,
            epsilon_insensitive: 0.0,
            ..SvmParams::default()
        };
        let w = vec![1.0; ds.len()];
        let m = fit_linear_svr(&ds, &targets, &w, &params).unwrap();
        let loss = epsilon_insensitive_objective(&ds, &targets, &w, &m.weights, m.bias, 0.0, 0.0);
        assert!(
            loss / (ds.len() as f64) < 0.02,
            "mean abs error {}",
            loss / ds.len() as f64
        );
    }

    #[test]
    fn svr_constant_targets() {
        let ds = separable();
        let m = fit_linear_svr(
            &ds,
            &vec![3.5; ds.len()],
            &vec![1.0; ds.len()],
            &SvmParams::default(),
        )
        .unwrap();
        assert!((m.bias - 3.5).abs() < 0.02, "bias {}", m.bias);
        assert!(m.weights.iter().all(|w| w.abs() < 0.02), "{:?}", m.weights);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let ds = separable();
        let w = vec![1.0; ds.len()];
        for bad in [
            SvmParams {
                reg_lambda: 0.0,
                ..SvmParams::default()
            },
            SvmParams {
                epochs: 0,
                ..SvmParams::default()
            },
            SvmParams {
                learning_rate: -1.0,
                ..SvmParams::default()
            },
        ] {
            assert!(fit_linear_svm(&ds, &w, &bad).is_err());
        }
    }
}
