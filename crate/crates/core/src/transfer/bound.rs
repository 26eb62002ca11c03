//! Numeric check of the upper bound on the simple model's expected log-loss
//! in terms of a clipped, reweighted log-loss.
//!
//! With `r = min(p_c / p_star, beta)`:
//!
//! ```text
//! mean(-log p) <= mean(max(1, r) * log(1 / p)) - mean(log r) + log(beta)
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Slack allowed for rounding when counting violations.
pub const BOUND_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms {
    pub lhs: f64,
    pub rhs: f64,
}

impl BoundTerms {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + BOUND_TOLERANCE
    }
}

fn check_open_unit(name: &str, v: &[f64]) -> Result<()> {
    match v.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
        Some(p) => Err(Error::InvalidParameter(format!(
            "{name} entries must lie in (0, 1), found {p}"
        ))),
        None => Ok(()),
    }
}

/// Both sides of the bound as empirical means over `K` samples of the
/// probabilities each model assigns to the realized label.
pub fn bound_check(
    p_theta: &[f64],
    p_c: &[f64],
    p_theta_star: &[f64],
    beta: f64,
) -> Result<BoundTerms> {
    let k = p_theta.len();
    if k == 0 {
        return Err(Error::InvalidParameter(
            "bound check needs at least one sample".into(),
        ));
    }
    for len in [p_c.len(), p_theta_star.len()] {
        if len != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: len,
            });
        }
    }
    check_open_unit("p_theta", p_theta)?;
    check_open_unit("p_c", p_c)?;
    check_open_unit("p_theta_star", p_theta_star)?;
    if !(beta >= 1.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "beta must be finite and >= 1, got {beta}"
        )));
    }
    let (mut lhs, mut weighted, mut log_r) = (0.0, 0.0, 0.0);
    for ((&p, &c), &s) in p_theta.iter().zip(p_c).zip(p_theta_star) {
        let r = (c / s).min(beta);
        let nll = -p.ln();
        lhs += nll;
        weighted += r.max(1.0) * nll;
        log_r += r.ln();
    }
    let k = k as f64;
    Ok(BoundTerms {
        lhs: lhs / k,
        rhs: weighted / k - log_r / k + beta.ln(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSweep {
    pub beta: f64,
    pub samples: usize,
    /// Independent draws tried; each draw is one bound evaluation over `samples` points.
    pub trials: usize,
    pub violations: usize,
    /// Largest `lhs - rhs` seen; negative when the bound held with room.
    pub max_excess: f64,
}

const SAMPLE_LOW: f64 = 0.01;
const SAMPLE_HIGH: f64 = 0.99;

/// Draws `trials` triples of length-`samples` vectors uniform in
/// `(0.01, 0.99)` for each `beta` and counts bound violations. Every single
/// point is also checked as its own one-sample bound.
pub fn verify_bound(
    samples: usize,
    betas: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<BoundSweep>> {
    betas
        .iter()
        .enumerate()
        .map(|(b, &beta)| {
            let mut sweep = BoundSweep {
                beta,
                samples,
                trials,
                violations: 0,
                max_excess: f64::NEG_INFINITY,
            };
            for t in 0..trials {
                let mut rng = seed::rng(seed::derive_seed(
                    seed,
                    "verify-bound",
                    &[b as u64, t as u64],
                ));
                let mut draw = || -> Vec<f64> {
                    (0..samples)
                        .map(|_| rng.random_range(SAMPLE_LOW..SAMPLE_HIGH))
                        .collect()
                };
                let (p, c, s) = (draw(), draw(), draw());
                let mut record = |terms: BoundTerms| {
                    sweep.violations += usize::from(!terms.holds());
                    sweep.max_excess = sweep.max_excess.max(terms.lhs - terms.rhs);
                };
                record(bound_check(&p, &c, &s, beta)?);
                for i in 0..samples {
                    record(bound_check(&p[i..=i], &c[i..=i], &s[i..=i], beta)?);
                }
            }
            Ok(sweep)
        })
        .collect()
}
