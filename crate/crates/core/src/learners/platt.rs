//! Platt scaling: a sigmoid `p = sigmoid(a * margin + b)` fit to binary
//! targets by Newton's method with backtracking on the weighted log-loss.
//!
//! Targets use Platt's prior correction, `(W+ + 1) / (W+ + 2)` for positives
//! and `1 / (W- + 2)` for negatives, where `W±` are summed sample weights.

use serde::{Deserialize, Serialize};

pub const MAX_ITERATIONS: usize = 100;
pub const TOLERANCE: f64 = 1e-8;
const MIN_STEP: f64 = 1e-10;
const RIDGE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattScaler {
    pub a: f64,
    pub b: f64,
}

impl PlattScaler {
    pub fn identity() -> Self {
        PlattScaler { a: 1.0, b: 0.0 }
    }

    pub fn probability(&self, margin: f64) -> f64 {
        sigmoid(self.a * margin + self.b)
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn loss(margins: &[f64], targets: &[f64], weights: &[f64], a: f64, b: f64) -> f64 {
    margins
        .iter()
        .zip(targets)
        .zip(weights)
        .map(|((&f, &t), &w)| {
            let z = a * f + b;
            w * (t * softplus(-z) + (1.0 - t) * softplus(z))
        })
        .sum()
}

/// Fits the sigmoid to `margins` with boolean labels and sample weights.
pub fn fit(margins: &[f64], positive: &[bool], weights: &[f64]) -> PlattScaler {
    let w_pos: f64 = positive
        .iter()
        .zip(weights)
        .filter(|p| *p.0)
        .map(|p| p.1)
        .sum();
    let w_neg: f64 = positive
        .iter()
        .zip(weights)
        .filter(|p| !*p.0)
        .map(|p| p.1)
        .sum();
    let total = w_pos + w_neg;
    if total <= 0.0 {
        return PlattScaler::identity();
    }
    let t_pos = (w_pos + 1.0) / (w_pos + 2.0);
    let t_neg = 1.0 / (w_neg + 2.0);
    let targets: Vec<f64> = positive
        .iter()
        .map(|&p| if p { t_pos } else { t_neg })
        .collect();

    let mut a = 0.0;
    let mut b = ((w_pos + 1.0) / (w_neg + 1.0)).ln();
    let mut current = loss(margins, &targets, weights, a, b);
    for _ in 0..MAX_ITERATIONS {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, RIDGE, 0.0, RIDGE);
        for ((&f, &t), &w) in margins.iter().zip(&targets).zip(weights) {
            let p = sigmoid(a * f + b);
            let r = w * (p - t);
            let h = w * p * (1.0 - p);
            ga += r * f;
            gb += r;
            haa += h * f * f;
            hab += h * f;
            hbb += h;
        }
        if ga.abs().max(gb.abs()) < TOLERANCE * total {
            break;
        }
        let det = haa * hbb - hab * hab;
        let (da, db) = if det > 0.0 {
            (-(hbb * ga - hab * gb) / det, -(haa * gb - hab * ga) / det)
        } else {
            (-ga, -gb)
        };
        let slope = ga * da + gb * db;
        let mut step = 1.0;
        let mut moved = false;
        while step >= MIN_STEP {
            let (na, nb) = (a + step * da, b + step * db);
            let candidate = loss(margins, &targets, weights, na, nb);
            if candidate <= current + 1e-4 * step * slope {
                a = na;
                b = nb;
                current = candidate;
                moved = true;
                break;
            }
            step /= 2.0;
        }
        if !moved {
            break;
        }
    }
    PlattScaler { a, b }
}
