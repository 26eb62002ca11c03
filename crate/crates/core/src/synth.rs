//! Seeded synthetic datasets for desk-scale benchmarks.
//!
//! | name | classes | features | notes |
//! |------|---------|----------|-------|
//! | `gaussian-blobs-2` | 2 | 4 | unit-variance blobs on a circle of radius 2, plus 2 noise features; Bayes error about 2.3% |
//! | `gaussian-blobs-3` | 3 | 4 | same layout, centres 120 degrees apart; Bayes error about 8% |
//! | `gaussian-blobs-6` | 6 | 4 | same layout, neighbouring centres 2 apart; heavy overlap |
//! | `interleaved-moons` | 2 | 2 | two half circles with N(0, 0.25^2) noise |
//! | `waveform-like` | 3 | 21 | Breiman's waveform generator; Bayes error about 14% |
//!
//! Row `i` always has label `i % C`, so classes are balanced within one.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seed;

pub const GENERATORS: [&str; 5] = [
    "gaussian-blobs-2",
    "gaussian-blobs-3",
    "gaussian-blobs-6",
    "interleaved-moons",
    "waveform-like",
];

const BLOB_RADIUS: f64 = 2.0;
const BLOB_NOISE_FEATURES: usize = 2;
const MOON_NOISE: f64 = 0.25;

pub fn make_synthetic(name: &str, n: usize, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::InvalidParameter(
            "synthetic datasets need n >= 2".into(),
        ));
    }
    let mut rng = seed::rng(seed::derive_seed(seed, "synthetic", &[]));
    let (rows, n_classes) = match name {
        "gaussian-blobs-2" => (blobs(&mut rng, n, 2), 2),
        "gaussian-blobs-3" => (blobs(&mut rng, n, 3), 3),
        "gaussian-blobs-6" => (blobs(&mut rng, n, 6), 6),
        "interleaved-moons" => (moons(&mut rng, n), 2),
        "waveform-like" => (waveform(&mut rng, n), 3),
        other => return Err(Error::UnknownGenerator(other.to_string())),
    };
    let labels = (0..n).map(|i| i % n_classes).collect();
    Dataset::from_rows(rows, labels, n_classes)
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn blobs(rng: &mut impl Rng, n: usize, k: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let angle = 2.0 * PI * (i % k) as f64 / k as f64;
            let mut row = vec![
                BLOB_RADIUS * angle.cos() + normal(rng),
                BLOB_RADIUS * angle.sin() + normal(rng),
            ];
            row.extend((0..BLOB_NOISE_FEATURES).map(|_| normal(rng)));
            row
        })
        .collect()
}

fn moons(rng: &mut impl Rng, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let t = rng.random_range(0.0..PI);
            let (x, y) = if i % 2 == 0 {
                (t.cos(), t.sin())
            } else {
                (1.0 - t.cos(), 0.5 - t.sin())
            };
            vec![x + MOON_NOISE * normal(rng), y + MOON_NOISE * normal(rng)]
        })
        .collect()
}

/// Triangular base waves peaking at positions 11, 15 and 7 (1-based).
fn base_wave(peak: f64, i: usize) -> f64 {
    (6.0 - ((i + 1) as f64 - peak).abs()).max(0.0)
}

fn waveform(rng: &mut impl Rng, n: usize) -> Vec<Vec<f64>> {
    const PAIRS: [(f64, f64); 3] = [(11.0, 15.0), (11.0, 7.0), (15.0, 7.0)];
    (0..n)
        .map(|i| {
            let (a, b) = PAIRS[i % 3];
            let u: f64 = rng.random();
            (0..21)
                .map(|j| u * base_wave(a, j) + (1.0 - u) * base_wave(b, j) + normal(rng))
                .collect()
        })
        .collect()
}
