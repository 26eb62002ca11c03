//! Summaries of repeated-split results and diagnostics of learned weights.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::data::{Dataset, ScalerParams};
use crate::error::{Error, Result};
use crate::learners::linear::PROBABILITY_FLOOR;

const NORMAL_QUANTILE_975: f64 = 1.96;
const TOP_PERCENTILE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    /// `1.96 s / sqrt(R)`.
    #[default]
    Normal,
    /// Student t quantile with `R - 1` degrees of freedom.
    StudentT,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selected {
    pub gamma: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: String,
    /// Test error in percent, one entry per split.
    pub errors: Vec<f64>,
    pub mean: f64,
    pub ci95_halfwidth: f64,
    /// Hyperparameters chosen on each split, for methods that select any.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub selected: Vec<Selected>,
}

/// Mean and 95% half-width of per-split error percentages.
pub fn summarize(method: impl Into<String>, errors: Vec<f64>, ci: CiMethod) -> Result<RunSummary> {
    let r = errors.len();
    if r < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 splits to summarize, got {r}"
        )));
    }
    let rf = r as f64;
    let mean = errors.iter().sum::<f64>() / rf;
    let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (rf - 1.0);
    let quantile = match ci {
        CiMethod::Normal => NORMAL_QUANTILE_975,
        CiMethod::StudentT => StudentsT::new(0.0, 1.0, rf - 1.0)
            .expect("degrees of freedom are positive")
            .inverse_cdf(0.975),
    };
    Ok(RunSummary {
        method: method.into(),
        mean,
        ci95_halfwidth: quantile * var.sqrt() / rf.sqrt(),
        errors,
        selected: Vec::new(),
    })
}

/// Percentage of weights that are exactly zero.
pub fn zero_weight_fraction(w: &[f64]) -> f64 {
    if w.is_empty() {
        return 0.0;
    }
    100.0 * w.iter().filter(|&&v| v == 0.0).count() as f64 / w.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bucket {
    Zero,
    Top5,
    Middle,
}

impl Bucket {
    pub const ALL: [Bucket; 3] = [Bucket::Zero, Bucket::Top5, Bucket::Middle];

    pub fn name(self) -> &'static str {
        match self {
            Bucket::Zero => "zero",
            Bucket::Top5 => "top5",
            Bucket::Middle => "middle",
        }
    }
}

/// Assigns each weight to a bucket. The top bucket holds positive weights
/// strictly above the nearest-rank 95th percentile of the positive weights.
pub fn weight_buckets(w: &[f64]) -> Vec<Bucket> {
    let mut positive: Vec<f64> = w.iter().copied().filter(|&v| v > 0.0).collect();
    positive.sort_by(f64::total_cmp);
    let cutoff = if positive.is_empty() {
        f64::INFINITY
    } else {
        let rank = (TOP_PERCENTILE * positive.len() as f64).ceil() as usize;
        positive[rank.max(1) - 1]
    };
    w.iter()
        .map(|&v| {
            if v == 0.0 {
                Bucket::Zero
            } else if v > cutoff {
                Bucket::Top5
            } else {
                Bucket::Middle
            }
        })
        .collect()
}

/// Purity `100 * nu_s / (nu_s + nu_d)` of every point, where among its `k`
/// nearest neighbours (standardized Euclidean distance, self excluded, ties
/// by lower index) `nu_s` share its class and `nu_d` belong to the most
/// frequent other class.
pub fn point_purities(ds: &Dataset, k: usize) -> Result<Vec<f64>> {
    let n = ds.len();
    if k == 0 || n <= k {
        return Err(Error::InvalidParameter(format!(
            "neighbor purity needs 0 < k < N, got k={k}, N={n}"
        )));
    }
    let z = ScalerParams::fit(ds).transform(ds);
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let xi = z.row(i);
            let mut dist: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    (
                        xi.iter()
                            .zip(z.row(j))
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>(),
                        j,
                    )
                })
                .collect();
            dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut counts = vec![0usize; ds.n_classes()];
            for &(_, j) in &dist[..k] {
                counts[ds.label(j)] += 1;
            }
            let own = ds.label(i);
            let same = counts[own];
            let other = counts
                .iter()
                .enumerate()
                .filter(|&(c, _)| c != own)
                .map(|(_, &v)| v)
                .max()
                .unwrap_or(0);
            100.0 * same as f64 / (same + other) as f64
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborPurity {
    pub bucket: Bucket,
    pub count: usize,
    /// Mean purity of the bucket's points; `None` for an empty bucket.
    pub purity: Option<f64>,
}

/// Mean purity per weight bucket.
pub fn neighbor_purity(ds: &Dataset, w: &[f64], k: usize) -> Result<Vec<NeighborPurity>> {
    if w.len() != ds.len() {
        return Err(Error::DimensionMismatch {
            expected: ds.len(),
            actual: w.len(),
        });
    }
    let purities = point_purities(ds, k)?;
    Ok(bucket_means(&weight_buckets(w), &purities))
}

/// Averages per-point purities by bucket. Pooling several runs amounts to
/// concatenating their buckets and purities before calling this.
pub fn bucket_means(buckets: &[Bucket], purities: &[f64]) -> Vec<NeighborPurity> {
    Bucket::ALL
        .iter()
        .map(|&b| {
            let members: Vec<f64> = buckets
                .iter()
                .zip(purities)
                .filter(|&(&x, _)| x == b)
                .map(|(_, &p)| p)
                .collect();
            NeighborPurity {
                bucket: b,
                count: members.len(),
                purity: (!members.is_empty())
                    .then(|| members.iter().sum::<f64>() / members.len() as f64),
            }
        })
        .collect()
}

/// Percentage of examples whose weight differs from the complex-only weight
/// by more than `threshold`, relative to the complex-only weight floored at
/// the probability floor.
pub fn weight_change_fraction(
    w_full: &[f64],
    w_complex_only: &[f64],
    threshold: f64,
) -> Result<f64> {
    if w_full.len() != w_complex_only.len() {
        return Err(Error::DimensionMismatch {
            expected: w_complex_only.len(),
            actual: w_full.len(),
        });
    }
    if w_full.is_empty() {
        return Ok(0.0);
    }
    let changed = w_full
        .iter()
        .zip(w_complex_only)
        .filter(|&(&a, &b)| (a - b).abs() / b.max(PROBABILITY_FLOOR) > threshold)
        .count();
    Ok(100.0 * changed as f64 / w_full.len() as f64)
}

/// Results for one (dataset, complex model, simple model) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub complex: String,
    pub simple: String,
    pub summaries: Vec<RunSummary>,
}

pub fn write_results_csv<W: Write>(rows: &[ResultRow], config_hash: &str, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "dataset",
        "complex",
        "simple",
        "method",
        "mean",
        "ci95_halfwidth",
        "splits",
        "config_hash",
    ])?;
    for row in rows {
        for s in &row.summaries {
            w.write_record([
                row.dataset.as_str(),
                &row.complex,
                &row.simple,
                &s.method,
                &format!("{:.4}", s.mean),
                &format!("{:.4}", s.ci95_halfwidth),
                &s.errors.len().to_string(),
                config_hash,
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// One table row per combination, one `mean ± ci` column per method.
pub fn results_markdown(rows: &[ResultRow]) -> String {
    let mut methods: Vec<&str> = Vec::new();
    for s in rows.iter().flat_map(|r| &r.summaries) {
        if !methods.contains(&s.method.as_str()) {
            methods.push(&s.method);
        }
    }
    let mut out = format!("| Dataset | Complex | Simple | {} |\n", methods.join(" | "));
    out.push_str(&format!("|---|---|---|{}\n", "---|".repeat(methods.len())));
    for row in rows {
        let cells: Vec<String> = methods
            .iter()
            .map(|m| match row.summaries.iter().find(|s| s.method == *m) {
                Some(s) => format!("{:.2} ± {:.2}", s.mean, s.ci95_halfwidth),
                None => "n/a".to_string(),
            })
            .collect();
        out.push_str(&format!(
            "| {} | {} | {} | {} |\n",
            row.dataset,
            row.complex,
            row.simple,
            cells.join(" | ")
        ));
    }
    out
}
