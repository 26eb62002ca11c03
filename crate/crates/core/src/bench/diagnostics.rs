//! Weight diagnostics computed from per-split weight dumps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    bucket_means, summarize, weight_buckets, weight_change_fraction, zero_weight_fraction, Bucket,
    CiMethod, NeighborPurity, RunSummary,
};
use crate::error::{Error, Result};
use crate::transfer::WeightReport;

use super::config::{ComplexKind, PurityPooling, SimpleKind};

/// Everything needed to recompute the diagnostics of one SRatio fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightDump {
    pub dataset: String,
    pub complex: ComplexKind,
    pub simple: SimpleKind,
    /// `None` when the weights were computed on a whole dataset.
    pub split: Option<usize>,
    pub config_hash: String,
    pub report: WeightReport,
    /// Mean graded confidence over the same active set, without the simple
    /// model's denominator and without clipping.
    pub complex_only: Vec<f64>,
    /// Neighbour purity of every training point; empty when not computed.
    pub purity: Vec<f64>,
    /// Fraction of training points on which the graded sequence is ordered.
    pub gradedness: f64,
}

impl WeightDump {
    pub fn file_name(&self) -> String {
        let split = self
            .split
            .map_or_else(|| "full".to_string(), |r| format!("split{r}"));
        format!(
            "{}__{}__{}__{split}.json",
            self.dataset, self.complex, self.simple
        )
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(self.file_name());
        std::fs::write(&path, serde_json::to_string(self)?).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// Reads every dump in `dir`, sorted by file name.
    pub fn load_dir(dir: &Path) -> Result<Vec<WeightDump>> {
        let entries = std::fs::read_dir(dir)
            .map_err(|_| Error::MissingArtifact(format!("{}", dir.display())))?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(Error::MissingArtifact(format!(
                "no weight dumps in {}",
                dir.display()
            )));
        }
        paths
            .iter()
            .map(|p| {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Ok(serde_json::from_str(&text)?)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComboStat {
    pub dataset: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complex: Option<ComplexKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simple: Option<SimpleKind>,
    pub values: Vec<f64>,
    pub mean: f64,
    /// Absent with fewer than two values.
    pub ci95_halfwidth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityRow {
    pub dataset: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complex: Option<ComplexKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simple: Option<SimpleKind>,
    pub buckets: Vec<NeighborPurity>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Percentage of zero weights per (dataset, complex, simple).
    pub zero_weight: Vec<ComboStat>,
    /// Percentage of weights changed versus complex-only weighting, per
    /// (dataset, simple), pooled over complex models.
    pub weight_change: Vec<ComboStat>,
    /// Empirical gradedness per (dataset, complex).
    pub gradedness: Vec<ComboStat>,
    pub purity: Vec<PurityRow>,
}

fn stat(
    dataset: &str,
    complex: Option<ComplexKind>,
    simple: Option<SimpleKind>,
    values: Vec<f64>,
    ci: CiMethod,
) -> ComboStat {
    let (mean, half) = match summarize("", values.clone(), ci) {
        Ok(RunSummary {
            mean,
            ci95_halfwidth,
            ..
        }) => (mean, Some(ci95_halfwidth)),
        Err(_) => (
            values.iter().sum::<f64>() / values.len().max(1) as f64,
            None,
        ),
    };
    ComboStat {
        dataset: dataset.to_string(),
        complex,
        simple,
        values,
        mean,
        ci95_halfwidth: half,
    }
}

/// Dataset order follows first appearance in `dumps`.
/// `(dataset rank, complex, simple)`; `None` when pooled over that axis.
type PurityKey = (usize, Option<ComplexKind>, Option<SimpleKind>);

pub fn compute_diagnostics(
    dumps: &[WeightDump],
    ci: CiMethod,
    change_threshold: f64,
    pooling: PurityPooling,
) -> Result<Diagnostics> {
    let mut datasets: Vec<&str> = Vec::new();
    for d in dumps {
        if !datasets.contains(&d.dataset.as_str()) {
            datasets.push(&d.dataset);
        }
    }
    let rank = |name: &str| {
        datasets
            .iter()
            .position(|d| *d == name)
            .unwrap_or(usize::MAX)
    };

    let mut zero: BTreeMap<(usize, ComplexKind, SimpleKind), Vec<f64>> = BTreeMap::new();
    let mut change: BTreeMap<(usize, SimpleKind), Vec<f64>> = BTreeMap::new();
    let mut graded: BTreeMap<(usize, ComplexKind), BTreeMap<Option<usize>, f64>> = BTreeMap::new();
    let mut purity: BTreeMap<PurityKey, (Vec<Bucket>, Vec<f64>)> = BTreeMap::new();
    for d in dumps {
        let r = rank(&d.dataset);
        let w = &d.report.weights;
        zero.entry((r, d.complex, d.simple))
            .or_default()
            .push(zero_weight_fraction(w));
        change
            .entry((r, d.simple))
            .or_default()
            .push(weight_change_fraction(
                w,
                &d.complex_only,
                change_threshold,
            )?);
        graded
            .entry((r, d.complex))
            .or_default()
            .insert(d.split, d.gradedness);
        if !d.purity.is_empty() {
            let key = match pooling {
                PurityPooling::Pooled => (r, None, None),
                PurityPooling::PerCombination => (r, Some(d.complex), Some(d.simple)),
            };
            let entry = purity.entry(key).or_default();
            entry.0.extend(weight_buckets(w));
            entry.1.extend_from_slice(&d.purity);
        }
    }
    Ok(Diagnostics {
        zero_weight: zero
            .into_iter()
            .map(|((r, c, s), v)| stat(datasets[r], Some(c), Some(s), v, ci))
            .collect(),
        weight_change: change
            .into_iter()
            .map(|((r, s), v)| stat(datasets[r], None, Some(s), v, ci))
            .collect(),
        gradedness: graded
            .into_iter()
            .map(|((r, c), v)| stat(datasets[r], Some(c), None, v.into_values().collect(), ci))
            .collect(),
        purity: purity
            .into_iter()
            .map(|((r, c, s), (b, p))| PurityRow {
                dataset: datasets[r].to_string(),
                complex: c,
                simple: s,
                buckets: bucket_means(&b, &p),
            })
            .collect(),
    })
}

fn label(v: Option<impl std::fmt::Display>) -> String {
    v.map_or_else(|| "all".to_string(), |x| x.to_string())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x:.4}"))
}

/// Writes each table as `<name>.csv` and a whitespace-separated
/// `<name>.dat` for plotting, both stamped with the config hash.
/// `(file stem, header, rows)`.
type Table<'a> = (&'a str, Vec<&'a str>, Vec<Vec<String>>);

pub fn write_diagnostics(
    diag: &Diagnostics,
    config_hash: &str,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tables: Vec<Table> = Vec::new();
    let stat_rows = |stats: &[ComboStat]| -> Vec<Vec<String>> {
        stats
            .iter()
            .map(|s| {
                vec![
                    s.dataset.clone(),
                    label(s.complex),
                    label(s.simple),
                    format!("{:.4}", s.mean),
                    fmt_opt(s.ci95_halfwidth),
                    s.values.len().to_string(),
                ]
            })
            .collect()
    };
    let stat_header = vec![
        "dataset",
        "complex",
        "simple",
        "mean",
        "ci95_halfwidth",
        "n",
    ];
    tables.push((
        "zero_weight",
        stat_header.clone(),
        stat_rows(&diag.zero_weight),
    ));
    tables.push((
        "weight_change",
        stat_header.clone(),
        stat_rows(&diag.weight_change),
    ));
    tables.push(("gradedness", stat_header, stat_rows(&diag.gradedness)));
    let purity_rows = diag
        .purity
        .iter()
        .flat_map(|p| {
            p.buckets.iter().map(move |b| {
                vec![
                    p.dataset.clone(),
                    label(p.complex),
                    label(p.simple),
                    b.bucket.name().to_string(),
                    b.count.to_string(),
                    fmt_opt(b.purity),
                ]
            })
        })
        .collect();
    tables.push((
        "purity",
        vec!["dataset", "complex", "simple", "bucket", "count", "purity"],
        purity_rows,
    ));

    let mut written = Vec::new();
    for (name, header, rows) in tables {
        let csv_path = dir.join(format!("{name}.csv"));
        let mut w = csv::Writer::from_path(&csv_path)?;
        let mut full_header = header.clone();
        full_header.push("config_hash");
        w.write_record(&full_header)?;
        for row in &rows {
            w.write_record(row.iter().map(String::as_str).chain([config_hash]))?;
        }
        w.flush().map_err(|e| Error::io(&csv_path, e))?;
        written.push(csv_path);

        let mut dat = format!("# config_hash {config_hash}\n# {}\n", header.join(" "));
        for row in &rows {
            let _ = writeln!(dat, "{}", row.join(" "));
        }
        let dat_path = dir.join(format!("{name}.dat"));
        std::fs::write(&dat_path, dat).map_err(|e| Error::io(&dat_path, e))?;
        written.push(dat_path);
    }
    Ok(written)
}
