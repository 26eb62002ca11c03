use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    point_purities, results_markdown, summarize, write_results_csv, ResultRow, RunSummary, Selected,
};
use crate::data::{train_test_split, Dataset, SplitSpec};
use crate::document::{AnyModel, ModelDocument};
use crate::ensembles::{
    error_rate, fit_gradient_boosting, fit_random_forest, graded_from_boosting, graded_from_forest,
    measure_gradedness, BoostingParams, ComplexModel, ForestParams, GradedEnsemble,
};
use crate::error::{Error, Result};
use crate::learners::{
    Classifier, Standardized, SvmLearner, SvrLearner, TreeLearner, TreeParams,
    TreeRegressionLearner, WeightedLearner, WeightedRegressionLearner,
};
use crate::seed::derive_seed;
use crate::transfer::{
    complex_only_weights, confweight_weights, distill_proxy1, distill_proxy2, sratio_train,
    GradedScores, SoftScoreClassifier,
};

use super::config::{BenchConfig, ComplexKind, Method, SimpleKind};
use super::diagnostics::{compute_diagnostics, write_diagnostics, Diagnostics, WeightDump};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Ok {
        /// Test error in percent.
        test_error: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        selected: Option<Selected>,
    },
    Failed {
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub dataset: String,
    pub complex: ComplexKind,
    pub simple: SimpleKind,
    pub method: Method,
    pub split: usize,
    #[serde(flatten)]
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexRecord {
    pub dataset: String,
    pub complex: ComplexKind,
    pub split: usize,
    #[serde(flatten)]
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexRow {
    pub dataset: String,
    pub complex: ComplexKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<RunSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    /// Seconds since the Unix epoch; the only field that differs between
    /// reruns of one config.
    pub generated_at: u64,
    pub config: BenchConfig,
    pub results: Vec<ResultRow>,
    pub complex_results: Vec<ComplexRow>,
    pub cells: Vec<CellRecord>,
    pub complex_cells: Vec<ComplexRecord>,
    pub diagnostics: Diagnostics,
    pub failures: usize,
}

impl ExperimentReport {
    /// The report with `generated_at` zeroed, for comparing runs.
    pub fn without_timestamp(&self) -> Self {
        ExperimentReport {
            generated_at: 0,
            ..self.clone()
        }
    }

    pub fn summary(
        &self,
        dataset: &str,
        complex: ComplexKind,
        simple: SimpleKind,
        method: Method,
    ) -> Option<&RunSummary> {
        let (c, s, m) = (complex.to_string(), simple.to_string(), method.to_string());
        self.results
            .iter()
            .find(|r| r.dataset == dataset && r.complex == c && r.simple == s)?
            .summaries
            .iter()
            .find(|x| x.method == m)
    }
}

/// A finished benchmark together with the artifacts it writes.
#[derive(Debug, Clone)]
pub struct BenchRun {
    pub report: ExperimentReport,
    pub dumps: Vec<WeightDump>,
    /// Relative file name and document of every saved model.
    pub models: Vec<(String, ModelDocument)>,
}

impl BenchRun {
    /// Writes `report.json`, `config.json`, `results.csv`, `results.md`,
    /// `weights/`, `diagnostics/` and, when enabled, `models/`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let hash = &self.report.config_hash;
        let mkdir = |p: &Path| std::fs::create_dir_all(p).map_err(|e| Error::io(p, e));
        let write = |p: PathBuf, body: String| -> Result<PathBuf> {
            std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
            Ok(p)
        };
        mkdir(dir)?;
        let mut written = vec![
            write(
                dir.join("report.json"),
                serde_json::to_string_pretty(&self.report)?,
            )?,
            write(
                dir.join("config.json"),
                serde_json::to_string_pretty(&self.report.config)?,
            )?,
        ];
        let csv_path = dir.join("results.csv");
        let file = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        write_results_csv(&self.report.results, hash, file)?;
        written.push(csv_path);
        let md = format!(
            "<!-- config_hash: {hash} -->\n{}",
            results_markdown(&self.report.results)
        );
        written.push(write(dir.join("results.md"), md)?);
        if !self.dumps.is_empty() {
            let weights = dir.join("weights");
            mkdir(&weights)?;
            for d in &self.dumps {
                written.push(d.save(&weights)?);
            }
            written.extend(write_diagnostics(
                &self.report.diagnostics,
                hash,
                &dir.join("diagnostics"),
            )?);
        }
        if !self.models.is_empty() {
            let models = dir.join("models");
            mkdir(&models)?;
            for (name, doc) in &self.models {
                written.push(write(models.join(name), doc.to_json()?)?);
            }
        }
        Ok(written)
    }
}

struct Split {
    dataset: String,
    index: usize,
    train: Dataset,
    test: Dataset,
    purity: Vec<f64>,
}

#[derive(Default)]
struct UnitOutput {
    complex: Vec<ComplexRecord>,
    cells: Vec<CellRecord>,
    dumps: Vec<WeightDump>,
    models: Vec<(String, ModelDocument)>,
}

struct Ctx<'a> {
    cfg: &'a BenchConfig,
    hash: &'a str,
    split: &'a Split,
    complex_kind: ComplexKind,
}

impl Ctx<'_> {
    fn seed(&self, purpose: &str, extra: &[u64]) -> u64 {
        let tag = format!("{purpose}/{}", self.split.dataset);
        let mut idx = vec![self.split.index as u64];
        idx.extend_from_slice(extra);
        derive_seed(self.cfg.seed, &tag, &idx)
    }

    fn model_name(&self, parts: &[String]) -> String {
        format!(
            "{}__{}__split{}.json",
            self.split.dataset,
            parts.join("__"),
            self.split.index
        )
    }
}

fn pos<T: PartialEq>(xs: &[T], x: T) -> usize {
    xs.iter().position(|y| *y == x).unwrap_or(usize::MAX)
}

fn pct(e: f64) -> f64 {
    100.0 * e
}

fn fit_complex(ctx: &Ctx, train: &Dataset) -> Result<(ComplexModel, GradedEnsemble)> {
    let cfg = ctx.cfg;
    let seed = ctx.seed("complex", &[ctx.complex_kind as u64]);
    match ctx.complex_kind {
        ComplexKind::Boosting => {
            let m = fit_gradient_boosting(
                train,
                &BoostingParams {
                    n_trees: cfg.n_trees,
                    learning_rate: cfg.boosting_learning_rate,
                    max_depth: cfg.boosting_depth,
                    seed,
                },
            )?;
            let g = graded_from_boosting(&m, cfg.graded_step)?;
            Ok((ComplexModel::Boosting(m), g))
        }
        ComplexKind::Forest => {
            let m = fit_random_forest(
                train,
                &ForestParams {
                    n_trees: cfg.n_trees,
                    max_depth: cfg.forest_depth,
                    seed,
                    max_features: None,
                },
            )?;
            let g = graded_from_forest(&m, cfg.graded_step, cfg.forest_ordering)?;
            Ok((ComplexModel::Forest(m), g))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_simple<L, R>(
    ctx: &Ctx,
    simple: SimpleKind,
    learner: &L,
    regressor: &R,
    complex: &ComplexModel,
    graded: &GradedEnsemble,
    gradedness: f64,
    out: &mut UnitOutput,
) where
    L: WeightedLearner,
    R: WeightedRegressionLearner,
    L::Model: Into<AnyModel>,
    SoftScoreClassifier<R::Model>: Into<AnyModel>,
{
    let Split { train, test, .. } = ctx.split;
    let save = ctx.cfg.save_models;
    for &method in &ctx.cfg.methods {
        let name = ctx.model_name(&[
            ctx.complex_kind.to_string(),
            simple.to_string(),
            method.to_string(),
        ]);
        let mut keep = |doc: AnyModel| {
            if save {
                out.models.push((name.clone(), ModelDocument::new(doc)));
            }
        };
        let outcome: Result<(f64, Option<Selected>)> = match method {
            Method::Standard => learner.fit_unweighted(train).map(|m| {
                let e = error_rate(&m, test);
                keep(m.into());
                (e, None)
            }),
            Method::Confweight => {
                learner
                    .fit(train, &confweight_weights(complex, train))
                    .map(|m| {
                        let e = error_rate(&m, test);
                        keep(m.into());
                        (e, None)
                    })
            }
            Method::Distill1 => distill_proxy1(complex, learner, train).map(|m| {
                let e = error_rate(&m, test);
                keep(m.into());
                (e, None)
            }),
            Method::Distill2 => distill_proxy2(complex, regressor, train).map(|m| {
                let e = error_rate(&m as &dyn Classifier, test);
                keep(m.into());
                (e, None)
            }),
            Method::Sratio => {
                let seed = ctx.seed("sratio", &[ctx.complex_kind as u64, simple as u64]);
                sratio_train(graded, learner, train, &ctx.cfg.sratio_config(seed)).map(|fit| {
                    let e = error_rate(&fit.model, test);
                    let scores = GradedScores::compute(graded, train);
                    out.dumps.push(WeightDump {
                        dataset: ctx.split.dataset.clone(),
                        complex: ctx.complex_kind,
                        simple,
                        split: Some(ctx.split.index),
                        config_hash: ctx.hash.to_string(),
                        complex_only: complex_only_weights(&scores, &fit.report.active_set),
                        purity: ctx.split.purity.clone(),
                        gradedness,
                        report: fit.report.clone(),
                    });
                    keep(fit.model.into());
                    let selected = Selected {
                        gamma: fit.report.selected_gamma,
                        beta: fit.report.selected_beta,
                    };
                    (e, Some(selected))
                })
            }
        };
        out.cells.push(CellRecord {
            dataset: ctx.split.dataset.clone(),
            complex: ctx.complex_kind,
            simple,
            method,
            split: ctx.split.index,
            outcome: match outcome {
                Ok((e, selected)) => CellOutcome::Ok {
                    test_error: pct(e),
                    selected,
                },
                Err(e) => CellOutcome::Failed {
                    error: e.to_string(),
                },
            },
        });
    }
}

fn run_unit(ctx: &Ctx) -> UnitOutput {
    let mut out = UnitOutput::default();
    let split = ctx.split;
    let complex = fit_complex(ctx, &split.train);
    let record = |outcome| ComplexRecord {
        dataset: split.dataset.clone(),
        complex: ctx.complex_kind,
        split: split.index,
        outcome,
    };
    let (complex, graded) = match complex {
        Ok(x) => x,
        Err(e) => {
            let msg = format!("complex model failed: {e}");
            out.complex
                .push(record(CellOutcome::Failed { error: msg.clone() }));
            for &simple in &ctx.cfg.simple_models {
                for &method in &ctx.cfg.methods {
                    out.cells.push(CellRecord {
                        dataset: split.dataset.clone(),
                        complex: ctx.complex_kind,
                        simple,
                        method,
                        split: split.index,
                        outcome: CellOutcome::Failed { error: msg.clone() },
                    });
                }
            }
            return out;
        }
    };
    out.complex.push(record(CellOutcome::Ok {
        test_error: pct(error_rate(&complex, &split.test)),
        selected: None,
    }));
    let gradedness = measure_gradedness(&graded, &split.train);
    if ctx.cfg.save_models {
        out.models.push((
            ctx.model_name(&[ctx.complex_kind.to_string()]),
            ModelDocument::new(complex.clone()),
        ));
    }
    for &simple in &ctx.cfg.simple_models {
        match simple {
            SimpleKind::Tree => {
                let p = TreeParams::with_depth(ctx.cfg.tree_depth);
                run_simple(
                    ctx,
                    simple,
                    &TreeLearner(p),
                    &TreeRegressionLearner(p),
                    &complex,
                    &graded,
                    gradedness,
                    &mut out,
                );
            }
            SimpleKind::Svm => {
                let p = ctx.cfg.svm_params(ctx.seed("simple", &[simple as u64]));
                if ctx.cfg.svm_standardize {
                    let (l, r) = (Standardized(SvmLearner(p)), Standardized(SvrLearner(p)));
                    run_simple(ctx, simple, &l, &r, &complex, &graded, gradedness, &mut out);
                } else {
                    run_simple(
                        ctx,
                        simple,
                        &SvmLearner(p),
                        &SvrLearner(p),
                        &complex,
                        &graded,
                        gradedness,
                        &mut out,
                    );
                }
            }
        }
    }
    out
}

fn make_splits(
    cfg: &BenchConfig,
    base: Option<&Path>,
) -> Result<(Vec<String>, Vec<Result<Split>>)> {
    let mut names = Vec::new();
    let mut jobs = Vec::new();
    for source in &cfg.datasets {
        let name = source.name();
        if names.contains(&name) {
            return Err(Error::Config(format!(
                "dataset name {name:?} appears twice"
            )));
        }
        let ds = source.load(base)?;
        for r in 0..cfg.splits {
            jobs.push((name.clone(), ds.clone(), r));
        }
        names.push(name);
    }
    let need_purity = cfg.methods.contains(&Method::Sratio);
    let splits = jobs
        .into_par_iter()
        .map(|(name, ds, r)| {
            let spec = SplitSpec {
                train_fraction: cfg.train_fraction,
                seed: derive_seed(cfg.seed, &format!("split/{name}"), &[r as u64]),
                stratified: cfg.stratified,
            };
            let (train, test) = train_test_split(&ds, &spec)?;
            let purity = if need_purity {
                point_purities(&train, cfg.purity_k).unwrap_or_default()
            } else {
                Vec::new()
            };
            Ok(Split {
                dataset: name,
                index: r,
                train,
                test,
                purity,
            })
        })
        .collect();
    Ok((names, splits))
}

fn failed_split_cells(cfg: &BenchConfig, dataset: &str, split: usize, err: &Error) -> UnitOutput {
    let mut out = UnitOutput::default();
    let msg = format!("split failed: {err}");
    for &complex in &cfg.complex_models {
        out.complex.push(ComplexRecord {
            dataset: dataset.to_string(),
            complex,
            split,
            outcome: CellOutcome::Failed { error: msg.clone() },
        });
        for &simple in &cfg.simple_models {
            for &method in &cfg.methods {
                out.cells.push(CellRecord {
                    dataset: dataset.to_string(),
                    complex,
                    simple,
                    method,
                    split,
                    outcome: CellOutcome::Failed { error: msg.clone() },
                });
            }
        }
    }
    out
}

fn summarize_cells<'a>(
    method: String,
    cells: impl Iterator<Item = &'a CellOutcome>,
    cfg: &BenchConfig,
) -> Option<RunSummary> {
    let mut errors = Vec::new();
    let mut selected = Vec::new();
    for c in cells {
        if let CellOutcome::Ok {
            test_error,
            selected: s,
        } = c
        {
            errors.push(*test_error);
            selected.extend(*s);
        }
    }
    let mut summary = summarize(method, errors, cfg.ci).ok()?;
    summary.selected = selected;
    Some(summary)
}

/// Runs every configured cell. Relative CSV paths resolve against `base`.
pub fn run_benchmark(cfg: &BenchConfig, base: Option<&Path>) -> Result<BenchRun> {
    cfg.validate()?;
    let hash = cfg.hash();
    let (names, splits) = make_splits(cfg, base)?;
    let n_splits = cfg.splits;
    let units: Vec<(usize, ComplexKind)> = (0..splits.len())
        .flat_map(|s| cfg.complex_models.iter().map(move |&c| (s, c)))
        .collect();
    let outputs: Vec<UnitOutput> = units
        .into_par_iter()
        .map(|(s, complex_kind)| match &splits[s] {
            Ok(split) => run_unit(&Ctx {
                cfg,
                hash: &hash,
                split,
                complex_kind,
            }),
            Err(e) if complex_kind == cfg.complex_models[0] => {
                failed_split_cells(cfg, &names[s / n_splits], s % n_splits, e)
            }
            Err(_) => UnitOutput::default(),
        })
        .collect();

    let ds_rank = |n: &str| names.iter().position(|x| x == n).unwrap_or(usize::MAX);
    let mut cells = Vec::new();
    let mut complex_cells = Vec::new();
    let mut dumps = Vec::new();
    let mut models = Vec::new();
    for o in outputs {
        cells.extend(o.cells);
        complex_cells.extend(o.complex);
        dumps.extend(o.dumps);
        models.extend(o.models);
    }
    cells.sort_by_key(|c: &CellRecord| {
        (
            ds_rank(&c.dataset),
            pos(&cfg.complex_models, c.complex),
            pos(&cfg.simple_models, c.simple),
            pos(&cfg.methods, c.method),
            c.split,
        )
    });
    complex_cells.sort_by_key(|c| {
        (
            ds_rank(&c.dataset),
            pos(&cfg.complex_models, c.complex),
            c.split,
        )
    });
    dumps.sort_by_key(|d| {
        (
            ds_rank(&d.dataset),
            pos(&cfg.complex_models, d.complex),
            pos(&cfg.simple_models, d.simple),
            d.split,
        )
    });

    let mut grouped: BTreeMap<(usize, usize, usize, usize), Vec<&CellOutcome>> = BTreeMap::new();
    for c in &cells {
        let key = (
            ds_rank(&c.dataset),
            pos(&cfg.complex_models, c.complex),
            pos(&cfg.simple_models, c.simple),
            pos(&cfg.methods, c.method),
        );
        grouped.entry(key).or_default().push(&c.outcome);
    }
    let mut results: Vec<ResultRow> = Vec::new();
    for ((d, c, s, m), outcomes) in grouped {
        let summary = summarize_cells(cfg.methods[m].to_string(), outcomes.into_iter(), cfg);
        let (dataset, complex, simple) = (
            names[d].clone(),
            cfg.complex_models[c].to_string(),
            cfg.simple_models[s].to_string(),
        );
        let row = match results.last_mut() {
            Some(r) if r.dataset == dataset && r.complex == complex && r.simple == simple => r,
            _ => {
                results.push(ResultRow {
                    dataset,
                    complex,
                    simple,
                    summaries: Vec::new(),
                });
                results.last_mut().expect("just pushed")
            }
        };
        row.summaries.extend(summary);
    }
    let complex_results = names
        .iter()
        .flat_map(|d| cfg.complex_models.iter().map(move |&c| (d, c)))
        .map(|(d, c)| ComplexRow {
            dataset: d.clone(),
            complex: c,
            summary: summarize_cells(
                c.to_string(),
                complex_cells
                    .iter()
                    .filter(|x| &x.dataset == d && x.complex == c)
                    .map(|x| &x.outcome),
                cfg,
            ),
        })
        .collect();
    let diagnostics =
        compute_diagnostics(&dumps, cfg.ci, cfg.change_threshold, cfg.purity_pooling)?;
    let failures = cells
        .iter()
        .map(|c| &c.outcome)
        .chain(complex_cells.iter().map(|c| &c.outcome))
        .filter(|o| matches!(o, CellOutcome::Failed { .. }))
        .count();
    let generated_at = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    Ok(BenchRun {
        report: ExperimentReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: hash,
            seed: cfg.seed,
            generated_at,
            config: cfg.clone(),
            results,
            complex_results,
            cells,
            complex_cells,
            diagnostics,
            failures,
        },
        dumps,
        models,
    })
}

/// SRatio weights for every (dataset, complex, simple) combination, each
/// computed on the whole dataset.
pub fn compute_weights(cfg: &BenchConfig, base: Option<&Path>) -> Result<Vec<WeightDump>> {
    cfg.validate()?;
    let hash = cfg.hash();
    let mut sratio_only = cfg.clone();
    sratio_only.methods = vec![Method::Sratio];
    let mut dumps = Vec::new();
    for source in &cfg.datasets {
        let ds = source.load(base)?;
        let split = Split {
            dataset: source.name(),
            index: 0,
            purity: point_purities(&ds, cfg.purity_k).unwrap_or_default(),
            test: ds.clone(),
            train: ds,
        };
        let outputs: Vec<UnitOutput> = cfg
            .complex_models
            .par_iter()
            .map(|&complex_kind| {
                run_unit(&Ctx {
                    cfg: &sratio_only,
                    hash: &hash,
                    split: &split,
                    complex_kind,
                })
            })
            .collect();
        for o in outputs {
            if let Some(CellRecord {
                outcome: CellOutcome::Failed { error },
                ..
            }) = o
                .cells
                .iter()
                .find(|c| matches!(c.outcome, CellOutcome::Failed { .. }))
            {
                return Err(Error::InvalidParameter(error.clone()));
            }
            dumps.extend(o.dumps.into_iter().map(|d| WeightDump { split: None, ..d }));
        }
    }
    Ok(dumps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(methods: &str) -> BenchConfig {
        BenchConfig::from_json(&format!(
            r#"{{"datasets": ["synth:gaussian-blobs-2:120"], "splits": 2, "n_trees": 10, "graded_step": 5,
                "cv_folds": 3, "gamma_grid": [0.0], "beta_grid": [2.0, 5.0],
                "complex_models": ["boosting", "forest"], "simple_models": ["tree", "svm"],
                "svm_epochs": 5, "methods": {methods}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn every_cell_is_present_and_sorted() {
        let cfg = small(r#"["standard", "confweight", "distill1", "distill2", "sratio"]"#);
        let run = run_benchmark(&cfg, None).unwrap();
        let r = &run.report;
        assert_eq!(r.cells.len(), 2 * 2 * 5 * 2);
        assert_eq!(r.failures, 0);
        assert_eq!(r.results.len(), 4);
        assert!(r.results.iter().all(|row| row.summaries.len() == 5));
        assert_eq!(r.results[0].complex, "boosting");
        assert_eq!(r.results[0].simple, "tree");
        assert_eq!(run.dumps.len(), 2 * 2 * 2);
        let s = r
            .summary(
                "gaussian-blobs-2-120",
                ComplexKind::Boosting,
                SimpleKind::Tree,
                Method::Sratio,
            )
            .unwrap();
        assert_eq!(s.selected.len(), 2);
        assert_eq!(r.diagnostics.zero_weight.len(), 4);
    }

    #[test]
    fn reruns_are_identical_apart_from_timestamp() {
        let cfg = small(r#"["standard", "sratio"]"#);
        let a = run_benchmark(&cfg, None)
            .unwrap()
            .report
            .without_timestamp();
        let b = run_benchmark(&cfg, None)
            .unwrap()
            .report
            .without_timestamp();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn adding_a_method_leaves_other_cells_alone() {
        let a = run_benchmark(&small(r#"["standard"]"#), None)
            .unwrap()
            .report;
        let b = run_benchmark(&small(r#"["confweight", "standard"]"#), None)
            .unwrap()
            .report;
        let std_b: Vec<_> = b
            .cells
            .iter()
            .filter(|c| c.method == Method::Standard)
            .cloned()
            .collect();
        assert_eq!(a.cells, std_b);
    }

    #[test]
    fn failing_cells_are_recorded() {
        // 4 rows leave a 1-row test side per class and too few rows for 3 folds
        let mut cfg = small(r#"["standard", "sratio"]"#);
        cfg.datasets = vec!["synth:gaussian-blobs-2:4".parse().unwrap()];
        cfg.cv_folds = 5;
        cfg.complex_models = vec![ComplexKind::Boosting];
        cfg.simple_models = vec![SimpleKind::Tree];
        let r = run_benchmark(&cfg, None).unwrap().report;
        assert!(r.failures > 0);
        assert!(r
            .cells
            .iter()
            .any(|c| c.method == Method::Standard && matches!(c.outcome, CellOutcome::Ok { .. })));
        assert!(r.cells.iter().all(
            |c| c.method == Method::Standard || matches!(c.outcome, CellOutcome::Failed { .. })
        ));
    }

    #[test]
    fn writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(r#"["standard", "sratio"]"#);
        cfg.save_models = true;
        cfg.simple_models = vec![SimpleKind::Tree];
        cfg.complex_models = vec![ComplexKind::Boosting];
        let run = run_benchmark(&cfg, None).unwrap();
        let files = run.write(dir.path()).unwrap();
        for name in [
            "report.json",
            "results.csv",
            "results.md",
            "config.json",
            "diagnostics/purity.csv",
        ] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
        assert!(files
            .iter()
            .any(|f| f.starts_with(dir.path().join("models"))));
        let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
        assert!(csv.contains(&run.report.config_hash));
        let back: ExperimentReport =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
                .unwrap();
        assert_eq!(back, run.report);
    }

    #[test]
    fn weights_on_full_dataset() {
        let mut cfg = small(r#"["standard"]"#);
        cfg.complex_models = vec![ComplexKind::Boosting];
        cfg.simple_models = vec![SimpleKind::Tree];
        let dumps = compute_weights(&cfg, None).unwrap();
        assert_eq!(dumps.len(), 1);
        assert_eq!(dumps[0].report.weights.len(), 120);
        assert_eq!(dumps[0].split, None);
    }
}
