use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::analysis::CiMethod;
use crate::data::{load_csv, Dataset, LabelColumn};
use crate::ensembles::ForestOrdering;
use crate::error::{Error, Result};
use crate::learners::SvmParams;
use crate::synth;
use crate::transfer::{GapSource, SRatioConfig};

/// Where a benchmark dataset comes from.
///
/// Written as `synth:<generator>:<n>` (optionally `:<seed>`) or
/// `csv:<path>` (optionally `#<label column>`, default the last column).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetSource {
    Synthetic {
        generator: String,
        n: usize,
        seed: u64,
    },
    Csv {
        path: PathBuf,
        label: String,
    },
}

impl DatasetSource {
    pub fn name(&self) -> String {
        match self {
            DatasetSource::Synthetic { generator, n, .. } => format!("{generator}-{n}"),
            DatasetSource::Csv { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
        }
    }

    /// Relative CSV paths are resolved against `base`.
    pub fn load(&self, base: Option<&Path>) -> Result<Dataset> {
        match self {
            DatasetSource::Synthetic { generator, n, seed } => {
                synth::make_synthetic(generator, *n, *seed)
            }
            DatasetSource::Csv { path, label } => {
                let path = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                let column: LabelColumn = match label.parse() {
                    Ok(c) => c,
                    Err(never) => match never {},
                };
                load_csv(&path, &column, None)
            }
        }
    }
}

impl fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSource::Synthetic {
                generator,
                n,
                seed: 0,
            } => write!(f, "synth:{generator}:{n}"),
            DatasetSource::Synthetic { generator, n, seed } => {
                write!(f, "synth:{generator}:{n}:{seed}")
            }
            DatasetSource::Csv { path, label } => write!(f, "csv:{}#{label}", path.display()),
        }
    }
}

impl FromStr for DatasetSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Config(format!(
                "dataset {s:?} is neither synth:<gen>:<n>[:<seed>] nor csv:<path>[#<label>]"
            ))
        };
        if let Some(rest) = s.strip_prefix("synth:") {
            let parts: Vec<&str> = rest.split(':').collect();
            let (generator, n, seed) = match parts.as_slice() {
                [g, n] => (*g, *n, "0"),
                [g, n, seed] => (*g, *n, *seed),
                _ => return Err(bad()),
            };
            if !synth::GENERATORS.contains(&generator) {
                return Err(Error::Config(format!(
                    "unknown synthetic generator {generator:?}"
                )));
            }
            Ok(DatasetSource::Synthetic {
                generator: generator.to_string(),
                n: n.parse().map_err(|_| bad())?,
                seed: seed.parse().map_err(|_| bad())?,
            })
        } else if let Some(rest) = s.strip_prefix("csv:") {
            let (path, label) = rest.rsplit_once('#').unwrap_or((rest, "last"));
            if path.is_empty() {
                return Err(bad());
            }
            Ok(DatasetSource::Csv {
                path: PathBuf::from(path),
                label: label.to_string(),
            })
        } else {
            Err(bad())
        }
    }
}

impl Serialize for DatasetSource {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DatasetSource {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexKind {
    Boosting,
    Forest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimpleKind {
    Tree,
    Svm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Standard,
    Confweight,
    Distill1,
    Distill2,
    Sratio,
}

macro_rules! display_as_serde_name {
    ($($t:ty),*) => {
        $(impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let v = serde_json::to_value(self).map_err(|_| fmt::Error)?;
                f.write_str(v.as_str().ok_or(fmt::Error)?)
            }
        })*
    };
}

display_as_serde_name!(ComplexKind, SimpleKind, Method);

/// How neighbour purity is averaged over complex/simple combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PurityPooling {
    /// All points of all combinations of a dataset in one pool.
    #[default]
    Pooled,
    /// One mean per combination.
    PerCombination,
}

/// A benchmark run, read from a flat JSON object. Every field has a default
/// except `datasets`; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub datasets: Vec<DatasetSource>,
    pub complex_models: Vec<ComplexKind>,
    pub simple_models: Vec<SimpleKind>,
    pub methods: Vec<Method>,
    pub splits: usize,
    pub train_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
    pub n_trees: usize,
    pub graded_step: usize,
    pub boosting_learning_rate: f64,
    pub boosting_depth: usize,
    pub forest_depth: usize,
    pub forest_ordering: ForestOrdering,
    pub tree_depth: usize,
    pub svm_lambda: f64,
    pub svm_epochs: usize,
    pub svm_learning_rate: f64,
    pub svr_epsilon: f64,
    /// Standardize features inside the SVM and SVR learners.
    pub svm_standardize: bool,
    pub cv_folds: usize,
    pub gamma_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    pub gap_source: GapSource,
    pub reuse_full_simple: bool,
    pub ci: CiMethod,
    pub purity_k: usize,
    pub purity_pooling: PurityPooling,
    pub change_threshold: f64,
    pub save_models: bool,
    pub output_dir: PathBuf,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let svm = SvmParams::default();
        BenchConfig {
            datasets: Vec::new(),
            complex_models: vec![ComplexKind::Boosting],
            simple_models: vec![SimpleKind::Tree],
            methods: vec![Method::Standard, Method::Sratio],
            splits: 10,
            train_fraction: 0.7,
            stratified: true,
            seed: 0,
            n_trees: 100,
            graded_step: 10,
            boosting_learning_rate: 0.1,
            boosting_depth: 3,
            forest_depth: 10,
            forest_ordering: ForestOrdering::TrainingAccuracy,
            tree_depth: 5,
            svm_lambda: svm.reg_lambda,
            svm_epochs: svm.epochs,
            svm_learning_rate: svm.learning_rate,
            svr_epsilon: svm.epsilon_insensitive,
            svm_standardize: true,
            cv_folds: 10,
            gamma_grid: SRatioConfig::default_gamma_grid(),
            beta_grid: SRatioConfig::default_beta_grid(),
            gap_source: GapSource::Training,
            reuse_full_simple: false,
            ci: CiMethod::Normal,
            purity_k: 10,
            purity_pooling: PurityPooling::Pooled,
            change_threshold: 0.01,
            save_models: false,
            output_dir: PathBuf::from("runs/latest"),
        }
    }
}

impl BenchConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: BenchConfig = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.datasets.is_empty() {
            return fail("at least one dataset is required");
        }
        if self.complex_models.is_empty()
            || self.simple_models.is_empty()
            || self.methods.is_empty()
        {
            return fail("complex_models, simple_models and methods must be nonempty");
        }
        if self.splits < 2 {
            return fail("splits must be at least 2");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail("train_fraction must lie in (0, 1)");
        }
        if self.n_trees == 0 || self.graded_step == 0 || self.tree_depth == 0 {
            return fail("n_trees, graded_step and tree_depth must be positive");
        }
        if self.cv_folds < 2 {
            return fail("cv_folds must be at least 2");
        }
        if self.gamma_grid.is_empty() || self.beta_grid.is_empty() {
            return fail("gamma_grid and beta_grid must be nonempty");
        }
        if self.gamma_grid.iter().any(|g| g.is_nan() || *g < 0.0) {
            return fail("gamma values must be nonnegative");
        }
        if self.beta_grid.iter().any(|b| b.is_nan() || *b < 1.0) {
            return fail("beta values must be at least 1");
        }
        if self.purity_k == 0 {
            return fail("purity_k must be positive");
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring `output_dir`.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn svm_params(&self, seed: u64) -> SvmParams {
        SvmParams {
            reg_lambda: self.svm_lambda,
            epochs: self.svm_epochs,
            learning_rate: self.svm_learning_rate,
            seed,
            epsilon_insensitive: self.svr_epsilon,
        }
    }

    pub fn sratio_config(&self, seed: u64) -> SRatioConfig {
        SRatioConfig {
            gamma_grid: self.gamma_grid.clone(),
            beta_grid: self.beta_grid.clone(),
            cv_folds: self.cv_folds,
            seed,
            reuse_full_simple: self.reuse_full_simple,
            gap_source: self.gap_source,
        }
    }
}
