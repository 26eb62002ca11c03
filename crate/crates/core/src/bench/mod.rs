//! The repeated-split benchmark: configuration, execution, and reports.
//!
//! Each split `r` of each dataset is drawn with its own derived seed. On every
//! split the complex models are fit once, then every simple model is trained
//! with every configured method and scored on the held-out part. Cells run in
//! parallel; the report is assembled after sorting, so it does not depend on
//! scheduling.

pub mod config;
pub mod diagnostics;
pub mod run;

pub use config::{BenchConfig, ComplexKind, DatasetSource, Method, PurityPooling, SimpleKind};
pub use diagnostics::{
    compute_diagnostics, write_diagnostics, ComboStat, Diagnostics, PurityRow, WeightDump,
};
pub use run::{
    compute_weights, run_benchmark, BenchRun, CellOutcome, CellRecord, ComplexRecord, ComplexRow,
    ExperimentReport,
};
