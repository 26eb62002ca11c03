//! Reweighting training data for simple classifiers with confidence ratios
//! taken from graded simplifications of a complex model.
//!
//! See `book/` for a guided tour; every code block there runs as a doctest.

pub mod analysis;
pub mod bench;
pub mod data;
pub mod document;
pub mod ensembles;
pub mod error;
pub mod learners;
pub mod seed;
pub mod synth;
pub mod transfer;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $file:literal) => {
            #[doc = include_str!(concat!("../../../book/src/", $file))]
            mod $name {}
        };
    }

    chapter!(introduction, "introduction.md");
    chapter!(datasets, "datasets.md");
    chapter!(learners, "learners.md");
    chapter!(graded, "graded.md");
    chapter!(weights, "weights.md");
    chapter!(baselines, "baselines.md");
    chapter!(bench, "bench.md");
    chapter!(diagnostics, "diagnostics.md");
    chapter!(cli, "cli.md");
}
