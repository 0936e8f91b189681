//! Species classification on frog-call MFCC features.
//!
//! The pipeline loads a CSV of per-syllable MFCC coefficients, removes
//! outliers, derives six data forms (raw, cleaned, min-max normalized,
//! z-score standardized, PCA and ICA projections) and evaluates six
//! classifiers on each with stratified k-fold cross-validation and a
//! held-out test split.
//!
//! ```
//! use anura_core::numcore::sym_eigen;
//! use ndarray::array;
//!
//! let e = sym_eigen(&array![[2.0, 1.0], [1.0, 2.0]]).unwrap();
//! assert!((e.eigenvalues[0] - 3.0).abs() < 1e-12);
//! assert!((e.eigenvalues[1] - 1.0).abs() < 1e-12);
//! ```

pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod models;
pub mod numcore;
pub mod preprocess;
pub mod reduce;
pub mod stats;
pub mod transform;

pub use config::{LeakageMode, PipelineConfig, ReduceBase, SeedPlan};
pub use dataset::{DataForm, Dataset};
pub use error::{Error, Result};
pub use eval::{run_grid, run_grid_with, EvalReport, Metric};
pub use models::{ClassifierKind, ClassifierModel, ClassifierSpec};

// The guide's chapters, compiled so their snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/cleaning.md")]
    mod cleaning {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    mod statistics {}
    #[doc = include_str!("../../../book/src/reduction.md")]
    mod reduction {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
