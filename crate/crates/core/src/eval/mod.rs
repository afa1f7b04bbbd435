//! Datasets, length strata, answer metrics, reports and grid search.

pub mod dataset;
pub mod grid;
pub mod metrics;
pub mod report;
pub mod run;
pub mod strata;

pub use dataset::{fever_label, load_dataset, parse_dataset, DatasetKind, EvalExample, Split};
pub use grid::{default_grid, grid_search, GridError, GridResult, GridRow, GridScore, GridSpec, HyperparamPoint, LookupEvaluator};
pub use metrics::{exact_match, f1, label_match, normalize_answer, score};
pub use report::{BucketScore, Overall, Report};
pub use run::{run_eval, EvalRun, ExampleResult};
pub use strata::{stratify, stratify_at, Bucket, LengthStrata, MediumSample, MIN_STRATIFY};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("need at least {needed} examples to stratify by length, got {got}")]
    TooFewExamples { needed: usize, got: usize },
    #[error("grid: {0}")]
    Grid(String),
}
