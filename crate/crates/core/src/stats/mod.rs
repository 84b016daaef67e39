//! Contrast coding, design matrices, fixed-effects fits, and descriptive
//! summaries over the analysis table.

mod contrast;
mod design;
mod fit;
mod rows;
mod summary;

pub use contrast::{
    code_age_group, code_asr_type, code_gender, code_mfa_status, helmert_contrasts,
};
pub use design::{build_design, Design, Outcome, NEIGHBORHOOD_COLUMNS, WER_COLUMNS};
pub use fit::{
    fit_logistic_irls, fit_ols, fitted_probabilities, logistic_gradient, logistic_log_likelihood,
    render_fit, FitResult,
};
pub use rows::{
    read_analysis_csv, write_analysis_csv, write_coded_csv, AnalysisRow, NeighborhoodStatus,
    TokenOutcomeKind, ANALYSIS_HEADER,
};
pub use summary::{descriptive_summary, render_summary, ErrorCell, Summary, WerCell};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("invalid factor: {0}")]
    BadFactor(String),
    #[error("design matrix has no rows/columns")]
    EmptyDesign,
    #[error("design has {rows} rows but {responses} responses")]
    ShapeMismatch { rows: usize, responses: usize },
    #[error("rows missing {what}: indices {rows:?}")]
    MissingCovariates { what: String, rows: Vec<usize> },
    #[error("design matrix is rank deficient; collinear columns: {columns:?}")]
    RankDeficient { columns: Vec<String> },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("CSV error: {0}")]
    Csv(String),
}
