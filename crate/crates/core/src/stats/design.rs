//! Design-matrix construction from analysis rows.

use nalgebra::{DMatrix, DVector};

use super::contrast::{code_age_group, code_asr_type, code_gender, code_mfa_status};
use super::rows::{AnalysisRow, NeighborhoodStatus};
use super::StatsError;

/// Which model a design matrix feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// WER regressed on MFA status, age, and gender.
    Wer,
    /// Neighborhood status (errors only) regressed on ASR type.
    Neighborhood,
}

/// A design matrix with its response and column names. Column order is
/// fixed and deterministic.
#[derive(Debug, Clone)]
pub struct Design {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub column_names: Vec<String>,
}

pub const WER_COLUMNS: [&str; 6] = [
    "intercept",
    "mfa_status",
    "age_2_vs_1",
    "age_3_vs_12",
    "age_4_vs_123",
    "gender",
];

pub const NEIGHBORHOOD_COLUMNS: [&str; 2] = ["intercept", "asr_type"];

/// Build the design matrix and response for one model.
///
/// For the WER outcome every row must carry a binary MFA status; for the
/// neighborhood outcome every row must be a classified error
/// (neighbor/non-neighbor). Offending row indices are listed in the error.
pub fn build_design(rows: &[AnalysisRow], outcome: Outcome) -> Result<Design, StatsError> {
    if rows.is_empty() {
        return Err(StatsError::EmptyDesign);
    }
    match outcome {
        Outcome::Wer => {
            let bad: Vec<usize> = rows
                .iter()
                .enumerate()
                .filter(|(_, r)| code_mfa_status(r.mfa_status).is_none())
                .map(|(i, _)| i)
                .collect();
            if !bad.is_empty() {
                return Err(StatsError::MissingCovariates {
                    what: "binary mfa_status".to_string(),
                    rows: bad,
                });
            }
            let n = rows.len();
            let mut x = DMatrix::zeros(n, 6);
            let mut y = DVector::zeros(n);
            for (i, row) in rows.iter().enumerate() {
                let age = code_age_group(row.age_group);
                x[(i, 0)] = 1.0;
                // unwrap: binary status verified above
                x[(i, 1)] = code_mfa_status(row.mfa_status).unwrap();
                x[(i, 2)] = age[0];
                x[(i, 3)] = age[1];
                x[(i, 4)] = age[2];
                x[(i, 5)] = code_gender(row.gender);
                y[i] = row.wer;
            }
            Ok(Design {
                x,
                y,
                column_names: WER_COLUMNS.iter().map(|s| s.to_string()).collect(),
            })
        }
        Outcome::Neighborhood => {
            let bad: Vec<usize> = rows
                .iter()
                .enumerate()
                .filter(|(_, r)| {
                    !matches!(
                        r.neighborhood_status,
                        Some(NeighborhoodStatus::NeighborError)
                            | Some(NeighborhoodStatus::NonNeighborError)
                    )
                })
                .map(|(i, _)| i)
                .collect();
            if !bad.is_empty() {
                return Err(StatsError::MissingCovariates {
                    what: "classified neighborhood_status".to_string(),
                    rows: bad,
                });
            }
            let n = rows.len();
            let mut x = DMatrix::zeros(n, 2);
            let mut y = DVector::zeros(n);
            for (i, row) in rows.iter().enumerate() {
                x[(i, 0)] = 1.0;
                x[(i, 1)] = code_asr_type(row.asr_type);
                y[i] = match row.neighborhood_status {
                    Some(NeighborhoodStatus::NeighborError) => 1.0,
                    _ => 0.0,
                };
            }
            Ok(Design {
                x,
                y,
                column_names: NEIGHBORHOOD_COLUMNS.iter().map(|s| s.to_string()).collect(),
            })
        }
    }
}
