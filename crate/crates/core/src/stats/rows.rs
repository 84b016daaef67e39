//! The analysis table: one row per (target token, ASR type) observation.
//!
//! The on-disk form is a CSV with raw factor levels; coded design matrices
//! are derived on demand and can also be exported. Column order is fixed:
//!
//! ```text
//! target_word,speaker_id,utterance_id,variable,mfa_status,age_group,
//! gender,ses,asr_type,wer,token_outcome,neighborhood_status
//! ```

use crate::alignment::AsrType;
use crate::lexicon::Variable;
use crate::variants::{AgeGroup, Gender, MfaStatus, Ses};

use super::contrast::{code_age_group, code_asr_type, code_gender, code_mfa_status};
use super::StatsError;

/// Outcome of the target token under one ASR hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TokenOutcomeKind {
    Correct,
    Substituted,
    Deleted,
}

impl TokenOutcomeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TokenOutcomeKind::Correct => "correct",
            TokenOutcomeKind::Substituted => "substituted",
            TokenOutcomeKind::Deleted => "deleted",
        }
    }

    pub fn parse(s: &str) -> Option<TokenOutcomeKind> {
        match s {
            "correct" => Some(TokenOutcomeKind::Correct),
            "substituted" => Some(TokenOutcomeKind::Substituted),
            "deleted" => Some(TokenOutcomeKind::Deleted),
            _ => None,
        }
    }
}

/// Neighborhood coding of a substitution error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NeighborhoodStatus {
    NeighborError,
    NonNeighborError,
    /// Substitution whose hypothesis word has no known pronunciation.
    UnknownPron,
}

impl NeighborhoodStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            NeighborhoodStatus::NeighborError => "neighbor_error",
            NeighborhoodStatus::NonNeighborError => "non_neighbor_error",
            NeighborhoodStatus::UnknownPron => "unknown_pron",
        }
    }

    pub fn parse(s: &str) -> Option<NeighborhoodStatus> {
        match s {
            "neighbor_error" => Some(NeighborhoodStatus::NeighborError),
            "non_neighbor_error" => Some(NeighborhoodStatus::NonNeighborError),
            "unknown_pron" => Some(NeighborhoodStatus::UnknownPron),
            _ => None,
        }
    }
}

/// One analysis observation with raw (uncoded) factor levels.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRow {
    pub target_word: String,
    pub speaker_id: String,
    pub utterance_id: String,
    pub variable: Variable,
    pub mfa_status: MfaStatus,
    pub age_group: AgeGroup,
    pub gender: Gender,
    pub ses: Ses,
    pub asr_type: AsrType,
    /// Utterance WER attached to this token's utterance and ASR type.
    pub wer: f64,
    pub token_outcome: TokenOutcomeKind,
    /// Present only for classified substitution errors.
    pub neighborhood_status: Option<NeighborhoodStatus>,
}

pub const ANALYSIS_HEADER: [&str; 12] = [
    "target_word",
    "speaker_id",
    "utterance_id",
    "variable",
    "mfa_status",
    "age_group",
    "gender",
    "ses",
    "asr_type",
    "wer",
    "token_outcome",
    "neighborhood_status",
];

fn format_wer(wer: f64) -> String {
    format!("{wer:.6}")
}

/// Serialize rows to analysis CSV text (UTF-8, LF, mandatory header).
pub fn write_analysis_csv(rows: &[AnalysisRow]) -> Result<String, StatsError> {
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    writer
        .write_record(ANALYSIS_HEADER)
        .map_err(|e| StatsError::Csv(e.to_string()))?;
    for row in rows {
        writer
            .write_record([
                row.target_word.as_str(),
                row.speaker_id.as_str(),
                row.utterance_id.as_str(),
                &row.variable.to_string(),
                row.mfa_status.as_str(),
                row.age_group.as_str(),
                row.gender.as_str(),
                &row.ses.to_string(),
                row.asr_type.as_str(),
                &format_wer(row.wer),
                row.token_outcome.as_str(),
                row.neighborhood_status.map(|s| s.as_str()).unwrap_or(""),
            ])
            .map_err(|e| StatsError::Csv(e.to_string()))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| StatsError::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| StatsError::Csv(e.to_string()))
}

/// Parse analysis CSV text produced by [`write_analysis_csv`].
pub fn read_analysis_csv(text: &str) -> Result<Vec<AnalysisRow>, StatsError> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| StatsError::Csv(e.to_string()))?
        .clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != ANALYSIS_HEADER {
        return Err(StatsError::Csv(format!(
            "expected header {ANALYSIS_HEADER:?}, got {got:?}"
        )));
    }
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| StatsError::Csv(e.to_string()))?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let bad =
            |what: &str, value: &str| StatsError::Csv(format!("line {line}: bad {what} {value:?}"));
        let ns_raw = field(11);
        rows.push(AnalysisRow {
            target_word: field(0).to_string(),
            speaker_id: field(1).to_string(),
            utterance_id: field(2).to_string(),
            variable: Variable::parse(field(3)).ok_or_else(|| bad("variable", field(3)))?,
            mfa_status: match field(4) {
                "original" => MfaStatus::Original,
                "reduced" => MfaStatus::Reduced,
                "other" => MfaStatus::Other,
                other => return Err(bad("mfa_status", other)),
            },
            age_group: AgeGroup::parse(field(5)).ok_or_else(|| bad("age_group", field(5)))?,
            gender: Gender::parse(field(6)).ok_or_else(|| bad("gender", field(6)))?,
            ses: field(7)
                .parse::<u8>()
                .ok()
                .and_then(Ses::new)
                .ok_or_else(|| bad("ses", field(7)))?,
            asr_type: AsrType::parse(field(8)).ok_or_else(|| bad("asr_type", field(8)))?,
            wer: field(9).parse::<f64>().map_err(|_| bad("wer", field(9)))?,
            token_outcome: TokenOutcomeKind::parse(field(10))
                .ok_or_else(|| bad("token_outcome", field(10)))?,
            neighborhood_status: if ns_raw.is_empty() {
                None
            } else {
                Some(
                    NeighborhoodStatus::parse(ns_raw)
                        .ok_or_else(|| bad("neighborhood_status", ns_raw))?,
                )
            },
        });
    }
    Ok(rows)
}

/// Export rows with contrast-coded covariates alongside the identifiers.
pub fn write_coded_csv(rows: &[AnalysisRow]) -> Result<String, StatsError> {
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    writer
        .write_record([
            "target_word",
            "speaker_id",
            "utterance_id",
            "variable",
            "mfa_status_coded",
            "age_helmert_2_vs_1",
            "age_helmert_3_vs_12",
            "age_helmert_4_vs_123",
            "gender_coded",
            "asr_type_coded",
            "wer",
            "neighborhood_status",
        ])
        .map_err(|e| StatsError::Csv(e.to_string()))?;
    for row in rows {
        let mfa = code_mfa_status(row.mfa_status)
            .map(|v| format!("{v:.1}"))
            .unwrap_or_default();
        let age = code_age_group(row.age_group);
        let neighborhood = match row.neighborhood_status {
            Some(NeighborhoodStatus::NeighborError) => "1".to_string(),
            Some(NeighborhoodStatus::NonNeighborError) => "0".to_string(),
            _ => String::new(),
        };
        writer
            .write_record([
                row.target_word.as_str(),
                row.speaker_id.as_str(),
                row.utterance_id.as_str(),
                &row.variable.to_string(),
                &mfa,
                &format!("{:.6}", age[0]),
                &format!("{:.6}", age[1]),
                &format!("{:.6}", age[2]),
                &format!("{:.1}", code_gender(row.gender)),
                &format!("{:.1}", code_asr_type(row.asr_type)),
                &format_wer(row.wer),
                &neighborhood,
            ])
            .map_err(|e| StatsError::Csv(e.to_string()))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| StatsError::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| StatsError::Csv(e.to_string()))
}
