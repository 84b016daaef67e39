//! Descriptive summaries of the analysis table: WER distributions by
//! variable, MFA status, and ASR type, plus neighbor-error counts and
//! proportions per ASR type.

use std::collections::BTreeMap;

use crate::alignment::AsrType;
use crate::lexicon::Variable;
use crate::variants::MfaStatus;

use super::rows::{AnalysisRow, NeighborhoodStatus, TokenOutcomeKind};

/// Distribution statistics for one WER group.
#[derive(Debug, Clone, PartialEq)]
pub struct WerCell {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

/// Error counts for one ASR type.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorCell {
    /// All incorrect rows: substitutions and deletions.
    pub errors: usize,
    pub neighbor: usize,
    pub non_neighbor: usize,
    pub deleted: usize,
    pub unknown_pron: usize,
}

impl ErrorCell {
    /// Share of incorrect transcriptions attributed to the neighborhood
    /// effect.
    pub fn neighbor_proportion(&self) -> f64 {
        if self.errors == 0 {
            0.0
        } else {
            self.neighbor as f64 / self.errors as f64
        }
    }
}

/// The full descriptive summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub total_rows: usize,
    /// Rows per MFA status, including Other.
    pub status_counts: BTreeMap<MfaStatus, usize>,
    /// WER distribution per (variable, status, asr); binary statuses only.
    pub wer_groups: BTreeMap<(Variable, MfaStatus, AsrType), WerCell>,
    /// Error attribution counts per ASR type; binary statuses only.
    pub errors_by_asr: BTreeMap<AsrType, ErrorCell>,
}

/// Type-7 (linear interpolation) quantile of a sorted sample.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = (n - 1) as f64 * p;
            let lo = h.floor() as usize;
            let frac = h - lo as f64;
            if lo + 1 < n {
                sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
            } else {
                sorted[n - 1]
            }
        }
    }
}

fn wer_cell(mut values: Vec<f64>) -> WerCell {
    values.sort_by(|a, b| a.partial_cmp(b).expect("WER values are finite"));
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    WerCell {
        n,
        mean,
        median: quantile_sorted(&values, 0.5),
        q1: quantile_sorted(&values, 0.25),
        q3: quantile_sorted(&values, 0.75),
    }
}

/// Compute the descriptive summary over analysis rows.
///
/// Rows with `mfa_status = Other` are counted but excluded from the WER and
/// neighbor-error tables.
pub fn descriptive_summary(rows: &[AnalysisRow]) -> Summary {
    let mut status_counts: BTreeMap<MfaStatus, usize> = BTreeMap::new();
    let mut wer_values: BTreeMap<(Variable, MfaStatus, AsrType), Vec<f64>> = BTreeMap::new();
    let mut errors_by_asr: BTreeMap<AsrType, ErrorCell> = BTreeMap::new();
    for asr in AsrType::ALL {
        errors_by_asr.insert(asr, ErrorCell::default());
    }

    for row in rows {
        *status_counts.entry(row.mfa_status).or_insert(0) += 1;
        if row.mfa_status == MfaStatus::Other {
            continue;
        }
        wer_values
            .entry((row.variable, row.mfa_status, row.asr_type))
            .or_default()
            .push(row.wer);
        let cell = errors_by_asr.entry(row.asr_type).or_default();
        match row.token_outcome {
            TokenOutcomeKind::Correct => {}
            TokenOutcomeKind::Deleted => {
                cell.errors += 1;
                cell.deleted += 1;
            }
            TokenOutcomeKind::Substituted => {
                cell.errors += 1;
                match row.neighborhood_status {
                    Some(NeighborhoodStatus::NeighborError) => cell.neighbor += 1,
                    Some(NeighborhoodStatus::NonNeighborError) => cell.non_neighbor += 1,
                    Some(NeighborhoodStatus::UnknownPron) => cell.unknown_pron += 1,
                    None => {}
                }
            }
        }
    }

    Summary {
        total_rows: rows.len(),
        status_counts,
        wer_groups: wer_values
            .into_iter()
            .map(|(k, v)| (k, wer_cell(v)))
            .collect(),
        errors_by_asr,
    }
}

/// Render the summary as a plain-text report.
pub fn render_summary(summary: &Summary) -> String {
    let mut out = String::new();
    out.push_str("== token counts ==\n");
    out.push_str(&format!("rows: {}\n", summary.total_rows));
    for (status, count) in &summary.status_counts {
        out.push_str(&format!("mfa_status {}: {}\n", status.as_str(), count));
    }

    out.push_str("\n== wer by variable x mfa_status x asr_type ==\n");
    out.push_str("variable,mfa_status,asr_type,n,mean,median,q1,q3\n");
    for ((variable, status, asr), cell) in &summary.wer_groups {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6}\n",
            variable,
            status.as_str(),
            asr.as_str(),
            cell.n,
            cell.mean,
            cell.median,
            cell.q1,
            cell.q3
        ));
    }

    out.push_str("\n== neighbor errors by asr_type ==\n");
    out.push_str(
        "asr_type,errors,neighbor,non_neighbor,deleted,unknown_pron,neighbor_proportion\n",
    );
    for (asr, cell) in &summary.errors_by_asr {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.6}\n",
            asr.as_str(),
            cell.errors,
            cell.neighbor,
            cell.non_neighbor,
            cell.deleted,
            cell.unknown_pron,
            cell.neighbor_proportion()
        ));
    }

    let without = summary.errors_by_asr.get(&AsrType::WithoutLm);
    let with = summary.errors_by_asr.get(&AsrType::WithLm);
    if let (Some(w), Some(l)) = (without, with) {
        if w.errors > 0 && l.errors > 0 {
            let direction = if w.neighbor_proportion() > l.neighbor_proportion() {
                "holds"
            } else {
                "does not hold"
            };
            out.push_str(&format!(
                "\nLM direction check (without_lm neighbor proportion > with_lm): {direction} \
                 ({:.6} vs {:.6}); data-dependent, informational only\n",
                w.neighbor_proportion(),
                l.neighbor_proportion()
            ));
        }
    }
    out
}
