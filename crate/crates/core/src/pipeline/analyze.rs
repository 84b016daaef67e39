//! The end-to-end analysis run: lexicon expansion, token collection,
//! per-utterance alignment against each ASR hypothesis, error attribution,
//! and deterministic emission of the analysis table and reports.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;

use crate::alignment::{align, normalize_line, normalize_token, AsrType, TokenOutcome};
use crate::lexicon::{expand_lexicon, parse_cmu_dict, ExpandOptions, VariantLexicon};
use crate::neighborhood::{attribute_error, ErrorAttribution};
use crate::stats::{
    descriptive_summary, render_summary, write_analysis_csv, write_coded_csv, AnalysisRow,
    NeighborhoodStatus, Summary, TokenOutcomeKind,
};
use crate::textgrid::{parse_textgrid, select_tiers, TierPair};
use crate::variants::{
    collect_target_tokens, parse_speaker_metadata, CollectOptions, LocatedToken, MfaStatus,
    SpeakerMeta,
};

use super::manifest::CorpusManifest;
use super::PipelineError;

/// Everything an analysis run produces, before any files are written.
#[derive(Debug)]
pub struct RunOutput {
    /// Analysis rows in their final deterministic order.
    pub rows: Vec<AnalysisRow>,
    pub summary: Summary,
    /// Hypothesis words with no known pronunciation, by descending count.
    pub unknown_words: Vec<(String, usize)>,
    pub warnings: Vec<String>,
    /// Per-recording failures; the run is partial when non-empty.
    pub failures: Vec<String>,
}

struct RunContext {
    lexicon: VariantLexicon,
    supplement: Option<VariantLexicon>,
    meta: BTreeMap<String, SpeakerMeta>,
    hypotheses: BTreeMap<(AsrType, String), String>,
    asr_types: Vec<AsrType>,
    noise_patterns: Vec<String>,
    collect_options: CollectOptions,
    word_pattern: String,
    phone_pattern: String,
}

#[derive(Debug, Default)]
struct RecordingOutput {
    rows: Vec<KeyedRow>,
    unknown_counts: BTreeMap<String, usize>,
    warnings: Vec<String>,
}

/// Row plus its deterministic sort key.
#[derive(Debug)]
struct KeyedRow {
    recording: String,
    utterance: String,
    start: f64,
    asr: AsrType,
    row: AnalysisRow,
}

fn read_to_string(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))
}

/// Load the hypothesis transcript CSVs: header `utterance_id,asr_type,text`.
fn load_hypotheses(
    manifest: &CorpusManifest,
) -> Result<BTreeMap<(AsrType, String), String>, PipelineError> {
    let mut out = BTreeMap::new();
    for (declared_asr, path) in &manifest.hypotheses {
        let text = read_to_string(path)?;
        let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| PipelineError::Hypotheses(format!("{}: {e}", path.display())))?
            .clone();
        let got: Vec<&str> = headers.iter().collect();
        if got != ["utterance_id", "asr_type", "text"] {
            return Err(PipelineError::Hypotheses(format!(
                "{}: expected header [utterance_id, asr_type, text], got {got:?}",
                path.display()
            )));
        }
        for (idx, record) in reader.records().enumerate() {
            let record = record
                .map_err(|e| PipelineError::Hypotheses(format!("{}: {e}", path.display())))?;
            let line = idx + 2;
            let utterance_id = record.get(0).unwrap_or("").to_string();
            let asr_raw = record.get(1).unwrap_or("");
            let text = record.get(2).unwrap_or("").to_string();
            let asr = AsrType::parse(asr_raw).ok_or_else(|| {
                PipelineError::Hypotheses(format!(
                    "{} line {line}: bad asr_type {asr_raw:?}",
                    path.display()
                ))
            })?;
            if asr != *declared_asr {
                return Err(PipelineError::Hypotheses(format!(
                    "{} line {line}: asr_type {asr_raw:?} does not match the manifest's {:?}",
                    path.display(),
                    declared_asr.as_str()
                )));
            }
            if utterance_id.is_empty() {
                return Err(PipelineError::Hypotheses(format!(
                    "{} line {line}: empty utterance_id",
                    path.display()
                )));
            }
            if out.insert((asr, utterance_id.clone()), text).is_some() {
                return Err(PipelineError::Hypotheses(format!(
                    "{} line {line}: duplicate hypothesis for ({}, {utterance_id})",
                    path.display(),
                    asr.as_str()
                )));
            }
        }
    }
    Ok(out)
}

fn build_context(manifest: &CorpusManifest) -> Result<RunContext, PipelineError> {
    let dict_text = read_to_string(&manifest.lexicon.dictionary)?;
    let base = parse_cmu_dict(&dict_text)?;
    let targets: Option<BTreeSet<String>> = match &manifest.lexicon.targets {
        Some(path) => Some(
            read_to_string(path)?
                .lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        ),
        None => None,
    };
    let mut expand_opts = ExpandOptions::default();
    if let Some(stops) = &manifest.lexicon.ccr_stops {
        expand_opts = expand_opts.with_stops(stops.iter().map(|s| s.to_uppercase()));
    }
    let lexicon = expand_lexicon(&base, targets.as_ref(), &expand_opts);
    let supplement = match &manifest.lexicon.supplement {
        Some(path) => Some(parse_cmu_dict(&read_to_string(path)?)?),
        None => None,
    };
    let meta = parse_speaker_metadata(&read_to_string(&manifest.speaker_metadata)?)?;
    let hypotheses = load_hypotheses(manifest)?;
    let mut asr_types: Vec<AsrType> = AsrType::ALL
        .into_iter()
        .filter(|asr| manifest.hypotheses.iter().any(|(a, _)| a == asr))
        .collect();
    asr_types.dedup();
    if asr_types.is_empty() {
        return Err(PipelineError::Manifest(
            "no hypothesis transcripts configured".to_string(),
        ));
    }
    Ok(RunContext {
        lexicon,
        supplement,
        meta,
        hypotheses,
        asr_types,
        noise_patterns: manifest.noise_patterns(),
        collect_options: CollectOptions {
            slack: manifest.options.slack,
            pause_gap: manifest.options.pause_gap,
        },
        word_pattern: manifest.tiers.word_pattern.clone(),
        phone_pattern: manifest.tiers.phone_pattern.clone(),
    })
}

fn attribution_to_columns(
    attribution: ErrorAttribution,
) -> (TokenOutcomeKind, Option<NeighborhoodStatus>) {
    match attribution {
        ErrorAttribution::Correct => (TokenOutcomeKind::Correct, None),
        ErrorAttribution::Deleted => (TokenOutcomeKind::Deleted, None),
        ErrorAttribution::NeighborError => (
            TokenOutcomeKind::Substituted,
            Some(NeighborhoodStatus::NeighborError),
        ),
        ErrorAttribution::NonNeighborError => (
            TokenOutcomeKind::Substituted,
            Some(NeighborhoodStatus::NonNeighborError),
        ),
        ErrorAttribution::UnknownPron => (
            TokenOutcomeKind::Substituted,
            Some(NeighborhoodStatus::UnknownPron),
        ),
    }
}

fn outcome_to_kind(outcome: &TokenOutcome) -> TokenOutcomeKind {
    match outcome {
        TokenOutcome::Correct => TokenOutcomeKind::Correct,
        TokenOutcome::Substituted { .. } => TokenOutcomeKind::Substituted,
        TokenOutcome::Deleted => TokenOutcomeKind::Deleted,
    }
}

fn process_pair(
    recording: &str,
    pair: &TierPair<'_>,
    located: &[LocatedToken],
    utterances: &[crate::variants::Utterance],
    ctx: &RunContext,
    output: &mut RecordingOutput,
) {
    // tokens grouped by utterance id (tokens arrive in utterance order)
    let mut tokens_by_utt: BTreeMap<&str, Vec<&LocatedToken>> = BTreeMap::new();
    for lt in located {
        tokens_by_utt
            .entry(&lt.token.utterance_id)
            .or_default()
            .push(lt);
    }

    for utterance in utterances {
        let Some(utt_tokens) = tokens_by_utt.get(utterance.id.as_str()) else {
            continue;
        };
        // reference token stream and word-interval -> reference-index map
        let mut ref_tokens: Vec<String> = Vec::with_capacity(utterance.word_indices.len());
        let mut ref_index: BTreeMap<usize, usize> = BTreeMap::new();
        for &wi in &utterance.word_indices {
            let text = &pair.words.intervals[wi].text;
            if let Some(token) = normalize_token(text, &ctx.noise_patterns) {
                ref_index.insert(wi, ref_tokens.len());
                ref_tokens.push(token);
            }
        }
        for &asr in &ctx.asr_types {
            let Some(hyp_text) = ctx.hypotheses.get(&(asr, utterance.id.clone())) else {
                output.warnings.push(format!(
                    "{recording}: no {} hypothesis for utterance {}",
                    asr.as_str(),
                    utterance.id
                ));
                continue;
            };
            let hyp_tokens = normalize_line(hyp_text, &ctx.noise_patterns);
            let result = align(&ref_tokens, &hyp_tokens);
            for lt in utt_tokens {
                let Some(&ref_idx) = ref_index.get(&lt.word_index) else {
                    output.warnings.push(format!(
                        "{recording}: token {:?} in {} dropped by normalization",
                        lt.token.word, utterance.id
                    ));
                    continue;
                };
                // in range by construction
                let Ok(outcome) = result.hyp_for_token(ref_idx) else {
                    continue;
                };
                let (token_outcome, neighborhood_status) =
                    if lt.token.mfa_status == MfaStatus::Other {
                        (outcome_to_kind(&outcome), None)
                    } else {
                        match attribute_error(
                            &lt.token,
                            &outcome,
                            &ctx.lexicon,
                            ctx.supplement.as_ref(),
                        ) {
                            Ok(attribution) => {
                                if attribution == ErrorAttribution::UnknownPron {
                                    if let TokenOutcome::Substituted { hypothesis } = &outcome {
                                        *output
                                            .unknown_counts
                                            .entry(hypothesis.clone())
                                            .or_insert(0) += 1;
                                    }
                                }
                                attribution_to_columns(attribution)
                            }
                            Err(_) => (outcome_to_kind(&outcome), None),
                        }
                    };
                output.rows.push(KeyedRow {
                    recording: recording.to_string(),
                    utterance: utterance.id.clone(),
                    start: lt.token.start,
                    asr,
                    row: AnalysisRow {
                        target_word: lt.token.word.clone(),
                        speaker_id: lt.token.speaker.speaker_id.clone(),
                        utterance_id: utterance.id.clone(),
                        variable: lt.token.variable,
                        mfa_status: lt.token.mfa_status,
                        age_group: lt.token.speaker.age_group,
                        gender: lt.token.speaker.gender,
                        ses: lt.token.speaker.ses,
                        asr_type: asr,
                        wer: result.wer(),
                        token_outcome,
                        neighborhood_status,
                    },
                });
            }
        }
    }
}

fn process_recording(
    manifest: &CorpusManifest,
    recording_id: &str,
    textgrid_path: &Path,
    ctx: &RunContext,
) -> Result<RecordingOutput, String> {
    let bytes = std::fs::read(textgrid_path).map_err(|e| {
        format!(
            "{recording_id}: cannot read {}: {e}",
            textgrid_path.display()
        )
    })?;
    let parsed = parse_textgrid(&bytes).map_err(|e| format!("{recording_id}: {e}"))?;
    let mut output = RecordingOutput::default();
    for warning in &parsed.warnings {
        output.warnings.push(format!("{recording_id}: {warning}"));
    }
    let selection = select_tiers(&parsed.grid, &ctx.word_pattern, &ctx.phone_pattern)
        .map_err(|e| format!("{recording_id}: {e}"))?;
    for label in &selection.unpaired {
        output.warnings.push(format!(
            "{recording_id}: unpaired tier for speaker {label:?}"
        ));
    }
    let pairs: Vec<TierPair<'_>> = selection
        .pairs
        .into_iter()
        .filter(|p| manifest.speaker_selected(&p.speaker))
        .collect();
    if pairs.is_empty() {
        output.warnings.push(format!(
            "{recording_id}: all speakers filtered out, nothing to analyze"
        ));
        return Ok(output);
    }
    let collected = collect_target_tokens(&pairs, &ctx.lexicon, &ctx.meta, &ctx.collect_options)
        .map_err(|e| format!("{recording_id}: {e}"))?;
    for (pair, col) in pairs.iter().zip(&collected) {
        if col.skipped_words > 0 {
            output.warnings.push(format!(
                "{recording_id}: {} word(s) for speaker {} skipped (no usable phone span)",
                col.skipped_words, pair.speaker
            ));
        }
        process_pair(
            recording_id,
            pair,
            &col.tokens,
            &col.utterances,
            ctx,
            &mut output,
        );
    }
    Ok(output)
}

/// Run the full analysis described by a manifest.
///
/// Recordings are processed in parallel (`options.workers` threads); the
/// output is byte-deterministic regardless of worker count or recording
/// order because rows are sorted by (recording, utterance, token start,
/// ASR type) before emission. Per-recording failures are collected, not
/// fatal; an empty final dataset is an error.
pub fn run_analysis(manifest: &CorpusManifest) -> Result<RunOutput, PipelineError> {
    let ctx = build_context(manifest)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(manifest.options.workers)
        .build()
        .map_err(|e| PipelineError::Io(format!("cannot build worker pool: {e}")))?;
    let results: Vec<Result<RecordingOutput, String>> = pool.install(|| {
        manifest
            .recordings
            .par_iter()
            .map(|rec| process_recording(manifest, &rec.id, &rec.textgrid, &ctx))
            .collect()
    });

    let mut keyed: Vec<KeyedRow> = Vec::new();
    let mut unknown: BTreeMap<String, usize> = BTreeMap::new();
    let mut warnings: Vec<String> = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    for result in results {
        match result {
            Ok(output) => {
                keyed.extend(output.rows);
                for (word, count) in output.unknown_counts {
                    *unknown.entry(word).or_insert(0) += count;
                }
                warnings.extend(output.warnings);
            }
            Err(failure) => failures.push(failure),
        }
    }
    warnings.sort();
    failures.sort();

    if keyed.is_empty() {
        return Err(PipelineError::EmptyDataset { failures });
    }

    keyed.sort_by(|a, b| {
        a.recording
            .cmp(&b.recording)
            .then_with(|| a.utterance.cmp(&b.utterance))
            .then_with(|| a.start.total_cmp(&b.start))
            .then_with(|| a.asr.cmp(&b.asr))
            .then_with(|| a.row.target_word.cmp(&b.row.target_word))
    });
    let rows: Vec<AnalysisRow> = keyed.into_iter().map(|k| k.row).collect();

    let mut unknown_words: Vec<(String, usize)> = unknown.into_iter().collect();
    unknown_words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let summary = descriptive_summary(&rows);
    Ok(RunOutput {
        rows,
        summary,
        unknown_words,
        warnings,
        failures,
    })
}

/// Serialize the unknown-word report: `word,count`, count descending.
pub fn render_unknown_words(unknown_words: &[(String, usize)]) -> String {
    let mut out = String::from("word,count\n");
    for (word, count) in unknown_words {
        out.push_str(&format!("{word},{count}\n"));
    }
    out
}

/// Run an analysis and write `analysis.csv`, `summary.txt`, and
/// `unknown_words.csv` (plus `analysis_coded.csv` when `coded`) under
/// `out_dir`.
pub fn run_analysis_to_dir(
    manifest: &CorpusManifest,
    out_dir: &Path,
    coded: bool,
) -> Result<RunOutput, PipelineError> {
    let output = run_analysis(manifest)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| PipelineError::Io(format!("{}: {e}", out_dir.display())))?;
    let write = |name: &str, contents: &str| -> Result<(), PipelineError> {
        let path = out_dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))
    };
    write("analysis.csv", &write_analysis_csv(&output.rows)?)?;
    write("summary.txt", &render_summary(&output.summary))?;
    write(
        "unknown_words.csv",
        &render_unknown_words(&output.unknown_words),
    )?;
    if coded {
        write("analysis_coded.csv", &write_coded_csv(&output.rows)?)?;
    }
    Ok(output)
}
