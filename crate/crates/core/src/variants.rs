//! Target-token extraction from alignment tiers and coding of each token as
//! Original or Reduced (the per-token `mfa_status`).
//!
//! A token is any word-tier interval whose orthography has at least one
//! `Reduced` variant in the expanded lexicon. Its realized pronunciation is
//! gathered from the phone tier and compared, stress-blind, against the
//! word's variants.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::lexicon::{Phone, PronVariant, Pronunciation, Variable, VariantForm, VariantLexicon};
use crate::textgrid::{is_silence_label, phones_within, Interval, Tier, TierPair};

#[derive(Debug, Error, PartialEq)]
pub enum VariantsError {
    #[error("speakers missing from metadata: {labels:?}")]
    MissingSpeakers { labels: Vec<String> },
    #[error("metadata line {line}: {reason}")]
    BadMetadata { line: usize, reason: String },
    #[error("metadata CSV: {0}")]
    MetadataCsv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub fn parse(s: &str) -> Option<Gender> {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" | "m" => Some(Gender::Male),
            "female" | "f" => Some(Gender::Female),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }
}

/// The four corpus age groups, youngest to oldest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AgeGroup {
    Ag1,
    Ag2,
    Ag3,
    Ag4,
}

impl AgeGroup {
    pub fn parse(s: &str) -> Option<AgeGroup> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ag1" | "1" => Some(AgeGroup::Ag1),
            "ag2" | "2" => Some(AgeGroup::Ag2),
            "ag3" | "3" => Some(AgeGroup::Ag3),
            "ag4" | "4" => Some(AgeGroup::Ag4),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            AgeGroup::Ag1 => "ag1",
            AgeGroup::Ag2 => "ag2",
            AgeGroup::Ag3 => "ag3",
            AgeGroup::Ag4 => "ag4",
        }
    }

    /// Zero-based level index (ag1 -> 0).
    pub fn index(&self) -> usize {
        match self {
            AgeGroup::Ag1 => 0,
            AgeGroup::Ag2 => 1,
            AgeGroup::Ag3 => 2,
            AgeGroup::Ag4 => 3,
        }
    }
}

/// Socioeconomic class, 1 (lowest) to 3 (highest).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Ses(u8);

impl Ses {
    pub fn new(value: u8) -> Option<Ses> {
        (1..=3).contains(&value).then_some(Ses(value))
    }

    pub fn value(&self) -> u8 {
        self.0
    }
}

impl fmt::Display for Ses {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Per-speaker demographic metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerMeta {
    pub speaker_id: String,
    pub gender: Gender,
    pub age_group: AgeGroup,
    pub ses: Ses,
}

impl SpeakerMeta {
    #[cfg(test)]
    pub(crate) fn test_speaker(id: &str) -> SpeakerMeta {
        SpeakerMeta {
            speaker_id: id.to_string(),
            gender: Gender::Female,
            age_group: AgeGroup::Ag1,
            ses: Ses::new(2).unwrap(),
        }
    }
}

/// Parse the speaker metadata manifest: CSV with header
/// `speaker_id,gender,age_group,ses`.
pub fn parse_speaker_metadata(text: &str) -> Result<BTreeMap<String, SpeakerMeta>, VariantsError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| VariantsError::MetadataCsv(e.to_string()))?
        .clone();
    let expected = ["speaker_id", "gender", "age_group", "ses"];
    let header_fields: Vec<&str> = headers.iter().collect();
    if header_fields != expected {
        return Err(VariantsError::MetadataCsv(format!(
            "expected header {expected:?}, got {header_fields:?}"
        )));
    }
    let mut out = BTreeMap::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| VariantsError::MetadataCsv(e.to_string()))?;
        let field = |i: usize| record.get(i).unwrap_or("").to_string();
        let speaker_id = field(0);
        if speaker_id.is_empty() {
            return Err(VariantsError::BadMetadata {
                line,
                reason: "empty speaker_id".to_string(),
            });
        }
        let gender = Gender::parse(&field(1)).ok_or_else(|| VariantsError::BadMetadata {
            line,
            reason: format!("bad gender {:?}", field(1)),
        })?;
        let age_group = AgeGroup::parse(&field(2)).ok_or_else(|| VariantsError::BadMetadata {
            line,
            reason: format!("bad age_group {:?}", field(2)),
        })?;
        let ses_raw = field(3);
        let ses = ses_raw
            .parse::<u8>()
            .ok()
            .and_then(Ses::new)
            .ok_or_else(|| VariantsError::BadMetadata {
                line,
                reason: format!("bad ses {ses_raw:?} (must be 1..3)"),
            })?;
        out.insert(
            speaker_id.clone(),
            SpeakerMeta {
                speaker_id,
                gender,
                age_group,
                ses,
            },
        );
    }
    Ok(out)
}

/// How forced alignment realized a target token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MfaStatus {
    Original,
    Reduced,
    /// Matched neither variant (third alternate, noise); retained in counts
    /// but excluded from the error statistics.
    Other,
}

impl MfaStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            MfaStatus::Original => "original",
            MfaStatus::Reduced => "reduced",
            MfaStatus::Other => "other",
        }
    }
}

/// One realized occurrence of a variant-prone target word.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenOccurrence {
    pub word: String,
    pub utterance_id: String,
    pub start: f64,
    pub end: f64,
    /// Phones the aligner emitted for this word, stress kept as given.
    pub realized: Pronunciation,
    pub mfa_status: MfaStatus,
    pub variable: Variable,
    pub speaker: SpeakerMeta,
}

/// Classify a realized pronunciation against a word's variants.
///
/// Comparison ignores stress digits. An exact base-sequence match against
/// any `Original` variant wins; otherwise a match against any `Reduced`
/// variant codes the token Reduced; anything else is Other.
pub fn classify_mfa_status(realized: &Pronunciation, variants: &[PronVariant]) -> MfaStatus {
    let realized_bases = realized.base_sequence();
    let matches = |v: &&PronVariant, form: VariantForm| {
        v.form == form && v.pron.base_sequence() == realized_bases
    };
    if variants.iter().any(|v| matches(&v, VariantForm::Original)) {
        return MfaStatus::Original;
    }
    if variants.iter().any(|v| matches(&v, VariantForm::Reduced)) {
        return MfaStatus::Reduced;
    }
    MfaStatus::Other
}

/// An utterance: a maximal run of word intervals with no internal pause
/// longer than the configured gap.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub speaker: String,
    pub start: f64,
    pub end: f64,
    /// Indices into the word tier's interval list.
    pub word_indices: Vec<usize>,
}

/// Group a word tier's non-silence intervals into utterances: a silence gap
/// longer than `pause_gap` seconds starts a new utterance. Ids are
/// `<speaker>-u<NNNN>` in time order.
pub fn segment_utterances(speaker: &str, word_tier: &Tier, pause_gap: f64) -> Vec<Utterance> {
    let mut utterances: Vec<Utterance> = Vec::new();
    let mut current: Option<(f64, f64, Vec<usize>)> = None;
    for (idx, iv) in word_tier.intervals.iter().enumerate() {
        if is_silence_label(&iv.text) {
            continue;
        }
        current = Some(match current.take() {
            Some((start, end, mut indices)) if iv.xmin - end <= pause_gap => {
                indices.push(idx);
                (start, iv.xmax, indices)
            }
            Some((start, end, indices)) => {
                utterances.push(Utterance {
                    id: format!("{speaker}-u{:04}", utterances.len()),
                    speaker: speaker.to_string(),
                    start,
                    end,
                    word_indices: indices,
                });
                (iv.xmin, iv.xmax, vec![idx])
            }
            None => (iv.xmin, iv.xmax, vec![idx]),
        });
    }
    if let Some((start, end, indices)) = current {
        utterances.push(Utterance {
            id: format!("{speaker}-u{:04}", utterances.len()),
            speaker: speaker.to_string(),
            start,
            end,
            word_indices: indices,
        });
    }
    utterances
}

/// Convert phone-tier interval labels into a pronunciation. Labels are
/// uppercased before parsing; unparseable labels yield `None`.
pub fn realized_pron(phone_intervals: &[&Interval]) -> Option<Pronunciation> {
    let mut phones = Vec::with_capacity(phone_intervals.len());
    for iv in phone_intervals {
        let token = iv.text.trim().to_ascii_uppercase();
        phones.push(Phone::parse(&token).ok()?);
    }
    Pronunciation::new(phones)
}

/// Configuration for token collection.
#[derive(Debug, Clone)]
pub struct CollectOptions {
    /// Midpoint slack when assigning phones to words, in seconds.
    pub slack: f64,
    /// Silence gap that starts a new utterance, in seconds.
    pub pause_gap: f64,
}

impl Default for CollectOptions {
    fn default() -> Self {
        CollectOptions {
            slack: 0.01,
            pause_gap: 1.0,
        }
    }
}

/// Pick the variable for a token. For a Reduced token the matched reduced
/// variant's variable applies; otherwise the word's first reduced variant
/// (in lexicon order) decides.
fn token_variable(realized: &Pronunciation, variants: &[PronVariant]) -> Option<Variable> {
    let realized_bases = realized.base_sequence();
    let reduced: Vec<&PronVariant> = variants
        .iter()
        .filter(|v| v.form == VariantForm::Reduced)
        .collect();
    if let Some(matched) = reduced
        .iter()
        .find(|v| v.pron.base_sequence() == realized_bases)
    {
        return matched.variable;
    }
    reduced.first().and_then(|v| v.variable)
}

/// A token plus the index of its word interval in the word tier.
#[derive(Debug, Clone, PartialEq)]
pub struct LocatedToken {
    pub word_index: usize,
    pub token: TokenOccurrence,
}

/// Result of collecting tokens from one speaker's tier pair.
#[derive(Debug, Clone)]
pub struct CollectedTokens {
    pub utterances: Vec<Utterance>,
    pub tokens: Vec<LocatedToken>,
    /// Word intervals whose phone span was empty or unparseable, skipped.
    pub skipped_words: usize,
}

/// Collect every variant-prone token from the given speaker tier pairs.
///
/// A word-tier interval produces a token when its case-folded text has a
/// Reduced variant in the expanded lexicon. Each matched speaker label must
/// be present in `meta`.
pub fn collect_target_tokens(
    pairs: &[TierPair<'_>],
    lex: &VariantLexicon,
    meta: &BTreeMap<String, SpeakerMeta>,
    opts: &CollectOptions,
) -> Result<Vec<CollectedTokens>, VariantsError> {
    let missing: Vec<String> = pairs
        .iter()
        .filter(|p| !meta.contains_key(&p.speaker))
        .map(|p| p.speaker.clone())
        .collect();
    if !missing.is_empty() {
        return Err(VariantsError::MissingSpeakers { labels: missing });
    }

    let mut out = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let speaker_meta = &meta[&pair.speaker];
        let utterances = segment_utterances(&pair.speaker, pair.words, opts.pause_gap);
        let mut tokens = Vec::new();
        let mut skipped = 0usize;
        for utterance in &utterances {
            for &word_idx in &utterance.word_indices {
                let word_iv = &pair.words.intervals[word_idx];
                let word_key = word_iv.text.trim().to_lowercase();
                let variants = lex.variants(&word_key);
                let has_reduced = variants.iter().any(|v| v.form == VariantForm::Reduced);
                if !has_reduced {
                    continue;
                }
                let phone_ivs = phones_within(word_iv, pair.phones, opts.slack);
                let Some(realized) = realized_pron(&phone_ivs) else {
                    skipped += 1;
                    continue;
                };
                let Some(variable) = token_variable(&realized, variants) else {
                    skipped += 1;
                    continue;
                };
                let mfa_status = classify_mfa_status(&realized, variants);
                tokens.push(LocatedToken {
                    word_index: word_idx,
                    token: TokenOccurrence {
                        word: word_key,
                        utterance_id: utterance.id.clone(),
                        start: word_iv.xmin,
                        end: word_iv.xmax,
                        realized,
                        mfa_status,
                        variable,
                        speaker: speaker_meta.clone(),
                    },
                });
            }
        }
        out.push(CollectedTokens {
            utterances,
            tokens,
            skipped_words: skipped,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{expand_lexicon, parse_cmu_dict, ExpandOptions};
    use crate::textgrid::{Interval, Tier};

    fn pron(s: &str) -> Pronunciation {
        Pronunciation::parse(s).unwrap()
    }

    fn cold_variants() -> Vec<PronVariant> {
        let lex = expand_lexicon(
            &parse_cmu_dict("COLD  K OW1 L D\n").unwrap(),
            None,
            &ExpandOptions::default(),
        );
        lex.variants("cold").to_vec()
    }

    #[test]
    fn classify_original() {
        assert_eq!(
            classify_mfa_status(&pron("K OW L D"), &cold_variants()),
            MfaStatus::Original
        );
    }

    #[test]
    fn classify_reduced() {
        assert_eq!(
            classify_mfa_status(&pron("K OW L"), &cold_variants()),
            MfaStatus::Reduced
        );
    }

    #[test]
    fn classify_other() {
        assert_eq!(
            classify_mfa_status(&pron("K AH L"), &cold_variants()),
            MfaStatus::Other
        );
    }

    #[test]
    fn classify_is_stress_blind() {
        let variants = cold_variants();
        for realized in ["K OW1 L D", "K OW0 L D", "K OW L D", "K OW2 L D"] {
            assert_eq!(
                classify_mfa_status(&pron(realized), &variants),
                MfaStatus::Original
            );
        }
    }

    #[test]
    fn classify_prefers_original_on_double_match() {
        // guarded: craft variants where the same pron appears as both forms
        let p = pron("K OW1 L");
        let variants = vec![
            PronVariant::original(p.clone()),
            PronVariant::reduced(p.clone(), Variable::Ccr),
        ];
        assert_eq!(
            classify_mfa_status(&pron("K OW L"), &variants),
            MfaStatus::Original
        );
    }

    fn word_tier(entries: &[(f64, f64, &str)]) -> Tier {
        Tier {
            name: "spk - words".to_string(),
            intervals: entries
                .iter()
                .map(|(a, b, t)| Interval {
                    xmin: *a,
                    xmax: *b,
                    text: t.to_string(),
                })
                .collect(),
        }
    }

    #[test]
    fn utterance_segmentation_by_gap() {
        let tier = word_tier(&[
            (0.0, 0.5, "the"),
            (0.5, 1.0, "cold"),
            (2.5, 3.0, "yeah"), // 1.5 s gap: new utterance
            (3.1, 3.5, "okay"),
        ]);
        let utts = segment_utterances("spk", &tier, 1.0);
        assert_eq!(utts.len(), 2);
        assert_eq!(utts[0].id, "spk-u0000");
        assert_eq!(utts[0].word_indices, vec![0, 1]);
        assert_eq!(utts[1].id, "spk-u0001");
        assert_eq!(utts[1].word_indices, vec![2, 3]);
        assert_eq!(utts[1].start, 2.5);
        assert_eq!(utts[1].end, 3.5);
    }

    #[test]
    fn utterance_segmentation_skips_silences() {
        let tier = word_tier(&[(0.0, 0.5, "hi"), (0.5, 2.0, ""), (2.0, 2.5, "there")]);
        // silence interval is not a word; the 1.5 s gap splits
        let utts = segment_utterances("spk", &tier, 1.0);
        assert_eq!(utts.len(), 2);
    }

    #[test]
    fn metadata_parses_and_validates() {
        let text = "speaker_id,gender,age_group,ses\nspk1,female,ag2,3\nspk2,M,ag4,1\n";
        let meta = parse_speaker_metadata(text).unwrap();
        assert_eq!(meta.len(), 2);
        assert_eq!(meta["spk1"].gender, Gender::Female);
        assert_eq!(meta["spk1"].age_group, AgeGroup::Ag2);
        assert_eq!(meta["spk2"].ses.value(), 1);

        let bad = "speaker_id,gender,age_group,ses\nspk1,female,ag9,3\n";
        assert!(parse_speaker_metadata(bad).is_err());
        let bad_header = "id,gender,age_group,ses\n";
        assert!(parse_speaker_metadata(bad_header).is_err());
        let bad_ses = "speaker_id,gender,age_group,ses\nspk1,female,ag1,4\n";
        assert!(parse_speaker_metadata(bad_ses).is_err());
    }

    fn fixture_pair() -> (Tier, Tier) {
        let words = word_tier(&[(0.0, 0.4, "the"), (0.4, 1.0, "cold"), (1.0, 1.4, "one")]);
        let phones = Tier {
            name: "spk - phones".to_string(),
            intervals: vec![
                Interval {
                    xmin: 0.0,
                    xmax: 0.2,
                    text: "DH".to_string(),
                },
                Interval {
                    xmin: 0.2,
                    xmax: 0.4,
                    text: "AH0".to_string(),
                },
                Interval {
                    xmin: 0.4,
                    xmax: 0.55,
                    text: "K".to_string(),
                },
                Interval {
                    xmin: 0.55,
                    xmax: 0.7,
                    text: "OW1".to_string(),
                },
                Interval {
                    xmin: 0.7,
                    xmax: 1.0,
                    text: "L".to_string(),
                },
                Interval {
                    xmin: 1.0,
                    xmax: 1.2,
                    text: "W".to_string(),
                },
                Interval {
                    xmin: 1.2,
                    xmax: 1.3,
                    text: "AH1".to_string(),
                },
                Interval {
                    xmin: 1.3,
                    xmax: 1.4,
                    text: "N".to_string(),
                },
            ],
        };
        (words, phones)
    }

    #[test]
    fn collect_tokens_codes_reduced_cold() {
        let (words, phones) = fixture_pair();
        let pair = TierPair {
            speaker: "spk".to_string(),
            words: &words,
            phones: &phones,
        };
        let lex = expand_lexicon(
            &parse_cmu_dict("COLD  K OW1 L D\nTHE  DH AH0\nONE  W AH1 N\n").unwrap(),
            None,
            &ExpandOptions::default(),
        );
        let mut meta = BTreeMap::new();
        meta.insert("spk".to_string(), SpeakerMeta::test_speaker("spk"));
        let collected =
            collect_target_tokens(&[pair], &lex, &meta, &CollectOptions::default()).unwrap();
        assert_eq!(collected.len(), 1);
        let tokens = &collected[0].tokens;
        assert_eq!(tokens.len(), 1);
        assert_eq!(tokens[0].word_index, 1);
        let token = &tokens[0].token;
        assert_eq!(token.word, "cold");
        assert_eq!(token.mfa_status, MfaStatus::Reduced);
        assert_eq!(token.variable, Variable::Ccr);
        assert_eq!(token.realized, pron("K OW1 L"));
        assert_eq!(token.utterance_id, "spk-u0000");
    }

    #[test]
    fn collect_requires_metadata() {
        let (words, phones) = fixture_pair();
        let pair = TierPair {
            speaker: "spk".to_string(),
            words: &words,
            phones: &phones,
        };
        let lex = VariantLexicon::new();
        let err =
            collect_target_tokens(&[pair], &lex, &BTreeMap::new(), &CollectOptions::default())
                .unwrap_err();
        assert_eq!(
            err,
            VariantsError::MissingSpeakers {
                labels: vec!["spk".to_string()]
            }
        );
    }

    #[test]
    fn collect_empty_without_variant_prone_words() {
        let (words, phones) = fixture_pair();
        let pair = TierPair {
            speaker: "spk".to_string(),
            words: &words,
            phones: &phones,
        };
        // lexicon has no reduced variants at all
        let lex = parse_cmu_dict("THE  DH AH0\n").unwrap();
        let mut meta = BTreeMap::new();
        meta.insert("spk".to_string(), SpeakerMeta::test_speaker("spk"));
        let collected =
            collect_target_tokens(&[pair], &lex, &meta, &CollectOptions::default()).unwrap();
        assert!(collected[0].tokens.is_empty());
    }
}
