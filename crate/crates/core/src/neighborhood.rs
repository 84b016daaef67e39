//! Phonological Levenshtein distance, distance-1 lexical neighbor
//! retrieval, and neighbor-vs-non-neighbor error attribution.
//!
//! A lexical neighbor of a pronunciation is any dictionary word reachable by
//! exactly one phone substitution, deletion, or addition. Stress digits are
//! stripped before any distance computation, and only `Original`
//! (citation-form) pronunciations are neighbor candidates unless the
//! sensitivity flag says otherwise.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::alignment::TokenOutcome;
use crate::lexicon::{PronVariant, Pronunciation, VariantForm, VariantLexicon};
use crate::variants::{MfaStatus, TokenOccurrence};

#[derive(Debug, Error, PartialEq)]
pub enum NeighborhoodError {
    #[error("token {word:?} has mfa_status Other; filter such tokens before attribution")]
    OtherStatus { word: String },
}

/// All distance-1 neighbors of a source pronunciation.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet {
    pub source_pron: Pronunciation,
    /// (word, pronunciation) pairs at phone edit distance exactly 1,
    /// ordered for determinism.
    pub neighbors: BTreeSet<(String, Pronunciation)>,
}

impl NeighborSet {
    pub fn contains_word(&self, word: &str) -> bool {
        let folded = word.to_lowercase();
        self.neighbors.iter().any(|(w, _)| *w == folded)
    }

    pub fn words(&self) -> BTreeSet<&str> {
        self.neighbors.iter().map(|(w, _)| w.as_str()).collect()
    }
}

/// Options for neighbor retrieval.
#[derive(Debug, Clone, Default)]
pub struct NeighborOptions {
    /// Include `Reduced` variants as candidate neighbor pronunciations.
    /// Off by default: reductions are expansion artifacts, not lexical
    /// competitors.
    pub include_reduced: bool,
}

/// Levenshtein distance over stress-stripped phone base sequences, unit
/// costs.
pub fn phon_distance(a: &Pronunciation, b: &Pronunciation) -> usize {
    let a = a.base_sequence();
    let b = b.base_sequence();
    let (n, m) = (a.len(), b.len());
    let mut prev: Vec<usize> = (0..=m).collect();
    let mut cur = vec![0usize; m + 1];
    for i in 1..=n {
        cur[0] = i;
        for j in 1..=m {
            let sub = usize::from(a[i - 1] != b[j - 1]);
            cur[j] = (prev[j - 1] + sub).min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// Exact test for `phon_distance(a, b) == 1` without running the full DP.
///
/// With unit costs, distance 1 means either equal lengths with exactly one
/// differing position, or lengths differing by one with the shorter
/// obtained by deleting a single phone from the longer.
fn is_distance_one(a: &[&str], b: &[&str]) -> bool {
    match a.len().abs_diff(b.len()) {
        0 => {
            let mismatches = a.iter().zip(b).filter(|(x, y)| x != y).count();
            mismatches == 1
        }
        1 => {
            let (long, short) = if a.len() > b.len() { (a, b) } else { (b, a) };
            let mut skipped = false;
            let (mut i, mut j) = (0usize, 0usize);
            while i < long.len() && j < short.len() {
                if long[i] == short[j] {
                    i += 1;
                    j += 1;
                } else if skipped {
                    return false;
                } else {
                    skipped = true;
                    i += 1;
                }
            }
            true
        }
        _ => false,
    }
}

/// Retrieve all dictionary words with at least one candidate pronunciation
/// at distance exactly 1 from `pron`.
///
/// A length prefilter (|len difference| <= 1) plus a direct distance-1 test
/// keeps this fast; the result is identical to a brute-force all-pairs
/// scan.
pub fn neighbors(
    pron: &Pronunciation,
    lex: &VariantLexicon,
    opts: &NeighborOptions,
) -> NeighborSet {
    let source = pron.base_sequence();
    let mut found = BTreeSet::new();
    for (word, variants) in lex.iter() {
        for variant in variants {
            if variant.form == VariantForm::Reduced && !opts.include_reduced {
                continue;
            }
            if variant.pron.len().abs_diff(source.len()) > 1 {
                continue;
            }
            let candidate = variant.pron.base_sequence();
            if is_distance_one(&source, &candidate) {
                found.insert((word.to_string(), variant.pron.clone()));
            }
        }
    }
    NeighborSet {
        source_pron: pron.clone(),
        neighbors: found,
    }
}

/// How a misrecognition (or its absence) relates to the lexical
/// neighborhood of the target's realized pronunciation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorAttribution {
    Correct,
    /// The hypothesis word is a distance-1 neighbor of the status-selected
    /// pronunciation.
    NeighborError,
    NonNeighborError,
    Deleted,
    /// The hypothesis word has no known pronunciation in the lexicon or the
    /// supplement; recorded for the unknown-word report.
    UnknownPron,
}

impl ErrorAttribution {
    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorAttribution::Correct => "correct",
            ErrorAttribution::NeighborError => "neighbor_error",
            ErrorAttribution::NonNeighborError => "non_neighbor_error",
            ErrorAttribution::Deleted => "deleted",
            ErrorAttribution::UnknownPron => "unknown_pron",
        }
    }
}

fn lookup_prons<'a>(
    word: &str,
    lex: &'a VariantLexicon,
    supplement: Option<&'a VariantLexicon>,
) -> Vec<&'a PronVariant> {
    let original_only = |vs: &'a [PronVariant]| -> Vec<&'a PronVariant> {
        vs.iter()
            .filter(|v| v.form == VariantForm::Original)
            .collect()
    };
    let from_lex = original_only(lex.variants(word));
    if !from_lex.is_empty() {
        return from_lex;
    }
    match supplement {
        Some(extra) => original_only(extra.variants(word)),
        None => Vec::new(),
    }
}

/// Attribute one target token's alignment outcome to the lexical
/// neighborhood effect.
///
/// The comparison pronunciation is the token's realized phone sequence —
/// the variant forced alignment selected — so a `Reduced` token is compared
/// against its reduced form. The hypothesis word's pronunciation is looked
/// up in the lexicon, then the supplement; when several exist the minimum
/// distance over them decides.
pub fn attribute_error(
    token: &TokenOccurrence,
    outcome: &TokenOutcome,
    lex: &VariantLexicon,
    supplement: Option<&VariantLexicon>,
) -> Result<ErrorAttribution, NeighborhoodError> {
    if token.mfa_status == MfaStatus::Other {
        return Err(NeighborhoodError::OtherStatus {
            word: token.word.clone(),
        });
    }
    let hypothesis = match outcome {
        TokenOutcome::Correct => return Ok(ErrorAttribution::Correct),
        TokenOutcome::Deleted => return Ok(ErrorAttribution::Deleted),
        TokenOutcome::Substituted { hypothesis } => hypothesis,
    };
    let candidates = lookup_prons(hypothesis, lex, supplement);
    if candidates.is_empty() {
        return Ok(ErrorAttribution::UnknownPron);
    }
    let min_distance = candidates
        .iter()
        .map(|v| phon_distance(&token.realized, &v.pron))
        .min()
        .unwrap_or(usize::MAX);
    if min_distance == 1 {
        Ok(ErrorAttribution::NeighborError)
    } else {
        Ok(ErrorAttribution::NonNeighborError)
    }
}
