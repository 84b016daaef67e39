//! CMU-format pronouncing dictionaries and their expansion with reduced
//! pronunciation variants.
//!
//! Two reduction rules are implemented:
//!
//! * cluster reduction: the final stop of a word-final two-consonant
//!   cluster is dropped (`AH0 K S EH1 P T` -> `AH0 K S EH1 P`);
//! * -ing reduction: a word-final velar nasal after a vowel becomes
//!   alveolar in polysyllabic "-ing" words (`... IH0 NG` -> `... IH0 N`).
//!
//! Every entry parsed from a dictionary is an `Original` variant; expansion
//! adds `Reduced` variants tagged with the rule that produced them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// The 15 vowel symbols of the CMU 39-phone ARPAbet inventory.
pub const VOWELS: [&str; 15] = [
    "AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER", "EY", "IH", "IY", "OW", "OY", "UH", "UW",
];

/// Default stop inventory eligible as the dropped member of a final cluster.
pub const STOPS: [&str; 6] = ["P", "B", "T", "D", "K", "G"];

/// Voiced consonants (ARPAbet), used only by the optional voicing-agreement
/// constraint on cluster reduction.
const VOICED_CONSONANTS: [&str; 15] = [
    "B", "D", "DH", "G", "JH", "L", "M", "N", "NG", "R", "V", "W", "Y", "Z", "ZH",
];

#[derive(Debug, Error, PartialEq)]
pub enum LexiconError {
    #[error("line {line}: entry has no phones")]
    MissingPhones { line: usize },
    #[error("line {line}: unparseable phone token {token:?}: {reason}")]
    BadPhone {
        line: usize,
        token: String,
        reason: String,
    },
    #[error("line {line}: missing word")]
    MissingWord { line: usize },
}

/// One ARPAbet phone: an uppercase base symbol plus an optional stress digit.
///
/// Stress digits (0, 1, 2) appear on vowels only; a stressed consonant is
/// rejected at parse time.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Phone {
    base: String,
    stress: Option<u8>,
}

impl Phone {
    /// Parse a single phone token such as `EH1`, `T`, or `NG`.
    pub fn parse(token: &str) -> Result<Phone, String> {
        let (base, stress) = match token.chars().last() {
            Some(c) if c.is_ascii_digit() => {
                let digit = c as u8 - b'0';
                if digit > 2 {
                    return Err(format!("stress digit must be 0, 1, or 2, got {digit}"));
                }
                (&token[..token.len() - 1], Some(digit))
            }
            Some(_) => (token, None),
            None => return Err("empty token".to_string()),
        };
        if base.is_empty() {
            return Err("no base symbol before stress digit".to_string());
        }
        if !base.chars().all(|c| c.is_ascii_uppercase()) {
            return Err("base symbol must be uppercase alphabetic".to_string());
        }
        if stress.is_some() && !VOWELS.contains(&base) {
            return Err(format!("stress digit on non-vowel {base:?}"));
        }
        Ok(Phone {
            base: base.to_string(),
            stress,
        })
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn stress(&self) -> Option<u8> {
        self.stress
    }

    pub fn is_vowel(&self) -> bool {
        VOWELS.contains(&self.base.as_str())
    }

    /// A consonant is any phone that is not in the vowel set (and therefore
    /// never carries stress).
    pub fn is_consonant(&self) -> bool {
        !self.is_vowel()
    }

    fn is_voiced(&self) -> bool {
        self.is_vowel() || VOICED_CONSONANTS.contains(&self.base.as_str())
    }
}

impl fmt::Display for Phone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.stress {
            Some(d) => write!(f, "{}{}", self.base, d),
            None => write!(f, "{}", self.base),
        }
    }
}

/// A non-empty ordered sequence of phones.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pronunciation {
    phones: Vec<Phone>,
}

impl Pronunciation {
    pub fn new(phones: Vec<Phone>) -> Option<Pronunciation> {
        if phones.is_empty() {
            None
        } else {
            Some(Pronunciation { phones })
        }
    }

    /// Parse a whitespace-separated phone string such as `"AH0 K S EH1 P T"`.
    pub fn parse(s: &str) -> Result<Pronunciation, String> {
        let phones = s
            .split_whitespace()
            .map(Phone::parse)
            .collect::<Result<Vec<_>, _>>()?;
        Pronunciation::new(phones).ok_or_else(|| "empty pronunciation".to_string())
    }

    pub fn phones(&self) -> &[Phone] {
        &self.phones
    }

    pub fn len(&self) -> usize {
        self.phones.len()
    }

    /// Always false: pronunciations are non-empty by construction.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of phones carrying a stress digit. For dictionary entries this
    /// equals the vowel count and serves as the syllable count.
    pub fn syllable_count(&self) -> usize {
        self.phones.iter().filter(|p| p.stress.is_some()).count()
    }

    /// Base symbols with stress digits dropped.
    pub fn base_sequence(&self) -> Vec<&str> {
        self.phones.iter().map(|p| p.base.as_str()).collect()
    }
}

impl fmt::Display for Pronunciation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for p in &self.phones {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{p}")?;
            first = false;
        }
        Ok(())
    }
}

/// Whether a variant is a citation form or the product of a reduction rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VariantForm {
    Original,
    Reduced,
}

/// The phonological variable a reduced variant realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variable {
    Ccr,
    Ing,
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variable::Ccr => write!(f, "ccr"),
            Variable::Ing => write!(f, "ing"),
        }
    }
}

impl Variable {
    pub fn parse(s: &str) -> Option<Variable> {
        match s.to_ascii_lowercase().as_str() {
            "ccr" => Some(Variable::Ccr),
            "ing" => Some(Variable::Ing),
            _ => None,
        }
    }
}

/// One pronunciation of a word, tagged with its provenance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PronVariant {
    pub pron: Pronunciation,
    pub form: VariantForm,
    /// Set exactly when `form == Reduced`.
    pub variable: Option<Variable>,
}

impl PronVariant {
    pub fn original(pron: Pronunciation) -> PronVariant {
        PronVariant {
            pron,
            form: VariantForm::Original,
            variable: None,
        }
    }

    pub fn reduced(pron: Pronunciation, variable: Variable) -> PronVariant {
        PronVariant {
            pron,
            form: VariantForm::Reduced,
            variable: Some(variable),
        }
    }
}

/// Options controlling variant expansion.
#[derive(Debug, Clone)]
pub struct ExpandOptions {
    /// Stops eligible to be dropped by cluster reduction.
    pub ccr_stops: BTreeSet<String>,
    /// When set, a cluster is only reduced if the dropped stop agrees in
    /// voicing with the preceding consonant. Off by default.
    pub require_voicing_agreement: bool,
}

impl Default for ExpandOptions {
    fn default() -> Self {
        ExpandOptions {
            ccr_stops: STOPS.iter().map(|s| s.to_string()).collect(),
            require_voicing_agreement: false,
        }
    }
}

impl ExpandOptions {
    /// Restrict the droppable stop set, e.g. to `T,D`.
    pub fn with_stops<I: IntoIterator<Item = S>, S: Into<String>>(mut self, stops: I) -> Self {
        self.ccr_stops = stops.into_iter().map(Into::into).collect();
        self
    }
}

/// A pronouncing dictionary mapping case-folded words to their variants.
///
/// Word keys are stored lowercase; `serialize` re-uppercases them. Every
/// word holds at least one `Original` variant and no duplicate
/// (word, pronunciation) pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VariantLexicon {
    entries: BTreeMap<String, Vec<PronVariant>>,
}

impl VariantLexicon {
    pub fn new() -> VariantLexicon {
        VariantLexicon::default()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// All variants of `word` (case-folded lookup).
    pub fn variants(&self, word: &str) -> &[PronVariant] {
        self.entries
            .get(&word.to_lowercase())
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(&word.to_lowercase())
    }

    /// Iterate entries in word order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[PronVariant])> {
        self.entries.iter().map(|(w, v)| (w.as_str(), v.as_slice()))
    }

    /// Insert a variant, silently dropping duplicate (word, pron) pairs.
    /// Returns true when the variant was actually added.
    pub fn insert(&mut self, word: &str, variant: PronVariant) -> bool {
        let entry = self.entries.entry(word.to_lowercase()).or_default();
        if entry.iter().any(|v| v.pron == variant.pron) {
            return false;
        }
        entry.push(variant);
        true
    }

    /// Merge another lexicon's entries into this one (duplicates dropped).
    pub fn merge(&mut self, other: &VariantLexicon) {
        for (word, variants) in other.iter() {
            for v in variants {
                self.insert(word, v.clone());
            }
        }
    }
}

/// Strip a trailing alternate-pronunciation index like `(1)` from a raw
/// dictionary word. Only all-digit indices are stripped.
fn strip_alternate_index(word: &str) -> &str {
    if let Some(open) = word.rfind('(') {
        if word.ends_with(')') {
            let inner = &word[open + 1..word.len() - 1];
            if !inner.is_empty() && inner.chars().all(|c| c.is_ascii_digit()) {
                return &word[..open];
            }
        }
    }
    word
}

/// Parse CMU dictionary text: one `WORD  PH1 PH2 ...` entry per line,
/// alternates written `WORD(1)`, comment lines starting with `;;;`.
///
/// All entries load as `Original` variants; identical duplicate entries are
/// silently dropped. CRLF input is tolerated.
pub fn parse_cmu_dict(text: &str) -> Result<VariantLexicon, LexiconError> {
    let mut lex = VariantLexicon::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with(";;;") {
            continue;
        }
        let mut parts = line.split_whitespace();
        let raw_word = parts
            .next()
            .ok_or(LexiconError::MissingWord { line: line_no })?;
        let word = strip_alternate_index(raw_word);
        if word.is_empty() {
            return Err(LexiconError::MissingWord { line: line_no });
        }
        let mut phones = Vec::new();
        for token in parts {
            let phone = Phone::parse(token).map_err(|reason| LexiconError::BadPhone {
                line: line_no,
                token: token.to_string(),
                reason,
            })?;
            phones.push(phone);
        }
        let pron =
            Pronunciation::new(phones).ok_or(LexiconError::MissingPhones { line: line_no })?;
        lex.insert(word, PronVariant::original(pron));
    }
    Ok(lex)
}

/// Apply cluster reduction to one pronunciation.
///
/// Eligible iff the final phone is a stop from `opts.ccr_stops` and the
/// penultimate phone exists and is a consonant. Returns the pronunciation
/// with the final stop removed, or `None` when the rule does not apply.
/// Only two-consonant clusters are treated; the orthographic word plays no
/// role in this rule.
pub fn expand_ccr(
    _word: &str,
    pron: &Pronunciation,
    opts: &ExpandOptions,
) -> Option<Pronunciation> {
    let phones = pron.phones();
    let last = phones.last()?;
    if !opts.ccr_stops.contains(last.base()) {
        return None;
    }
    let penult = phones.get(phones.len().checked_sub(2)?)?;
    if !penult.is_consonant() {
        return None;
    }
    if opts.require_voicing_agreement && last.is_voiced() != penult.is_voiced() {
        return None;
    }
    Pronunciation::new(phones[..phones.len() - 1].to_vec())
}

/// Apply -ing reduction to one pronunciation.
///
/// Eligible iff the orthography ends in "ing" (case-insensitive), the final
/// phone is `NG` preceded by a vowel, and the word has at least two
/// syllables. Returns the pronunciation with final `NG` replaced by `N`.
pub fn expand_ing(word: &str, pron: &Pronunciation) -> Option<Pronunciation> {
    if !word.to_lowercase().ends_with("ing") {
        return None;
    }
    let phones = pron.phones();
    let last = phones.last()?;
    if last.base() != "NG" {
        return None;
    }
    let penult = phones.get(phones.len().checked_sub(2)?)?;
    if !penult.is_vowel() {
        return None;
    }
    if pron.syllable_count() < 2 {
        return None;
    }
    let mut reduced = phones.to_vec();
    *reduced.last_mut()? = Phone {
        base: "N".to_string(),
        stress: None,
    };
    Pronunciation::new(reduced)
}

/// Add every eligible reduced variant to the lexicon.
///
/// Each `Original` variant of each word (or of `target_filter` words only,
/// case-folded) is independently tested against both rules. Already-present
/// pronunciations are never duplicated, so expansion is idempotent.
pub fn expand_lexicon(
    lex: &VariantLexicon,
    target_filter: Option<&BTreeSet<String>>,
    opts: &ExpandOptions,
) -> VariantLexicon {
    let filter: Option<BTreeSet<String>> =
        target_filter.map(|words| words.iter().map(|w| w.to_lowercase()).collect());
    let mut out = lex.clone();
    for (word, variants) in lex.iter() {
        if let Some(f) = &filter {
            if !f.contains(word) {
                continue;
            }
        }
        for variant in variants {
            if variant.form != VariantForm::Original {
                continue;
            }
            if let Some(reduced) = expand_ccr(word, &variant.pron, opts) {
                out.insert(word, PronVariant::reduced(reduced, Variable::Ccr));
            }
            if let Some(reduced) = expand_ing(word, &variant.pron) {
                out.insert(word, PronVariant::reduced(reduced, Variable::Ing));
            }
        }
    }
    out
}

/// Serialize to CMU/MFA-compatible dictionary text.
///
/// One `WORD  PH1 PH2 ...` line per variant, uppercase words, LF endings,
/// ordered by word, then `Original` before `Reduced`, then pronunciation.
/// Re-parsing the output recovers the same (word, pron) pairs; form and
/// variable tags are not representable in the format.
pub fn serialize_dict(lex: &VariantLexicon) -> String {
    let mut out = String::new();
    for (word, variants) in lex.iter() {
        let mut ordered: Vec<&PronVariant> = variants.iter().collect();
        ordered.sort_by(|a, b| {
            a.form
                .cmp(&b.form)
                .then_with(|| a.pron.to_string().cmp(&b.pron.to_string()))
        });
        for v in ordered {
            out.push_str(&word.to_uppercase());
            out.push_str("  ");
            out.push_str(&v.pron.to_string());
            out.push('\n');
        }
    }
    out
}
