//! Synthetic corpus generation with known ground truth.
//!
//! The generator plants an exact number of reduced tokens and, per ASR
//! type, an exact number of errors of which an exact share are neighbor
//! confusions, so downstream proportions are exact decimals rather than
//! sampling approximations. Everything is a pure function of the seed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::alignment::AsrType;
use crate::lexicon::Variable;
use crate::textgrid::{render_textgrid, Interval, TextGrid, Tier};
use crate::variants::MfaStatus;

use super::PipelineError;

/// Knobs for fixture generation. Rates are fractions in [0, 1].
#[derive(Debug, Clone)]
pub struct FixtureSpec {
    /// Number of target tokens (one utterance each).
    pub tokens: usize,
    /// Fraction of tokens planted with the reduced pronunciation.
    pub reduced_rate: f64,
    /// Fraction of tokens misrecognized, per ASR type.
    pub error_rate: f64,
    /// Fraction of errors that are neighbor confusions, per ASR type:
    /// (without_lm, with_lm).
    pub neighbor_rates: (f64, f64),
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            tokens: 500,
            reduced_rate: 0.4,
            error_rate: 0.5,
            neighbor_rates: (0.10, 0.04),
        }
    }
}

impl FixtureSpec {
    fn validate(&self) -> Result<(), PipelineError> {
        let rates = [
            ("reduced_rate", self.reduced_rate),
            ("error_rate", self.error_rate),
            ("neighbor_rate without_lm", self.neighbor_rates.0),
            ("neighbor_rate with_lm", self.neighbor_rates.1),
        ];
        for (name, rate) in rates {
            if !(0.0..=1.0).contains(&rate) {
                return Err(PipelineError::Fixture(format!(
                    "{name} {rate} outside [0, 1]"
                )));
            }
        }
        if self.tokens == 0 {
            return Err(PipelineError::Fixture(
                "token count must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

/// One target word with its planted confusion vocabulary: a hypothesis
/// word at distance exactly 1 from the original pronunciation and one at
/// distance exactly 1 from the reduced pronunciation.
struct TargetEntry {
    word: &'static str,
    pron: &'static str,
    reduced: &'static str,
    variable: Variable,
    original_neighbor: &'static str,
    reduced_neighbor: &'static str,
}

const TARGETS: [TargetEntry; 8] = [
    TargetEntry {
        word: "cold",
        pron: "K OW1 L D",
        reduced: "K OW1 L",
        variable: Variable::Ccr,
        original_neighbor: "gold",
        reduced_neighbor: "call",
    },
    TargetEntry {
        word: "test",
        pron: "T EH1 S T",
        reduced: "T EH1 S",
        variable: Variable::Ccr,
        original_neighbor: "best",
        reduced_neighbor: "guess",
    },
    TargetEntry {
        word: "last",
        pron: "L AE1 S T",
        reduced: "L AE1 S",
        variable: Variable::Ccr,
        original_neighbor: "list",
        reduced_neighbor: "pass",
    },
    TargetEntry {
        word: "hand",
        pron: "HH AE1 N D",
        reduced: "HH AE1 N",
        variable: Variable::Ccr,
        original_neighbor: "band",
        reduced_neighbor: "an",
    },
    TargetEntry {
        word: "left",
        pron: "L EH1 F T",
        reduced: "L EH1 F",
        variable: Variable::Ccr,
        original_neighbor: "lift",
        reduced_neighbor: "deaf",
    },
    TargetEntry {
        word: "going",
        pron: "G OW1 IH0 NG",
        reduced: "G OW1 IH0 N",
        variable: Variable::Ing,
        original_neighbor: "boeing",
        reduced_neighbor: "owen",
    },
    TargetEntry {
        word: "running",
        pron: "R AH1 N IH0 NG",
        reduced: "R AH1 N IH0 N",
        variable: Variable::Ing,
        original_neighbor: "gunning",
        reduced_neighbor: "rennin",
    },
    TargetEntry {
        word: "talking",
        pron: "T AO1 K IH0 NG",
        reduced: "T AO1 K IH0 N",
        variable: Variable::Ing,
        original_neighbor: "walking",
        reduced_neighbor: "token",
    },
];

/// Hypothesis words, with pronunciations, for the planted confusions.
const HYPOTHESIS_WORDS: [(&str, &str); 17] = [
    ("gold", "G OW1 L D"),
    ("call", "K AO1 L"),
    ("best", "B EH1 S T"),
    ("guess", "G EH1 S"),
    ("list", "L IH1 S T"),
    ("pass", "P AE1 S"),
    ("band", "B AE1 N D"),
    ("an", "AE1 N"),
    ("lift", "L IH1 F T"),
    ("deaf", "D EH1 F"),
    ("boeing", "B OW1 IH0 NG"),
    ("owen", "OW1 IH0 N"),
    ("gunning", "G AH1 N IH0 NG"),
    ("rennin", "R EH1 N IH0 N"),
    ("walking", "W AO1 K IH0 NG"),
    ("token", "T OW1 K IH0 N"),
    ("refrigerator", "R IH0 F R IH1 JH ER0 EY2 T ER0"),
];

/// Distance > 1 from every target pronunciation (length prefilter alone
/// guarantees it).
const NON_NEIGHBOR: &str = "refrigerator";

/// Filler vocabulary; none is cluster- or -ing-reducible.
const FILLERS: [(&str, &str); 8] = [
    ("the", "DH AH0"),
    ("a", "AH0"),
    ("okay", "OW2 K EY1"),
    ("yeah", "Y AE1"),
    ("well", "W EH1 L"),
    ("so", "S OW1"),
    ("know", "N OW1"),
    ("see", "S IY1"),
];

// full age-by-gender factorial so the WER design matrix has full rank
const INTERVIEWEES: [(&str, &str, &str, &str); 8] = [
    ("DCA_se1_ag1_f_01", "female", "ag1", "1"),
    ("DCA_se1_ag1_m_02", "male", "ag1", "2"),
    ("DCA_se1_ag2_f_03", "female", "ag2", "3"),
    ("DCA_se1_ag2_m_04", "male", "ag2", "1"),
    ("DCA_se2_ag3_f_05", "female", "ag3", "2"),
    ("DCA_se2_ag3_m_06", "male", "ag3", "3"),
    ("DCA_se2_ag4_f_07", "female", "ag4", "1"),
    ("DCA_se2_ag4_m_08", "male", "ag4", "2"),
];

const INTERVIEWER: &str = "int01";
const WORD_DURATION: f64 = 0.3;
const WORD_GAP: f64 = 0.05;
const UTTERANCE_GAP: f64 = 1.5;

/// One planted token and everything the pipeline should recover about it.
#[derive(Debug, Clone)]
pub struct GroundTruthRow {
    pub utterance_id: String,
    pub target_word: String,
    pub speaker_id: String,
    pub mfa_status: MfaStatus,
    pub variable: Variable,
    pub asr_type: AsrType,
    pub token_outcome: &'static str,
    pub neighborhood_status: &'static str,
    pub wer: f64,
}

/// A generated corpus, as file name -> contents.
#[derive(Debug)]
pub struct FixtureCorpus {
    pub files: BTreeMap<String, String>,
    pub ground_truth: Vec<GroundTruthRow>,
}

struct PlannedWord {
    text: String,
    phones: Option<&'static str>,
}

struct PlannedUtterance {
    speaker_index: usize,
    words: Vec<PlannedWord>,
    target_position: usize,
    target_index: usize,
    reduced: bool,
    /// Per ASR type: hypothesis word replacing the target, or None when
    /// transcribed correctly.
    hyp_word: BTreeMap<AsrType, Option<&'static str>>,
}

#[cfg(test)]
fn pron_of(word: &str) -> &'static str {
    for (w, p) in FILLERS {
        if w == word {
            return p;
        }
    }
    for (w, p) in HYPOTHESIS_WORDS {
        if w == word {
            return p;
        }
    }
    for t in &TARGETS {
        if t.word == word {
            return t.pron;
        }
    }
    unreachable!("fixture vocabulary lookup for {word}")
}

/// Build the fixture dictionary text (original pronunciations only; the
/// pipeline performs its own expansion).
fn dictionary_text() -> String {
    let mut entries: Vec<(String, &str)> = Vec::new();
    for t in &TARGETS {
        entries.push((t.word.to_uppercase(), t.pron));
    }
    for (w, p) in FILLERS {
        entries.push((w.to_uppercase(), p));
    }
    for (w, p) in HYPOTHESIS_WORDS {
        entries.push((w.to_uppercase(), p));
    }
    entries.sort();
    entries.dedup();
    let mut out = String::new();
    for (word, pron) in entries {
        let _ = writeln!(out, "{word}  {pron}");
    }
    out
}

/// Exact planted count for a rate over a population.
fn exact_count(population: usize, rate: f64) -> usize {
    (population as f64 * rate).round() as usize
}

/// Generate a synthetic corpus fully determined by `seed`.
pub fn generate_fixture(seed: u64, spec: &FixtureSpec) -> Result<FixtureCorpus, PipelineError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.tokens;

    // exact planting: which tokens are reduced, which are errors per asr
    let n_reduced = exact_count(n, spec.reduced_rate);
    let mut reduced_flags = vec![false; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    for &i in order.iter().take(n_reduced) {
        reduced_flags[i] = true;
    }

    let mut error_plan: BTreeMap<AsrType, Vec<Option<bool>>> = BTreeMap::new();
    let neighbor_rate_of = |asr: AsrType| match asr {
        AsrType::WithoutLm => spec.neighbor_rates.0,
        AsrType::WithLm => spec.neighbor_rates.1,
    };
    for asr in AsrType::ALL {
        // None = correct; Some(true) = neighbor error; Some(false) = other error
        let n_err = exact_count(n, spec.error_rate);
        let n_neighbor = exact_count(n_err, neighbor_rate_of(asr));
        let mut plan = vec![None; n];
        let mut error_order: Vec<usize> = (0..n).collect();
        error_order.shuffle(&mut rng);
        for (k, &i) in error_order.iter().take(n_err).enumerate() {
            plan[i] = Some(k < n_neighbor);
        }
        error_plan.insert(asr, plan);
    }

    // plan utterances
    let mut utterances: Vec<PlannedUtterance> = Vec::with_capacity(n);
    for i in 0..n {
        let speaker_index = rng.gen_range(0..INTERVIEWEES.len());
        let target_index = rng.gen_range(0..TARGETS.len());
        let target = &TARGETS[target_index];
        let n_prefix = rng.gen_range(1..=3);
        let n_suffix = rng.gen_range(0..=2);
        let mut words: Vec<PlannedWord> = Vec::new();
        for _ in 0..n_prefix {
            let (w, p) = FILLERS[rng.gen_range(0..FILLERS.len())];
            words.push(PlannedWord {
                text: w.to_string(),
                phones: Some(p),
            });
        }
        // occasional transcription markup, dropped by normalization
        if rng.gen_bool(0.08) {
            words.push(PlannedWord {
                text: "(pause 0.5)".to_string(),
                phones: None,
            });
        }
        let target_position = words.len();
        words.push(PlannedWord {
            text: target.word.to_string(),
            phones: Some(if reduced_flags[i] {
                target.reduced
            } else {
                target.pron
            }),
        });
        for _ in 0..n_suffix {
            let (w, p) = FILLERS[rng.gen_range(0..FILLERS.len())];
            words.push(PlannedWord {
                text: w.to_string(),
                phones: Some(p),
            });
        }

        let mut hyp_word = BTreeMap::new();
        for asr in AsrType::ALL {
            let planted = match error_plan[&asr][i] {
                None => None,
                Some(true) => Some(if reduced_flags[i] {
                    target.reduced_neighbor
                } else {
                    target.original_neighbor
                }),
                Some(false) => Some(NON_NEIGHBOR),
            };
            hyp_word.insert(asr, planted);
        }
        utterances.push(PlannedUtterance {
            speaker_index,
            words,
            target_position,
            target_index,
            reduced: reduced_flags[i],
            hyp_word,
        });
    }

    // lay utterances on two recording timelines, two interviewees each,
    // with a few interviewer turns mixed in
    let mut files = BTreeMap::new();
    let mut ground_truth = Vec::new();
    let mut hyp_rows: BTreeMap<AsrType, Vec<(String, String)>> = BTreeMap::new();
    for asr in AsrType::ALL {
        hyp_rows.insert(asr, Vec::new());
    }

    for (rec_index, rec_id) in ["rec_a", "rec_b"].iter().enumerate() {
        let speaker_range = rec_index * 4..rec_index * 4 + 4;
        let mut rec_utts: Vec<(usize, &PlannedUtterance)> = utterances
            .iter()
            .enumerate()
            .filter(|(_, u)| speaker_range.contains(&u.speaker_index))
            .collect();
        // keep planting order: utterances are placed in token order
        rec_utts.sort_by_key(|(i, _)| *i);

        let mut clock = 0.5f64;
        let mut per_speaker_words: BTreeMap<&str, Vec<Interval>> = BTreeMap::new();
        let mut per_speaker_phones: BTreeMap<&str, Vec<Interval>> = BTreeMap::new();
        let mut utterance_counter: BTreeMap<&str, usize> = BTreeMap::new();
        for (label, _, _, _) in INTERVIEWEES.iter().skip(rec_index * 4).take(4) {
            per_speaker_words.insert(label, Vec::new());
            per_speaker_phones.insert(label, Vec::new());
            utterance_counter.insert(label, 0);
        }
        per_speaker_words.insert(INTERVIEWER, Vec::new());
        per_speaker_phones.insert(INTERVIEWER, Vec::new());

        for (turn, (_, utt)) in rec_utts.iter().enumerate() {
            // an interviewer turn (with a target word!) every 25 utterances;
            // the exclusion list must keep it out of the analysis
            if turn % 25 == 0 {
                clock = place_utterance(
                    clock,
                    INTERVIEWER,
                    &[
                        PlannedWord {
                            text: "so".to_string(),
                            phones: Some("S OW1"),
                        },
                        PlannedWord {
                            text: "cold".to_string(),
                            phones: Some("K OW1 L D"),
                        },
                    ],
                    &mut per_speaker_words,
                    &mut per_speaker_phones,
                );
            }
            let speaker = INTERVIEWEES[utt.speaker_index].0;
            let ordinal = utterance_counter.entry(speaker).or_insert(0);
            let utterance_id = format!("{speaker}-u{:04}", *ordinal);
            *ordinal += 1;

            clock = place_utterance(
                clock,
                speaker,
                &utt.words,
                &mut per_speaker_words,
                &mut per_speaker_phones,
            );

            // reference words surviving normalization (markup dropped)
            let ref_words: Vec<&str> = utt
                .words
                .iter()
                .filter(|w| w.phones.is_some())
                .map(|w| w.text.as_str())
                .collect();
            let target = &TARGETS[utt.target_index];
            for asr in AsrType::ALL {
                let planted = utt.hyp_word[&asr];
                let hyp_words: Vec<&str> = utt
                    .words
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| w.phones.is_some())
                    .map(|(pos, w)| match planted {
                        Some(replacement) if pos == utt.target_position => replacement,
                        _ => w.text.as_str(),
                    })
                    .collect();
                hyp_rows
                    .get_mut(&asr)
                    .expect("asr key")
                    .push((utterance_id.clone(), hyp_words.join(" ")));
                let (outcome, neighborhood) = match planted {
                    None => ("correct", ""),
                    Some(w) if w == NON_NEIGHBOR => ("substituted", "non_neighbor_error"),
                    Some(_) => ("substituted", "neighbor_error"),
                };
                ground_truth.push(GroundTruthRow {
                    utterance_id: utterance_id.clone(),
                    target_word: target.word.to_string(),
                    speaker_id: speaker.to_string(),
                    mfa_status: if utt.reduced {
                        MfaStatus::Reduced
                    } else {
                        MfaStatus::Original
                    },
                    variable: target.variable,
                    asr_type: asr,
                    token_outcome: outcome,
                    neighborhood_status: neighborhood,
                    wer: if planted.is_some() {
                        1.0 / ref_words.len() as f64
                    } else {
                        0.0
                    },
                });
            }
        }

        // assemble the grid: contiguous tiers with silence fill
        let grid_end = clock + 0.5;
        let mut tiers = Vec::new();
        let mut speakers: Vec<&str> = per_speaker_words.keys().cloned().collect();
        speakers.sort();
        for speaker in speakers {
            let words = fill_gaps(&per_speaker_words[speaker], grid_end);
            let phones = fill_gaps(&per_speaker_phones[speaker], grid_end);
            tiers.push(Tier {
                name: format!("{speaker} - words"),
                intervals: words,
            });
            tiers.push(Tier {
                name: format!("{speaker} - phones"),
                intervals: phones,
            });
        }
        let grid = TextGrid {
            xmin: 0.0,
            xmax: grid_end,
            tiers,
        };
        files.insert(format!("{rec_id}.TextGrid"), render_textgrid(&grid));
    }

    // hypothesis CSVs
    for asr in AsrType::ALL {
        let mut text = String::from("utterance_id,asr_type,text\n");
        for (utt_id, words) in &hyp_rows[&asr] {
            let _ = writeln!(text, "{utt_id},{},{words}", asr.as_str());
        }
        files.insert(format!("hyp_{}.csv", asr.as_str()), text);
    }

    // dictionary, metadata, manifest, ground truth
    files.insert("dict.txt".to_string(), dictionary_text());
    let mut meta = String::from("speaker_id,gender,age_group,ses\n");
    for (id, gender, age, ses) in INTERVIEWEES {
        let _ = writeln!(meta, "{id},{gender},{age},{ses}");
    }
    files.insert("speakers.csv".to_string(), meta);

    let manifest = format!(
        r#"speaker_metadata = "speakers.csv"

[lexicon]
dictionary = "dict.txt"

[tiers]
word_pattern = "* - words"
phone_pattern = "* - phones"
exclude_speakers = ["{INTERVIEWER}"]

[[recordings]]
id = "rec_a"
textgrid = "rec_a.TextGrid"

[[recordings]]
id = "rec_b"
textgrid = "rec_b.TextGrid"

[[hypotheses]]
asr_type = "without_lm"
path = "hyp_without_lm.csv"

[[hypotheses]]
asr_type = "with_lm"
path = "hyp_with_lm.csv"
"#
    );
    files.insert("manifest.toml".to_string(), manifest);

    let mut gt = String::from(
        "utterance_id,target_word,speaker_id,mfa_status,variable,asr_type,token_outcome,neighborhood_status,wer\n",
    );
    // deterministic output order
    ground_truth.sort_by(|a, b| {
        a.utterance_id
            .cmp(&b.utterance_id)
            .then_with(|| a.asr_type.cmp(&b.asr_type))
    });
    for row in &ground_truth {
        let _ = writeln!(
            gt,
            "{},{},{},{},{},{},{},{},{:.6}",
            row.utterance_id,
            row.target_word,
            row.speaker_id,
            row.mfa_status.as_str(),
            row.variable,
            row.asr_type.as_str(),
            row.token_outcome,
            row.neighborhood_status,
            row.wer
        );
    }
    files.insert("ground_truth.csv".to_string(), gt);

    Ok(FixtureCorpus {
        files,
        ground_truth,
    })
}

/// Append one utterance's word and phone intervals for a speaker,
/// returning the advanced clock.
fn place_utterance(
    clock: f64,
    speaker: &str,
    words: &[PlannedWord],
    per_speaker_words: &mut BTreeMap<&str, Vec<Interval>>,
    per_speaker_phones: &mut BTreeMap<&str, Vec<Interval>>,
) -> f64 {
    let mut t = clock;
    let word_tier = per_speaker_words.get_mut(speaker).expect("speaker tier");
    let phone_tier = per_speaker_phones.get_mut(speaker).expect("speaker tier");
    for word in words {
        let start = t;
        let end = t + WORD_DURATION;
        word_tier.push(Interval {
            xmin: start,
            xmax: end,
            text: word.text.clone(),
        });
        match word.phones {
            Some(pron) => {
                let phones: Vec<&str> = pron.split_whitespace().collect();
                let step = WORD_DURATION / phones.len() as f64;
                for (k, phone) in phones.iter().enumerate() {
                    let p_start = start + step * k as f64;
                    let p_end = if k + 1 == phones.len() {
                        end
                    } else {
                        start + step * (k + 1) as f64
                    };
                    phone_tier.push(Interval {
                        xmin: p_start,
                        xmax: p_end,
                        text: phone.to_string(),
                    });
                }
            }
            None => {
                phone_tier.push(Interval {
                    xmin: start,
                    xmax: end,
                    text: "spn".to_string(),
                });
            }
        }
        t = end + WORD_GAP;
    }
    // drop the trailing word gap, add the utterance gap
    t - WORD_GAP + UTTERANCE_GAP
}

/// Make intervals contiguous over [0, end] by inserting empty (silence)
/// intervals in the gaps.
fn fill_gaps(intervals: &[Interval], end: f64) -> Vec<Interval> {
    let mut out = Vec::with_capacity(intervals.len() * 2 + 1);
    let mut cursor = 0.0f64;
    for iv in intervals {
        if iv.xmin > cursor + 1e-9 {
            out.push(Interval {
                xmin: cursor,
                xmax: iv.xmin,
                text: String::new(),
            });
        }
        out.push(iv.clone());
        cursor = iv.xmax;
    }
    if end > cursor + 1e-9 {
        out.push(Interval {
            xmin: cursor,
            xmax: end,
            text: String::new(),
        });
    }
    out
}

/// Write a generated corpus to a directory.
pub fn write_fixture(corpus: &FixtureCorpus, dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| PipelineError::Io(format!("{}: {e}", dir.display())))?;
    for (name, contents) in &corpus.files {
        let path = dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}
