//! Property tests for the structural invariants: round-trips, metric laws,
//! alignment projections, and segmentation-plan shape.

use std::collections::BTreeSet;

use proptest::prelude::*;

use phonvar::alignment::align;
use phonvar::lexicon::{
    expand_lexicon, parse_cmu_dict, serialize_dict, ExpandOptions, Phone, PronVariant,
    Pronunciation, VariantForm, VariantLexicon,
};
use phonvar::neighborhood::phon_distance;
use phonvar::pipeline::{generate_fixture, plan_segments, FixtureSpec, UtteranceSpan};
use phonvar::textgrid::{
    parse_textgrid_str, phones_within, render_textgrid, select_tiers, Interval, TextGrid, Tier,
};
use phonvar::variants::{classify_mfa_status, MfaStatus};

const VOWELS: [&str; 8] = ["AA", "AE", "AH", "EH", "IH", "IY", "OW", "UW"];
const CONSONANTS: [&str; 10] = ["P", "B", "T", "D", "K", "G", "S", "N", "L", "NG"];

fn arb_phone() -> impl Strategy<Value = Phone> {
    prop_oneof![
        // vowel with stress
        (0..VOWELS.len(), 0u8..=2)
            .prop_map(|(v, s)| { Phone::parse(&format!("{}{}", VOWELS[v], s)).unwrap() }),
        // bare vowel
        (0..VOWELS.len()).prop_map(|v| Phone::parse(VOWELS[v]).unwrap()),
        // consonant
        (0..CONSONANTS.len()).prop_map(|c| Phone::parse(CONSONANTS[c]).unwrap()),
    ]
}

fn arb_pron(max_len: usize) -> impl Strategy<Value = Pronunciation> {
    prop::collection::vec(arb_phone(), 1..=max_len)
        .prop_map(|phones| Pronunciation::new(phones).unwrap())
}

fn arb_word() -> impl Strategy<Value = String> {
    "[a-z]{1,8}"
}

fn arb_lexicon(max_words: usize) -> impl Strategy<Value = VariantLexicon> {
    prop::collection::btree_map(
        arb_word(),
        prop::collection::vec(arb_pron(6), 1..=2),
        1..=max_words,
    )
    .prop_map(|words| {
        let mut lex = VariantLexicon::new();
        for (word, prons) in words {
            for pron in prons {
                lex.insert(&word, PronVariant::original(pron));
            }
        }
        lex
    })
}

fn pair_set(lex: &VariantLexicon) -> BTreeSet<(String, String)> {
    lex.iter()
        .flat_map(|(w, vs)| vs.iter().map(move |v| (w.to_string(), v.pron.to_string())))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    // serialize -> parse is the identity on (word, pron) pairs, including
    // after expansion
    #[test]
    fn lexicon_roundtrip(lex in arb_lexicon(30)) {
        let expanded = expand_lexicon(&lex, None, &ExpandOptions::default());
        let reparsed = parse_cmu_dict(&serialize_dict(&expanded)).unwrap();
        prop_assert_eq!(pair_set(&reparsed), pair_set(&expanded));
    }

    #[test]
    fn expansion_is_idempotent(lex in arb_lexicon(30)) {
        let opts = ExpandOptions::default();
        let once = expand_lexicon(&lex, None, &opts);
        let twice = expand_lexicon(&once, None, &opts);
        prop_assert_eq!(pair_set(&once), pair_set(&twice));
    }

    // a reduced variant never ends in a vowel-final source, and reduction
    // only ever changes the final position
    #[test]
    fn reductions_touch_only_the_final_phone(lex in arb_lexicon(30)) {
        let expanded = expand_lexicon(&lex, None, &ExpandOptions::default());
        for (word, variants) in expanded.iter() {
            let originals: Vec<&PronVariant> =
                variants.iter().filter(|v| v.form == VariantForm::Original).collect();
            for v in variants.iter().filter(|v| v.form == VariantForm::Reduced) {
                let matched = originals.iter().any(|o| {
                    let op = o.pron.phones();
                    let rp = v.pron.phones();
                    (rp.len() == op.len() - 1 && rp == &op[..op.len() - 1])
                        || (rp.len() == op.len()
                            && rp[..rp.len() - 1] == op[..op.len() - 1]
                            && rp.last().unwrap().base() == "N")
                });
                prop_assert!(matched, "word {} reduced {} lacks a source", word, v.pron);
            }
        }
    }

    // classify(reduced form) = Reduced for every expanded entry; stress
    // noise never changes classification
    #[test]
    fn classification_recovers_reduced_forms(lex in arb_lexicon(20), stress_seed in 0u8..3) {
        let expanded = expand_lexicon(&lex, None, &ExpandOptions::default());
        for (_, variants) in expanded.iter() {
            for v in variants.iter().filter(|v| v.form == VariantForm::Reduced) {
                // rebuild the realized pron with arbitrary stress digits
                let restressed: Vec<Phone> = v
                    .pron
                    .phones()
                    .iter()
                    .map(|p| {
                        if VOWELS.contains(&p.base()) {
                            Phone::parse(&format!("{}{}", p.base(), stress_seed)).unwrap()
                        } else {
                            p.clone()
                        }
                    })
                    .collect();
                let realized = Pronunciation::new(restressed).unwrap();
                // Original wins only when the same pron is also a citation
                // form; otherwise this must classify Reduced
                let got = classify_mfa_status(&realized, variants);
                let also_original = variants.iter().any(|o| {
                    o.form == VariantForm::Original
                        && o.pron.phones().iter().map(Phone::base).collect::<Vec<_>>()
                            == v.pron.phones().iter().map(Phone::base).collect::<Vec<_>>()
                });
                if also_original {
                    prop_assert_eq!(got, MfaStatus::Original);
                } else {
                    prop_assert_eq!(got, MfaStatus::Reduced);
                }
            }
        }
    }

    // metric laws for the phonological distance
    #[test]
    fn phon_distance_is_a_metric(
        a in arb_pron(8),
        b in arb_pron(8),
        c in arb_pron(8),
    ) {
        prop_assert_eq!(phon_distance(&a, &a), 0);
        prop_assert_eq!(phon_distance(&a, &b), phon_distance(&b, &a));
        prop_assert!(
            phon_distance(&a, &c) <= phon_distance(&a, &b) + phon_distance(&b, &c)
        );
    }

    // alignment projections reconstruct inputs; swapping arguments swaps
    // insertions and deletions at equal cost
    #[test]
    fn alignment_projection_and_symmetry(
        reference in prop::collection::vec("[a-c]{1,2}", 0..10),
        hypothesis in prop::collection::vec("[a-c]{1,2}", 0..10),
    ) {
        let forward = align(&reference, &hypothesis);
        prop_assert_eq!(
            forward.reference_tokens(),
            reference.iter().map(|s| s.as_str()).collect::<Vec<_>>()
        );
        prop_assert_eq!(
            forward.hypothesis_tokens(),
            hypothesis.iter().map(|s| s.as_str()).collect::<Vec<_>>()
        );
        let backward = align(&hypothesis, &reference);
        prop_assert_eq!(forward.cost(), backward.cost());
        prop_assert_eq!(forward.counts.insertions, backward.counts.deletions);
        prop_assert_eq!(forward.counts.deletions, backward.counts.insertions);
        prop_assert_eq!(forward.counts.matches, backward.counts.matches);
        // count identities against sequence lengths
        let c = forward.counts;
        prop_assert_eq!(c.matches + c.substitutions + c.deletions, reference.len());
        prop_assert_eq!(c.matches + c.substitutions + c.insertions, hypothesis.len());
    }

    // segment plans keep their shape for arbitrary utterance layouts
    #[test]
    fn segment_plan_invariants(
        gaps in prop::collection::vec((0.01f64..5.0, 0.5f64..20.0), 1..40),
        min_duration in 5.0f64..60.0,
    ) {
        let mut clock = 0.0;
        let mut utterances = Vec::new();
        for (i, (gap, len)) in gaps.iter().enumerate() {
            clock += gap;
            utterances.push(UtteranceSpan {
                id: format!("u{i}"),
                start: clock,
                end: clock + len,
            });
            clock += len;
        }
        let plan = plan_segments(&utterances, min_duration).unwrap();
        // every utterance lands in exactly one chunk
        let assigned: usize = plan.chunks.iter().map(|c| c.utterance_ids.len()).sum();
        prop_assert_eq!(assigned, utterances.len());
        for pair in plan.chunks.windows(2) {
            prop_assert!(pair[0].end <= pair[1].start + 1e-12);
        }
        for (k, chunk) in plan.chunks.iter().enumerate() {
            prop_assert!(chunk.start < chunk.end);
            if k + 1 < plan.chunks.len() {
                prop_assert!(
                    chunk.end - chunk.start >= min_duration - 1e-9,
                    "non-final chunk shorter than the minimum"
                );
            }
            // no utterance spans a chunk boundary
            for id in &chunk.utterance_ids {
                let u = utterances.iter().find(|u| &u.id == id).unwrap();
                prop_assert!(u.start >= chunk.start - 1e-9 && u.end <= chunk.end + 1e-9);
            }
        }
    }

    // rendering then parsing a grid reproduces it
    #[test]
    fn textgrid_render_roundtrip(
        spans in prop::collection::vec((0.1f64..2.0, ".{0,12}"), 1..20),
    ) {
        let mut clock = 0.0;
        let mut intervals = Vec::new();
        for (len, text) in spans {
            // strip quotes-unfriendly control characters the renderer
            // escapes anyway; keep printable content
            let text: String = text.chars().filter(|c| !c.is_control()).collect();
            intervals.push(Interval { xmin: clock, xmax: clock + len, text });
            clock += len;
        }
        let grid = TextGrid {
            xmin: 0.0,
            xmax: clock,
            tiers: vec![Tier { name: "spk - words".to_string(), intervals }],
        };
        let parsed = parse_textgrid_str(&render_textgrid(&grid)).unwrap();
        prop_assert_eq!(parsed.grid, grid);
    }
}

const CMU_SAMPLE: &str = include_str!("data/cmu_sample.dict");

// exhaustive over the dictionary sample: every reduced variant classifies
// as Reduced (with or without stress), unless its pron is also a citation form
#[test]
fn classification_exhaustive_over_cmu_sample() {
    let lex = parse_cmu_dict(CMU_SAMPLE).unwrap();
    let expanded = expand_lexicon(&lex, None, &ExpandOptions::default());
    let mut reduced_seen = 0;
    for (word, variants) in expanded.iter() {
        for v in variants.iter().filter(|v| v.form == VariantForm::Reduced) {
            reduced_seen += 1;
            let got = classify_mfa_status(&v.pron, variants);
            let also_original = variants.iter().any(|o| {
                o.form == VariantForm::Original && o.pron.base_sequence() == v.pron.base_sequence()
            });
            let expected = if also_original {
                MfaStatus::Original
            } else {
                MfaStatus::Reduced
            };
            assert_eq!(got, expected, "{word} {}", v.pron);
        }
    }
    assert!(
        reduced_seen >= 25,
        "sample should exercise many reductions, saw {reduced_seen}"
    );
}

// neighbor retrieval for genuinely reduced forms agrees with brute force
// over the real dictionary sample
#[test]
fn reduced_pron_neighbors_match_brute_force_on_cmu_sample() {
    let lex = parse_cmu_dict(CMU_SAMPLE).unwrap();
    let expanded = expand_lexicon(&lex, None, &ExpandOptions::default());
    let originals: Vec<(String, Pronunciation)> = lex
        .iter()
        .flat_map(|(w, vs)| vs.iter().map(move |v| (w.to_string(), v.pron.clone())))
        .collect();
    for (word, variants) in expanded.iter() {
        for v in variants.iter().filter(|v| v.form == VariantForm::Reduced) {
            let got: BTreeSet<String> =
                phonvar::neighborhood::neighbors(&v.pron, &lex, &Default::default())
                    .words()
                    .into_iter()
                    .map(|w| w.to_string())
                    .collect();
            let query = v.pron.base_sequence();
            let brute: BTreeSet<String> = originals
                .iter()
                .filter(|(_, p)| {
                    let candidate = p.base_sequence();
                    lev_oracle(&query, &candidate) == 1
                })
                .map(|(w, _)| w.clone())
                .collect();
            assert_eq!(got, brute, "{word} {}", v.pron);
        }
    }
}

#[allow(clippy::needless_range_loop)]
fn lev_oracle<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut dp = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 0..=a.len() {
        dp[i][0] = i;
    }
    for j in 0..=b.len() {
        dp[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            dp[i][j] = (dp[i - 1][j - 1] + cost)
                .min(dp[i - 1][j] + 1)
                .min(dp[i][j - 1] + 1);
        }
    }
    dp[a.len()][b.len()]
}

// fixture grids: per-word phone gathering partitions the phone tier
#[test]
fn phones_within_partitions_fixture_grids() {
    let spec = FixtureSpec {
        tokens: 60,
        ..FixtureSpec::default()
    };
    let corpus = generate_fixture(21, &spec).unwrap();
    for (name, contents) in &corpus.files {
        if !name.ends_with(".TextGrid") {
            continue;
        }
        let parsed = parse_textgrid_str(contents).unwrap();
        let selection = select_tiers(&parsed.grid, "* - words", "* - phones").unwrap();
        for pair in &selection.pairs {
            let mut gathered: Vec<String> = Vec::new();
            for word in &pair.words.intervals {
                if phonvar::textgrid::is_silence_label(&word.text) {
                    continue;
                }
                for phone in phones_within(word, pair.phones, 0.0) {
                    gathered.push(phone.text.clone());
                }
            }
            let full: Vec<String> = pair
                .phones
                .intervals
                .iter()
                .filter(|iv| !phonvar::textgrid::is_silence_label(&iv.text))
                .map(|iv| iv.text.clone())
                .collect();
            assert_eq!(gathered, full, "{name} speaker {}", pair.speaker);
        }
    }
}
