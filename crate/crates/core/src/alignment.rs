//! Token normalization and global sequence alignment of reference vs.
//! hypothesis transcripts.
//!
//! Alignment is Needleman-Wunsch under unit costs (match 0, everything else
//! 1), so the total cost equals the word-level Levenshtein distance and
//! `(S + I + D) / N_ref` is the usual WER. Among equal-cost alignments the
//! substitution-minimal one is chosen, making the counts canonical; the
//! traceback tie-break is fixed (Match > Sub > Del > Ins) so op placement
//! is deterministic too.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AlignmentError {
    #[error("reference index {index} out of range (reference length {len})")]
    IndexOutOfRange { index: usize, len: usize },
}

/// Which decoding configuration produced a hypothesis transcript.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AsrType {
    WithoutLm,
    WithLm,
}

impl AsrType {
    pub fn parse(s: &str) -> Option<AsrType> {
        match s.trim().to_ascii_lowercase().as_str() {
            "without_lm" => Some(AsrType::WithoutLm),
            "with_lm" => Some(AsrType::WithLm),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            AsrType::WithoutLm => "without_lm",
            AsrType::WithLm => "with_lm",
        }
    }

    pub const ALL: [AsrType; 2] = [AsrType::WithoutLm, AsrType::WithLm];
}

/// One alignment operation over normalized tokens.
#[derive(Debug, Clone, PartialEq)]
pub enum AlignOp {
    /// Equal tokens consumed from both sequences.
    Match { token: String },
    /// Differing tokens consumed from both sequences.
    Sub {
        reference: String,
        hypothesis: String,
    },
    /// Token present only in the hypothesis.
    Ins { hypothesis: String },
    /// Token present only in the reference.
    Del { reference: String },
}

/// Edit-op counts for one alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OpCounts {
    pub matches: usize,
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
}

impl OpCounts {
    pub fn errors(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }

    /// `(S + D + I) / reference_len`; exceeds 1.0 when insertions pile up.
    /// The degenerate empty-reference convention lives in [`align`], not
    /// here.
    pub fn wer_over(&self, reference_len: usize) -> f64 {
        self.errors() as f64 / reference_len as f64
    }
}

/// A full alignment: the op sequence, its counts, and the utterance WER.
///
/// `degenerate` marks an empty reference, where WER is reported as the raw
/// insertion count instead of a ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    pub ops: Vec<AlignOp>,
    pub counts: OpCounts,
    pub wer: f64,
    pub degenerate: bool,
}

/// Per-reference-token outcome of an alignment.
#[derive(Debug, Clone, PartialEq)]
pub enum TokenOutcome {
    Correct,
    Substituted { hypothesis: String },
    Deleted,
}

/// Tiny glob matcher for noise-token patterns: `*` matches any run of
/// characters, everything else is literal.
fn glob_match(pattern: &str, text: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let t: Vec<char> = text.chars().collect();
    // iterative wildcard match with backtracking over the last star
    let (mut pi, mut ti) = (0usize, 0usize);
    let (mut star, mut star_ti) = (None::<usize>, 0usize);
    while ti < t.len() {
        if pi < p.len() && (p[pi] == t[ti]) {
            pi += 1;
            ti += 1;
        } else if pi < p.len() && p[pi] == '*' {
            star = Some(pi);
            star_ti = ti;
            pi += 1;
        } else if let Some(s) = star {
            pi = s + 1;
            star_ti += 1;
            ti = star_ti;
        } else {
            return false;
        }
    }
    while pi < p.len() && p[pi] == '*' {
        pi += 1;
    }
    pi == p.len()
}

/// Normalize one raw transcript token.
///
/// Lowercases, strips leading/trailing punctuation (internal apostrophes
/// and hyphens survive), and drops noise tokens matching any of the
/// configured glob patterns (e.g. `(*)`, `/*/`, `<*>`). Returns `None`
/// when the token should not take part in alignment.
pub fn normalize_token(raw: &str, noise_patterns: &[String]) -> Option<String> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return None;
    }
    if noise_patterns.iter().any(|p| glob_match(p, trimmed)) {
        return None;
    }
    let stripped = trimmed
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .trim_end_matches(|c: char| !c.is_alphanumeric());
    if stripped.is_empty() {
        return None;
    }
    Some(stripped.to_lowercase())
}

/// Normalize a whitespace-separated transcript line into a token sequence.
///
/// Markup spans like `(pause 0.60)` or `<laughing lightly>` contain spaces;
/// a piece opening with `(` or `<` is merged with following pieces up to the
/// closing delimiter so the whole span is one token for noise matching.
pub fn normalize_line(line: &str, noise_patterns: &[String]) -> Vec<String> {
    let mut raw_tokens: Vec<String> = Vec::new();
    let mut pending: Option<(char, String)> = None;
    for piece in line.split_whitespace() {
        if let Some((close, buf)) = &mut pending {
            buf.push(' ');
            buf.push_str(piece);
            if piece.ends_with(*close) {
                let done = std::mem::take(buf);
                pending = None;
                raw_tokens.push(done);
            }
            continue;
        }
        let close = match piece.chars().next() {
            Some('(') => Some(')'),
            Some('<') => Some('>'),
            _ => None,
        };
        match close {
            Some(c) if !piece.ends_with(c) => pending = Some((c, piece.to_string())),
            _ => raw_tokens.push(piece.to_string()),
        }
    }
    if let Some((_, buf)) = pending {
        // unterminated markup: fall through to ordinary normalization
        raw_tokens.push(buf);
    }
    raw_tokens
        .iter()
        .filter_map(|t| normalize_token(t, noise_patterns))
        .collect()
}

/// Globally align two normalized token sequences under unit costs.
///
/// The returned total cost (sub + ins + del) equals the Levenshtein
/// distance between the sequences. Each DP cell carries (cost, subs)
/// compared lexicographically, so among equal-cost alignments the one with
/// the fewest substitutions (most matches) wins; this makes the op counts
/// canonical and direction-symmetric. Traceback prefers Match, then Sub,
/// then Del, then Ins at equal value, fixing op placement deterministically.
pub fn align(reference: &[String], hypothesis: &[String]) -> AlignmentResult {
    let n = reference.len();
    let m = hypothesis.len();
    // cell = (edit cost, substitution count), minimized lexicographically
    let mut dp = vec![vec![(0usize, 0usize); m + 1]; n + 1];
    for (i, row) in dp.iter_mut().enumerate() {
        row[0] = (i, 0);
    }
    for (j, cell) in dp[0].iter_mut().enumerate() {
        *cell = (j, 0);
    }
    for i in 1..=n {
        for j in 1..=m {
            let is_sub = usize::from(reference[i - 1] != hypothesis[j - 1]);
            let diag = (dp[i - 1][j - 1].0 + is_sub, dp[i - 1][j - 1].1 + is_sub);
            let del = (dp[i - 1][j].0 + 1, dp[i - 1][j].1);
            let ins = (dp[i][j - 1].0 + 1, dp[i][j - 1].1);
            dp[i][j] = diag.min(del).min(ins);
        }
    }

    // traceback with fixed preference Match > Sub > Del > Ins
    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dp[i][j];
        if i > 0 && j > 0 && reference[i - 1] == hypothesis[j - 1] && here == dp[i - 1][j - 1] {
            ops.push(AlignOp::Match {
                token: reference[i - 1].clone(),
            });
            i -= 1;
            j -= 1;
        } else if i > 0
            && j > 0
            && reference[i - 1] != hypothesis[j - 1]
            && here == (dp[i - 1][j - 1].0 + 1, dp[i - 1][j - 1].1 + 1)
        {
            ops.push(AlignOp::Sub {
                reference: reference[i - 1].clone(),
                hypothesis: hypothesis[j - 1].clone(),
            });
            i -= 1;
            j -= 1;
        } else if i > 0 && here == (dp[i - 1][j].0 + 1, dp[i - 1][j].1) {
            ops.push(AlignOp::Del {
                reference: reference[i - 1].clone(),
            });
            i -= 1;
        } else {
            ops.push(AlignOp::Ins {
                hypothesis: hypothesis[j - 1].clone(),
            });
            j -= 1;
        }
    }
    ops.reverse();

    let mut counts = OpCounts::default();
    for op in &ops {
        match op {
            AlignOp::Match { .. } => counts.matches += 1,
            AlignOp::Sub { .. } => counts.substitutions += 1,
            AlignOp::Ins { .. } => counts.insertions += 1,
            AlignOp::Del { .. } => counts.deletions += 1,
        }
    }
    let degenerate = n == 0;
    let wer = if degenerate {
        counts.insertions as f64
    } else {
        counts.wer_over(n)
    };
    AlignmentResult {
        ops,
        counts,
        wer,
        degenerate,
    }
}

impl AlignmentResult {
    /// Total edit cost of the alignment.
    pub fn cost(&self) -> usize {
        self.counts.errors()
    }

    /// Utterance WER: `(S + D + I) / N_ref`. On a degenerate alignment
    /// (empty reference) this is the insertion count.
    pub fn wer(&self) -> f64 {
        self.wer
    }

    /// The outcome for the reference token at `ref_index`.
    pub fn hyp_for_token(&self, ref_index: usize) -> Result<TokenOutcome, AlignmentError> {
        let mut next_ref = 0usize;
        for op in &self.ops {
            match op {
                AlignOp::Match { .. } => {
                    if next_ref == ref_index {
                        return Ok(TokenOutcome::Correct);
                    }
                    next_ref += 1;
                }
                AlignOp::Sub { hypothesis, .. } => {
                    if next_ref == ref_index {
                        return Ok(TokenOutcome::Substituted {
                            hypothesis: hypothesis.clone(),
                        });
                    }
                    next_ref += 1;
                }
                AlignOp::Del { .. } => {
                    if next_ref == ref_index {
                        return Ok(TokenOutcome::Deleted);
                    }
                    next_ref += 1;
                }
                AlignOp::Ins { .. } => {}
            }
        }
        Err(AlignmentError::IndexOutOfRange {
            index: ref_index,
            len: next_ref,
        })
    }

    /// Rebuild the reference sequence from the op list.
    pub fn reference_tokens(&self) -> Vec<&str> {
        self.ops
            .iter()
            .filter_map(|op| match op {
                AlignOp::Match { token } => Some(token.as_str()),
                AlignOp::Sub { reference, .. } => Some(reference.as_str()),
                AlignOp::Del { reference } => Some(reference.as_str()),
                AlignOp::Ins { .. } => None,
            })
            .collect()
    }

    /// Rebuild the hypothesis sequence from the op list.
    pub fn hypothesis_tokens(&self) -> Vec<&str> {
        self.ops
            .iter()
            .filter_map(|op| match op {
                AlignOp::Match { token } => Some(token.as_str()),
                AlignOp::Sub { hypothesis, .. } => Some(hypothesis.as_str()),
                AlignOp::Ins { hypothesis } => Some(hypothesis.as_str()),
                AlignOp::Del { .. } => None,
            })
            .collect()
    }
}

/// Default noise-token patterns for interview transcription markup.
pub fn default_noise_patterns() -> Vec<String> {
    vec!["(*)".to_string(), "/*/".to_string(), "<*>".to_string()]
}
