//! Praat TextGrid parsing (long and short text formats) and the small
//! subset of rendering needed to emit fixtures.
//!
//! Only interval tiers are loaded; point tiers are skipped and reported in
//! [`ParsedTextGrid::warnings`]. Input may be UTF-8 or UTF-16 (BOM-sniffed).
//! The parser never panics on malformed input: every failure surfaces as a
//! [`TextGridError`].

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TextGridError {
    #[error("invalid text encoding: {0}")]
    Encoding(String),
    #[error("not a TextGrid: {0}")]
    Header(String),
    #[error("{context}: expected {expected}, got {got:?}")]
    Expected {
        context: String,
        expected: String,
        got: String,
    },
    #[error("{context}: unexpected end of input")]
    UnexpectedEof { context: String },
    #[error("tier {tier} interval {interval}: {reason}")]
    BadInterval {
        tier: usize,
        interval: usize,
        reason: String,
    },
    #[error("tier {tier}: {reason}")]
    BadTier { tier: usize, reason: String },
    #[error("no tier pairs matched patterns {word_pattern:?} / {phone_pattern:?}")]
    NoTierPairs {
        word_pattern: String,
        phone_pattern: String,
    },
    #[error("invalid tier pattern {pattern:?}: must contain exactly one '*'")]
    BadPattern { pattern: String },
}

/// One labelled time span. Empty text denotes silence.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub xmin: f64,
    pub xmax: f64,
    pub text: String,
}

impl Interval {
    pub fn midpoint(&self) -> f64 {
        (self.xmin + self.xmax) / 2.0
    }
}

/// An ordered, non-overlapping sequence of intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct Tier {
    pub name: String,
    pub intervals: Vec<Interval>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextGrid {
    pub xmin: f64,
    pub xmax: f64,
    pub tiers: Vec<Tier>,
}

/// Parse output: the grid plus records for anything skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTextGrid {
    pub grid: TextGrid,
    /// One entry per skipped non-interval tier: (tier index, class, name).
    pub warnings: Vec<String>,
}

// Labels treated as silence/noise when gathering phones under a word.
const SPECIAL_PHONE_LABELS: [&str; 3] = ["sil", "sp", "spn"];

/// Allowed float slop when validating interval containment and adjacency.
const TIME_EPS: f64 = 1e-6;

// ── decoding ────────────────────────────────────────────────────────────────

/// Decode raw bytes as UTF-8 or UTF-16 (BE/LE recognized by BOM).
pub fn decode_text(bytes: &[u8]) -> Result<String, TextGridError> {
    if bytes.starts_with(&[0xFE, 0xFF]) {
        decode_utf16(&bytes[2..], true)
    } else if bytes.starts_with(&[0xFF, 0xFE]) {
        decode_utf16(&bytes[2..], false)
    } else {
        let text =
            std::str::from_utf8(bytes).map_err(|e| TextGridError::Encoding(e.to_string()))?;
        Ok(text.strip_prefix('\u{FEFF}').unwrap_or(text).to_string())
    }
}

fn decode_utf16(bytes: &[u8], big_endian: bool) -> Result<String, TextGridError> {
    if !bytes.len().is_multiple_of(2) {
        return Err(TextGridError::Encoding(
            "odd byte count in UTF-16 stream".to_string(),
        ));
    }
    let units = bytes.chunks_exact(2).map(|pair| {
        if big_endian {
            u16::from_be_bytes([pair[0], pair[1]])
        } else {
            u16::from_le_bytes([pair[0], pair[1]])
        }
    });
    char::decode_utf16(units)
        .collect::<Result<String, _>>()
        .map_err(|e| TextGridError::Encoding(e.to_string()))
}

// ── parsing ─────────────────────────────────────────────────────────────────

/// Line cursor over the decoded file. Praat quoted strings may span lines,
/// so the cursor hands out raw lines and the callers reassemble.
struct Lines<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Lines<'a> {
        Lines {
            lines: text.lines().collect(),
            pos: 0,
        }
    }

    fn next_nonempty(&mut self, context: &str) -> Result<&'a str, TextGridError> {
        while self.pos < self.lines.len() {
            let line = self.lines[self.pos].trim();
            self.pos += 1;
            if !line.is_empty() {
                return Ok(line);
            }
        }
        Err(TextGridError::UnexpectedEof {
            context: context.to_string(),
        })
    }

    fn next_raw(&mut self, context: &str) -> Result<&'a str, TextGridError> {
        if self.pos < self.lines.len() {
            let line = self.lines[self.pos];
            self.pos += 1;
            Ok(line)
        } else {
            Err(TextGridError::UnexpectedEof {
                context: context.to_string(),
            })
        }
    }

    fn peek_nonempty(&self) -> Option<&'a str> {
        self.lines[self.pos..]
            .iter()
            .map(|l| l.trim())
            .find(|l| !l.is_empty())
    }
}

fn parse_f64(context: &str, token: &str) -> Result<f64, TextGridError> {
    token
        .trim()
        .parse::<f64>()
        .map_err(|_| TextGridError::Expected {
            context: context.to_string(),
            expected: "a number".to_string(),
            got: token.to_string(),
        })
}

fn parse_count(context: &str, token: &str) -> Result<usize, TextGridError> {
    token
        .trim()
        .parse::<usize>()
        .map_err(|_| TextGridError::Expected {
            context: context.to_string(),
            expected: "a non-negative integer".to_string(),
            got: token.to_string(),
        })
}

/// Everything after the first '=' on a long-format line.
fn value_after_eq<'a>(context: &str, line: &'a str) -> Result<&'a str, TextGridError> {
    line.split_once('=')
        .map(|(_, v)| v.trim())
        .ok_or_else(|| TextGridError::Expected {
            context: context.to_string(),
            expected: "'key = value'".to_string(),
            got: line.to_string(),
        })
}

/// Read a quoted Praat string starting within `first`, consuming further
/// lines when the closing quote has not been seen. Doubled quotes unescape
/// to a single quote.
fn read_quoted(lines: &mut Lines<'_>, context: &str, first: &str) -> Result<String, TextGridError> {
    let start = first.find('"').ok_or_else(|| TextGridError::Expected {
        context: context.to_string(),
        expected: "a quoted string".to_string(),
        got: first.to_string(),
    })?;
    let mut out = String::new();
    // chars after the opening quote, across as many lines as needed
    let mut rest: Vec<char> = first[start + 1..].chars().collect();
    loop {
        let mut i = 0;
        while i < rest.len() {
            if rest[i] == '"' {
                if rest.get(i + 1) == Some(&'"') {
                    out.push('"');
                    i += 2;
                } else {
                    return Ok(out);
                }
            } else {
                out.push(rest[i]);
                i += 1;
            }
        }
        out.push('\n');
        rest = lines.next_raw(context)?.chars().collect();
    }
}

/// Parse a text TextGrid in either Praat long or short format.
pub fn parse_textgrid_str(text: &str) -> Result<ParsedTextGrid, TextGridError> {
    let mut lines = Lines::new(text);
    let file_type = lines.next_nonempty("file header")?;
    if !file_type.contains("ooTextFile") {
        return Err(TextGridError::Header(format!(
            "first line is not an ooTextFile declaration: {file_type:?}"
        )));
    }
    let object_class = lines.next_nonempty("object class")?;
    if !object_class.contains("TextGrid") {
        return Err(TextGridError::Header(format!(
            "object class is not TextGrid: {object_class:?}"
        )));
    }
    match lines.peek_nonempty() {
        Some(line) if line.starts_with("xmin") => parse_long(&mut lines),
        Some(_) => parse_short(&mut lines),
        None => Err(TextGridError::UnexpectedEof {
            context: "grid body".to_string(),
        }),
    }
}

/// Decode and parse raw TextGrid bytes.
pub fn parse_textgrid(bytes: &[u8]) -> Result<ParsedTextGrid, TextGridError> {
    parse_textgrid_str(&decode_text(bytes)?)
}

fn parse_long(lines: &mut Lines<'_>) -> Result<ParsedTextGrid, TextGridError> {
    let xmin = parse_f64(
        "grid xmin",
        value_after_eq("grid xmin", lines.next_nonempty("grid xmin")?)?,
    )?;
    let xmax = parse_f64(
        "grid xmax",
        value_after_eq("grid xmax", lines.next_nonempty("grid xmax")?)?,
    )?;
    let tiers_line = lines.next_nonempty("tiers flag")?;
    if !tiers_line.starts_with("tiers?") {
        return Err(TextGridError::Expected {
            context: "tiers flag".to_string(),
            expected: "'tiers? <exists>'".to_string(),
            got: tiers_line.to_string(),
        });
    }
    if tiers_line.contains("<absent>") {
        return finish(
            TextGrid {
                xmin,
                xmax,
                tiers: Vec::new(),
            },
            Vec::new(),
        );
    }
    let size = parse_count(
        "tier count",
        value_after_eq("tier count", lines.next_nonempty("tier count")?)?,
    )?;
    // 'item []:' header
    let item_header = lines.next_nonempty("item list header")?;
    if !item_header.starts_with("item") {
        return Err(TextGridError::Expected {
            context: "item list header".to_string(),
            expected: "'item []:'".to_string(),
            got: item_header.to_string(),
        });
    }

    let mut tiers = Vec::new();
    let mut warnings = Vec::new();
    for tier_idx in 0..size {
        let ctx = format!("tier {}", tier_idx + 1);
        // 'item [k]:' header
        let header = lines.next_nonempty(&ctx)?;
        if !header.starts_with("item") {
            return Err(TextGridError::Expected {
                context: ctx,
                expected: "'item [k]:'".to_string(),
                got: header.to_string(),
            });
        }
        let class_line = lines.next_nonempty(&ctx)?;
        let class = read_quoted(lines, &ctx, class_line)?;
        let name_line = lines.next_nonempty(&ctx)?;
        let name = read_quoted(lines, &ctx, name_line)?;
        let _tier_xmin = parse_f64(&ctx, value_after_eq(&ctx, lines.next_nonempty(&ctx)?)?)?;
        let _tier_xmax = parse_f64(&ctx, value_after_eq(&ctx, lines.next_nonempty(&ctx)?)?)?;
        let count_line = lines.next_nonempty(&ctx)?;
        let count = parse_count(&ctx, value_after_eq(&ctx, count_line)?)?;

        if class == "IntervalTier" {
            let mut intervals = Vec::new();
            for iv_idx in 0..count {
                let ictx = format!("tier {} interval {}", tier_idx + 1, iv_idx + 1);
                let header = lines.next_nonempty(&ictx)?;
                if !header.starts_with("intervals") {
                    return Err(TextGridError::Expected {
                        context: ictx,
                        expected: "'intervals [k]:'".to_string(),
                        got: header.to_string(),
                    });
                }
                let iv_xmin =
                    parse_f64(&ictx, value_after_eq(&ictx, lines.next_nonempty(&ictx)?)?)?;
                let iv_xmax =
                    parse_f64(&ictx, value_after_eq(&ictx, lines.next_nonempty(&ictx)?)?)?;
                let text_line = lines.next_nonempty(&ictx)?;
                let text = read_quoted(lines, &ictx, text_line)?;
                intervals.push(Interval {
                    xmin: iv_xmin,
                    xmax: iv_xmax,
                    text,
                });
            }
            tiers.push(validate_tier(tier_idx + 1, Tier { name, intervals })?);
        } else {
            // skip a point tier: count entries of (header, number, mark)
            for p_idx in 0..count {
                let pctx = format!("tier {} point {}", tier_idx + 1, p_idx + 1);
                let header = lines.next_nonempty(&pctx)?;
                if !header.starts_with("points") {
                    return Err(TextGridError::Expected {
                        context: pctx,
                        expected: "'points [k]:'".to_string(),
                        got: header.to_string(),
                    });
                }
                let _number =
                    parse_f64(&pctx, value_after_eq(&pctx, lines.next_nonempty(&pctx)?)?)?;
                let mark_line = lines.next_nonempty(&pctx)?;
                let _mark = read_quoted(lines, &pctx, mark_line)?;
            }
            warnings.push(format!(
                "tier {} ({name:?}) has class {class:?}, skipped",
                tier_idx + 1
            ));
        }
    }
    finish(TextGrid { xmin, xmax, tiers }, warnings)
}

fn parse_short(lines: &mut Lines<'_>) -> Result<ParsedTextGrid, TextGridError> {
    let xmin = parse_f64("grid xmin", lines.next_nonempty("grid xmin")?)?;
    let xmax = parse_f64("grid xmax", lines.next_nonempty("grid xmax")?)?;
    let tiers_flag = lines.next_nonempty("tiers flag")?;
    if tiers_flag.contains("<absent>") {
        return finish(
            TextGrid {
                xmin,
                xmax,
                tiers: Vec::new(),
            },
            Vec::new(),
        );
    }
    if !tiers_flag.contains("<exists>") {
        return Err(TextGridError::Expected {
            context: "tiers flag".to_string(),
            expected: "'<exists>' or '<absent>'".to_string(),
            got: tiers_flag.to_string(),
        });
    }
    let size = parse_count("tier count", lines.next_nonempty("tier count")?)?;

    let mut tiers = Vec::new();
    let mut warnings = Vec::new();
    for tier_idx in 0..size {
        let ctx = format!("tier {}", tier_idx + 1);
        let class_line = lines.next_nonempty(&ctx)?;
        let class = read_quoted(lines, &ctx, class_line)?;
        let name_line = lines.next_nonempty(&ctx)?;
        let name = read_quoted(lines, &ctx, name_line)?;
        let _tier_xmin = parse_f64(&ctx, lines.next_nonempty(&ctx)?)?;
        let _tier_xmax = parse_f64(&ctx, lines.next_nonempty(&ctx)?)?;
        let count = parse_count(&ctx, lines.next_nonempty(&ctx)?)?;

        if class == "IntervalTier" {
            let mut intervals = Vec::new();
            for iv_idx in 0..count {
                let ictx = format!("tier {} interval {}", tier_idx + 1, iv_idx + 1);
                let iv_xmin = parse_f64(&ictx, lines.next_nonempty(&ictx)?)?;
                let iv_xmax = parse_f64(&ictx, lines.next_nonempty(&ictx)?)?;
                let text_line = lines.next_nonempty(&ictx)?;
                let text = read_quoted(lines, &ictx, text_line)?;
                intervals.push(Interval {
                    xmin: iv_xmin,
                    xmax: iv_xmax,
                    text,
                });
            }
            tiers.push(validate_tier(tier_idx + 1, Tier { name, intervals })?);
        } else {
            for p_idx in 0..count {
                let pctx = format!("tier {} point {}", tier_idx + 1, p_idx + 1);
                let _number = parse_f64(&pctx, lines.next_nonempty(&pctx)?)?;
                let mark_line = lines.next_nonempty(&pctx)?;
                let _mark = read_quoted(lines, &pctx, mark_line)?;
            }
            warnings.push(format!(
                "tier {} ({name:?}) has class {class:?}, skipped",
                tier_idx + 1
            ));
        }
    }
    finish(TextGrid { xmin, xmax, tiers }, warnings)
}

fn validate_tier(tier_no: usize, tier: Tier) -> Result<Tier, TextGridError> {
    for (i, iv) in tier.intervals.iter().enumerate() {
        if !iv.xmin.is_finite() || !iv.xmax.is_finite() {
            return Err(TextGridError::BadInterval {
                tier: tier_no,
                interval: i + 1,
                reason: "non-finite time".to_string(),
            });
        }
        if iv.xmin < 0.0 {
            return Err(TextGridError::BadInterval {
                tier: tier_no,
                interval: i + 1,
                reason: format!("negative xmin {}", iv.xmin),
            });
        }
        if iv.xmin >= iv.xmax {
            return Err(TextGridError::BadInterval {
                tier: tier_no,
                interval: i + 1,
                reason: format!("xmin {} >= xmax {}", iv.xmin, iv.xmax),
            });
        }
        if i > 0 && iv.xmin < tier.intervals[i - 1].xmax - TIME_EPS {
            return Err(TextGridError::BadInterval {
                tier: tier_no,
                interval: i + 1,
                reason: format!(
                    "overlaps previous interval (starts {} before previous ends {})",
                    iv.xmin,
                    tier.intervals[i - 1].xmax
                ),
            });
        }
    }
    Ok(tier)
}

fn finish(grid: TextGrid, warnings: Vec<String>) -> Result<ParsedTextGrid, TextGridError> {
    if !grid.xmin.is_finite() || !grid.xmax.is_finite() || grid.xmin >= grid.xmax {
        return Err(TextGridError::Header(format!(
            "bad grid time range [{}, {}]",
            grid.xmin, grid.xmax
        )));
    }
    for (t, tier) in grid.tiers.iter().enumerate() {
        for (i, iv) in tier.intervals.iter().enumerate() {
            if iv.xmin < grid.xmin - TIME_EPS || iv.xmax > grid.xmax + TIME_EPS {
                return Err(TextGridError::BadInterval {
                    tier: t + 1,
                    interval: i + 1,
                    reason: format!(
                        "interval [{}, {}] outside grid range [{}, {}]",
                        iv.xmin, iv.xmax, grid.xmin, grid.xmax
                    ),
                });
            }
        }
    }
    Ok(ParsedTextGrid { grid, warnings })
}

// ── rendering (fixtures) ────────────────────────────────────────────────────

fn quote(text: &str) -> String {
    format!("\"{}\"", text.replace('"', "\"\""))
}

/// Render a grid in Praat long text format. Used by the fixture generator;
/// `parse_textgrid_str(render_textgrid(g))` recovers `g` exactly when all
/// times are representable.
pub fn render_textgrid(grid: &TextGrid) -> String {
    let mut out = String::new();
    out.push_str("File type = \"ooTextFile\"\n");
    out.push_str("Object class = \"TextGrid\"\n\n");
    out.push_str(&format!("xmin = {}\n", grid.xmin));
    out.push_str(&format!("xmax = {}\n", grid.xmax));
    out.push_str("tiers? <exists>\n");
    out.push_str(&format!("size = {}\n", grid.tiers.len()));
    out.push_str("item []:\n");
    for (t, tier) in grid.tiers.iter().enumerate() {
        out.push_str(&format!("    item [{}]:\n", t + 1));
        out.push_str("        class = \"IntervalTier\"\n");
        out.push_str(&format!("        name = {}\n", quote(&tier.name)));
        out.push_str(&format!("        xmin = {}\n", grid.xmin));
        out.push_str(&format!("        xmax = {}\n", grid.xmax));
        out.push_str(&format!(
            "        intervals: size = {}\n",
            tier.intervals.len()
        ));
        for (i, iv) in tier.intervals.iter().enumerate() {
            out.push_str(&format!("        intervals [{}]:\n", i + 1));
            out.push_str(&format!("            xmin = {}\n", iv.xmin));
            out.push_str(&format!("            xmax = {}\n", iv.xmax));
            out.push_str(&format!("            text = {}\n", quote(&iv.text)));
        }
    }
    out
}

// ── tier selection ──────────────────────────────────────────────────────────

/// A word/phone tier pair for one speaker.
#[derive(Debug, Clone, PartialEq)]
pub struct TierPair<'a> {
    pub speaker: String,
    pub words: &'a Tier,
    pub phones: &'a Tier,
}

/// Tier-pair selection output, including speakers that matched only one of
/// the two patterns.
#[derive(Debug)]
pub struct TierSelection<'a> {
    pub pairs: Vec<TierPair<'a>>,
    pub unpaired: Vec<String>,
}

/// Match a tier name against a single-`*` glob, returning the text the `*`
/// captured.
fn capture_glob<'a>(pattern: &str, name: &'a str) -> Result<Option<&'a str>, TextGridError> {
    let mut parts = pattern.splitn(2, '*');
    let prefix = parts.next().unwrap_or("");
    let suffix = match parts.next() {
        Some(s) if !s.contains('*') => s,
        _ => {
            return Err(TextGridError::BadPattern {
                pattern: pattern.to_string(),
            })
        }
    };
    if name.len() < prefix.len() + suffix.len() {
        return Ok(None);
    }
    if name.starts_with(prefix) && name.ends_with(suffix) {
        let captured = &name[prefix.len()..name.len() - suffix.len()];
        if captured.is_empty() {
            return Ok(None);
        }
        Ok(Some(captured))
    } else {
        Ok(None)
    }
}

/// Pair word and phone tiers by the speaker label each pattern captures.
///
/// Patterns contain exactly one `*` (e.g. `* - words` / `* - phones`).
/// Speakers matching only one pattern are returned in `unpaired`; zero
/// matched pairs is an error.
pub fn select_tiers<'a>(
    grid: &'a TextGrid,
    word_pattern: &str,
    phone_pattern: &str,
) -> Result<TierSelection<'a>, TextGridError> {
    for pattern in [word_pattern, phone_pattern] {
        if pattern.chars().filter(|c| *c == '*').count() != 1 {
            return Err(TextGridError::BadPattern {
                pattern: pattern.to_string(),
            });
        }
    }
    let mut word_tiers: Vec<(String, &Tier)> = Vec::new();
    let mut phone_tiers: Vec<(String, &Tier)> = Vec::new();
    for tier in &grid.tiers {
        if let Some(label) = capture_glob(word_pattern, &tier.name)? {
            word_tiers.push((label.to_string(), tier));
        }
        if let Some(label) = capture_glob(phone_pattern, &tier.name)? {
            phone_tiers.push((label.to_string(), tier));
        }
    }
    let mut pairs = Vec::new();
    let mut unpaired = Vec::new();
    for (label, words) in &word_tiers {
        match phone_tiers.iter().find(|(pl, _)| pl == label) {
            Some((_, phones)) => pairs.push(TierPair {
                speaker: label.clone(),
                words,
                phones,
            }),
            None => unpaired.push(label.clone()),
        }
    }
    for (label, _) in &phone_tiers {
        if !word_tiers.iter().any(|(wl, _)| wl == label) {
            unpaired.push(label.clone());
        }
    }
    if pairs.is_empty() {
        return Err(TextGridError::NoTierPairs {
            word_pattern: word_pattern.to_string(),
            phone_pattern: phone_pattern.to_string(),
        });
    }
    Ok(TierSelection { pairs, unpaired })
}

// ── phone gathering ─────────────────────────────────────────────────────────

/// True for empty or aligner-special labels that do not represent phones.
pub fn is_silence_label(label: &str) -> bool {
    let trimmed = label.trim();
    trimmed.is_empty() || SPECIAL_PHONE_LABELS.contains(&trimmed.to_ascii_lowercase().as_str())
}

/// Phone intervals belonging to a word interval: those whose midpoints lie
/// in `[word.xmin - slack, word.xmax + slack]`, silences excluded.
pub fn phones_within<'a>(
    word_iv: &Interval,
    phone_tier: &'a Tier,
    slack: f64,
) -> Vec<&'a Interval> {
    let lo = word_iv.xmin - slack;
    let hi = word_iv.xmax + slack;
    phone_tier
        .intervals
        .iter()
        .filter(|p| {
            let mid = p.midpoint();
            mid >= lo && mid <= hi && !is_silence_label(&p.text)
        })
        .collect()
}
