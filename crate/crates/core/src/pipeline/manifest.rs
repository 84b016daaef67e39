//! The corpus manifest: a TOML or JSON file naming every input of an
//! analysis run.
//!
//! Relative paths are resolved against the manifest's own directory, and
//! every referenced file must exist at load time.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::alignment::AsrType;

use super::PipelineError;

fn default_word_pattern() -> String {
    "* - words".to_string()
}

fn default_phone_pattern() -> String {
    "* - phones".to_string()
}

fn default_slack() -> f64 {
    0.01
}

fn default_pause_gap() -> f64 {
    1.0
}

fn default_min_chunk() -> f64 {
    30.0
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconSection {
    /// Base pronouncing dictionary, CMU text format.
    pub dictionary: PathBuf,
    /// Optional supplemental dictionary consulted when a hypothesis word is
    /// missing from the base dictionary.
    #[serde(default)]
    pub supplement: Option<PathBuf>,
    /// Optional word list (one word per line) limiting variant expansion.
    #[serde(default)]
    pub targets: Option<PathBuf>,
    /// Restrict the droppable cluster-final stop set, e.g. ["T", "D"].
    #[serde(default)]
    pub ccr_stops: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TiersSection {
    #[serde(default = "default_word_pattern")]
    pub word_pattern: String,
    #[serde(default = "default_phone_pattern")]
    pub phone_pattern: String,
    /// When present, only these speaker labels are processed.
    #[serde(default)]
    pub speakers: Option<Vec<String>>,
    /// Speaker labels to drop (e.g. interviewers).
    #[serde(default)]
    pub exclude_speakers: Vec<String>,
}

impl Default for TiersSection {
    fn default() -> Self {
        TiersSection {
            word_pattern: default_word_pattern(),
            phone_pattern: default_phone_pattern(),
            speakers: None,
            exclude_speakers: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordingEntry {
    pub id: String,
    pub textgrid: PathBuf,
    /// Audio is only needed for segmentation/splitting, not analysis.
    #[serde(default)]
    pub audio: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisEntry {
    pub asr_type: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsSection {
    /// Noise-token glob patterns dropped during normalization.
    #[serde(default)]
    pub noise_patterns: Option<Vec<String>>,
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default = "default_pause_gap")]
    pub pause_gap: f64,
    #[serde(default = "default_min_chunk")]
    pub min_chunk: f64,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

impl Default for OptionsSection {
    fn default() -> Self {
        OptionsSection {
            noise_patterns: None,
            slack: default_slack(),
            pause_gap: default_pause_gap(),
            min_chunk: default_min_chunk(),
            workers: default_workers(),
        }
    }
}

/// Raw manifest as deserialized from disk.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    lexicon: LexiconSection,
    #[serde(default)]
    tiers: TiersSection,
    speaker_metadata: PathBuf,
    #[serde(default)]
    recordings: Vec<RecordingEntry>,
    #[serde(default)]
    hypotheses: Vec<HypothesisEntry>,
    #[serde(default)]
    options: OptionsSection,
}

/// A validated manifest with resolved paths and parsed ASR labels.
#[derive(Debug, Clone)]
pub struct CorpusManifest {
    pub lexicon: LexiconSection,
    pub tiers: TiersSection,
    pub speaker_metadata: PathBuf,
    pub recordings: Vec<RecordingEntry>,
    pub hypotheses: Vec<(AsrType, PathBuf)>,
    pub options: OptionsSection,
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn require_exists(path: &Path, role: &str) -> Result<(), PipelineError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(PipelineError::Manifest(format!(
            "{role} file {} does not exist",
            path.display()
        )))
    }
}

/// Load and validate a manifest from TOML (default) or JSON (by `.json`
/// extension).
pub fn load_manifest(path: &Path) -> Result<CorpusManifest, PipelineError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PipelineError::Manifest(format!("cannot read {}: {e}", path.display())))?;
    let raw: ManifestFile = if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        serde_json::from_str(&text)
            .map_err(|e| PipelineError::Manifest(format!("bad JSON manifest: {e}")))?
    } else {
        toml::from_str(&text)
            .map_err(|e| PipelineError::Manifest(format!("bad TOML manifest: {e}")))?
    };
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    validate_manifest(raw, base)
}

fn validate_manifest(raw: ManifestFile, base: &Path) -> Result<CorpusManifest, PipelineError> {
    if raw.recordings.is_empty() {
        return Err(PipelineError::Manifest(
            "empty manifest: no recordings".to_string(),
        ));
    }
    let mut lexicon = raw.lexicon;
    lexicon.dictionary = resolve(base, &lexicon.dictionary);
    require_exists(&lexicon.dictionary, "dictionary")?;
    if let Some(p) = lexicon.supplement.take() {
        let p = resolve(base, &p);
        require_exists(&p, "supplement dictionary")?;
        lexicon.supplement = Some(p);
    }
    if let Some(p) = lexicon.targets.take() {
        let p = resolve(base, &p);
        require_exists(&p, "targets list")?;
        lexicon.targets = Some(p);
    }

    let speaker_metadata = resolve(base, &raw.speaker_metadata);
    require_exists(&speaker_metadata, "speaker metadata")?;

    let mut recordings = Vec::with_capacity(raw.recordings.len());
    let mut seen_ids = BTreeSet::new();
    for mut rec in raw.recordings {
        if !seen_ids.insert(rec.id.clone()) {
            return Err(PipelineError::Manifest(format!(
                "duplicate recording id {:?}",
                rec.id
            )));
        }
        rec.textgrid = resolve(base, &rec.textgrid);
        require_exists(&rec.textgrid, "textgrid")?;
        if let Some(audio) = rec.audio.take() {
            let audio = resolve(base, &audio);
            require_exists(&audio, "audio")?;
            rec.audio = Some(audio);
        }
        recordings.push(rec);
    }

    let mut hypotheses = Vec::with_capacity(raw.hypotheses.len());
    for entry in raw.hypotheses {
        let asr = AsrType::parse(&entry.asr_type).ok_or_else(|| {
            PipelineError::Manifest(format!(
                "bad asr_type {:?}: must be with_lm or without_lm",
                entry.asr_type
            ))
        })?;
        let p = resolve(base, &entry.path);
        require_exists(&p, "hypothesis transcript")?;
        hypotheses.push((asr, p));
    }

    if raw.options.workers == 0 {
        return Err(PipelineError::Manifest(
            "options.workers must be at least 1".to_string(),
        ));
    }

    Ok(CorpusManifest {
        lexicon,
        tiers: raw.tiers,
        speaker_metadata,
        recordings,
        hypotheses,
        options: raw.options,
    })
}

impl CorpusManifest {
    /// Effective noise patterns: configured or the defaults.
    pub fn noise_patterns(&self) -> Vec<String> {
        self.options
            .noise_patterns
            .clone()
            .unwrap_or_else(crate::alignment::default_noise_patterns)
    }

    /// Is this speaker label selected by the allow/deny lists?
    pub fn speaker_selected(&self, label: &str) -> bool {
        if self.tiers.exclude_speakers.iter().any(|s| s == label) {
            return false;
        }
        match &self.tiers.speakers {
            Some(allow) => allow.iter().any(|s| s == label),
            None => true,
        }
    }
}
