//! Orchestration: manifests, end-to-end analysis runs, audio segmentation
//! planning, WAV splitting, and synthetic fixture generation.

mod analyze;
mod fixture;
mod manifest;
mod segment;
mod wav;

pub use analyze::{render_unknown_words, run_analysis, run_analysis_to_dir, RunOutput};
pub use fixture::{generate_fixture, write_fixture, FixtureCorpus, FixtureSpec, GroundTruthRow};
pub use manifest::{
    load_manifest, CorpusManifest, HypothesisEntry, LexiconSection, OptionsSection, RecordingEntry,
    TiersSection,
};
pub use segment::{plan_segments, Chunk, SegmentError, SegmentPlan, UtteranceSpan};
pub use wav::{cut_chunk, parse_wav, split_wav, write_wav, PcmAudio, WavError};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("hypothesis transcripts: {0}")]
    Hypotheses(String),
    #[error(transparent)]
    Lexicon(#[from] crate::lexicon::LexiconError),
    #[error(transparent)]
    Variants(#[from] crate::variants::VariantsError),
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error("fixture spec: {0}")]
    Fixture(String),
    #[error("empty final dataset{}", if .failures.is_empty() { String::new() } else { format!(" ({} recording(s) failed)", .failures.len()) })]
    EmptyDataset { failures: Vec<String> },
}
