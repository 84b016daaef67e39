//! Corpus-analysis toolkit for phonological reduction variants in ASR
//! evaluation.
//!
//! The crate covers the full path from raw resources to analysis tables:
//!
//! * [`lexicon`] — CMU-format dictionary parsing and expansion with
//!   cluster-reduced and -ing-reduced pronunciation variants;
//! * [`textgrid`] — Praat TextGrid parsing (forced-alignment output) and
//!   per-word phone gathering;
//! * [`variants`] — target-token extraction and Original/Reduced coding;
//! * [`alignment`] — Needleman-Wunsch alignment of reference vs. ASR
//!   hypothesis tokens and WER;
//! * [`neighborhood`] — phonological edit distance, distance-1 neighbor
//!   retrieval, and neighbor-error attribution;
//! * [`stats`] — contrast coding, OLS and IRLS-logistic fixed-effects fits,
//!   and descriptive summaries;
//! * [`pipeline`] — manifest-driven end-to-end runs, audio segmentation
//!   planning, WAV splitting, and synthetic fixture generation.

pub mod alignment;
pub mod lexicon;
pub mod neighborhood;
pub mod pipeline;
pub mod stats;
pub mod textgrid;
pub mod variants;
