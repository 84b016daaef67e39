//! Command-line front end: dictionary expansion, segmentation planning,
//! WAV splitting, end-to-end analysis runs, fixture generation, and model
//! fits over an analysis table.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use phonvar::alignment::AsrType;
use phonvar::lexicon::{
    expand_lexicon, parse_cmu_dict, serialize_dict, ExpandOptions, VariantForm,
};
use phonvar::pipeline::{
    generate_fixture, load_manifest, plan_segments, run_analysis_to_dir, split_wav, write_fixture,
    Chunk, FixtureSpec, SegmentPlan, UtteranceSpan,
};
use phonvar::stats::{
    build_design, fit_logistic_irls, fit_ols, read_analysis_csv, render_fit, AnalysisRow,
    NeighborhoodStatus, Outcome,
};
use phonvar::textgrid::{parse_textgrid, select_tiers};
use phonvar::variants::{segment_utterances, MfaStatus};

#[derive(Parser)]
#[command(
    name = "phonvar",
    version,
    about = "Pronunciation-variant coding and ASR error analysis for speech corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expand a CMU-format dictionary with reduced pronunciation variants.
    ExpandDict {
        /// Input dictionary (CMU text format).
        input: PathBuf,
        /// Output dictionary path.
        output: PathBuf,
        /// Only expand words listed in this file (one word per line).
        #[arg(long)]
        targets: Option<PathBuf>,
        /// Restrict the droppable cluster-final stops, e.g. `T,D`.
        #[arg(long, value_delimiter = ',')]
        ccr_stops: Option<Vec<String>>,
    },
    /// Plan audio chunks of at least a minimum duration from utterances.
    PlanSegments {
        /// TextGrid to read utterances from (word tier + pause gaps).
        #[arg(long, conflicts_with = "utterances")]
        textgrid: Option<PathBuf>,
        /// Utterance CSV with header `id,start,end` (alternative input).
        #[arg(long)]
        utterances: Option<PathBuf>,
        /// Word-tier glob (one `*` capturing the speaker label).
        #[arg(long, default_value = "* - words")]
        tier_pattern: String,
        /// Speaker label when the grid holds several speakers.
        #[arg(long)]
        speaker: Option<String>,
        /// Silence gap (seconds) that starts a new utterance.
        #[arg(long, default_value_t = 1.0)]
        gap: f64,
        /// Minimum chunk duration in seconds.
        #[arg(long, default_value_t = 30.0)]
        min_duration: f64,
        /// Output plan CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split a 16-bit mono PCM WAV according to a segment plan.
    SplitWav {
        /// Input WAV file.
        input: PathBuf,
        /// Plan CSV produced by `plan-segments`.
        #[arg(long)]
        plan: PathBuf,
        /// Output directory for chunk files.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full corpus analysis described by a manifest.
    Analyze {
        /// Manifest file (.toml or .json).
        manifest: PathBuf,
        /// Output directory for analysis.csv, summary.txt, unknown_words.csv.
        #[arg(long)]
        out: PathBuf,
        /// Override the manifest's worker count.
        #[arg(long)]
        workers: Option<usize>,
        /// Also write analysis_coded.csv with contrast-coded covariates.
        #[arg(long)]
        coded: bool,
        /// Also fit the built-in fixed-effects models and write fit reports.
        #[arg(long)]
        fit: bool,
    },
    /// Generate a synthetic corpus with known ground truth.
    Fixture {
        #[arg(long)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 500)]
        tokens: usize,
        /// Fraction of tokens planted with reduced pronunciations.
        #[arg(long, default_value_t = 0.4)]
        reduced_rate: f64,
        /// Fraction of tokens misrecognized per ASR type.
        #[arg(long, default_value_t = 0.5)]
        error_rate: f64,
        /// Fraction of errors that are neighbor confusions, without LM.
        #[arg(long, default_value_t = 0.10)]
        neighbor_rate_without_lm: f64,
        /// Fraction of errors that are neighbor confusions, with LM.
        #[arg(long, default_value_t = 0.04)]
        neighbor_rate_with_lm: f64,
    },
    /// Fit a fixed-effects model over an analysis CSV.
    Fit {
        /// Which model to fit.
        #[arg(long, value_enum)]
        model: FitModel,
        /// Analysis CSV produced by `analyze`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Restrict to one variable.
        #[arg(long, value_enum, default_value_t = VariableFilter::All)]
        variable: VariableFilter,
        /// Restrict to one ASR type (WER model only).
        #[arg(long, value_enum, default_value_t = AsrFilter::All)]
        asr: AsrFilter,
        /// IRLS gradient tolerance.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// IRLS iteration cap.
        #[arg(long, default_value_t = 50)]
        max_iter: usize,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FitModel {
    Wer,
    Neighborhood,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum VariableFilter {
    All,
    Ccr,
    Ing,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum AsrFilter {
    All,
    WithLm,
    WithoutLm,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::ExpandDict {
            input,
            output,
            targets,
            ccr_stops,
        } => expand_dict(&input, &output, targets.as_deref(), ccr_stops),
        Command::PlanSegments {
            textgrid,
            utterances,
            tier_pattern,
            speaker,
            gap,
            min_duration,
            out,
        } => plan_segments_cmd(
            textgrid.as_deref(),
            utterances.as_deref(),
            &tier_pattern,
            speaker.as_deref(),
            gap,
            min_duration,
            out.as_deref(),
        ),
        Command::SplitWav { input, plan, out } => split_wav_cmd(&input, &plan, &out),
        Command::Analyze {
            manifest,
            out,
            workers,
            coded,
            fit,
        } => analyze_cmd(&manifest, &out, workers, coded, fit),
        Command::Fixture {
            seed,
            out,
            tokens,
            reduced_rate,
            error_rate,
            neighbor_rate_without_lm,
            neighbor_rate_with_lm,
        } => {
            let spec = FixtureSpec {
                tokens,
                reduced_rate,
                error_rate,
                neighbor_rates: (neighbor_rate_without_lm, neighbor_rate_with_lm),
            };
            let corpus = generate_fixture(seed, &spec)?;
            write_fixture(&corpus, &out)?;
            println!(
                "fixture: {} files, {} ground-truth rows -> {}",
                corpus.files.len(),
                corpus.ground_truth.len(),
                out.display()
            );
            Ok(())
        }
        Command::Fit {
            model,
            input,
            variable,
            asr,
            tol,
            max_iter,
            out,
        } => fit_cmd(model, &input, variable, asr, tol, max_iter, out.as_deref()),
    }
}

fn expand_dict(
    input: &Path,
    output: &Path,
    targets: Option<&Path>,
    ccr_stops: Option<Vec<String>>,
) -> Result<()> {
    let text = std::fs::read_to_string(input)
        .with_context(|| format!("cannot read {}", input.display()))?;
    let lex = parse_cmu_dict(&text)?;
    let target_set: Option<BTreeSet<String>> = match targets {
        Some(path) => Some(
            std::fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?
                .lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        ),
        None => None,
    };
    let mut opts = ExpandOptions::default();
    if let Some(stops) = ccr_stops {
        opts = opts.with_stops(stops.iter().map(|s| s.to_uppercase()));
    }
    let expanded = expand_lexicon(&lex, target_set.as_ref(), &opts);
    std::fs::write(output, serialize_dict(&expanded))
        .with_context(|| format!("cannot write {}", output.display()))?;
    let reduced: usize = expanded
        .iter()
        .flat_map(|(_, vs)| vs.iter())
        .filter(|v| v.form == VariantForm::Reduced)
        .count();
    println!(
        "expanded {} words: {} reduced variant(s) added -> {}",
        expanded.len(),
        reduced,
        output.display()
    );
    Ok(())
}

fn render_plan(plan: &SegmentPlan) -> String {
    let mut out = String::from("chunk,start,end,utterance_ids\n");
    for (i, chunk) in plan.chunks.iter().enumerate() {
        out.push_str(&format!(
            "{i},{:.6},{:.6},{}\n",
            chunk.start,
            chunk.end,
            chunk.utterance_ids.join(";")
        ));
    }
    out
}

fn plan_segments_cmd(
    textgrid: Option<&Path>,
    utterances_csv: Option<&Path>,
    tier_pattern: &str,
    speaker: Option<&str>,
    gap: f64,
    min_duration: f64,
    out: Option<&Path>,
) -> Result<()> {
    let spans: Vec<UtteranceSpan> = match (textgrid, utterances_csv) {
        (Some(grid_path), None) => {
            let bytes = std::fs::read(grid_path)
                .with_context(|| format!("cannot read {}", grid_path.display()))?;
            let parsed = parse_textgrid(&bytes)?;
            // pair against the word pattern itself: only word tiers matter here
            let selection = select_tiers(&parsed.grid, tier_pattern, tier_pattern)?;
            let pair = match speaker {
                Some(label) => selection
                    .pairs
                    .iter()
                    .find(|p| p.speaker == label)
                    .with_context(|| format!("no tier matched speaker {label:?}"))?,
                None => {
                    if selection.pairs.len() > 1 {
                        let labels: Vec<&str> =
                            selection.pairs.iter().map(|p| p.speaker.as_str()).collect();
                        bail!("several speakers matched ({labels:?}); pass --speaker");
                    }
                    &selection.pairs[0]
                }
            };
            segment_utterances(&pair.speaker, pair.words, gap)
                .into_iter()
                .map(|u| UtteranceSpan {
                    id: u.id,
                    start: u.start,
                    end: u.end,
                })
                .collect()
        }
        (None, Some(csv_path)) => {
            let text = std::fs::read_to_string(csv_path)
                .with_context(|| format!("cannot read {}", csv_path.display()))?;
            let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
            let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
            if headers != ["id", "start", "end"] {
                bail!("utterance CSV must have header id,start,end, got {headers:?}");
            }
            let mut spans = Vec::new();
            for record in reader.records() {
                let record = record?;
                spans.push(UtteranceSpan {
                    id: record.get(0).unwrap_or("").to_string(),
                    start: record.get(1).unwrap_or("").parse()?,
                    end: record.get(2).unwrap_or("").parse()?,
                });
            }
            spans
        }
        _ => bail!("pass exactly one of --textgrid or --utterances"),
    };
    let plan = plan_segments(&spans, min_duration)?;
    let rendered = render_plan(&plan);
    match out {
        Some(path) => std::fs::write(path, rendered)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn read_plan_csv(path: &Path) -> Result<SegmentPlan> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    if headers != ["chunk", "start", "end", "utterance_ids"] {
        bail!("plan CSV must have header chunk,start,end,utterance_ids, got {headers:?}");
    }
    let mut chunks = Vec::new();
    for record in reader.records() {
        let record = record?;
        chunks.push(Chunk {
            start: record.get(1).unwrap_or("").parse()?,
            end: record.get(2).unwrap_or("").parse()?,
            utterance_ids: record
                .get(3)
                .unwrap_or("")
                .split(';')
                .filter(|s| !s.is_empty())
                .map(|s| s.to_string())
                .collect(),
        });
    }
    Ok(SegmentPlan { chunks })
}

fn split_wav_cmd(input: &Path, plan_path: &Path, out_dir: &Path) -> Result<()> {
    let plan = read_plan_csv(plan_path)?;
    let bytes = std::fs::read(input).with_context(|| format!("cannot read {}", input.display()))?;
    let parts = split_wav(&bytes, &plan)?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "chunk".to_string());
    for (i, part) in parts.iter().enumerate() {
        let path = out_dir.join(format!("{stem}_{i:03}.wav"));
        std::fs::write(&path, part).with_context(|| format!("cannot write {}", path.display()))?;
    }
    println!(
        "wrote {} chunk file(s) to {}",
        parts.len(),
        out_dir.display()
    );
    Ok(())
}

fn analyze_cmd(
    manifest_path: &Path,
    out_dir: &Path,
    workers: Option<usize>,
    coded: bool,
    fit: bool,
) -> Result<()> {
    let mut manifest = load_manifest(manifest_path)?;
    if let Some(w) = workers {
        if w == 0 {
            bail!("--workers must be at least 1");
        }
        manifest.options.workers = w;
    }
    let output = run_analysis_to_dir(&manifest, out_dir, coded)?;
    for warning in &output.warnings {
        eprintln!("warning: {warning}");
    }
    println!(
        "analysis: {} rows, {} unknown word(s) -> {}",
        output.rows.len(),
        output.unknown_words.len(),
        out_dir.display()
    );
    if fit {
        write_fit_reports(&output.rows, out_dir)?;
    }
    if !output.failures.is_empty() {
        for failure in &output.failures {
            eprintln!("failed: {failure}");
        }
        eprintln!(
            "{} recording(s) failed; outputs are partial",
            output.failures.len()
        );
        std::process::exit(2);
    }
    Ok(())
}

fn write_fit_reports(rows: &[AnalysisRow], out_dir: &Path) -> Result<()> {
    let wer_rows: Vec<AnalysisRow> = rows
        .iter()
        .filter(|r| r.mfa_status != MfaStatus::Other)
        .cloned()
        .collect();
    if !wer_rows.is_empty() {
        let design = build_design(&wer_rows, Outcome::Wer)?;
        let fit = fit_ols(&design.x, &design.y, &design.column_names)?;
        std::fs::write(out_dir.join("fit_wer.txt"), render_fit(&fit, "wer"))?;
    }
    let error_rows: Vec<AnalysisRow> = rows
        .iter()
        .filter(|r| {
            matches!(
                r.neighborhood_status,
                Some(NeighborhoodStatus::NeighborError)
                    | Some(NeighborhoodStatus::NonNeighborError)
            )
        })
        .cloned()
        .collect();
    if error_rows.is_empty() {
        eprintln!("no classified errors; skipping the neighborhood fit");
        return Ok(());
    }
    let design = build_design(&error_rows, Outcome::Neighborhood)?;
    let fit = fit_logistic_irls(&design.x, &design.y, &design.column_names, 1e-8, 50)?;
    std::fs::write(
        out_dir.join("fit_neighborhood.txt"),
        render_fit(&fit, "neighborhood"),
    )?;
    Ok(())
}

fn fit_cmd(
    model: FitModel,
    input: &Path,
    variable: VariableFilter,
    asr: AsrFilter,
    tol: f64,
    max_iter: usize,
    out: Option<&Path>,
) -> Result<()> {
    let text = std::fs::read_to_string(input)
        .with_context(|| format!("cannot read {}", input.display()))?;
    let rows = read_analysis_csv(&text)?;
    let rows: Vec<AnalysisRow> = rows
        .into_iter()
        .filter(|r| match variable {
            VariableFilter::All => true,
            VariableFilter::Ccr => r.variable == phonvar::lexicon::Variable::Ccr,
            VariableFilter::Ing => r.variable == phonvar::lexicon::Variable::Ing,
        })
        .filter(|r| match asr {
            AsrFilter::All => true,
            AsrFilter::WithLm => r.asr_type == AsrType::WithLm,
            AsrFilter::WithoutLm => r.asr_type == AsrType::WithoutLm,
        })
        .collect();
    let report = match model {
        FitModel::Wer => {
            let kept: Vec<AnalysisRow> = rows
                .into_iter()
                .filter(|r| r.mfa_status != MfaStatus::Other)
                .collect();
            if kept.is_empty() {
                bail!("no rows left for the WER model after filtering");
            }
            let design = build_design(&kept, Outcome::Wer)?;
            let fit = fit_ols(&design.x, &design.y, &design.column_names)?;
            render_fit(&fit, "wer")
        }
        FitModel::Neighborhood => {
            if asr != AsrFilter::All {
                bail!(
                    "the neighborhood model uses ASR type as its covariate; do not filter by --asr"
                );
            }
            let kept: Vec<AnalysisRow> = rows
                .into_iter()
                .filter(|r| {
                    matches!(
                        r.neighborhood_status,
                        Some(NeighborhoodStatus::NeighborError)
                            | Some(NeighborhoodStatus::NonNeighborError)
                    )
                })
                .collect();
            if kept.is_empty() {
                bail!("no classified error rows for the neighborhood model");
            }
            let design = build_design(&kept, Outcome::Neighborhood)?;
            let fit = fit_logistic_irls(&design.x, &design.y, &design.column_names, tol, max_iter)?;
            render_fit(&fit, "neighborhood")
        }
    };
    match out {
        Some(path) => std::fs::write(path, report)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{report}"),
    }
    Ok(())
}
