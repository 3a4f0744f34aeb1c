//! Command-line front end. [`run`] returns the process exit code: 0 clean,
//! 2 when some videos could not be scored, 1 on fatal errors.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result, bail};
use chapter_eval_core::chapter::Source;
use chapter_eval_core::metrics::grpo_reward;
use chapter_eval_core::pipeline::{self, PerturbMode};
use chapter_eval_core::textsim::{LexicalF1, TextSimilarity};
use chapter_eval_core::TranscriptSegment;
use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{Overrides, RunConfig, Similarity};
use crate::eval::{self, file_stem, read_text};
use crate::formats::{self, TranscriptDocument};
use crate::report::{self, Manifest};
use crate::scorer::{self, ExternalScorer};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "chapter-eval", version, about = "Evaluate video chapters with GRACE, SODA, F1, tIoU and CIDEr")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SimArg {
    Lexical,
    External,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FieldArg {
    ShortTitle,
    Title,
    Abstract,
    Introduction,
}

impl FieldArg {
    fn name(self) -> &'static str {
        match self {
            FieldArg::ShortTitle => "short_title",
            FieldArg::Title => "title",
            FieldArg::Abstract => "abstract",
            FieldArg::Introduction => "introduction",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Split,
    Merge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    List,
    Vtt,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score predictions against ground truth and write report.json,
    /// report.md and manifest.json.
    Evaluate {
        /// Prediction file or directory.
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth file or directory.
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        sim: Option<SimArg>,
        /// Sidecar command line, split shell-style.
        #[arg(long)]
        scorer_cmd: Option<String>,
        /// Bucket list as JSON, e.g. '[{"label":"short","min_s":0,"max_s":900}]'.
        #[arg(long)]
        buckets: Option<String>,
        #[arg(long, value_enum)]
        field: Option<FieldArg>,
        /// Worker threads; defaults to the number of cores.
        #[arg(long)]
        jobs: Option<usize>,
        /// Video duration in seconds for list and VTT files without an end time.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Print the temporal alignment reward per video as JSON lines.
    Reward {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Split or merge ground-truth chapters to change their granularity.
    Perturb {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = pipeline::DEFAULT_JITTER)]
        jitter: f64,
        #[arg(long)]
        duration: Option<f64>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Interleave speech and visual transcripts and render them as
    /// `hh:mm:ss: text` lines.
    Transcript {
        /// Speech transcript (.vtt, .srt or .json).
        #[arg(long)]
        asr: PathBuf,
        /// Visual captions (.vtt, .srt or .json).
        #[arg(long)]
        visual: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert a chapter file between formats.
    Convert {
        #[arg(long)]
        input: PathBuf,
        /// Input format; guessed from the extension when absent.
        #[arg(long, value_enum)]
        from: Option<FormatArg>,
        #[arg(long, value_enum)]
        to: FormatArg,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the lexical textsim/1 scorer on stdin/stdout.
    ServeLexical,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_FATAL } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FATAL
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Evaluate {
            pred,
            gt,
            config,
            out,
            sim,
            scorer_cmd,
            buckets,
            field,
            jobs,
            duration,
        } => {
            let overrides = Overrides {
                similarity: sim.map(|s| match s {
                    SimArg::Lexical => Similarity::Lexical,
                    SimArg::External => Similarity::External,
                }),
                scorer_cmd,
                buckets_json: buckets,
                text_field: field.map(|f| f.name().to_string()),
            };
            let cfg = RunConfig::load(config.as_deref(), &overrides)?;
            let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            cmd_evaluate(&pred, &gt, &cfg, &out, jobs, duration)
        }
        Command::Reward { pred, gt, duration } => cmd_reward(&pred, &gt, duration),
        Command::Perturb {
            gt,
            mode,
            seed,
            jitter,
            duration,
            out,
        } => {
            let (text, _) = read_text(&gt)?;
            let doc = eval::parse_chapter_text(&gt, &text, duration)?;
            let mode = match mode {
                ModeArg::Split => PerturbMode::Split,
                ModeArg::Merge => PerturbMode::Merge,
            };
            let t = pipeline::perturb_granularity_with(&doc.timeline, mode, seed, jitter)?;
            emit(out.as_deref(), &formats::serialize_canonical(&t))?;
            Ok(EXIT_OK)
        }
        Command::Transcript { asr, visual, out } => {
            let speech = load_transcript(&asr, Source::Asr)?;
            let vis = match &visual {
                Some(p) => load_transcript(p, Source::Visual)?,
                None => Vec::new(),
            };
            let merged = pipeline::interleave(&speech, &vis);
            emit(out.as_deref(), &pipeline::render_transcript(&merged))?;
            Ok(EXIT_OK)
        }
        Command::Convert {
            input,
            from,
            to,
            duration,
            out,
        } => {
            let (text, _) = read_text(&input)?;
            let from = match from {
                Some(f) => f,
                None => guess_format(&input)?,
            };
            let stem = file_stem(&input);
            let doc = match from {
                FormatArg::Json => formats::parse_canonical(&text),
                FormatArg::List => formats::parse_chapter_list(&text, &stem, duration),
                FormatArg::Vtt => formats::parse_vtt_chapters(&text, &stem, duration),
            }
            .with_context(|| input.display().to_string())?;
            for w in &doc.warnings {
                eprintln!("warning: {}: {w}", input.display());
            }
            let rendered = match to {
                FormatArg::Json => formats::serialize_canonical(&doc.timeline),
                FormatArg::List => formats::serialize_chapter_list(&doc.timeline),
                FormatArg::Vtt => formats::serialize_vtt_chapters(&doc.timeline),
            };
            emit(out.as_deref(), &rendered)?;
            Ok(EXIT_OK)
        }
        Command::ServeLexical => {
            let stdin = io::stdin();
            scorer::serve_lexical(stdin.lock(), io::stdout().lock())?;
            Ok(EXIT_OK)
        }
    }
}

fn guess_format(path: &Path) -> Result<FormatArg> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Ok(FormatArg::Json),
        Some("vtt") => Ok(FormatArg::Vtt),
        Some("txt") => Ok(FormatArg::List),
        _ => bail!("cannot tell the format of {}; pass --from", path.display()),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn load_transcript(path: &Path, source: Source) -> Result<Vec<TranscriptSegment>> {
    let (text, _) = read_text(path)?;
    let stem = file_stem(path);
    let doc: TranscriptDocument = match path.extension().and_then(|e| e.to_str()) {
        Some("vtt") => formats::parse_vtt_transcript(&text, &stem),
        Some("srt") => formats::parse_srt_transcript(&text, &stem),
        Some("json") => formats::parse_transcript_json(&text),
        _ => bail!("{}: expected a .vtt, .srt or .json transcript", path.display()),
    }
    .with_context(|| path.display().to_string())?;
    for w in &doc.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    doc.segments
        .iter()
        .map(|s| TranscriptSegment::new(s.start(), s.text(), source).map_err(Into::into))
        .collect()
}

fn cmd_evaluate(
    pred: &Path,
    gt: &Path,
    cfg: &RunConfig,
    out: &Path,
    jobs: usize,
    duration: Option<f64>,
) -> Result<i32> {
    let clock = Instant::now();
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let dataset = eval::load_dataset(pred, gt, duration)?;
    let scorer: Box<dyn TextSimilarity + Sync> = match cfg.similarity {
        Similarity::Lexical => Box::new(LexicalF1),
        Similarity::External => {
            let cmd = cfg.scorer_cmd.as_deref().expect("validated in config");
            Box::new(ExternalScorer::from_command_line(cmd, scorer::timeout_from_env()?)?)
        }
    };
    let outcome = eval::run(&dataset, cfg, scorer.as_ref(), jobs)?;
    let incomplete = outcome.fatal.is_some();

    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let write = |name: &str, body: String| -> Result<()> {
        let p = out.join(name);
        std::fs::write(&p, body).with_context(|| format!("writing {}", p.display()))
    };
    write(
        "report.json",
        report::report_json(&outcome.report, cfg, scorer.backend(), incomplete),
    )?;
    write("report.md", report::report_markdown(&outcome.report, incomplete))?;
    write(
        "manifest.json",
        report::manifest_json(&Manifest {
            config_hash: cfg.hash(),
            backend: scorer.backend().to_string(),
            inputs: dataset.digests.clone(),
            wall_clock_s: clock.elapsed().as_secs_f64(),
            started_unix_s: started,
            errors: outcome.errors.clone(),
            incomplete,
        }),
    )?;

    for (video, msg) in &outcome.errors {
        eprintln!("warning: {video}: {msg}");
    }
    if let Some(msg) = outcome.fatal {
        eprintln!("error: similarity scorer failed, report is incomplete: {msg}");
        return Ok(EXIT_FATAL);
    }
    Ok(if outcome.errors.is_empty() { EXIT_OK } else { EXIT_PARTIAL })
}

fn cmd_reward(pred: &Path, gt: &Path, duration: Option<f64>) -> Result<i32> {
    let dataset = eval::load_dataset(pred, gt, duration)?;
    let mut stdout = io::stdout().lock();
    for v in &dataset.videos {
        let p = match &v.pred {
            Ok(p) => p,
            Err(msg) => bail!("{}: {msg}", v.gt.video_id()),
        };
        let r = grpo_reward(p.chapters(), v.gt.chapters())?;
        let line = serde_json::json!({
            "video_id": v.gt.video_id(),
            "raw": r.raw,
            "normalized": r.normalized,
        });
        writeln!(stdout, "{line}")?;
    }
    Ok(EXIT_OK)
}
