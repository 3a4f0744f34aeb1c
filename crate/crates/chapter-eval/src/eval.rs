//! Dataset loading, prediction/ground-truth pairing and the parallel
//! evaluation run.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use chapter_eval_core::metrics::{self, EvalReport, VideoEvaluation};
use chapter_eval_core::textsim::{self, TextSimilarity};
use chapter_eval_core::ChapterTimeline;
use rayon::prelude::*;

use crate::config::{RunConfig, sha256_hex};
use crate::formats::{self, ChapterDocument, FormatError};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Format { path: String, source: FormatError },
    #[error("{path}: unsupported extension (expected .json, .vtt or .txt)")]
    Extension { path: String },
    #[error("{0}: no chapter files found")]
    NoInputs(String),
    #[error("duplicate ground-truth video id {0:?}")]
    DuplicateId(String),
}

pub fn read_text(path: &Path) -> Result<(String, String), LoadError> {
    let bytes = std::fs::read(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let digest = sha256_hex(&bytes);
    let text = String::from_utf8(bytes).map_err(|e| LoadError::Io {
        path: path.display().to_string(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
    })?;
    Ok((text, digest))
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Parses a chapter file, choosing the format by extension. List and VTT
/// files take their video id from the file stem.
pub fn parse_chapter_text(
    path: &Path,
    text: &str,
    duration: Option<f64>,
) -> Result<ChapterDocument, LoadError> {
    let stem = file_stem(path);
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default();
    let parsed = match ext.as_str() {
        "json" => formats::parse_canonical(text),
        "vtt" => formats::parse_vtt_chapters(text, &stem, duration),
        "txt" => formats::parse_chapter_list(text, &stem, duration),
        _ => {
            return Err(LoadError::Extension {
                path: path.display().to_string(),
            });
        }
    };
    parsed.map_err(|source| LoadError::Format {
        path: path.display().to_string(),
        source,
    })
}

fn supported(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("json" | "vtt" | "txt")
    )
}

/// A single file, or every supported file directly inside a directory, in
/// name order.
pub fn list_inputs(path: &Path) -> Result<Vec<PathBuf>, LoadError> {
    let io = |source| LoadError::Io {
        path: path.display().to_string(),
        source,
    };
    if !path.is_dir() {
        std::fs::metadata(path).map_err(io)?;
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in std::fs::read_dir(path).map_err(io)? {
        let p = entry.map_err(io)?.path();
        if p.is_file() && supported(&p) {
            files.push(p);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(LoadError::NoInputs(path.display().to_string()));
    }
    Ok(files)
}

#[derive(Debug)]
pub struct VideoInput {
    pub gt: ChapterTimeline,
    /// The prediction, or why there is none.
    pub pred: Result<ChapterTimeline, String>,
}

#[derive(Debug, Default)]
pub struct Dataset {
    pub videos: Vec<VideoInput>,
    /// (path, sha256) for every file read.
    pub digests: Vec<(String, String)>,
}

/// Loads ground truth (fatal on any problem) and predictions (problems are
/// attached to the affected video). Predictions pair by video id, then by
/// file stem.
pub fn load_dataset(pred: &Path, gt: &Path, duration: Option<f64>) -> Result<Dataset, LoadError> {
    let mut digests = Vec::new();
    let mut gts = Vec::new();
    let mut seen = HashMap::new();
    for path in list_inputs(gt)? {
        let (text, digest) = read_text(&path)?;
        digests.push((path.display().to_string(), digest));
        let doc = parse_chapter_text(&path, &text, duration)?;
        let id = doc.timeline.video_id().to_string();
        if seen.insert(id.clone(), ()).is_some() {
            return Err(LoadError::DuplicateId(id));
        }
        gts.push((file_stem(&path), doc.timeline));
    }

    let mut by_id: BTreeMap<String, Result<ChapterTimeline, String>> = BTreeMap::new();
    let mut by_stem: BTreeMap<String, Result<ChapterTimeline, String>> = BTreeMap::new();
    for path in list_inputs(pred)? {
        let stem = file_stem(&path);
        match read_text(&path) {
            Ok((text, digest)) => {
                digests.push((path.display().to_string(), digest));
                match parse_chapter_text(&path, &text, duration) {
                    Ok(doc) => {
                        let t = doc.timeline;
                        by_id.entry(t.video_id().to_string()).or_insert_with(|| Ok(t.clone()));
                        by_stem.entry(stem).or_insert(Ok(t));
                    }
                    Err(e) => {
                        by_stem.entry(stem).or_insert(Err(format!("unreadable prediction: {e}")));
                    }
                }
            }
            Err(e) => {
                by_stem.entry(stem).or_insert(Err(format!("unreadable prediction: {e}")));
            }
        }
    }

    let videos = gts
        .into_iter()
        .map(|(stem, gt)| {
            let pred = by_id
                .get(gt.video_id())
                .or_else(|| by_stem.get(&stem))
                .cloned()
                .unwrap_or_else(|| Err(format!("no prediction for video {:?}", gt.video_id())));
            VideoInput { gt, pred }
        })
        .collect();
    Ok(Dataset { videos, digests })
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: EvalReport,
    /// (video id, message) for videos scored as failures.
    pub errors: Vec<(String, String)>,
    /// Set when the scorer broke down; the report then covers only the
    /// videos scored before the failure.
    pub fatal: Option<String>,
}

fn is_scorer_failure(e: &metrics::Error) -> bool {
    matches!(e, metrics::Error::Text(textsim::Error::Scorer(_)))
}

/// Scores every video on a pool of `jobs` threads, then aggregates in input
/// order.
pub fn run<S: TextSimilarity + Sync + ?Sized>(
    dataset: &Dataset,
    config: &RunConfig,
    scorer: &S,
    jobs: usize,
) -> Result<RunOutcome, metrics::Error> {
    let cfg = &config.metric;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| metrics::Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<VideoEvaluation, metrics::Error>> = pool.install(|| {
        dataset
            .videos
            .par_iter()
            .map(|v| match &v.pred {
                Ok(p) => metrics::evaluate_video(p, &v.gt, cfg, scorer),
                Err(msg) => Ok(metrics::failed_video(&v.gt, cfg, msg.clone())),
            })
            .collect()
    });

    let mut done = Vec::with_capacity(results.len());
    let mut errors = Vec::new();
    let mut fatal = None;
    for (v, r) in dataset.videos.iter().zip(results) {
        match r {
            Ok(e) => {
                if let Some(msg) = &e.scores.error {
                    errors.push((e.scores.video_id.clone(), msg.clone()));
                }
                done.push(e);
            }
            Err(e) if is_scorer_failure(&e) => {
                errors.push((v.gt.video_id().to_string(), e.to_string()));
                fatal.get_or_insert_with(|| e.to_string());
            }
            Err(e) => {
                let msg = e.to_string();
                errors.push((v.gt.video_id().to_string(), msg.clone()));
                done.push(metrics::failed_video(&v.gt, cfg, msg));
            }
        }
    }
    let report = if done.is_empty() {
        EvalReport {
            per_video: Vec::new(),
            per_bucket: chapter_eval_core::BucketLabel::REPORTED
                .into_iter()
                .map(|l| (l, None))
                .collect(),
        }
    } else {
        metrics::aggregate(done, cfg)?
    };
    Ok(RunOutcome {
        report,
        errors,
        fatal,
    })
}
