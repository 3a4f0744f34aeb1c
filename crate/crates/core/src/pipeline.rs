//! Annotation-input assembly: merging ASR and visual-caption streams into one
//! timestamped transcript, rendering it as prompt lines, checking generated
//! chapter boundaries against source timestamps, and the coarse/fine
//! re-segmentation used by the granularity robustness harness.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chapter::{self, Chapter, ChapterTimeline, Source, TextField, TranscriptSegment};

/// Default distance within which a boundary is snapped to an anchor.
pub const DEFAULT_TOLERANCE_S: f64 = 1.0;

/// Default split-point jitter, as a fraction of chapter length.
pub const DEFAULT_JITTER: f64 = 0.1;

/// Marker placed after the timestamp of visual-caption lines.
pub const VISUAL_PREFIX: &str = "[VIS] ";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("no anchor timestamps to verify against")]
    NoAnchors,
    #[error("perturbation infeasible: {0}")]
    PerturbationInfeasible(String),
    #[error(transparent)]
    Timeline(#[from] chapter::Error),
}

/// ASR and visual segments in one chronological sequence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MultimodalTranscript {
    segments: Vec<TranscriptSegment>,
}

impl MultimodalTranscript {
    pub fn segments(&self) -> &[TranscriptSegment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// Stable merge of two start-sorted streams; ASR wins ties.
pub fn interleave(asr: &[TranscriptSegment], visual: &[TranscriptSegment]) -> MultimodalTranscript {
    let mut segments = Vec::with_capacity(asr.len() + visual.len());
    let (mut a, mut v) = (asr.iter().peekable(), visual.iter().peekable());
    loop {
        let take_asr = match (a.peek(), v.peek()) {
            (Some(x), Some(y)) => x.start() <= y.start(),
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => break,
        };
        let next = if take_asr { a.next() } else { v.next() };
        segments.extend(next.cloned());
    }
    MultimodalTranscript { segments }
}

/// `hh:mm:ss` with the seconds floored. Hours are at least two digits.
pub fn format_hms(seconds: f64) -> String {
    let total = libm::floor(seconds.max(0.0)) as u64;
    format!("{:02}:{:02}:{:02}", total / 3600, (total / 60) % 60, total % 60)
}

/// One `hh:mm:ss: <text>` line per segment; visual lines carry
/// [`VISUAL_PREFIX`] before the text.
pub fn render_transcript(transcript: &MultimodalTranscript) -> String {
    let mut out = String::new();
    for s in transcript.segments() {
        let prefix = match s.source() {
            Source::Asr => "",
            Source::Visual => VISUAL_PREFIX,
        };
        let _ = writeln!(out, "{}: {prefix}{}", format_hms(s.start()), s.text());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryStatus {
    Ok,
    Snapped,
    Rejected,
}

impl BoundaryStatus {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryStatus::Ok => "ok",
            BoundaryStatus::Snapped => "snapped",
            BoundaryStatus::Rejected => "rejected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryVerdict {
    pub chapter: usize,
    pub status: BoundaryStatus,
    /// Chapter start minus nearest anchor.
    pub delta: f64,
    pub anchor: f64,
}

fn nearest(anchors: &[f64], t: f64) -> f64 {
    let k = anchors.partition_point(|&a| a < t);
    let after = anchors.get(k).copied();
    let before = k.checked_sub(1).map(|i| anchors[i]);
    match (before, after) {
        (Some(b), Some(a)) => {
            if t - b <= a - t {
                b
            } else {
                a
            }
        }
        (Some(b), None) => b,
        (None, Some(a)) => a,
        (None, None) => unreachable!("anchors is non-empty"),
    }
}

/// Compares every chapter start with its nearest anchor. `anchors` must be
/// sorted ascending.
pub fn verify_boundaries(
    chapters: &ChapterTimeline,
    anchors: &[f64],
    tolerance: f64,
) -> Result<Vec<BoundaryVerdict>, Error> {
    if anchors.is_empty() {
        return Err(Error::NoAnchors);
    }
    Ok(chapters
        .chapters()
        .iter()
        .enumerate()
        .map(|(chapter, c)| {
            let anchor = nearest(anchors, c.start());
            let delta = c.start() - anchor;
            let status = if delta == 0.0 {
                BoundaryStatus::Ok
            } else if delta.abs() <= tolerance {
                BoundaryStatus::Snapped
            } else {
                BoundaryStatus::Rejected
            };
            BoundaryVerdict {
                chapter,
                status,
                delta,
                anchor,
            }
        })
        .collect())
}

/// Moves every snapped start onto its anchor, dragging the previous chapter's
/// end along when the two were adjacent or would now overlap.
pub fn apply_snaps(
    chapters: &ChapterTimeline,
    verdicts: &[BoundaryVerdict],
) -> Result<ChapterTimeline, Error> {
    let mut spans: Vec<(f64, f64)> = chapters.chapters().iter().map(|c| (c.start(), c.end())).collect();
    for v in verdicts.iter().filter(|v| v.status == BoundaryStatus::Snapped) {
        let old = spans[v.chapter].0;
        spans[v.chapter].0 = v.anchor;
        if v.chapter > 0 {
            let prev = &mut spans[v.chapter - 1];
            if prev.1 == old || prev.1 > v.anchor {
                prev.1 = v.anchor;
            }
        }
    }
    let rebuilt = chapters
        .chapters()
        .iter()
        .zip(&spans)
        .map(|(c, &(s, e))| c.retimed(s, e))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ChapterTimeline::new(
        chapters.video_id(),
        chapters.duration(),
        rebuilt,
    )?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbMode {
    /// Each chapter becomes two.
    Split,
    /// Adjacent pairs become one.
    Merge,
}

fn split_words(text: &str) -> (String, String) {
    let words: Vec<&str> = text.split_whitespace().collect();
    let mid = words.len().div_ceil(2);
    (words[..mid].join(" "), words[mid..].join(" "))
}

fn join_nonempty(a: &str, b: &str) -> String {
    match (a.trim().is_empty(), b.trim().is_empty()) {
        (true, _) => String::from(b.trim()),
        (_, true) => String::from(a.trim()),
        _ => format!("{} {}", a.trim(), b.trim()),
    }
}

const OPTIONAL_FIELDS: [TextField; 3] = [TextField::Title, TextField::Abstract, TextField::Introduction];

/// Re-segments `gt` at a different granularity with seeded split jitter of
/// ±[`DEFAULT_JITTER`] of each chapter's length.
pub fn perturb_granularity(
    gt: &ChapterTimeline,
    mode: PerturbMode,
    seed: u64,
) -> Result<ChapterTimeline, Error> {
    perturb_granularity_with(gt, mode, seed, DEFAULT_JITTER)
}

/// Split: every chapter is cut near its midpoint and its texts are divided
/// between the halves word by word (the first half takes the extra word).
/// Merge: chapters `(0, 1)`, `(2, 3)`, ... are joined and their texts
/// concatenated; an odd last chapter is kept as is.
pub fn perturb_granularity_with(
    gt: &ChapterTimeline,
    mode: PerturbMode,
    seed: u64,
    jitter: f64,
) -> Result<ChapterTimeline, Error> {
    if !(0.0..0.5).contains(&jitter) {
        return Err(Error::PerturbationInfeasible(format!(
            "jitter {jitter} must lie in [0, 0.5)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    match mode {
        PerturbMode::Split => {
            for (k, c) in gt.chapters().iter().enumerate() {
                let words = c.short_title().split_whitespace().count();
                if c.len() < 2.0 || words < 2 {
                    return Err(Error::PerturbationInfeasible(format!(
                        "chapter {k} needs at least 2 s and 2 title words to split (has {} s, {words} words)",
                        c.len()
                    )));
                }
                let offset = if jitter > 0.0 {
                    rng.random_range(-jitter..=jitter)
                } else {
                    0.0
                };
                let cut = c.start() + c.len() * (0.5 + offset);
                let (t1, t2) = split_words(c.short_title());
                let mut first = Chapter::new(c.start(), cut, t1)?;
                let mut second = Chapter::new(cut, c.end(), t2)?;
                for field in OPTIONAL_FIELDS {
                    if let Some(text) = c.text(field) {
                        let (a, b) = split_words(text);
                        first = first.with_field(field, Some(a));
                        second = second.with_field(field, Some(b));
                    }
                }
                out.push(first);
                out.push(second);
            }
        }
        PerturbMode::Merge => {
            if gt.len() < 2 {
                return Err(Error::PerturbationInfeasible(String::from(
                    "merging needs at least 2 chapters",
                )));
            }
            for pair in gt.chapters().chunks(2) {
                let [a, b] = pair else {
                    out.push(pair[0].clone());
                    continue;
                };
                let mut merged = Chapter::new(
                    a.start(),
                    b.end(),
                    join_nonempty(a.short_title(), b.short_title()),
                )?;
                for field in OPTIONAL_FIELDS {
                    let text = match (a.text(field), b.text(field)) {
                        (None, None) => None,
                        (x, y) => Some(join_nonempty(x.unwrap_or(""), y.unwrap_or(""))),
                    };
                    merged = merged.with_field(field, text);
                }
                out.push(merged);
            }
        }
    }
    Ok(ChapterTimeline::new(gt.video_id(), gt.duration(), out)?)
}
