//! Chapter domain types and interval arithmetic.
//!
//! Intervals are half-open `[start, end)`, so adjacent chapters share a
//! boundary without intersecting.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Largest overlap between consecutive chapters that is repaired by
/// truncating the earlier chapter instead of being rejected.
pub const OVERLAP_CLAMP_S: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("time {0} is not a finite non-negative number of seconds")]
    InvalidTime(f64),
    #[error("chapter {index} has non-positive duration [{start}, {end})")]
    EmptyInterval { index: usize, start: f64, end: f64 },
    #[error("chapter {index} starts before chapter {} (not sorted by start)", index - 1)]
    Unsorted { index: usize },
    #[error("chapter {index} overlaps its predecessor by {overlap} s")]
    Overlap { index: usize, overlap: f64 },
    #[error("last chapter ends at {end} s, past the video duration {duration} s")]
    ExceedsDuration { end: f64, duration: f64 },
    #[error("timeline has no chapters")]
    EmptyTimeline,
    #[error("group of {pred} predicted and {gt} ground-truth chapters is not one-to-many")]
    GroupShape { pred: usize, gt: usize },
    #[error("transcript segment text is empty")]
    EmptySegmentText,
    #[error("duration {0} s is not covered by any bucket")]
    BucketGap(f64),
}

/// A point in a video, in seconds from its start.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct TimeSec(f64);

impl TimeSec {
    pub const ZERO: TimeSec = TimeSec(0.0);

    pub fn new(value: f64) -> Result<Self, Error> {
        if value.is_finite() && value >= 0.0 {
            // normalise -0.0
            Ok(TimeSec(value + 0.0))
        } else {
            Err(Error::InvalidTime(value))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl fmt::Display for TimeSec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}s", self.0)
    }
}

/// Which text of a chapter a metric reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TextField {
    #[default]
    ShortTitle,
    Title,
    Abstract,
    Introduction,
}

impl TextField {
    pub const ALL: [TextField; 4] = [
        TextField::ShortTitle,
        TextField::Title,
        TextField::Abstract,
        TextField::Introduction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TextField::ShortTitle => "short_title",
            TextField::Title => "title",
            TextField::Abstract => "abstract",
            TextField::Introduction => "introduction",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// A titled temporal interval `[start, end)` of a video.
#[derive(Debug, Clone, PartialEq)]
pub struct Chapter {
    start: TimeSec,
    end: TimeSec,
    short_title: String,
    title: Option<String>,
    abstract_: Option<String>,
    introduction: Option<String>,
}

impl Chapter {
    pub fn new(start: f64, end: f64, short_title: impl Into<String>) -> Result<Self, Error> {
        let start = TimeSec::new(start)?;
        let end = TimeSec::new(end)?;
        if start.get() >= end.get() {
            return Err(Error::EmptyInterval {
                index: 0,
                start: start.get(),
                end: end.get(),
            });
        }
        Ok(Chapter {
            start,
            end,
            short_title: short_title.into(),
            title: None,
            abstract_: None,
            introduction: None,
        })
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }

    pub fn with_abstract(mut self, text: impl Into<String>) -> Self {
        self.abstract_ = Some(text.into());
        self
    }

    pub fn with_introduction(mut self, text: impl Into<String>) -> Self {
        self.introduction = Some(text.into());
        self
    }

    /// Sets an optional field; `ShortTitle` replaces the short title when
    /// `text` is `Some`.
    pub fn with_field(mut self, field: TextField, text: Option<String>) -> Self {
        match field {
            TextField::ShortTitle => {
                if let Some(t) = text {
                    self.short_title = t;
                }
            }
            TextField::Title => self.title = text,
            TextField::Abstract => self.abstract_ = text,
            TextField::Introduction => self.introduction = text,
        }
        self
    }

    pub fn start(&self) -> f64 {
        self.start.get()
    }

    pub fn end(&self) -> f64 {
        self.end.get()
    }

    pub fn len(&self) -> f64 {
        self.end.get() - self.start.get()
    }

    pub fn short_title(&self) -> &str {
        &self.short_title
    }

    pub fn title(&self) -> Option<&str> {
        self.title.as_deref()
    }

    pub fn abstract_text(&self) -> Option<&str> {
        self.abstract_.as_deref()
    }

    pub fn introduction(&self) -> Option<&str> {
        self.introduction.as_deref()
    }

    pub fn text(&self, field: TextField) -> Option<&str> {
        match field {
            TextField::ShortTitle => Some(&self.short_title),
            TextField::Title => self.title(),
            TextField::Abstract => self.abstract_text(),
            TextField::Introduction => self.introduction(),
        }
    }

    /// Same texts over a different interval.
    pub fn retimed(&self, start: f64, end: f64) -> Result<Self, Error> {
        let mut c = Chapter::new(start, end, String::new())?;
        c.short_title = self.short_title.clone();
        c.title = self.title.clone();
        c.abstract_ = self.abstract_.clone();
        c.introduction = self.introduction.clone();
        Ok(c)
    }
}

/// Non-fatal repairs applied while building a timeline.
#[derive(Debug, Clone, PartialEq)]
pub enum TimelineWarning {
    /// Chapter `index - 1` was truncated to start of chapter `index`.
    OverlapClamped { index: usize, overlap: f64 },
}

impl fmt::Display for TimelineWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimelineWarning::OverlapClamped { index, overlap } => write!(
                f,
                "chapter {} overlapped chapter {index} by {overlap} s and was truncated",
                index - 1
            ),
        }
    }
}

/// The ordered, non-overlapping chapters of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct ChapterTimeline {
    video_id: String,
    duration: Option<TimeSec>,
    chapters: Vec<Chapter>,
}

impl ChapterTimeline {
    /// Builds a timeline, discarding repair warnings.
    pub fn new(
        video_id: impl Into<String>,
        duration: Option<f64>,
        chapters: Vec<Chapter>,
    ) -> Result<Self, Error> {
        Self::build(video_id, duration, chapters).map(|(t, _)| t)
    }

    /// Validates ordering and overlap. Overlaps up to [`OVERLAP_CLAMP_S`] are
    /// repaired by truncating the earlier chapter and reported as warnings.
    pub fn build(
        video_id: impl Into<String>,
        duration: Option<f64>,
        mut chapters: Vec<Chapter>,
    ) -> Result<(Self, Vec<TimelineWarning>), Error> {
        if chapters.is_empty() {
            return Err(Error::EmptyTimeline);
        }
        let duration = duration.map(TimeSec::new).transpose()?;
        let mut warnings = Vec::new();
        for index in 1..chapters.len() {
            let next_start = chapters[index].start;
            let prev = &mut chapters[index - 1];
            if next_start.get() < prev.start.get() {
                return Err(Error::Unsorted { index });
            }
            let overlap = prev.end.get() - next_start.get();
            if overlap > OVERLAP_CLAMP_S {
                return Err(Error::Overlap { index, overlap });
            }
            if overlap > 0.0 {
                if next_start.get() <= prev.start.get() {
                    return Err(Error::EmptyInterval {
                        index: index - 1,
                        start: prev.start.get(),
                        end: next_start.get(),
                    });
                }
                prev.end = next_start;
                warnings.push(TimelineWarning::OverlapClamped { index, overlap });
            }
        }
        if let Some(d) = duration {
            let end = chapters[chapters.len() - 1].end.get();
            if end > d.get() {
                return Err(Error::ExceedsDuration {
                    end,
                    duration: d.get(),
                });
            }
        }
        Ok((
            ChapterTimeline {
                video_id: video_id.into(),
                duration,
                chapters,
            },
            warnings,
        ))
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn duration(&self) -> Option<f64> {
        self.duration.map(TimeSec::get)
    }

    /// Declared duration, or the end of the last chapter when absent.
    pub fn effective_duration(&self) -> f64 {
        self.duration()
            .unwrap_or_else(|| self.chapters[self.chapters.len() - 1].end())
    }

    pub fn chapters(&self) -> &[Chapter] {
        &self.chapters
    }

    pub fn len(&self) -> usize {
        self.chapters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chapters.is_empty()
    }

    pub fn into_chapters(self) -> Vec<Chapter> {
        self.chapters
    }

    /// Applies `t -> scale * t + shift` to every time, duration included.
    pub fn affine(&self, scale: f64, shift: f64) -> Result<Self, Error> {
        let map = |t: f64| scale * t + shift;
        let chapters = self
            .chapters
            .iter()
            .map(|c| c.retimed(map(c.start()), map(c.end())))
            .collect::<Result<Vec<_>, _>>()?;
        ChapterTimeline::new(self.video_id.clone(), self.duration().map(map), chapters)
    }
}

/// Where a transcript segment came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    Asr,
    Visual,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Asr => "asr",
            Source::Visual => "visual",
        }
    }
}

/// A timestamped unit of transcript text.
#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptSegment {
    start: TimeSec,
    text: String,
    source: Source,
}

impl TranscriptSegment {
    /// Collapses internal whitespace; rejects text that is blank.
    pub fn new(start: f64, text: &str, source: Source) -> Result<Self, Error> {
        let start = TimeSec::new(start)?;
        let text = collapse_whitespace(text);
        if text.is_empty() {
            return Err(Error::EmptySegmentText);
        }
        Ok(TranscriptSegment {
            start,
            text,
            source,
        })
    }

    pub fn start(&self) -> f64 {
        self.start.get()
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn source(&self) -> Source {
        self.source
    }
}

pub(crate) fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Temporal intersection-over-union of two chapters.
pub fn iou(a: &Chapter, b: &Chapter) -> f64 {
    let inter = (a.end().min(b.end()) - a.start().max(b.start())).max(0.0);
    let union = a.len() + b.len() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Mean pairwise IoU between a predicted group and a ground-truth group.
/// One side must be a single chapter.
pub fn phi(pred: &[Chapter], gt: &[Chapter]) -> Result<f64, Error> {
    if pred.is_empty() || gt.is_empty() || (pred.len() > 1 && gt.len() > 1) {
        return Err(Error::GroupShape {
            pred: pred.len(),
            gt: gt.len(),
        });
    }
    Ok(phi_unchecked(pred, gt))
}

pub(crate) fn phi_unchecked(pred: &[Chapter], gt: &[Chapter]) -> f64 {
    let mut total = 0.0;
    for p in pred {
        for g in gt {
            total += iou(p, g);
        }
    }
    total / (pred.len() * gt.len()) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BucketLabel {
    Short,
    Medium,
    Long,
    All,
}

impl BucketLabel {
    pub const REPORTED: [BucketLabel; 4] = [
        BucketLabel::Short,
        BucketLabel::Medium,
        BucketLabel::Long,
        BucketLabel::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BucketLabel::Short => "short",
            BucketLabel::Medium => "medium",
            BucketLabel::Long => "long",
            BucketLabel::All => "all",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::REPORTED.into_iter().find(|b| b.name() == name)
    }
}

/// A video-length range `(min, max]` used to group reported results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DurationBucket {
    pub label: BucketLabel,
    pub min: f64,
    pub max: f64,
}

impl DurationBucket {
    pub fn contains(&self, duration: f64) -> bool {
        duration > self.min && duration <= self.max
    }
}

/// Short up to 15 min, medium up to 30 min, long up to 60 min.
pub fn default_buckets() -> Vec<DurationBucket> {
    alloc::vec![
        DurationBucket {
            label: BucketLabel::Short,
            min: 0.0,
            max: 15.0 * 60.0,
        },
        DurationBucket {
            label: BucketLabel::Medium,
            min: 15.0 * 60.0,
            max: 30.0 * 60.0,
        },
        DurationBucket {
            label: BucketLabel::Long,
            min: 30.0 * 60.0,
            max: 60.0 * 60.0,
        },
    ]
}

/// The configured bucket holding `duration`. Durations beyond every
/// configured bucket belong to `All` only; a non-positive duration or one in
/// an interior gap is an error. Any `All` entry in `buckets` is ignored.
pub fn bucket_of(duration: f64, buckets: &[DurationBucket]) -> Result<BucketLabel, Error> {
    let ranged = buckets.iter().filter(|b| b.label != BucketLabel::All);
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::BucketGap(duration));
    }
    let mut ceiling = f64::NEG_INFINITY;
    for b in ranged {
        if b.contains(duration) {
            return Ok(b.label);
        }
        ceiling = ceiling.max(b.max);
    }
    if duration > ceiling {
        Ok(BucketLabel::All)
    } else {
        Err(Error::BucketGap(duration))
    }
}
