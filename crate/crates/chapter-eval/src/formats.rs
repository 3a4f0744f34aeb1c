//! Text formats: canonical chapter/transcript JSON, timestamped chapter
//! lists, WebVTT and SRT, and the rendered `hh:mm:ss: text` transcript.
//!
//! Canonical JSON is the interchange hub; every other chapter format
//! converts through it.

use std::fmt::Write as _;

use chapter_eval_core::chapter::{self, Chapter, ChapterTimeline, Source, TranscriptSegment};
use chapter_eval_core::pipeline::VISUAL_PREFIX;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}, column {column}: bad timestamp: {reason}")]
    TimestampSyntax {
        line: usize,
        column: usize,
        reason: String,
    },
    #[error("line {line}: timestamp does not increase over the previous chapter")]
    NonMonotonicTimestamp { line: usize },
    #[error("the last chapter has no end: pass a video duration or add a final timestamp-only line")]
    MissingDuration,
    #[error("line {line}: {reason}")]
    ListSyntax { line: usize, reason: String },
    #[error("cue {cue}: {reason}")]
    CueSyntax { cue: usize, reason: String },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Timeline(#[from] chapter::Error),
    #[error("document has no chapters")]
    Empty,
}

/// Position-less timestamp failure, located by the caller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimestampError {
    pub column: usize,
    pub reason: String,
}

impl TimestampError {
    fn at(self, line: usize) -> FormatError {
        FormatError::TimestampSyntax {
            line,
            column: self.column,
            reason: self.reason,
        }
    }
}

/// Keeps millisecond arithmetic exact in `u64` and `f64`.
const MAX_SECONDS: u64 = 1 << 40;

fn ts_err(column: usize, reason: impl Into<String>) -> TimestampError {
    TimestampError {
        column,
        reason: reason.into(),
    }
}

/// Parses `h:mm:ss`, `hh:mm:ss`, `mm:ss`, optionally followed by `.mmm`.
/// The leading field takes any number of digits; later fields are exactly two
/// digits below 60. Columns in errors are 1-based.
pub fn parse_timestamp(s: &str) -> Result<f64, TimestampError> {
    if let Some(pos) = s.find(|c: char| !(c.is_ascii_digit() || c == ':' || c == '.')) {
        return Err(ts_err(
            s[..pos].chars().count() + 1,
            format!("unexpected character {:?}", s[pos..].chars().next().unwrap()),
        ));
    }
    let (clock, fraction) = match s.find('.') {
        Some(dot) => (&s[..dot], Some((dot, &s[dot + 1..]))),
        None => (s, None),
    };
    let fields: Vec<&str> = clock.split(':').collect();
    if !(2..=3).contains(&fields.len()) {
        return Err(ts_err(1, "expected mm:ss or hh:mm:ss"));
    }
    let mut column = 1;
    let mut total = 0u64;
    for (k, field) in fields.iter().enumerate() {
        if field.is_empty() {
            return Err(ts_err(column, "empty field"));
        }
        if k > 0 && field.len() != 2 {
            return Err(ts_err(column, "minutes and seconds take two digits"));
        }
        let value: u64 = field
            .parse()
            .map_err(|_| ts_err(column, "field out of range"))?;
        if k > 0 && value >= 60 {
            return Err(ts_err(column, format!("field {value} must be below 60")));
        }
        total = total
            .checked_mul(60)
            .and_then(|t| t.checked_add(value))
            .filter(|t| *t <= MAX_SECONDS)
            .ok_or_else(|| ts_err(column, "timestamp too large"))?;
        column += field.len() + 1;
    }
    let Some((dot, digits)) = fraction else {
        return Ok(total as f64);
    };
    if digits.len() != 3 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ts_err(dot + 2, "fraction takes exactly three digits"));
    }
    let ms: u64 = digits.parse().expect("three ascii digits");
    // one division keeps `n / 1000.0` inputs bit-exact through a round trip
    Ok((total * 1000 + ms) as f64 / 1000.0)
}

fn round_ms(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

fn split_ms(t: f64) -> (u64, u64) {
    let ms = (t * 1000.0).round() as u64;
    (ms / 1000, ms % 1000)
}

/// `mm:ss` below one hour, `h:mm:ss` above; `.mmm` appended when the time
/// is not a whole second.
pub fn format_timestamp(t: f64) -> String {
    let (secs, ms) = split_ms(t);
    let mut out = if secs >= 3600 {
        format!("{}:{:02}:{:02}", secs / 3600, (secs / 60) % 60, secs % 60)
    } else {
        format!("{:02}:{:02}", secs / 60, secs % 60)
    };
    if ms != 0 {
        let _ = write!(out, ".{ms:03}");
    }
    out
}

/// `hh:mm:ss.mmm`, as WebVTT cue timings require.
pub fn format_vtt_timestamp(t: f64) -> String {
    let (secs, ms) = split_ms(t);
    format!("{:02}:{:02}:{:02}.{ms:03}", secs / 3600, (secs / 60) % 60, secs % 60)
}

fn format_srt_timestamp(t: f64) -> String {
    format_vtt_timestamp(t).replace('.', ",")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChapterFormat {
    CanonicalJson,
    TimestampList,
    WebVttChapters,
}

impl ChapterFormat {
    pub fn name(self) -> &'static str {
        match self {
            ChapterFormat::CanonicalJson => "json",
            ChapterFormat::TimestampList => "list",
            ChapterFormat::WebVttChapters => "vtt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChapterDocument {
    pub timeline: ChapterTimeline,
    pub source_format: ChapterFormat,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TranscriptDocument {
    pub video_id: String,
    pub segments: Vec<TranscriptSegment>,
    pub language: Option<String>,
    pub warnings: Vec<String>,
}

impl TranscriptDocument {
    fn sorted(mut self) -> Self {
        self.segments
            .sort_by(|a, b| a.start().partial_cmp(&b.start()).expect("finite times"));
        self
    }
}

fn build_timeline(
    video_id: &str,
    duration: Option<f64>,
    chapters: Vec<Chapter>,
    warnings: &mut Vec<String>,
) -> Result<ChapterTimeline, FormatError> {
    if chapters.is_empty() {
        return Err(FormatError::Empty);
    }
    let (timeline, repaired) = ChapterTimeline::build(video_id, duration, chapters)?;
    warnings.extend(repaired.iter().map(ToString::to_string));
    Ok(timeline)
}

/// Parses a `<timestamp> <title>` / `<timestamp> - <title>` list. Chapter
/// `k` ends where chapter `k + 1` starts; the last one ends at a trailing
/// timestamp-only line, or else at `duration`.
pub fn parse_chapter_list(
    text: &str,
    video_id: &str,
    duration: Option<f64>,
) -> Result<ChapterDocument, FormatError> {
    let mut starts: Vec<(usize, f64, String)> = Vec::new();
    let mut end_marker: Option<(usize, f64)> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some((marker_line, _)) = end_marker {
            return Err(FormatError::ListSyntax {
                line: line_no,
                reason: format!("content after the end-time line {marker_line}"),
            });
        }
        let leading = raw.len() - raw.trim_start().len();
        let (stamp, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let t = parse_timestamp(stamp).map_err(|mut e| {
            e.column += leading;
            e.at(line_no)
        })?;
        if let Some(&(_, prev, _)) = starts.last()
            && t <= prev
        {
            return Err(FormatError::NonMonotonicTimestamp { line: line_no });
        }
        let title = rest.trim();
        let title = title
            .strip_prefix(['-', '\u{2013}', '\u{2014}'])
            .map(str::trim)
            .unwrap_or(title);
        if title.is_empty() {
            end_marker = Some((line_no, t));
        } else {
            starts.push((line_no, t, title.to_string()));
        }
    }
    if starts.is_empty() {
        return Err(FormatError::Empty);
    }
    let last_end = match (end_marker, duration) {
        (Some((_, t)), _) => t,
        (None, Some(d)) => d,
        (None, None) => return Err(FormatError::MissingDuration),
    };
    let mut chapters = Vec::with_capacity(starts.len());
    for (k, (line, start, title)) in starts.iter().enumerate() {
        let end = starts.get(k + 1).map_or(last_end, |next| next.1);
        let chapter = Chapter::new(*start, end, title.as_str()).map_err(|e| match e {
            chapter::Error::EmptyInterval { .. } => FormatError::ListSyntax {
                line: *line,
                reason: format!("chapter would end at {end} s, not after its start {start} s"),
            },
            other => other.into(),
        })?;
        chapters.push(chapter);
    }
    let mut warnings = Vec::new();
    let timeline = build_timeline(video_id, duration, chapters, &mut warnings)?;
    Ok(ChapterDocument {
        timeline,
        source_format: ChapterFormat::TimestampList,
        warnings,
    })
}

/// Writes a chapter list with a closing timestamp-only line.
/// Gaps between chapters cannot be represented and are absorbed into the
/// preceding chapter.
pub fn serialize_chapter_list(timeline: &ChapterTimeline) -> String {
    let mut out = String::new();
    for c in timeline.chapters() {
        let _ = writeln!(out, "{} {}", format_timestamp(c.start()), c.short_title());
    }
    let last = &timeline.chapters()[timeline.len() - 1];
    let _ = writeln!(out, "{}", format_timestamp(last.end()));
    out
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChapterJson {
    start_s: f64,
    end_s: f64,
    short_title: String,
    #[serde(default)]
    title: Option<String>,
    #[serde(default, rename = "abstract")]
    abstract_: Option<String>,
    #[serde(default)]
    introduction: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimelineJson {
    video_id: String,
    #[serde(default)]
    duration_s: Option<f64>,
    chapters: Vec<ChapterJson>,
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data always serializes");
    s.push('\n');
    s
}

/// Canonical chapter JSON: fixed key order, millisecond times, two-space
/// indentation, trailing newline.
pub fn serialize_canonical(timeline: &ChapterTimeline) -> String {
    let doc = TimelineJson {
        video_id: timeline.video_id().to_string(),
        duration_s: timeline.duration().map(round_ms),
        chapters: timeline
            .chapters()
            .iter()
            .map(|c| ChapterJson {
                start_s: round_ms(c.start()),
                end_s: round_ms(c.end()),
                short_title: c.short_title().to_string(),
                title: c.title().map(str::to_string),
                abstract_: c.abstract_text().map(str::to_string),
                introduction: c.introduction().map(str::to_string),
            })
            .collect(),
    };
    to_pretty(&doc)
}

pub fn parse_canonical(text: &str) -> Result<ChapterDocument, FormatError> {
    let doc: TimelineJson = serde_json::from_str(text)?;
    let chapters = doc
        .chapters
        .into_iter()
        .enumerate()
        .map(|(index, c)| {
            let chapter = Chapter::new(c.start_s, c.end_s, c.short_title).map_err(|e| match e {
                chapter::Error::EmptyInterval { start, end, .. } => {
                    chapter::Error::EmptyInterval { index, start, end }
                }
                other => other,
            })?;
            Ok(chapter
                .with_field(chapter_eval_core::TextField::Title, c.title)
                .with_field(chapter_eval_core::TextField::Abstract, c.abstract_)
                .with_field(chapter_eval_core::TextField::Introduction, c.introduction))
        })
        .collect::<Result<Vec<_>, FormatError>>()?;
    let mut warnings = Vec::new();
    let timeline = build_timeline(&doc.video_id, doc.duration_s, chapters, &mut warnings)?;
    Ok(ChapterDocument {
        timeline,
        source_format: ChapterFormat::CanonicalJson,
        warnings,
    })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum SourceJson {
    Asr,
    Visual,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentJson {
    start_s: f64,
    text: String,
    source: SourceJson,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TranscriptJson {
    video_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    language: Option<String>,
    segments: Vec<SegmentJson>,
}

pub fn serialize_transcript(doc: &TranscriptDocument) -> String {
    let json = TranscriptJson {
        video_id: doc.video_id.clone(),
        language: doc.language.clone(),
        segments: doc
            .segments
            .iter()
            .map(|s| SegmentJson {
                start_s: round_ms(s.start()),
                text: s.text().to_string(),
                source: match s.source() {
                    Source::Asr => SourceJson::Asr,
                    Source::Visual => SourceJson::Visual,
                },
            })
            .collect(),
    };
    to_pretty(&json)
}

/// Canonical transcript JSON. Blank segments are dropped with a warning.
pub fn parse_transcript_json(text: &str) -> Result<TranscriptDocument, FormatError> {
    let json: TranscriptJson = serde_json::from_str(text)?;
    let mut doc = TranscriptDocument {
        video_id: json.video_id,
        language: json.language,
        ..Default::default()
    };
    for (k, s) in json.segments.into_iter().enumerate() {
        let source = match s.source {
            SourceJson::Asr => Source::Asr,
            SourceJson::Visual => Source::Visual,
        };
        match TranscriptSegment::new(s.start_s, &s.text, source) {
            Ok(seg) => doc.segments.push(seg),
            Err(chapter::Error::EmptySegmentText) => {
                doc.warnings.push(format!("segment {} has no text; skipped", k + 1))
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(doc.sorted())
}

struct Cue {
    index: usize,
    start: f64,
    end: f64,
    text: String,
}

fn strip_tags(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut in_tag = false;
    for c in line.chars() {
        match c {
            '<' => in_tag = true,
            '>' if in_tag => in_tag = false,
            _ if !in_tag => out.push(c),
            _ => {}
        }
    }
    out.replace("&amp;", "&")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&nbsp;", " ")
}

fn parse_timing(line: &str, cue: usize, decimal_comma: bool) -> Result<(f64, f64), FormatError> {
    let err = |reason: String| FormatError::CueSyntax { cue, reason };
    let (a, rest) = line
        .split_once("-->")
        .ok_or_else(|| err(format!("expected a `start --> end` timing line, got {line:?}")))?;
    let b = rest.split_whitespace().next().unwrap_or("");
    let fix = |s: &str| if decimal_comma { s.trim().replace(',', ".") } else { s.trim().to_string() };
    let start = parse_timestamp(&fix(a)).map_err(|e| err(format!("start time: {}", e.reason)))?;
    let end = parse_timestamp(&fix(b)).map_err(|e| err(format!("end time: {}", e.reason)))?;
    if end < start {
        return Err(err(format!("cue ends at {end} s before it starts at {start} s")));
    }
    Ok((start, end))
}

fn blocks(text: &str) -> Vec<Vec<&str>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    for line in text.lines() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

fn parse_vtt_cues(text: &str) -> Result<Vec<Cue>, FormatError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let all = blocks(text);
    let Some(header) = all.first() else {
        return Err(FormatError::CueSyntax {
            cue: 0,
            reason: "missing WEBVTT header".into(),
        });
    };
    let first = header[0];
    if !(first == "WEBVTT" || first.starts_with("WEBVTT ") || first.starts_with("WEBVTT\t")) {
        return Err(FormatError::CueSyntax {
            cue: 0,
            reason: "missing WEBVTT header".into(),
        });
    }
    let mut cues = Vec::new();
    // the header block may run straight into a cue when no blank line follows it
    let header_tail = header
        .iter()
        .position(|l| l.contains("-->"))
        .map(|k| header[k.saturating_sub(1).max(1)..].to_vec());
    let rest = header_tail.into_iter().chain(all.into_iter().skip(1));
    for block in rest {
        let head = block[0];
        if head.starts_with("NOTE") || head == "STYLE" || head == "REGION" {
            continue;
        }
        let index = cues.len() + 1;
        let timing_at = if head.contains("-->") { 0 } else { 1 };
        let timing = block.get(timing_at).ok_or_else(|| FormatError::CueSyntax {
            cue: index,
            reason: "cue has no timing line".into(),
        })?;
        let (start, end) = parse_timing(timing, index, false)?;
        let text = block[timing_at + 1..]
            .iter()
            .map(|l| strip_tags(l))
            .collect::<Vec<_>>()
            .join(" ");
        cues.push(Cue {
            index,
            start,
            end,
            text,
        });
    }
    Ok(cues)
}

fn parse_srt_cues(text: &str) -> Result<Vec<Cue>, FormatError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut cues = Vec::new();
    for block in blocks(text) {
        let index = cues.len() + 1;
        if !block[0].trim().bytes().all(|b| b.is_ascii_digit()) {
            return Err(FormatError::CueSyntax {
                cue: index,
                reason: format!("expected a cue number, got {:?}", block[0]),
            });
        }
        let timing = block.get(1).ok_or_else(|| FormatError::CueSyntax {
            cue: index,
            reason: "cue has no timing line".into(),
        })?;
        let (start, end) = parse_timing(timing, index, true)?;
        let text = block[2..]
            .iter()
            .map(|l| strip_tags(l))
            .collect::<Vec<_>>()
            .join(" ");
        cues.push(Cue {
            index,
            start,
            end,
            text,
        });
    }
    Ok(cues)
}

fn cues_to_transcript(cues: Vec<Cue>, video_id: &str) -> Result<TranscriptDocument, FormatError> {
    let mut doc = TranscriptDocument {
        video_id: video_id.to_string(),
        ..Default::default()
    };
    for cue in cues {
        match TranscriptSegment::new(cue.start, &cue.text, Source::Asr) {
            Ok(s) => doc.segments.push(s),
            Err(chapter::Error::EmptySegmentText) => doc
                .warnings
                .push(format!("cue {} has no text; skipped", cue.index)),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(doc.sorted())
}

pub fn parse_vtt_transcript(text: &str, video_id: &str) -> Result<TranscriptDocument, FormatError> {
    cues_to_transcript(parse_vtt_cues(text)?, video_id)
}

pub fn parse_srt_transcript(text: &str, video_id: &str) -> Result<TranscriptDocument, FormatError> {
    cues_to_transcript(parse_srt_cues(text)?, video_id)
}

/// WebVTT chapter track: one cue per chapter, the cue text is its title.
pub fn parse_vtt_chapters(
    text: &str,
    video_id: &str,
    duration: Option<f64>,
) -> Result<ChapterDocument, FormatError> {
    let mut warnings = Vec::new();
    let mut chapters = Vec::new();
    for cue in parse_vtt_cues(text)? {
        let title = cue.text.split_whitespace().collect::<Vec<_>>().join(" ");
        if cue.end <= cue.start {
            return Err(FormatError::CueSyntax {
                cue: cue.index,
                reason: "chapter cue has zero length".into(),
            });
        }
        chapters.push(Chapter::new(cue.start, cue.end, title)?);
    }
    let timeline = build_timeline(video_id, duration, chapters, &mut warnings)?;
    Ok(ChapterDocument {
        timeline,
        source_format: ChapterFormat::WebVttChapters,
        warnings,
    })
}

pub fn serialize_vtt_chapters(timeline: &ChapterTimeline) -> String {
    let mut out = String::from("WEBVTT\n");
    for (k, c) in timeline.chapters().iter().enumerate() {
        let _ = write!(
            out,
            "\n{}\n{} --> {}\n{}\n",
            k + 1,
            format_vtt_timestamp(c.start()),
            format_vtt_timestamp(c.end()),
            c.short_title()
        );
    }
    out
}

pub fn serialize_srt(doc: &TranscriptDocument) -> String {
    let mut out = String::new();
    for (k, s) in doc.segments.iter().enumerate() {
        let end = doc.segments.get(k + 1).map_or(s.start() + 1.0, |n| n.start().max(s.start()));
        let _ = write!(
            out,
            "{}\n{} --> {}\n{}\n\n",
            k + 1,
            format_srt_timestamp(s.start()),
            format_srt_timestamp(end),
            s.text()
        );
    }
    out
}

/// Inverse of the rendered `hh:mm:ss: text` transcript; starts come back
/// floored to whole seconds.
pub fn parse_rendered_transcript(text: &str) -> Result<Vec<TranscriptSegment>, FormatError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let (stamp, body) = line.split_once(": ").ok_or_else(|| FormatError::ListSyntax {
            line: line_no,
            reason: "expected `hh:mm:ss: text`".into(),
        })?;
        let start = parse_timestamp(stamp).map_err(|e| e.at(line_no))?;
        let (source, body) = match body.strip_prefix(VISUAL_PREFIX) {
            Some(rest) => (Source::Visual, rest),
            None => (Source::Asr, body),
        };
        out.push(TranscriptSegment::new(start, body, source)?);
    }
    Ok(out)
}
