#![allow(dead_code)]

use chapter_eval::formats::{self, FormatError};
use chapter_eval_core::{Chapter, ChapterTimeline, TextField};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const WORDS: &[&str] = &[
    "intro", "setup", "results", "install", "demo", "recap", "budget", "review", "garden",
    "engine", "paint", "travel", "market", "lesson", "river", "outro", "café", "naïve",
    "2024", "Q&A", "étape", "réglage", "配置", "テスト",
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn phrase(rng: &mut ChaCha8Rng, min: usize, max: usize) -> String {
    let n = rng.random_range(min..=max);
    (0..n)
        .map(|_| WORDS[rng.random_range(0..WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

/// Millisecond-grid timeline. `contiguous` timelines leave no gaps, which
/// the chapter-list format needs to round-trip.
pub fn random_timeline(rng: &mut ChaCha8Rng, id: &str, contiguous: bool, rich: bool) -> ChapterTimeline {
    let k = rng.random_range(1..=12);
    let mut t_ms: u64 = if rng.random_bool(0.5) { 0 } else { rng.random_range(0..5_000_000) };
    let mut chapters = Vec::with_capacity(k);
    for _ in 0..k {
        if !contiguous && rng.random_bool(0.3) {
            t_ms += rng.random_range(1..60_000);
        }
        let len = rng.random_range(1..900_000);
        let mut c = Chapter::new(
            t_ms as f64 / 1000.0,
            (t_ms + len) as f64 / 1000.0,
            phrase(rng, 1, 6),
        )
        .unwrap();
        if rich {
            for field in [TextField::Title, TextField::Abstract, TextField::Introduction] {
                if rng.random_bool(0.5) {
                    c = c.with_field(field, Some(phrase(rng, 1, 12)));
                }
            }
        }
        chapters.push(c);
        t_ms += len;
    }
    let duration = if rng.random_bool(0.5) {
        Some((t_ms + rng.random_range(0..100_000)) as f64 / 1000.0)
    } else {
        None
    };
    ChapterTimeline::new(id, duration, chapters).unwrap()
}

/// Inputs every parser must reject with a typed error.
pub struct Malformed {
    pub kind: &'static str,
    pub text: String,
}

fn m(kind: &'static str, text: &str) -> Malformed {
    Malformed { kind, text: text.to_string() }
}

pub fn malformed_corpus() -> Vec<Malformed> {
    let ch = |body: &str| format!(r#"{{"video_id":"v","duration_s":100,"chapters":[{body}]}}"#);
    let mut out = vec![
        // canonical chapter JSON
        m("json", ""),
        m("json", "{"),
        m("json", "[]"),
        m("json", "null"),
        m("json", r#"{"video_id":"v"}"#),
        m("json", r#"{"chapters":[]}"#),
        m("json", r#"{"video_id":"v","chapters":[]}"#),
        m("json", r#"{"video_id":7,"chapters":[]}"#),
        m("json", &ch(r#"{"start_s":0,"end_s":0,"short_title":"a"}"#)),
        m("json", &ch(r#"{"start_s":5,"end_s":1,"short_title":"a"}"#)),
        m("json", &ch(r#"{"start_s":-1,"end_s":1,"short_title":"a"}"#)),
        m("json", &ch(r#"{"start_s":0,"end_s":1}"#)),
        m("json", &ch(r#"{"start_s":"0","end_s":1,"short_title":"a"}"#)),
        m("json", &ch(r#"{"start_s":0,"end_s":1,"short_title":"a","colour":"red"}"#)),
        m("json", &ch(r#"{"start_s":0,"end_s":10,"short_title":"a"},{"start_s":5,"end_s":20,"short_title":"b"}"#)),
        m("json", &ch(r#"{"start_s":10,"end_s":20,"short_title":"a"},{"start_s":0,"end_s":5,"short_title":"b"}"#)),
        m("json", &ch(r#"{"start_s":0,"end_s":200,"short_title":"a"}"#)),
        m("json", r#"{"video_id":"v","duration_s":-5,"chapters":[{"start_s":0,"end_s":1,"short_title":"a"}]}"#),
        m("json", r#"{"video_id":"v","duration_s":1e999,"chapters":[{"start_s":0,"end_s":1,"short_title":"a"}]}"#),
        m("json", &ch(r#"{"start_s":0,"end_s":1,"short_title":"a","title":5}"#)),
        // chapter lists
        m("list", ""),
        m("list", "\n\n  \n"),
        m("list", "Intro 00:00"),
        m("list", "00:00 Intro\n00:30 Next"),
        m("list", "01:00 A\n00:30 B\n02:00"),
        m("list", "00:00 A\n00:00 B\n02:00"),
        m("list", "00:00 A\n01:00\n02:00 B"),
        m("list", "00:00 A\n00:00"),
        m("list", "00:00 A\n01:60 B\n02:00"),
        m("list", "0:0 A\n02:00"),
        m("list", "00:00:00:00 A\n02:00"),
        m("list", "00:00.5 A\n02:00"),
        m("list", "00:00.5000 A\n02:00"),
        m("list", "aa:bb A\n02:00"),
        m("list", "00-00 A\n02:00"),
        m("list", ":00 A\n02:00"),
        m("list", "00: A\n02:00"),
        m("list", "99999999999999999999:00 A"),
        // WebVTT chapters and transcripts
        m("vtt", ""),
        m("vtt", "WEBVTTX\n\n00:00.000 --> 00:01.000\na\n"),
        m("vtt", "00:00.000 --> 00:01.000\na\n"),
        m("vtt", "WEBVTT\n\n00:00.000 -> 00:01.000\na\n"),
        m("vtt", "WEBVTT\n\n00:0x.000 --> 00:01.000\na\n"),
        m("vtt", "WEBVTT\n\n00:02.000 --> 00:01.000\na\n"),
        m("vtt", "WEBVTT\n\n00:00.000 --> \na\n"),
        m("vtt", "WEBVTT\n\nid-only\n"),
        m("vtt", "WEBVTT\n\n00:00.000 --> 00:01.00\na\n"),
        m("vtt", "WEBVTT\n\n1\n00:00:00,000 --> 00:00:01,000\na\n"),
        // SRT transcripts
        m("srt", "x\n00:00:00,000 --> 00:00:01,000\nhi\n"),
        m("srt", "1\n"),
        m("srt", "1\n00:00:00.000 -> 00:00:01,000\nhi\n"),
        m("srt", "1\n00:00:00,000 --> 00:00:0a,000\nhi\n"),
        m("srt", "1\n00:00:05,000 --> 00:00:01,000\nhi\n"),
        // canonical transcript JSON
        m("transcript", "{"),
        m("transcript", r#"{"video_id":"v"}"#),
        m("transcript", r#"{"video_id":"v","segments":[{"start_s":0,"text":"a","source":"radio"}]}"#),
        m("transcript", r#"{"video_id":"v","segments":[{"start_s":-3,"text":"a","source":"asr"}]}"#),
        m("transcript", r#"{"video_id":"v","segments":[{"start_s":0,"text":"a"}]}"#),
        m("transcript", r#"{"video_id":"v","segments":[{"start_s":0,"text":"a","source":"asr","speaker":1}]}"#),
        // rendered transcript lines
        m("rendered", "hello\n"),
        m("rendered", "00:00:01 hello\n"),
        m("rendered", "00:00:xx: hello\n"),
        m("rendered", "00:00:01:  \n"),
    ];
    // a vtt chapter track whose cues overlap too far to repair
    out.push(m(
        "vtt",
        "WEBVTT\n\n00:00.000 --> 00:10.000\na\n\n00:05.000 --> 00:20.000\nb\n",
    ));
    out
}

/// Runs the parser for `kind`; `Err` describes an input that was accepted.
pub fn reject(kind: &str, text: &str) -> Result<(), String> {
    let outcome: Result<(), FormatError> = match kind {
        "json" => formats::parse_canonical(text).map(drop),
        "list" => formats::parse_chapter_list(text, "v", None).map(drop),
        "vtt" => formats::parse_vtt_chapters(text, "v", None).map(drop),
        "srt" => formats::parse_srt_transcript(text, "v").map(drop),
        "transcript" => formats::parse_transcript_json(text).map(drop),
        "rendered" => formats::parse_rendered_transcript(text).map(drop),
        other => panic!("unknown corpus kind {other}"),
    };
    match outcome {
        Ok(()) => Err(format!("{kind} input {text:?} was accepted")),
        Err(_) => Ok(()),
    }
}

/// Up to `max` non-overlapping chapters inside [0, 600]; half the time they
/// touch end to end.
pub fn random_sequence(rng: &mut ChaCha8Rng, max: usize) -> Vec<Chapter> {
    let k = rng.random_range(1..=max);
    let mut points: Vec<f64> = (0..2 * k).map(|_| rng.random_range(0.0..600.0)).collect();
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let title = |rng: &mut ChaCha8Rng| phrase(rng, 1, 4);
    let mut out = Vec::new();
    if rng.random_bool(0.5) {
        for w in points.windows(2).take(k) {
            if w[1] > w[0] {
                out.push(Chapter::new(w[0], w[1], title(rng)).unwrap());
            }
        }
    } else {
        for c in points.chunks(2) {
            if c[1] > c[0] {
                out.push(Chapter::new(c[0], c[1], title(rng)).unwrap());
            }
        }
    }
    if out.is_empty() {
        out.push(Chapter::new(0.0, 1.0, title(rng)).unwrap());
    }
    out
}
