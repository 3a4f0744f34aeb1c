//! report.json, report.md and manifest.json.

use std::fmt::Write as _;

use chapter_eval_core::metrics::{BucketScores, EvalReport, VideoScores};
use chapter_eval_core::BucketLabel;
use serde_json::{Value, json};

use crate::config::RunConfig;

fn video_json(v: &VideoScores) -> Value {
    let groups: Vec<Value> = v
        .matching
        .groups
        .iter()
        .map(|g| {
            json!({
                "pred": [g.pred.start, g.pred.end],
                "gt": [g.gt.start, g.gt.end],
                "phi": g.phi,
            })
        })
        .collect();
    json!({
        "video_id": v.video_id,
        "duration_s": v.duration,
        "bucket": v.bucket.name(),
        "f1": v.f1,
        "tiou": v.tiou,
        "precision": v.precision,
        "recall": v.recall,
        "soda": v.soda,
        "cider": v.cider,
        "grace": v.grace,
        "grace_raw": v.grace_raw,
        "reward_raw": v.reward_raw,
        "reward_norm": v.reward_norm,
        "groups": groups,
        "error": v.error,
    })
}

fn bucket_json(b: &BucketScores) -> Value {
    json!({
        "videos": b.videos,
        "f1": b.f1,
        "tiou": b.tiou,
        "precision": b.precision,
        "recall": b.recall,
        "soda": b.soda,
        "cider": b.cider,
        "grace": b.grace,
        "reward_raw": b.reward_raw,
        "reward_norm": b.reward_norm,
    })
}

/// The report document. `incomplete` marks a run cut short by a scorer
/// failure; its videos and buckets then cover only what finished.
pub fn report_json(report: &EvalReport, config: &RunConfig, backend: &str, incomplete: bool) -> String {
    let mut buckets = serde_json::Map::new();
    for (label, scores) in &report.per_bucket {
        buckets.insert(
            label.name().to_string(),
            scores.as_ref().map_or(Value::Null, bucket_json),
        );
    }
    let mut cfg = config.to_json();
    cfg["backend"] = Value::String(backend.to_string());
    let doc = json!({
        "config": cfg,
        "incomplete": incomplete,
        "videos": report.per_video.iter().map(video_json).collect::<Vec<_>>(),
        "buckets": buckets,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

fn title_case(label: BucketLabel) -> &'static str {
    match label {
        BucketLabel::Short => "Short",
        BucketLabel::Medium => "Medium",
        BucketLabel::Long => "Long",
        BucketLabel::All => "All",
    }
}

/// Bucketed markdown table: F1, tIoU, SODA (S), CIDEr (C) and GRACE (G) for
/// each duration bucket, then a per-video table.
pub fn report_markdown(report: &EvalReport, incomplete: bool) -> String {
    let mut out = String::from("# Chaptering evaluation\n\n");
    if incomplete {
        out.push_str("**Incomplete run:** the similarity scorer failed before every video was scored.\n\n");
    }
    let metrics = ["F1", "tIoU", "S", "C", "G"];
    let mut head = String::from("|");
    let mut rule = String::from("|");
    let mut row = String::from("|");
    let mut counts = Vec::new();
    for (label, scores) in &report.per_bucket {
        for m in metrics {
            let _ = write!(head, " {} {m} |", title_case(*label));
            rule.push_str("---:|");
        }
        match scores {
            Some(b) => {
                for v in [b.f1, b.tiou, b.soda, b.cider, b.grace] {
                    let _ = write!(row, " {v:.1} |");
                }
                counts.push(format!("{} {}", title_case(*label), b.videos));
            }
            None => {
                row.push_str(&" n/a |".repeat(metrics.len()));
                counts.push(format!("{} 0", title_case(*label)));
            }
        }
    }
    let _ = writeln!(out, "{head}\n{rule}\n{row}\n");
    let _ = writeln!(out, "Videos per bucket: {}.\n", counts.join(", "));

    out.push_str("| Video | Bucket | F1 | tIoU | S | C | G | Reward | Error |\n");
    out.push_str("|---|---|---:|---:|---:|---:|---:|---:|---|\n");
    for v in &report.per_video {
        let _ = writeln!(
            out,
            "| {} | {} | {:.1} | {:.1} | {:.1} | {:.1} | {:.1} | {:.3} | {} |",
            v.video_id.replace('|', "\\|"),
            v.bucket.name(),
            v.f1,
            v.tiou,
            v.soda,
            v.cider,
            v.grace,
            v.reward_norm,
            v.error.as_deref().unwrap_or("").replace('|', "\\|"),
        );
    }
    out
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub config_hash: String,
    pub backend: String,
    /// (path, hex sha256) in load order.
    pub inputs: Vec<(String, String)>,
    pub wall_clock_s: f64,
    pub started_unix_s: u64,
    /// (video id, message).
    pub errors: Vec<(String, String)>,
    pub incomplete: bool,
}

pub fn manifest_json(m: &Manifest) -> String {
    let doc = json!({
        "tool": "chapter-eval",
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": m.config_hash,
        "backend": m.backend,
        "inputs": m.inputs.iter().map(|(p, d)| json!({"path": p, "sha256": d})).collect::<Vec<_>>(),
        "started_unix_s": m.started_unix_s,
        "wall_clock_s": m.wall_clock_s,
        "incomplete": m.incomplete,
        "errors": m.errors.iter().map(|(v, e)| json!({"video_id": v, "error": e})).collect::<Vec<_>>(),
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("manifest serializes");
    s.push('\n');
    s
}
