//! Reported chaptering metrics.
//!
//! Percentages (F1, tIoU, precision, recall, SODA, GRACE) are on a 0-100
//! scale. CIDEr is on the 0-10 scale of [`crate::textsim::cider_d`]. The
//! temporal reward is reported raw and divided by the group count.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::alignment::{self, GroupMatching, match_groups, one_to_one_from_scores};
use crate::chapter::{self, BucketLabel, Chapter, ChapterTimeline, DurationBucket, TextField, iou};
use crate::textsim::{
    self, ScoreRequest, TextSimilarity, cider_d, concat_group_text, normalize_text, score_batch,
};

/// Slack when comparing an IoU against a segmentation threshold, so that
/// values sitting exactly on a threshold survive time shifts.
pub const THRESHOLD_EPS: f64 = 1e-9;

/// Threshold at which segmentation precision and recall are reported.
pub const PR_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Timeline(#[from] chapter::Error),
    #[error(transparent)]
    Alignment(#[from] alignment::Error),
    #[error(transparent)]
    Text(#[from] textsim::Error),
    #[error("invalid metric configuration: {0}")]
    Config(String),
}

impl From<textsim::ScorerError> for Error {
    fn from(e: textsim::ScorerError) -> Self {
        Error::Text(e.into())
    }
}

/// How the summed GRACE group scores are scaled before reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GraceNormalization {
    /// Divide by the number of matched groups.
    #[default]
    PerGroupMean,
    /// Divide by the number of ground-truth chapters.
    GtCount,
    /// Report the plain sum.
    None,
}

impl GraceNormalization {
    pub fn name(self) -> &'static str {
        match self {
            GraceNormalization::PerGroupMean => "per_group_mean",
            GraceNormalization::GtCount => "gt_count",
            GraceNormalization::None => "none",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Self::PerGroupMean, Self::GtCount, Self::None]
            .into_iter()
            .find(|n| n.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricConfig {
    pub text_field: TextField,
    pub grace_normalization: GraceNormalization,
    pub f1_thresholds: Vec<f64>,
    pub buckets: Vec<DurationBucket>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            text_field: TextField::ShortTitle,
            grace_normalization: GraceNormalization::PerGroupMean,
            f1_thresholds: default_thresholds(),
            buckets: chapter::default_buckets(),
        }
    }
}

/// 0.50, 0.55, ..., 0.95.
pub fn default_thresholds() -> Vec<f64> {
    (10..20).map(|k| k as f64 / 20.0).collect()
}

impl MetricConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.f1_thresholds.is_empty() {
            return Err(Error::Config("f1_thresholds is empty".into()));
        }
        let mut prev = 0.0;
        for &t in &self.f1_thresholds {
            if !(t > prev && t <= 1.0) {
                return Err(Error::Config(format!(
                    "f1_thresholds must be strictly increasing within (0, 1], got {t} after {prev}"
                )));
            }
            prev = t;
        }
        for b in &self.buckets {
            if !(b.min >= 0.0 && b.min < b.max) {
                return Err(Error::Config(format!(
                    "bucket {} has empty range ({}, {}]",
                    b.label.name(),
                    b.min,
                    b.max
                )));
            }
        }
        for (k, a) in self.buckets.iter().enumerate() {
            for b in &self.buckets[k + 1..] {
                if a.label == b.label || (a.min < b.max && b.min < a.max) {
                    return Err(Error::Config(format!(
                        "buckets {} and {} overlap",
                        a.label.name(),
                        b.label.name()
                    )));
                }
            }
        }
        if self.buckets.iter().any(|b| b.label == BucketLabel::All) {
            return Err(Error::Config("the all bucket is implicit".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraceScore {
    /// Sum over groups of φ × similarity.
    pub raw: f64,
    /// `raw` after normalization, × 100.
    pub value: f64,
    pub matching: GroupMatching,
    pub similarities: Vec<f64>,
}

/// GRACE: many-to-one group matching, each group scored by its mean IoU
/// times the similarity of the concatenated group texts.
pub fn grace<S: TextSimilarity + ?Sized>(
    pred: &[Chapter],
    gt: &[Chapter],
    cfg: &MetricConfig,
    scorer: &S,
) -> Result<GraceScore, Error> {
    let matching = match_groups(pred, gt)?;
    let requests = matching
        .groups
        .iter()
        .enumerate()
        .map(|(k, g)| {
            Ok(ScoreRequest {
                id: format!("g{k}"),
                candidate: concat_group_text(&pred[g.pred.clone()], cfg.text_field)?,
                reference: concat_group_text(&gt[g.gt.clone()], cfg.text_field)?,
            })
        })
        .collect::<Result<Vec<_>, textsim::Error>>()?;
    let similarities: Vec<f64> = score_batch(scorer, &requests)?
        .into_iter()
        .map(|r| r.score)
        .collect();
    let raw: f64 = matching
        .groups
        .iter()
        .zip(&similarities)
        .map(|(g, s)| g.phi * s)
        .sum();
    let scale = match cfg.grace_normalization {
        GraceNormalization::PerGroupMean => matching.len() as f64,
        GraceNormalization::GtCount => gt.len() as f64,
        GraceNormalization::None => 1.0,
    };
    Ok(GraceScore {
        raw,
        value: 100.0 * raw / scale,
        matching,
        similarities,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SodaScore {
    pub total: f64,
    pub precision: f64,
    pub recall: f64,
    /// 100 × harmonic mean of precision and recall.
    pub value: f64,
    pub pairs: Vec<(usize, usize)>,
}

fn chapter_text(c: &Chapter, index: usize, field: TextField) -> Result<&str, textsim::Error> {
    c.text(field).ok_or(textsim::Error::MissingField { index, field })
}

/// SODA-style score: order-preserving one-to-one matching on
/// IoU × text similarity.
pub fn soda<S: TextSimilarity + ?Sized>(
    pred: &[Chapter],
    gt: &[Chapter],
    cfg: &MetricConfig,
    scorer: &S,
) -> Result<SodaScore, Error> {
    if pred.is_empty() || gt.is_empty() {
        return Err(alignment::Error::EmptyTimeline.into());
    }
    let (n, m) = (pred.len(), gt.len());
    let mut overlap = vec![0.0; n * m];
    let mut requests = Vec::new();
    for (i, p) in pred.iter().enumerate() {
        for (j, g) in gt.iter().enumerate() {
            let v = iou(p, g);
            overlap[i * m + j] = v;
            if v > 0.0 {
                requests.push(ScoreRequest {
                    id: format!("{i}:{j}"),
                    candidate: normalize_text(chapter_text(p, i, cfg.text_field)?),
                    reference: normalize_text(chapter_text(g, j, cfg.text_field)?),
                });
            }
        }
    }
    let responses = score_batch(scorer, &requests)?;
    let mut score = vec![0.0; n * m];
    let nonzero = overlap.iter().enumerate().filter(|(_, v)| **v > 0.0);
    for ((cell, v), r) in nonzero.zip(&responses) {
        score[cell] = v * r.score;
    }
    let matching = one_to_one_from_scores(n, m, &score);
    let total = matching.total;
    let precision = total / n as f64;
    let recall = total / m as f64;
    let value = if total > 0.0 {
        100.0 * 2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(SodaScore {
        total,
        precision,
        recall,
        value,
        pairs: matching.pairs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationScores {
    pub f1: f64,
    pub tiou: f64,
    pub precision: f64,
    pub recall: f64,
}

fn matched_at(overlap: &[f64], n: usize, m: usize, threshold: f64) -> usize {
    let hits: Vec<f64> = overlap
        .iter()
        .map(|&v| if v + THRESHOLD_EPS >= threshold { 1.0 } else { 0.0 })
        .collect();
    one_to_one_from_scores(n, m, &hits).pairs.len()
}

/// Boundary quality: F1 averaged over IoU thresholds, precision/recall at
/// IoU 0.5, and the symmetric best-match tIoU.
pub fn segmentation_scores(
    pred: &[Chapter],
    gt: &[Chapter],
    cfg: &MetricConfig,
) -> Result<SegmentationScores, Error> {
    if pred.is_empty() || gt.is_empty() {
        return Err(alignment::Error::EmptyTimeline.into());
    }
    cfg.validate()?;
    let (n, m) = (pred.len(), gt.len());
    let overlap: Vec<f64> = pred
        .iter()
        .flat_map(|p| gt.iter().map(move |g| iou(p, g)))
        .collect();
    let pr = |matched: usize| {
        let p = matched as f64 / n as f64;
        let r = matched as f64 / m as f64;
        let f = if matched == 0 { 0.0 } else { 2.0 * p * r / (p + r) };
        (p, r, f)
    };
    let f1_sum: f64 = cfg
        .f1_thresholds
        .iter()
        .map(|&t| pr(matched_at(&overlap, n, m, t)).2)
        .sum();
    let (precision, recall, _) = pr(matched_at(&overlap, n, m, PR_THRESHOLD));

    let gt_best: f64 = (0..m)
        .map(|j| (0..n).map(|i| overlap[i * m + j]).fold(0.0, f64::max))
        .sum::<f64>()
        / m as f64;
    let pred_best: f64 = (0..n)
        .map(|i| overlap[i * m..(i + 1) * m].iter().copied().fold(0.0, f64::max))
        .sum::<f64>()
        / n as f64;

    Ok(SegmentationScores {
        f1: 100.0 * f1_sum / cfg.f1_thresholds.len() as f64,
        tiou: 100.0 * 0.5 * (gt_best + pred_best),
        precision: 100.0 * precision,
        recall: 100.0 * recall,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reward {
    pub raw: f64,
    pub normalized: f64,
}

/// Temporal-only reward: summed φ over the optimal group matching, and that
/// sum divided by the group count.
pub fn grpo_reward(pred: &[Chapter], gt: &[Chapter]) -> Result<Reward, Error> {
    let matching = match_groups(pred, gt)?;
    Ok(reward_of(&matching))
}

fn reward_of(matching: &GroupMatching) -> Reward {
    let raw = matching.objective;
    Reward {
        raw,
        normalized: raw / matching.len() as f64,
    }
}

/// For each ground-truth chapter, the text of the prediction overlapping it
/// most (earliest on ties), or an empty string when nothing overlaps.
pub fn cider_pairs(
    pred: &[Chapter],
    gt: &[Chapter],
    field: TextField,
) -> Result<Vec<(String, String)>, Error> {
    gt.iter()
        .enumerate()
        .map(|(j, g)| {
            let mut best: Option<(usize, f64)> = None;
            for (i, p) in pred.iter().enumerate() {
                let v = iou(p, g);
                if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
                    best = Some((i, v));
                }
            }
            let candidate = match best {
                Some((i, _)) => String::from(chapter_text(&pred[i], i, field)?),
                None => String::new(),
            };
            Ok((candidate, String::from(chapter_text(g, j, field)?)))
        })
        .collect()
}

/// Corpus-level CIDEr over `(prediction, ground truth)` timelines.
pub fn chapter_cider(
    dataset: &[(&[Chapter], &[Chapter])],
    cfg: &MetricConfig,
) -> Result<f64, Error> {
    let mut candidates = Vec::new();
    let mut references = Vec::new();
    for (pred, gt) in dataset {
        for (c, r) in cider_pairs(pred, gt, cfg.text_field)? {
            candidates.push(c);
            references.push(r);
        }
    }
    Ok(cider_d(&candidates, &references)?.mean)
}

/// Scores for one video. `cider` is the mean of this video's items under the
/// dataset-wide IDF and is filled in by [`aggregate`].
#[derive(Debug, Clone, PartialEq)]
pub struct VideoScores {
    pub video_id: String,
    pub duration: f64,
    pub bucket: BucketLabel,
    pub f1: f64,
    pub tiou: f64,
    pub precision: f64,
    pub recall: f64,
    pub soda: f64,
    pub cider: f64,
    pub grace: f64,
    pub grace_raw: f64,
    pub reward_raw: f64,
    pub reward_norm: f64,
    pub matching: GroupMatching,
    /// Set when the video could not be scored; every metric is then zero.
    pub error: Option<String>,
}

/// Per-video result before the corpus-level reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoEvaluation {
    pub scores: VideoScores,
    pub cider_pairs: Vec<(String, String)>,
}

fn bucket_for(gt: &ChapterTimeline, cfg: &MetricConfig) -> BucketLabel {
    chapter::bucket_of(gt.effective_duration(), &cfg.buckets).unwrap_or(BucketLabel::All)
}

/// Every per-video metric for one prediction against its ground truth.
pub fn evaluate_video<S: TextSimilarity + ?Sized>(
    pred: &ChapterTimeline,
    gt: &ChapterTimeline,
    cfg: &MetricConfig,
    scorer: &S,
) -> Result<VideoEvaluation, Error> {
    let (p, g) = (pred.chapters(), gt.chapters());
    let seg = segmentation_scores(p, g, cfg)?;
    let grace = grace(p, g, cfg, scorer)?;
    let soda = soda(p, g, cfg, scorer)?;
    let reward = reward_of(&grace.matching);
    Ok(VideoEvaluation {
        scores: VideoScores {
            video_id: gt.video_id().into(),
            duration: gt.effective_duration(),
            bucket: bucket_for(gt, cfg),
            f1: seg.f1,
            tiou: seg.tiou,
            precision: seg.precision,
            recall: seg.recall,
            soda: soda.value,
            cider: 0.0,
            grace: grace.value,
            grace_raw: grace.raw,
            reward_raw: reward.raw,
            reward_norm: reward.normalized,
            matching: grace.matching,
            error: None,
        },
        cider_pairs: cider_pairs(p, g, cfg.text_field)?,
    })
}

/// A video whose prediction is missing or unusable: all metrics zero, and
/// each ground-truth chapter enters the CIDEr corpus with an empty candidate.
pub fn failed_video(gt: &ChapterTimeline, cfg: &MetricConfig, error: String) -> VideoEvaluation {
    let cider_pairs = gt
        .chapters()
        .iter()
        .map(|c| (String::new(), String::from(c.text(cfg.text_field).unwrap_or(""))))
        .collect();
    VideoEvaluation {
        scores: VideoScores {
            video_id: gt.video_id().into(),
            duration: gt.effective_duration(),
            bucket: bucket_for(gt, cfg),
            f1: 0.0,
            tiou: 0.0,
            precision: 0.0,
            recall: 0.0,
            soda: 0.0,
            cider: 0.0,
            grace: 0.0,
            grace_raw: 0.0,
            reward_raw: 0.0,
            reward_norm: 0.0,
            matching: GroupMatching {
                groups: Vec::new(),
                objective: 0.0,
            },
            error: Some(error),
        },
        cider_pairs,
    }
}

/// Macro averages over the videos of one bucket; `cider` is corpus-level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BucketScores {
    pub videos: usize,
    pub f1: f64,
    pub tiou: f64,
    pub precision: f64,
    pub recall: f64,
    pub soda: f64,
    pub cider: f64,
    pub grace: f64,
    pub reward_raw: f64,
    pub reward_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_video: Vec<VideoScores>,
    /// Short, medium, long, all; `None` for a bucket without videos.
    pub per_bucket: Vec<(BucketLabel, Option<BucketScores>)>,
}

impl EvalReport {
    pub fn bucket(&self, label: BucketLabel) -> Option<&BucketScores> {
        self.per_bucket
            .iter()
            .find(|(l, _)| *l == label)
            .and_then(|(_, s)| s.as_ref())
    }
}

fn flatten<'a>(members: &[&'a VideoEvaluation]) -> (Vec<&'a str>, Vec<&'a str>) {
    let mut c = Vec::new();
    let mut r = Vec::new();
    for v in members {
        for (cand, reference) in &v.cider_pairs {
            c.push(cand.as_str());
            r.push(reference.as_str());
        }
    }
    (c, r)
}

/// Reduces per-video results into the bucketed report. Videos keep their
/// input order.
pub fn aggregate(dataset: Vec<VideoEvaluation>, _cfg: &MetricConfig) -> Result<EvalReport, Error> {
    if dataset.is_empty() {
        return Err(Error::Config("nothing to aggregate".into()));
    }
    let everyone: Vec<&VideoEvaluation> = dataset.iter().collect();
    let (c, r) = flatten(&everyone);
    let all_items = if c.is_empty() {
        Vec::new()
    } else {
        cider_d(&c, &r)?.per_item
    };
    let mut per_video: Vec<VideoScores> = Vec::with_capacity(dataset.len());
    let mut offset = 0;
    for v in &dataset {
        let k = v.cider_pairs.len();
        let mut s = v.scores.clone();
        s.cider = if k == 0 {
            0.0
        } else {
            all_items[offset..offset + k].iter().sum::<f64>() / k as f64
        };
        offset += k;
        per_video.push(s);
    }

    let mut per_bucket = Vec::new();
    for label in BucketLabel::REPORTED {
        let members: Vec<&VideoEvaluation> = dataset
            .iter()
            .filter(|v| label == BucketLabel::All || v.scores.bucket == label)
            .collect();
        if members.is_empty() {
            per_bucket.push((label, None));
            continue;
        }
        let count = members.len() as f64;
        let mean = |f: fn(&VideoScores) -> f64| {
            members.iter().map(|v| f(&v.scores)).sum::<f64>() / count
        };
        let (c, r) = flatten(&members);
        let cider = if c.is_empty() { 0.0 } else { cider_d(&c, &r)?.mean };
        per_bucket.push((
            label,
            Some(BucketScores {
                videos: members.len(),
                f1: mean(|s| s.f1),
                tiou: mean(|s| s.tiou),
                precision: mean(|s| s.precision),
                recall: mean(|s| s.recall),
                soda: mean(|s| s.soda),
                cider,
                grace: mean(|s| s.grace),
                reward_raw: mean(|s| s.reward_raw),
                reward_norm: mean(|s| s.reward_norm),
            }),
        ));
    }
    Ok(EvalReport {
        per_video,
        per_bucket,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textsim::{LexicalF1, lexical_f1};

    fn titled(spans: &[(f64, f64, &str)]) -> Vec<Chapter> {
        spans
            .iter()
            .map(|&(s, e, t)| Chapter::new(s, e, t).unwrap())
            .collect()
    }

    fn two_vs_three() -> (Vec<Chapter>, Vec<Chapter>) {
        (
            titled(&[(0.0, 10.0, "intro overview"), (10.0, 20.0, "main results")]),
            titled(&[(0.0, 5.0, "intro"), (5.0, 10.0, "overview"), (10.0, 20.0, "main results")]),
        )
    }

    #[test]
    fn grace_identity() {
        let p = titled(&[(0.0, 5.0, "a b"), (5.0, 9.0, "c"), (9.0, 30.0, "d e f")]);
        let s = grace(&p, &p, &MetricConfig::default(), &LexicalF1).unwrap();
        assert_eq!(s.raw, 3.0);
        assert_eq!(s.value, 100.0);
    }

    #[test]
    fn grace_worked_example() {
        let (p, g) = two_vs_three();
        let cfg = MetricConfig::default();
        let s = grace(&p, &g, &cfg, &LexicalF1).unwrap();
        assert_eq!(s.similarities, vec![1.0, 1.0]);
        assert!((s.raw - 1.5).abs() < 1e-12);
        assert!((s.value - 75.0).abs() < 1e-9);

        let gt_norm = MetricConfig {
            grace_normalization: GraceNormalization::GtCount,
            ..cfg.clone()
        };
        assert!((grace(&p, &g, &gt_norm, &LexicalF1).unwrap().value - 50.0).abs() < 1e-9);
        let none = MetricConfig {
            grace_normalization: GraceNormalization::None,
            ..cfg
        };
        assert!((grace(&p, &g, &none, &LexicalF1).unwrap().value - 150.0).abs() < 1e-9);
    }

    #[test]
    fn grace_groups_on_both_sides() {
        let p = titled(&[(0.0, 10.0, "setup"), (10.0, 17.0, "demo"), (17.0, 20.0, "recap")]);
        let g = titled(&[(0.0, 3.0, "intro"), (3.0, 10.0, "setup"), (10.0, 20.0, "demo recap")]);
        let s = grace(&p, &g, &MetricConfig::default(), &LexicalF1).unwrap();
        let shapes: Vec<_> = s
            .matching
            .groups
            .iter()
            .map(|x| (x.pred.clone(), x.gt.clone()))
            .collect();
        // phi1 * Sim(p1, g1 ∪ g2) + phi2 * Sim(p2 ∪ p3, g3)
        assert_eq!(shapes, vec![(0..1, 0..2), (1..3, 2..3)]);
        let expected = 0.5 * lexical_f1("setup", "intro setup") + 0.5 * 1.0;
        assert!((s.raw - expected).abs() < 1e-12);
    }

    #[test]
    fn soda_examples() {
        let (p, g) = two_vs_three();
        let cfg = MetricConfig::default();
        let s = soda(&p, &g, &cfg, &LexicalF1).unwrap();
        // oracle: enumerate every order-preserving pairing of 2 preds into 3 gts
        let pair = |i: usize, j: usize| iou(&p[i], &g[j]) * lexical_f1(p[i].short_title(), g[j].short_title());
        let mut best: f64 = 0.0;
        for a in 0..3 {
            best = best.max(pair(0, a)).max(pair(1, a));
            for b in a + 1..3 {
                best = best.max(pair(0, a) + pair(1, b));
            }
        }
        assert!((s.total - best).abs() < 1e-12);
        assert!((s.total - 4.0 / 3.0).abs() < 1e-12);
        assert!((s.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.recall - 4.0 / 9.0).abs() < 1e-12);
        assert!((s.value - 53.333_333_333).abs() < 1e-6);

        assert_eq!(soda(&p, &p, &cfg, &LexicalF1).unwrap().value, 100.0);
        let far = titled(&[(100.0, 200.0, "intro overview")]);
        assert_eq!(soda(&far, &g, &cfg, &LexicalF1).unwrap().value, 0.0);
    }

    #[test]
    fn segmentation_examples() {
        let cfg = MetricConfig::default();
        let p = titled(&[(0.0, 10.0, "")]);
        let s = segmentation_scores(&p, &p, &cfg).unwrap();
        assert_eq!((s.f1, s.tiou), (100.0, 100.0));

        let g = titled(&[(0.0, 5.0, ""), (5.0, 15.0, "")]);
        let s = segmentation_scores(&p, &g, &cfg).unwrap();
        let expected = 100.0 * 0.5 * ((0.5 + 1.0 / 3.0) / 2.0 + 0.5);
        assert!((s.tiou - expected).abs() < 1e-9);
        assert!((s.tiou - 45.833_333).abs() < 1e-4);

        let far = titled(&[(50.0, 60.0, "")]);
        let s = segmentation_scores(&far, &g, &cfg).unwrap();
        assert_eq!((s.f1, s.tiou, s.precision, s.recall), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn segmentation_precision_recall_at_half() {
        // p0 matches g0 at IoU 0.5 exactly; p1 matches nothing
        let p = titled(&[(0.0, 10.0, ""), (10.0, 12.0, "")]);
        let g = titled(&[(0.0, 5.0, ""), (20.0, 30.0, ""), (30.0, 40.0, "")]);
        let s = segmentation_scores(&p, &g, &MetricConfig::default()).unwrap();
        assert!((s.precision - 50.0).abs() < 1e-12);
        assert!((s.recall - 100.0 / 3.0).abs() < 1e-12);
        // only the 0.5 threshold matches
        let f_half = 2.0 * 0.5 * (1.0 / 3.0) / (0.5 + 1.0 / 3.0);
        assert!((s.f1 - 100.0 * f_half / 10.0).abs() < 1e-9);
    }

    #[test]
    fn reward_examples() {
        let (p, g) = two_vs_three();
        assert_eq!(grpo_reward(&p, &g).unwrap(), Reward { raw: 1.5, normalized: 0.75 });
        assert_eq!(grpo_reward(&g, &g).unwrap(), Reward { raw: 3.0, normalized: 1.0 });
        let far = titled(&[(100.0, 200.0, "x")]);
        assert_eq!(grpo_reward(&far, &g).unwrap(), Reward { raw: 0.0, normalized: 0.0 });
    }

    #[test]
    fn cider_pairs_take_best_overlap() {
        let (p, g) = two_vs_three();
        let pairs = cider_pairs(&p, &g, TextField::ShortTitle).unwrap();
        assert_eq!(pairs[0], ("intro overview".into(), "intro".into()));
        assert_eq!(pairs[2], ("main results".into(), "main results".into()));
        let far = titled(&[(100.0, 200.0, "x")]);
        let pairs = cider_pairs(&far, &g, TextField::ShortTitle).unwrap();
        assert!(pairs.iter().all(|(c, _)| c.is_empty()));
    }

    #[test]
    fn chapter_cider_examples() {
        let cfg = MetricConfig::default();
        let (p, g) = two_vs_three();
        let same = chapter_cider(&[(&g, &g), (&p, &p)], &cfg).unwrap();
        assert!((same - 10.0).abs() < 1e-12);
        let far = titled(&[(100.0, 200.0, "x")]);
        assert_eq!(chapter_cider(&[(&far, &g)], &cfg).unwrap(), 0.0);
        // two GT chapters: one predicted exactly, one with disjoint words
        let gt = titled(&[(0.0, 10.0, "alpha beta"), (10.0, 20.0, "gamma delta")]);
        let pr = titled(&[(0.0, 10.0, "alpha beta"), (10.0, 20.0, "zeta eta")]);
        assert!((chapter_cider(&[(&pr, &gt)], &cfg).unwrap() - 5.0).abs() < 1e-12);
    }

    fn timeline(id: &str, duration: f64, spans: &[(f64, f64, &str)]) -> ChapterTimeline {
        ChapterTimeline::new(id, Some(duration), titled(spans)).unwrap()
    }

    #[test]
    fn aggregate_buckets() {
        let cfg = MetricConfig::default();
        let short = timeline("s", 600.0, &[(0.0, 300.0, "a b"), (300.0, 600.0, "c")]);
        let long = timeline("l", 2700.0, &[(0.0, 2700.0, "x y")]);
        let dataset = vec![
            evaluate_video(&short, &short, &cfg, &LexicalF1).unwrap(),
            evaluate_video(&long, &long, &cfg, &LexicalF1).unwrap(),
        ];
        let report = aggregate(dataset, &cfg).unwrap();
        assert_eq!(report.per_video[1].bucket, BucketLabel::Long);
        assert!(report.bucket(BucketLabel::Medium).is_none());
        assert_eq!(report.bucket(BucketLabel::Long).unwrap().videos, 1);
        let all = report.bucket(BucketLabel::All).unwrap();
        assert_eq!(all.videos, 2);
        assert_eq!(all.f1, 100.0);
        assert!((all.cider - 10.0).abs() < 1e-12);
    }

    #[test]
    fn aggregate_is_macro_mean() {
        let cfg = MetricConfig::default();
        let gt = timeline("a", 100.0, &[(0.0, 50.0, "x"), (50.0, 100.0, "y")]);
        let mut a = evaluate_video(&gt, &gt, &cfg, &LexicalF1).unwrap();
        let mut b = a.clone();
        a.scores.f1 = 40.0;
        b.scores.f1 = 60.0;
        let report = aggregate(vec![a.clone()], &cfg).unwrap();
        assert_eq!(report.bucket(BucketLabel::All).unwrap().f1, 40.0);
        let report = aggregate(vec![a, b], &cfg).unwrap();
        assert_eq!(report.bucket(BucketLabel::All).unwrap().f1, 50.0);
    }

    #[test]
    fn failed_video_scores_zero() {
        let cfg = MetricConfig::default();
        let gt = timeline("a", 100.0, &[(0.0, 50.0, "x"), (50.0, 100.0, "y")]);
        let ok = evaluate_video(&gt, &gt, &cfg, &LexicalF1).unwrap();
        let bad = failed_video(&gt, &cfg, "missing prediction".into());
        let report = aggregate(vec![ok, bad], &cfg).unwrap();
        assert_eq!(report.per_video[1].f1, 0.0);
        assert_eq!(report.per_video[1].cider, 0.0);
        assert_eq!(report.bucket(BucketLabel::All).unwrap().grace, 50.0);
    }

    #[test]
    fn config_validation() {
        let mut cfg = MetricConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.f1_thresholds = vec![0.5, 0.5];
        assert!(cfg.validate().is_err());
        cfg.f1_thresholds = vec![0.0, 0.5];
        assert!(cfg.validate().is_err());
        cfg.f1_thresholds = vec![0.5, 1.1];
        assert!(cfg.validate().is_err());
        cfg.f1_thresholds = vec![0.3];
        cfg.buckets[1].min = 100.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn default_thresholds_are_ten_steps() {
        let t = default_thresholds();
        assert_eq!(t.len(), 10);
        assert!((t[0] - 0.5).abs() < 1e-12 && (t[9] - 0.95).abs() < 1e-12);
    }

    #[test]
    fn missing_text_field_propagates() {
        let (p, g) = two_vs_three();
        let cfg = MetricConfig {
            text_field: TextField::Abstract,
            ..MetricConfig::default()
        };
        assert!(matches!(
            grace(&p, &g, &cfg, &LexicalF1),
            Err(Error::Text(textsim::Error::MissingField { .. }))
        ));
    }
}
