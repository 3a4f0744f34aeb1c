//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the lines always reach the console.

mod common;

use std::panic::{AssertUnwindSafe, catch_unwind};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use chapter_eval::formats;
use chapter_eval_core::alignment::{match_groups, match_groups_bruteforce};
use chapter_eval_core::metrics::{self, MetricConfig, aggregate, evaluate_video, grpo_reward};
use chapter_eval_core::pipeline::{PerturbMode, perturb_granularity};
use chapter_eval_core::textsim::LexicalF1;
use chapter_eval_core::{BucketLabel, Chapter, ChapterTimeline};
use common::{malformed_corpus, phrase, random_sequence, random_timeline, reject, rng};
use rand::RngExt;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok { Ok(detail) } else { Err(detail) }
}

fn oracle_optimality() -> Outcome {
    let t0 = Instant::now();
    let mut r = rng(0xacce);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p = random_sequence(&mut r, 5);
        let g = random_sequence(&mut r, 5);
        let dp = match_groups(&p, &g).map_err(|e| e.to_string())?;
        let brute = match_groups_bruteforce(&p, &g).map_err(|e| e.to_string())?;
        worst = worst.max((dp.objective - brute.objective).abs());
    }
    let secs = t0.elapsed().as_secs_f64();
    check(
        worst <= 1e-9 && secs < 30.0,
        format!("1000 instances, max |dp - brute| = {worst:.1e}, {secs:.2} s"),
    )
}

fn structural_validity() -> Outcome {
    let mut r = rng(0x5742);
    let mut violations = 0;
    let mut reward_over = 0;
    for _ in 0..10_000 {
        let (np, ng) = (r.random_range(1..=12), r.random_range(1..=12));
        let p = random_sequence(&mut r, np);
        let g = random_sequence(&mut r, ng);
        let m = match_groups(&p, &g).map_err(|e| e.to_string())?;
        let shapes_ok = m
            .groups
            .iter()
            .all(|x| x.pred.len().min(x.gt.len()) == 1 && !x.pred.is_empty() && !x.gt.is_empty());
        if m.validate(p.len(), g.len()).is_err() || !shapes_ok {
            violations += 1;
        }
        let reward = grpo_reward(&p, &g).map_err(|e| e.to_string())?;
        if reward.raw > m.len() as f64 + 1e-12 {
            reward_over += 1;
        }
    }
    check(
        violations == 0 && reward_over == 0,
        format!("10000 fuzzed instances, {violations} partition violations, {reward_over} rewards above K"),
    )
}

fn synthetic_video(r: &mut rand_chacha::ChaCha8Rng, id: &str) -> ChapterTimeline {
    let k = r.random_range(3..=12);
    let mut t = 0.0;
    let chapters = (0..k)
        .map(|_| {
            let len = r.random_range(20.0..400.0);
            let c = Chapter::new(t, t + len, phrase(r, 2, 6)).unwrap();
            t += len;
            c
        })
        .collect();
    ChapterTimeline::new(id, Some(t), chapters).unwrap()
}

fn worked_fixture() -> (Vec<Chapter>, Vec<Chapter>) {
    let c = |s, e, t| Chapter::new(s, e, t).unwrap();
    (
        vec![c(0.0, 10.0, "intro overview"), c(10.0, 20.0, "main results")],
        vec![c(0.0, 5.0, "intro"), c(5.0, 10.0, "overview"), c(10.0, 20.0, "main results")],
    )
}

fn granularity_harness() -> Outcome {
    let cfg = MetricConfig::default();
    let mut r = rng(2025);
    let (mut wins, mut gap_sum) = (0, 0.0);
    for k in 0..200 {
        let coarse = synthetic_video(&mut r, &format!("syn-{k}"));
        let fine = perturb_granularity(&coarse, PerturbMode::Split, k).map_err(|e| e.to_string())?;
        let grace = metrics::grace(coarse.chapters(), fine.chapters(), &cfg, &LexicalF1)
            .map_err(|e| e.to_string())?
            .value;
        let soda = metrics::soda(coarse.chapters(), fine.chapters(), &cfg, &LexicalF1)
            .map_err(|e| e.to_string())?
            .value;
        if grace > soda {
            wins += 1;
        }
        gap_sum += grace - soda;
    }
    let gap = gap_sum / 200.0;
    let (p, g) = worked_fixture();
    let grace = metrics::grace(&p, &g, &cfg, &LexicalF1).map_err(|e| e.to_string())?.value;
    let soda = metrics::soda(&p, &g, &cfg, &LexicalF1).map_err(|e| e.to_string())?.value;
    check(
        wins == 200 && gap >= 10.0 && (grace - 75.0).abs() < 0.1 && (soda - 53.3).abs() < 0.1,
        format!("GRACE > SODA in {wins}/200, mean gap {gap:.2}, worked fixture GRACE {grace:.2} vs SODA {soda:.2}"),
    )
}

fn metric_identities() -> Outcome {
    let cfg = MetricConfig::default();
    let mut r = rng(42);
    let mut dataset = Vec::new();
    for k in 0..60 {
        let t = random_timeline(&mut r, &format!("id-{k}"), k % 2 == 0, false);
        dataset.push(evaluate_video(&t, &t, &cfg, &LexicalF1).map_err(|e| e.to_string())?);
    }
    let report = aggregate(dataset, &cfg).map_err(|e| e.to_string())?;
    let all = report.bucket(BucketLabel::All).ok_or("no videos in the all bucket")?;
    let pairs = [
        ("F1", all.f1, 100.0),
        ("tIoU", all.tiou, 100.0),
        ("SODA", all.soda, 100.0),
        ("GRACE", all.grace, 100.0),
        ("CIDEr", all.cider, 10.0),
        ("reward", all.reward_norm, 1.0),
    ];
    let off: Vec<String> = pairs
        .iter()
        .filter(|(_, got, want)| (got - want).abs() > 1e-9)
        .map(|(name, got, want)| format!("{name} {got} != {want}"))
        .collect();
    let per_video_ok = report
        .per_video
        .iter()
        .all(|v| (v.cider - 10.0).abs() <= 1e-9 && (v.grace - 100.0).abs() <= 1e-9);
    check(
        off.is_empty() && per_video_ok,
        if off.is_empty() {
            "60 identical videos: F1 100, tIoU 100, SODA 100, GRACE 100, CIDEr 10, reward 1".into()
        } else {
            off.join("; ")
        },
    )
}

fn invariance() -> Outcome {
    let cfg = MetricConfig::default();
    let mut r = rng(3600);
    let mut worst: f64 = 0.0;
    let scores = |p: &[Chapter], g: &[Chapter]| -> Result<[f64; 5], String> {
        let seg = metrics::segmentation_scores(p, g, &cfg).map_err(|e| e.to_string())?;
        let grace = metrics::grace(p, g, &cfg, &LexicalF1).map_err(|e| e.to_string())?;
        let soda = metrics::soda(p, g, &cfg, &LexicalF1).map_err(|e| e.to_string())?;
        let reward = grpo_reward(p, g).map_err(|e| e.to_string())?;
        Ok([seg.f1, seg.tiou, soda.value, grace.value, reward.raw])
    };
    let map = |xs: &[Chapter], a: f64, b: f64| -> Vec<Chapter> {
        xs.iter().map(|c| c.retimed(a * c.start() + b, a * c.end() + b).unwrap()).collect()
    };
    for _ in 0..100 {
        let p = random_sequence(&mut r, 8);
        let g = random_sequence(&mut r, 8);
        let base = scores(&p, &g)?;
        for (a, b) in [(1.0, 3600.0), (2.0, 0.0), (2.0, 3600.0)] {
            let moved = scores(&map(&p, a, b), &map(&g, a, b))?;
            for (x, y) in base.iter().zip(moved) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    check(
        worst < 1e-9,
        format!("100 instances under +3600 s, x2 and both: max change {worst:.1e}"),
    )
}

fn reward_fixture() -> Outcome {
    let (p, g) = worked_fixture();
    let r = grpo_reward(&p, &g).map_err(|e| e.to_string())?;
    check(
        r.raw == 1.5 && r.normalized == 0.75,
        format!("2-vs-3 fixture raw {} normalized {} (raw <= K checked with the structural fuzz)", r.raw, r.normalized),
    )
}

fn format_roundtrips() -> Outcome {
    let mut r = rng(500);
    let mut broken = 0;
    for k in 0..500 {
        let t = random_timeline(&mut r, &format!("rt-{k}"), false, true);
        match formats::parse_canonical(&formats::serialize_canonical(&t)) {
            Ok(doc) if doc.timeline == t => {}
            _ => broken += 1,
        }
    }
    let corpus = malformed_corpus();
    let mut accepted = 0;
    let mut crashed = 0;
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    for case in &corpus {
        match catch_unwind(AssertUnwindSafe(|| reject(case.kind, &case.text))) {
            Ok(Ok(())) => {}
            Ok(Err(_)) => accepted += 1,
            Err(_) => crashed += 1,
        }
    }
    std::panic::set_hook(hook);
    check(
        broken == 0 && accepted == 0 && crashed == 0 && corpus.len() >= 50,
        format!(
            "500 timelines, {broken} round-trip mismatches; {} malformed inputs, {accepted} accepted, {crashed} crashes",
            corpus.len()
        ),
    )
}

fn determinism() -> Outcome {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for (k, jobs) in ["1", "1", "4", "4"].iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let status = Command::new(env!("CARGO_BIN_EXE_chapter-eval"))
            .arg("evaluate")
            .arg("--pred")
            .arg(fixture.join("pred"))
            .arg("--gt")
            .arg(fixture.join("gt"))
            .arg("--out")
            .arg(&out)
            .args(["--jobs", jobs])
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("evaluate exited with {status}"));
        }
        reports.push(std::fs::read(out.join("report.json")).map_err(|e| e.to_string())?);
    }
    let golden = std::fs::read(fixture.join("expected_report.json")).map_err(|e| e.to_string())?;
    check(
        reports.iter().all(|r| *r == golden),
        "3-video fixture, two runs each at --jobs 1 and --jobs 4, report.json byte-identical to the golden file".into(),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("oracle optimality", oracle_optimality),
        ("group structure validity", structural_validity),
        ("granularity robustness", granularity_harness),
        ("metric identities", metric_identities),
        ("shift and scale invariance", invariance),
        ("temporal reward", reward_fixture),
        ("format round-trips", format_roundtrips),
        ("report determinism", determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let t0 = Instant::now();
        let outcome = catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.2} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{secs:.2} s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
