//! Evaluation core for long-form video chaptering.
//!
//! Everything here is pure and allocation-only: interval arithmetic over
//! chapter timelines, the constrained many-to-one group alignment behind
//! GRACE, order-preserving one-to-one matching for SODA, text similarity
//! scorers, the reported metrics, and the transcript assembly steps used to
//! prepare annotation inputs. Parsing, file formats and process handling live
//! in the `chapter-eval` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod alignment;
pub mod chapter;
pub mod metrics;
pub mod pipeline;
pub mod textsim;

pub use alignment::{
    GroupMatching, GroupPair, OneToOneMatching, match_groups, match_groups_bruteforce,
    match_one_to_one,
};
pub use chapter::{
    BucketLabel, Chapter, ChapterTimeline, DurationBucket, Source, TextField, TimeSec,
    TranscriptSegment, bucket_of, default_buckets, iou, phi,
};
pub use metrics::{EvalReport, GraceNormalization, MetricConfig, VideoScores};
pub use textsim::{LexicalF1, ScoreRequest, ScoreResponse, TextSimilarity};
