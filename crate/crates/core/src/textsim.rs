//! Text normalization and similarity scorers.
//!
//! All lexical scoring runs on normalized text: Unicode NFC, lowercase,
//! single spaces. Tokens are whitespace-separated words with leading and
//! trailing punctuation stripped; CJK characters are one token each.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use unicode_normalization::UnicodeNormalization;

use crate::chapter::{Chapter, TextField, collapse_whitespace};

/// CIDEr-D length penalty width, in tokens.
pub const CIDER_SIGMA: f64 = 6.0;
/// Highest n-gram order used by CIDEr-D.
pub const CIDER_MAX_N: usize = 4;
/// Scale applied to the averaged cosine similarity.
pub const CIDER_SCALE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("chapter {index} has no {} text", field.name())]
    MissingField { index: usize, field: TextField },
    #[error("CIDEr needs a non-empty corpus with one candidate per reference ({candidates} vs {references})")]
    EmptyCorpus { candidates: usize, references: usize },
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}

/// Failures reported by a similarity backend.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScorerError {
    #[error("scorer protocol error: {0}")]
    Protocol(String),
    #[error("scorer did not answer within {0} s")]
    Timeout(f64),
    #[error("scorer never answered request {0:?}")]
    MissingResponse(String),
    #[error("scorer backend failure: {0}")]
    Backend(String),
}

pub fn normalize_text(text: &str) -> String {
    let composed: String = text.nfc().collect();
    collapse_whitespace(&composed.to_lowercase())
}

fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF      // kana
        | 0x3400..=0x4DBF    // ideographs ext A
        | 0x4E00..=0x9FFF    // unified ideographs
        | 0xAC00..=0xD7AF    // hangul syllables
        | 0xF900..=0xFAFF    // compatibility ideographs
        | 0x20000..=0x2FA1F) // ideographs ext B and later
}

/// Normalizes then splits `text` into scoring tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let normalized = normalize_text(text);
    let mut tokens = Vec::new();
    for word in normalized.split(' ') {
        let word = word.trim_matches(|c: char| !c.is_alphanumeric());
        if word.is_empty() {
            continue;
        }
        if !word.chars().any(is_cjk) {
            tokens.push(word.to_string());
            continue;
        }
        let mut run = String::new();
        let flush = |run: &mut String, tokens: &mut Vec<String>| {
            let trimmed = run.trim_matches(|c: char| !c.is_alphanumeric());
            if !trimmed.is_empty() {
                tokens.push(trimmed.to_string());
            }
            run.clear();
        };
        for c in word.chars() {
            if is_cjk(c) {
                flush(&mut run, &mut tokens);
                tokens.push(c.to_string());
            } else {
                run.push(c);
            }
        }
        flush(&mut run, &mut tokens);
    }
    tokens
}

/// Joins the `field` texts of `group` in order with single spaces, then
/// normalizes the result.
pub fn concat_group_text(group: &[Chapter], field: TextField) -> Result<String, Error> {
    let mut joined = String::new();
    for (index, chapter) in group.iter().enumerate() {
        let text = chapter
            .text(field)
            .ok_or(Error::MissingField { index, field })?;
        if index > 0 {
            joined.push(' ');
        }
        joined.push_str(text);
    }
    Ok(normalize_text(&joined))
}

fn counts(tokens: &[String]) -> BTreeMap<&str, usize> {
    let mut map = BTreeMap::new();
    for t in tokens {
        *map.entry(t.as_str()).or_insert(0) += 1;
    }
    map
}

/// Harmonic mean of token-multiset precision and recall.
pub fn lexical_f1(candidate: &str, reference: &str) -> f64 {
    let cand = tokenize(candidate);
    let refs = tokenize(reference);
    match (cand.is_empty(), refs.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let (cc, rc) = (counts(&cand), counts(&refs));
    let common: usize = cc
        .iter()
        .map(|(tok, &n)| n.min(rc.get(tok).copied().unwrap_or(0)))
        .sum();
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / cand.len() as f64;
    let recall = common as f64 / refs.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

type NgramCounts = BTreeMap<String, f64>;

fn ngrams(tokens: &[String], n: usize) -> NgramCounts {
    let mut map = NgramCounts::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *map.entry(window.join("\u{1f}")).or_insert(0.0) += 1.0;
        }
    }
    map
}

/// Per-item and mean CIDEr-D over an aligned candidate/reference corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CiderScore {
    pub mean: f64,
    pub per_item: Vec<f64>,
}

/// CIDEr-D with one reference per candidate.
///
/// IDF comes from the reference side of this corpus as
/// `ln((N + 1) / max(1, df))`, so n-grams shared by every reference keep a
/// small positive weight and a one-item corpus is still scorable. Each item
/// averages the orders `n <= 4` that the reference actually has (a two-token
/// reference is scored on unigrams and bigrams only). Per order, the
/// candidate vector is clipped to the reference, the clipped dot product is
/// divided by both norms, and a Gaussian length penalty with width
/// [`CIDER_SIGMA`] is applied. Identical candidate and reference score
/// [`CIDER_SCALE`].
pub fn cider_d<C: AsRef<str>, R: AsRef<str>>(
    candidates: &[C],
    references: &[R],
) -> Result<CiderScore, Error> {
    if candidates.is_empty() || candidates.len() != references.len() {
        return Err(Error::EmptyCorpus {
            candidates: candidates.len(),
            references: references.len(),
        });
    }
    let cand_tokens: Vec<Vec<String>> = candidates.iter().map(|c| tokenize(c.as_ref())).collect();
    let ref_tokens: Vec<Vec<String>> = references.iter().map(|r| tokenize(r.as_ref())).collect();

    let ref_grams: Vec<[NgramCounts; CIDER_MAX_N]> = ref_tokens
        .iter()
        .map(|t| core::array::from_fn(|k| ngrams(t, k + 1)))
        .collect();
    let mut doc_freq: BTreeMap<&str, f64> = BTreeMap::new();
    for per_order in &ref_grams {
        for grams in per_order {
            for g in grams.keys() {
                *doc_freq.entry(g.as_str()).or_insert(0.0) += 1.0;
            }
        }
    }
    let corpus = (references.len() + 1) as f64;
    let idf = |g: &str| libm::log(corpus / doc_freq.get(g).copied().unwrap_or(0.0).max(1.0));

    let mut per_item = Vec::with_capacity(candidates.len());
    for (item, cand) in cand_tokens.iter().enumerate() {
        let reference = &ref_tokens[item];
        let delta = cand.len() as f64 - reference.len() as f64;
        let penalty = libm::exp(-(delta * delta) / (2.0 * CIDER_SIGMA * CIDER_SIGMA));
        let orders = reference.len().min(CIDER_MAX_N);
        if orders == 0 {
            per_item.push(if cand.is_empty() { CIDER_SCALE } else { 0.0 });
            continue;
        }
        let mut total = 0.0;
        for n in 1..=orders {
            let r_vec: NgramCounts = ref_grams[item][n - 1]
                .iter()
                .map(|(g, tf)| (g.clone(), tf * idf(g)))
                .collect();
            let c_vec: NgramCounts = ngrams(cand, n)
                .into_iter()
                .map(|(g, tf)| {
                    let w = tf * idf(&g);
                    (g, w)
                })
                .collect();
            let norm = |v: &NgramCounts| libm::sqrt(v.values().map(|x| x * x).sum::<f64>());
            let (nc, nr) = (norm(&c_vec), norm(&r_vec));
            if nc == 0.0 || nr == 0.0 {
                continue;
            }
            let dot: f64 = c_vec
                .iter()
                .filter_map(|(g, &c)| r_vec.get(g).map(|&r| c.min(r) * r))
                .sum();
            total += dot / (nc * nr);
        }
        per_item.push(CIDER_SCALE * penalty * total / orders as f64);
    }
    let mean = per_item.iter().sum::<f64>() / per_item.len() as f64;
    Ok(CiderScore { mean, per_item })
}

/// One candidate/reference pair to score.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreRequest {
    pub id: String,
    pub candidate: String,
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreResponse {
    pub id: String,
    pub score: f64,
}

/// A batch text-similarity backend returning scores in `[0, 1]`.
///
/// Implementations may answer in any order; [`score_batch`] matches answers
/// back to requests.
pub trait TextSimilarity {
    /// Backend identifier echoed into reports.
    fn backend(&self) -> &str;

    fn score_raw(&self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError>;
}

impl<T: TextSimilarity + ?Sized> TextSimilarity for &T {
    fn backend(&self) -> &str {
        (**self).backend()
    }

    fn score_raw(&self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError> {
        (**self).score_raw(requests)
    }
}

/// Deterministic token-F1 scorer.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalF1;

impl TextSimilarity for LexicalF1 {
    fn backend(&self) -> &str {
        "lexical_f1"
    }

    fn score_raw(&self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError> {
        Ok(requests
            .iter()
            .map(|r| ScoreResponse {
                id: r.id.clone(),
                score: lexical_f1(&r.candidate, &r.reference),
            })
            .collect())
    }
}

pub fn clamp_score(score: f64) -> f64 {
    if score.is_nan() { 0.0 } else { score.clamp(0.0, 1.0) }
}

/// Scores `requests` and returns responses in request order, clamped to
/// `[0, 1]`. Request ids must be unique; every id must be answered once.
pub fn score_batch<S: TextSimilarity + ?Sized>(
    scorer: &S,
    requests: &[ScoreRequest],
) -> Result<Vec<ScoreResponse>, ScorerError> {
    let mut slots: BTreeMap<&str, Option<f64>> = BTreeMap::new();
    for r in requests {
        if slots.insert(r.id.as_str(), None).is_some() {
            return Err(ScorerError::Protocol(alloc::format!(
                "duplicate request id {:?}",
                r.id
            )));
        }
    }
    if requests.is_empty() {
        return Ok(Vec::new());
    }
    for resp in scorer.score_raw(requests)? {
        match slots.get_mut(resp.id.as_str()) {
            None => {
                return Err(ScorerError::Protocol(alloc::format!(
                    "response for unknown id {:?}",
                    resp.id
                )));
            }
            Some(Some(_)) => {
                return Err(ScorerError::Protocol(alloc::format!(
                    "id {:?} answered twice",
                    resp.id
                )));
            }
            Some(slot) => *slot = Some(clamp_score(resp.score)),
        }
    }
    requests
        .iter()
        .map(|r| match slots[r.id.as_str()] {
            Some(score) => Ok(ScoreResponse {
                id: r.id.clone(),
                score,
            }),
            None => Err(ScorerError::MissingResponse(r.id.clone())),
        })
        .collect()
}

impl fmt::Display for ScoreRequest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:?} vs {:?}", self.id, self.candidate, self.reference)
    }
}
