//! Temporal alignment between predicted and ground-truth chapter sequences.
//!
//! [`match_groups`] partitions both sequences into aligned contiguous groups
//! where every group pair is one-to-many or many-to-one, maximising the sum of
//! per-group mean IoU. It is a segmentation DP over prefix pairs rather than a
//! warping path: a warping path may place one chapter in two runs, which the
//! partition constraints forbid. [`match_groups_bruteforce`] enumerates every
//! admissible partition and serves as the optimality oracle.
//!
//! [`match_one_to_one`] is the order-preserving assignment used by SODA.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::chapter::{Chapter, iou, phi_unchecked};

/// Objective values closer than this are treated as ties.
pub const TIE_EPS: f64 = 1e-9;

/// Largest side accepted by [`match_groups_bruteforce`].
pub const BRUTEFORCE_MAX: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("cannot align an empty chapter sequence")]
    EmptyTimeline,
    #[error("brute-force matching supports at most {BRUTEFORCE_MAX} chapters per side, got {pred}x{gt}")]
    InstanceTooLarge { pred: usize, gt: usize },
}

/// One aligned pair of contiguous chapter groups.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPair {
    pub pred: Range<usize>,
    pub gt: Range<usize>,
    pub phi: f64,
}

impl GroupPair {
    pub fn is_one_to_many(&self) -> bool {
        !self.pred.is_empty()
            && !self.gt.is_empty()
            && (self.pred.len() == 1 || self.gt.len() == 1)
    }
}

/// A partition of both sequences into aligned group pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMatching {
    pub groups: Vec<GroupPair>,
    pub objective: f64,
}

impl GroupMatching {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Checks that the groups tile `0..n_pred` and `0..n_gt` in order and that
    /// every group is one-to-many. Returns the first offending group index.
    pub fn validate(&self, n_pred: usize, n_gt: usize) -> Result<(), usize> {
        let (mut next_p, mut next_g) = (0, 0);
        for (k, g) in self.groups.iter().enumerate() {
            if g.pred.start != next_p || g.gt.start != next_g || !g.is_one_to_many() {
                return Err(k);
            }
            next_p = g.pred.end;
            next_g = g.gt.end;
        }
        if next_p != n_pred || next_g != n_gt {
            return Err(self.groups.len());
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
struct Cell {
    objective: f64,
    groups: usize,
    from: (usize, usize),
}

fn improves(objective: f64, groups: usize, best: &Option<Cell>) -> bool {
    match best {
        None => true,
        Some(b) => {
            objective > b.objective + TIE_EPS
                || ((objective - b.objective).abs() <= TIE_EPS && groups < b.groups)
        }
    }
}

/// Row/column prefix sums of the IoU matrix, giving O(1) group means.
struct IouTable {
    m: usize,
    // row_prefix[i * (m + 1) + j] = sum of iou(p_i, g_0..g_j)
    row_prefix: Vec<f64>,
    // col_prefix[j * (n + 1) + i] = sum of iou(p_0..p_i, g_j)
    col_prefix: Vec<f64>,
    n: usize,
}

impl IouTable {
    fn new(pred: &[Chapter], gt: &[Chapter]) -> Self {
        let (n, m) = (pred.len(), gt.len());
        let mut row_prefix = vec![0.0; n * (m + 1)];
        let mut col_prefix = vec![0.0; m * (n + 1)];
        for i in 0..n {
            for j in 0..m {
                let v = iou(&pred[i], &gt[j]);
                row_prefix[i * (m + 1) + j + 1] = row_prefix[i * (m + 1) + j] + v;
                col_prefix[j * (n + 1) + i + 1] = col_prefix[j * (n + 1) + i] + v;
            }
        }
        IouTable {
            m,
            row_prefix,
            col_prefix,
            n,
        }
    }

    /// Mean IoU of prediction `i` against ground truth `gts`.
    fn one_pred(&self, i: usize, gts: Range<usize>) -> f64 {
        let base = i * (self.m + 1);
        (self.row_prefix[base + gts.end] - self.row_prefix[base + gts.start]) / gts.len() as f64
    }

    /// Mean IoU of predictions `preds` against ground truth `j`.
    fn one_gt(&self, preds: Range<usize>, j: usize) -> f64 {
        let base = j * (self.n + 1);
        (self.col_prefix[base + preds.end] - self.col_prefix[base + preds.start])
            / preds.len() as f64
    }
}

/// Optimal constrained many-to-one matching.
///
/// `best[i][j]` is the best partition of the first `i` predictions and `j`
/// ground-truth chapters; the last group either pairs prediction `i` with
/// ground truth `j-k+1..=j`, or predictions `i-k+1..=i` with ground truth `j`.
/// Ties (within [`TIE_EPS`]) go to fewer groups, then to grouping on the
/// ground-truth side, then to the smallest last-group size.
pub fn match_groups(pred: &[Chapter], gt: &[Chapter]) -> Result<GroupMatching, Error> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::EmptyTimeline);
    }
    let (n, m) = (pred.len(), gt.len());
    let table = IouTable::new(pred, gt);
    let idx = |i: usize, j: usize| i * (m + 1) + j;
    let mut best: Vec<Option<Cell>> = vec![None; (n + 1) * (m + 1)];
    best[idx(0, 0)] = Some(Cell {
        objective: 0.0,
        groups: 0,
        from: (0, 0),
    });

    for i in 1..=n {
        for j in 1..=m {
            let mut cell: Option<Cell> = None;
            // one prediction, k ground-truth chapters
            for k in 1..=j {
                if let Some(prev) = best[idx(i - 1, j - k)] {
                    let objective = prev.objective + table.one_pred(i - 1, j - k..j);
                    let groups = prev.groups + 1;
                    if improves(objective, groups, &cell) {
                        cell = Some(Cell {
                            objective,
                            groups,
                            from: (i - 1, j - k),
                        });
                    }
                }
            }
            // k >= 2 predictions, one ground-truth chapter
            for k in 2..=i {
                if let Some(prev) = best[idx(i - k, j - 1)] {
                    let objective = prev.objective + table.one_gt(i - k..i, j - 1);
                    let groups = prev.groups + 1;
                    if improves(objective, groups, &cell) {
                        cell = Some(Cell {
                            objective,
                            groups,
                            from: (i - k, j - 1),
                        });
                    }
                }
            }
            best[idx(i, j)] = cell;
        }
    }

    let mut groups = Vec::new();
    let (mut i, mut j) = (n, m);
    while (i, j) != (0, 0) {
        let cell = best[idx(i, j)].expect("every (i, j) with i, j >= 1 is reachable");
        let (pi, pj) = cell.from;
        groups.push(GroupPair {
            pred: pi..i,
            gt: pj..j,
            phi: phi_unchecked(&pred[pi..i], &gt[pj..j]),
        });
        (i, j) = (pi, pj);
    }
    groups.reverse();
    let objective = groups.iter().map(|g| g.phi).sum();
    Ok(GroupMatching { groups, objective })
}

/// Exhaustive search over every admissible partition. Exponential; limited
/// to [`BRUTEFORCE_MAX`] chapters per side.
pub fn match_groups_bruteforce(pred: &[Chapter], gt: &[Chapter]) -> Result<GroupMatching, Error> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::EmptyTimeline);
    }
    if pred.len() > BRUTEFORCE_MAX || gt.len() > BRUTEFORCE_MAX {
        return Err(Error::InstanceTooLarge {
            pred: pred.len(),
            gt: gt.len(),
        });
    }
    let mut search = Exhaustive {
        pred,
        gt,
        current: Vec::new(),
        best: None,
    };
    search.extend(0, 0);
    let groups = search.best.expect("non-empty instances have a partition");
    let objective = groups.iter().map(|g| g.phi).sum();
    Ok(GroupMatching { groups, objective })
}

struct Exhaustive<'a> {
    pred: &'a [Chapter],
    gt: &'a [Chapter],
    current: Vec<GroupPair>,
    best: Option<Vec<GroupPair>>,
}

impl Exhaustive<'_> {
    fn extend(&mut self, i: usize, j: usize) {
        let (n, m) = (self.pred.len(), self.gt.len());
        if i == n && j == m {
            let objective: f64 = self.current.iter().map(|g| g.phi).sum();
            let take = match &self.best {
                None => true,
                Some(b) => {
                    let bo: f64 = b.iter().map(|g| g.phi).sum();
                    objective > bo + TIE_EPS
                        || ((objective - bo).abs() <= TIE_EPS && self.current.len() < b.len())
                }
            };
            if take {
                self.best = Some(self.current.clone());
            }
            return;
        }
        if i == n || j == m {
            return;
        }
        for k in 1..=m - j {
            self.push_and_recurse(i..i + 1, j..j + k);
        }
        for k in 2..=n - i {
            self.push_and_recurse(i..i + k, j..j + 1);
        }
    }

    fn push_and_recurse(&mut self, pred: Range<usize>, gt: Range<usize>) {
        // computed pairwise from scratch, independent of the DP's prefix sums
        let mut total = 0.0;
        for p in &self.pred[pred.clone()] {
            for g in &self.gt[gt.clone()] {
                total += iou(p, g);
            }
        }
        let phi = total / (pred.len() * gt.len()) as f64;
        let (ni, nj) = (pred.end, gt.end);
        self.current.push(GroupPair { pred, gt, phi });
        self.extend(ni, nj);
        self.current.pop();
    }
}

/// Order-preserving one-to-one pairs, strictly increasing in both indices.
#[derive(Debug, Clone, PartialEq)]
pub struct OneToOneMatching {
    pub pairs: Vec<(usize, usize)>,
    pub total: f64,
}

/// Order-preserving one-to-one assignment maximising the summed pair score.
///
/// `pair_score` is called once per (prediction, ground-truth) pair; negative
/// or NaN scores count as zero and zero-score pairs never appear in the
/// result. On ties the earliest ground-truth partner is kept.
pub fn match_one_to_one<F>(pred: &[Chapter], gt: &[Chapter], mut pair_score: F) -> OneToOneMatching
where
    F: FnMut(&Chapter, &Chapter) -> f64,
{
    let (n, m) = (pred.len(), gt.len());
    let mut score = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            let s = pair_score(&pred[i], &gt[j]);
            score[i * m + j] = if s > 0.0 { s } else { 0.0 };
        }
    }
    one_to_one_from_scores(n, m, &score)
}

/// Same as [`match_one_to_one`] over a precomputed row-major `n x m` matrix.
pub fn one_to_one_from_scores(n: usize, m: usize, score: &[f64]) -> OneToOneMatching {
    assert_eq!(score.len(), n * m, "score matrix must be n x m");
    let w = m + 1;
    let mut table = vec![0.0f64; (n + 1) * w];
    for i in 1..=n {
        for j in 1..=m {
            let s = score[(i - 1) * m + (j - 1)];
            let diag = table[(i - 1) * w + j - 1] + if s > 0.0 { s } else { 0.0 };
            table[i * w + j] = table[(i - 1) * w + j].max(table[i * w + j - 1]).max(diag);
        }
    }
    let mut pairs = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        let here = table[i * w + j];
        if here == table[i * w + j - 1] {
            j -= 1;
        } else if here == table[(i - 1) * w + j] {
            i -= 1;
        } else {
            pairs.push((i - 1, j - 1));
            i -= 1;
            j -= 1;
        }
    }
    pairs.reverse();
    let total = pairs.iter().map(|&(i, j)| score[i * m + j]).sum();
    OneToOneMatching { pairs, total }
}
