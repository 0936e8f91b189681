use std::cmp::Ordering;

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::class_counts;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CartParams {
    /// `None` grows until the stopping rules fire.
    pub max_depth: Option<usize>,
}

impl CartParams {
    pub fn check(&self) -> Result<()> {
        if self.max_depth == Some(0) {
            return Err(Error::InvalidParameter("CART max_depth must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TreeNode {
    Leaf {
        class: usize,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary classification tree grown greedily on Gini impurity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Node 0 is the root.
    pub nodes: Vec<TreeNode>,
    pub n_features: usize,
    pub class_count: usize,
}

/// `Σ_c n_c² / n` for the two children, held as an exact fraction.
///
/// Minimising weighted Gini impurity is the same as maximising this, and the
/// integer form makes equal-quality splits compare exactly equal, so the
/// lowest feature and threshold reliably win ties.
#[derive(Clone, Copy, Debug)]
struct SplitScore {
    num: u128,
    den: u128,
}

impl SplitScore {
    fn of(left_sq: u128, n_left: u128, right_sq: u128, n_right: u128) -> Self {
        Self {
            num: left_sq * n_right + right_sq * n_left,
            den: n_left * n_right,
        }
    }

    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

fn sum_sq(counts: &[usize]) -> u128 {
    counts.iter().map(|&c| (c as u128) * (c as u128)).sum()
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for c in 1..counts.len() {
        if counts[c] > counts[best] {
            best = c;
        }
    }
    best
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: SplitScore,
}

fn best_split(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    rows: &[usize],
    class_count: usize,
) -> Option<Candidate> {
    let n = rows.len();
    let total = class_counts_of(y, rows, class_count);
    let mut best: Option<Candidate> = None;
    let mut order = rows.to_vec();
    let mut left = vec![0usize; class_count];
    for f in 0..x.ncols() {
        let col = x.column(f);
        order.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
        left.iter_mut().for_each(|c| *c = 0);
        let mut right = total.clone();
        for i in 0..n - 1 {
            let r = order[i];
            left[y[r]] += 1;
            right[y[r]] -= 1;
            let (lo, hi) = (col[r], col[order[i + 1]]);
            if lo == hi {
                continue;
            }
            let mut threshold = 0.5 * (lo + hi);
            if threshold >= hi {
                threshold = lo;
            }
            let n_left = (i + 1) as u128;
            let score = SplitScore::of(sum_sq(&left), n_left, sum_sq(&right), n as u128 - n_left);
            let improves = best
                .as_ref()
                .is_none_or(|b| score.cmp(&b.score) == Ordering::Greater);
            if improves {
                best = Some(Candidate {
                    feature: f,
                    threshold,
                    score,
                });
            }
        }
    }
    best
}

fn class_counts_of(y: &[usize], rows: &[usize], class_count: usize) -> Vec<usize> {
    let mut counts = vec![0; class_count];
    for &r in rows {
        counts[y[r]] += 1;
    }
    counts
}

impl DecisionTree {
    pub fn fit(params: &CartParams, x: ArrayView2<'_, f64>, y: &[usize], class_count: usize) -> Result<Self> {
        params.check()?;
        let mut nodes = vec![TreeNode::Leaf {
            class: majority(&class_counts(y, class_count)),
        }];
        // (node slot, rows, depth)
        let mut stack = vec![(0usize, (0..y.len()).collect::<Vec<_>>(), 0usize)];
        while let Some((slot, rows, depth)) = stack.pop() {
            let counts = class_counts_of(y, &rows, class_count);
            let leaf = TreeNode::Leaf {
                class: majority(&counts),
            };
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let depth_capped = params.max_depth.is_some_and(|m| depth >= m);
            if pure || rows.len() < 2 || depth_capped {
                nodes[slot] = leaf;
                continue;
            }
            // An impure node is split even when the best split leaves the
            // weighted Gini unchanged; only identical rows end growth.
            let split = match best_split(x, y, &rows, class_count) {
                Some(c) => c,
                None => {
                    nodes[slot] = leaf;
                    continue;
                }
            };
            let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&r| x[[r, split.feature]] <= split.threshold);
            let left = nodes.len();
            let right = left + 1;
            nodes.push(TreeNode::Leaf { class: 0 });
            nodes.push(TreeNode::Leaf { class: 0 });
            nodes[slot] = TreeNode::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
            };
            stack.push((right, right_rows, depth + 1));
            stack.push((left, left_rows, depth + 1));
        }
        Ok(Self {
            nodes,
            n_features: x.ncols(),
            class_count,
        })
    }

    pub fn predict_one(&self, row: ArrayView1<'_, f64>) -> usize {
        let mut node = 0;
        loop {
            match self.nodes[node] {
                TreeNode::Leaf { class } => return class,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        x.rows().into_iter().map(|r| self.predict_one(r)).collect()
    }

    pub fn split_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Split { .. }))
            .count()
    }
}
