//! Stratified splitting, k-fold plans, recall metrics and the
//! forms × models evaluation grid.

mod grid;
mod report;

pub use grid::{run_grid, run_grid_with, FitEvent, FitObserver, FitStage, GridArtifacts, GridOutput};
pub use report::{CellResult, CleaningSummary, EvalReport, Metric, ReportMetadata, TableRow};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    /// Ascending row indices.
    pub train_indices: Vec<usize>,
    /// Ascending row indices.
    pub test_indices: Vec<usize>,
    pub seed: u64,
    pub train_fraction: f64,
}

fn rows_by_class(labels: &[usize], class_count: usize) -> Vec<Vec<usize>> {
    let mut by_class = vec![Vec::new(); class_count];
    for (i, &c) in labels.iter().enumerate() {
        by_class[c].push(i);
    }
    by_class
}

/// Per-class shuffle, then a test allocation of `(1 − fraction)·n_c` per class
/// rounded by largest remainder so the total matches `(1 − fraction)·n`.
pub fn stratified_split(
    labels: &[usize],
    label_names: &[String],
    fraction: f64,
    seed: u64,
) -> Result<SplitPlan> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must be in (0, 1), got {fraction}"
        )));
    }
    let by_class = rows_by_class(labels, label_names.len());
    for (c, rows) in by_class.iter().enumerate() {
        if !rows.is_empty() && rows.len() < 2 {
            return Err(Error::ClassTooSmall(label_names[c].clone()));
        }
    }
    let test_share = 1.0 - fraction;
    let quotas: Vec<f64> = by_class.iter().map(|r| r.len() as f64 * test_share).collect();
    let mut alloc: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let target = (labels.len() as f64 * test_share).round() as usize;
    let mut remaining = target.saturating_sub(alloc.iter().sum());
    let mut order: Vec<usize> = (0..by_class.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for c in order {
        if remaining == 0 {
            break;
        }
        if alloc[c] < by_class[c].len() && quotas[c] > quotas[c].floor() {
            alloc[c] += 1;
            remaining -= 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, rows) in by_class.into_iter().enumerate() {
        let mut rows = rows;
        rows.shuffle(&mut rng);
        test.extend_from_slice(&rows[..alloc[c]]);
        train.extend_from_slice(&rows[alloc[c]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitPlan {
        train_indices: train,
        test_indices: test,
        seed,
        train_fraction: fraction,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    /// Fold id in `0..k` for each row.
    pub fold_assignments: Vec<usize>,
    pub k: usize,
    pub seed: u64,
}

impl FoldPlan {
    /// `(training rows, held-out rows)` for fold `f`, both ascending.
    pub fn fold(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut held = Vec::new();
        for (i, &a) in self.fold_assignments.iter().enumerate() {
            if a == f {
                held.push(i);
            } else {
                train.push(i);
            }
        }
        (train, held)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.fold_assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldOptions {
    pub shuffle: bool,
    pub stratified: bool,
}

impl Default for FoldOptions {
    fn default() -> Self {
        Self {
            shuffle: true,
            stratified: true,
        }
    }
}

/// Assigns rows to `k` folds. With stratification, each class is shuffled and
/// dealt round-robin, continuing the deal from where the previous class
/// stopped, so both overall fold sizes and per-class fold counts differ by at
/// most one.
pub fn kfold_plan(
    labels: &[usize],
    class_count: usize,
    k: usize,
    seed: u64,
    options: FoldOptions,
) -> Result<FoldPlan> {
    if k < 2 || k > labels.len().max(2) {
        return Err(Error::BadK(k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups = if options.stratified {
        rows_by_class(labels, class_count)
    } else {
        vec![(0..labels.len()).collect()]
    };
    if options.stratified {
        let small: Vec<usize> = (0..class_count)
            .filter(|&c| !groups[c].is_empty() && groups[c].len() < k)
            .collect();
        if !small.is_empty() {
            log::warn!("classes {small:?} have fewer than {k} rows; some folds will lack them");
        }
    }
    let mut assignments = vec![0usize; labels.len()];
    let mut next = 0usize;
    for mut rows in groups {
        if options.shuffle {
            rows.shuffle(&mut rng);
        }
        for r in rows {
            assignments[r] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldPlan {
        fold_assignments: assignments,
        k,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallScores {
    pub per_class: Vec<f64>,
    /// Classes with no instances in `y_true`; their recall is reported as 0.
    pub absent: Vec<usize>,
    pub macro_recall: f64,
    pub weighted_recall: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

/// Per-class recall `TP/(TP + FN)` with macro and support-weighted averages.
/// The weighted average is computed as total TP over total rows, which is the
/// same quantity as overall accuracy.
pub fn recall_scores(y_true: &[usize], y_pred: &[usize], class_count: usize) -> Result<RecallScores> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch(y_true.len(), y_pred.len()));
    }
    if let Some(&bad) = y_true.iter().chain(y_pred).find(|&&c| c >= class_count) {
        return Err(Error::InvalidParameter(format!(
            "label {bad} out of range for {class_count} classes"
        )));
    }
    let mut confusion = vec![vec![0usize; class_count]; class_count];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        confusion[t][p] += 1;
    }
    let mut per_class = vec![0.0; class_count];
    let mut absent = Vec::new();
    let mut tp_total = 0usize;
    for c in 0..class_count {
        let support: usize = confusion[c].iter().sum();
        tp_total += confusion[c][c];
        if support == 0 {
            absent.push(c);
        } else {
            per_class[c] = confusion[c][c] as f64 / support as f64;
        }
    }
    let present = class_count - absent.len();
    let macro_recall = if present == 0 {
        0.0
    } else {
        (0..class_count)
            .filter(|c| !absent.contains(c))
            .map(|c| per_class[c])
            .sum::<f64>()
            / present as f64
    };
    let weighted_recall = if y_true.is_empty() {
        0.0
    } else {
        tp_total as f64 / y_true.len() as f64
    };
    Ok(RecallScores {
        per_class,
        absent,
        macro_recall,
        weighted_recall,
        confusion,
    })
}

pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> f64 {
    if y_true.is_empty() {
        return 0.0;
    }
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    hits as f64 / y_true.len() as f64
}
