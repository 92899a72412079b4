//! Evaluation metrics: CSMF accuracy, top-cause classification accuracy,
//! per-cause RMSE over replicates, and the cause-specific between-domain
//! dissimilarity read off a fitted slab map.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::stable_sum;
use crate::tree::{RootedWeightedTree, TreeError};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {0}")]
    Length(String),
    #[error("CSMF accuracy needs at least two causes")]
    SingleCause,
    #[error("not a probability vector: {0}")]
    NotSimplex(String),
    #[error("top-k needs 1 <= k <= C, got k = {k} with C = {c}")]
    BadTopK { k: usize, c: usize },
    #[error("domain {0} is not a source leaf")]
    NotSource(usize),
    #[error("no replicates")]
    NoReplicates,
    #[error(transparent)]
    Tree(#[from] TreeError),
}

const SIMPLEX_TOL: f64 = 1e-6;

fn check_simplex(name: &str, v: &[f64]) -> Result<(), MetricsError> {
    let sum: f64 = v.iter().sum();
    if v.iter().any(|&x| !(x >= -SIMPLEX_TOL)) || (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(MetricsError::NotSimplex(format!("{name} sums to {sum}")));
    }
    Ok(())
}

/// `1 − Σ|π̂_c − π_c| / (2(1 − min_c π_c))`, in `[0, 1]`.
pub fn csmf_accuracy(estimate: &[f64], truth: &[f64]) -> Result<f64, MetricsError> {
    if estimate.len() != truth.len() {
        return Err(MetricsError::Length(format!("{} estimates for {} causes", estimate.len(), truth.len())));
    }
    if truth.len() < 2 {
        return Err(MetricsError::SingleCause);
    }
    check_simplex("estimate", estimate)?;
    check_simplex("truth", truth)?;
    // 1 − min π is summed from the other entries to avoid cancellation.
    let argmin = (0..truth.len()).min_by(|&a, &b| truth[a].total_cmp(&truth[b])).expect("non-empty");
    let rest = stable_sum(truth.iter().enumerate().filter(|&(c, _)| c != argmin).map(|(_, &p)| p));
    let abs = stable_sum(estimate.iter().zip(truth).map(|(a, b)| (a - b).abs()));
    Ok((1.0 - abs / (2.0 * rest)).clamp(0.0, 1.0))
}

/// Fraction of subjects whose true cause is among the `k` highest-scoring
/// causes, plus how many rows needed a tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopCause {
    pub accuracy: f64,
    pub top_k: usize,
    /// Rows where the cut at rank `k` fell inside a group of equal scores.
    pub ties: usize,
}

/// Indices of the `k` largest entries; equal scores rank the smaller index
/// first. Also reports whether an equal score was left out at the cut.
pub fn top_k_causes(row: &[f64], k: usize) -> (Vec<usize>, bool) {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    let tied = k < row.len() && row[order[k - 1]] == row[order[k]];
    order.truncate(k);
    (order, tied)
}

pub fn top_cause_accuracy(probs: &Array2<f64>, truth: &[usize], k: usize) -> Result<TopCause, MetricsError> {
    let (n, c) = probs.dim();
    if n != truth.len() {
        return Err(MetricsError::Length(format!("{n} probability rows for {} labels", truth.len())));
    }
    if k == 0 || k > c {
        return Err(MetricsError::BadTopK { k, c });
    }
    if n == 0 {
        return Err(MetricsError::Length("no subjects".into()));
    }
    let mut hits = 0usize;
    let mut ties = 0usize;
    for (row, &y) in probs.rows().into_iter().zip(truth) {
        let (top, tied) = top_k_causes(row.as_slice().expect("standard layout"), k);
        hits += usize::from(top.contains(&y));
        ties += usize::from(tied);
    }
    Ok(TopCause { accuracy: hits as f64 / n as f64, top_k: k, ties })
}

/// Per-cause `sqrt(mean_r (π̂_{rc} − π_{rc})²)` over replicates.
pub fn per_cause_rmse(estimates: &[Vec<f64>], truths: &[Vec<f64>]) -> Result<Vec<f64>, MetricsError> {
    if estimates.len() != truths.len() {
        return Err(MetricsError::Length(format!("{} estimates for {} truths", estimates.len(), truths.len())));
    }
    let first = estimates.first().ok_or(MetricsError::NoReplicates)?;
    let c = first.len();
    let mut acc = vec![0.0; c];
    for (e, t) in estimates.iter().zip(truths) {
        if e.len() != c || t.len() != c {
            return Err(MetricsError::Length("replicates disagree on the number of causes".into()));
        }
        for (a, (x, y)) in acc.iter_mut().zip(e.iter().zip(t)) {
            *a += (x - y).powi(2);
        }
    }
    let r = estimates.len() as f64;
    Ok(acc.into_iter().map(|s| (s / r).sqrt()).collect())
}

/// Path length from the target leaf (label 0) to source leaf `source` with
/// each edge `pa(u) → u` reweighted to `p_{cu} w_u`.
pub fn cophenetic_dissimilarity(
    tree: &RootedWeightedTree,
    slab_prob: &Array2<f64>,
    cause: usize,
    source: usize,
) -> Result<f64, MetricsError> {
    if slab_prob.ncols() != tree.len() || cause >= slab_prob.nrows() {
        return Err(MetricsError::Length(format!(
            "slab table is {:?} for {} nodes and cause {cause}",
            slab_prob.dim(),
            tree.len()
        )));
    }
    if source == 0 || source >= tree.num_leaves() {
        return Err(MetricsError::NotSource(source));
    }
    let w: Vec<f64> = (0..tree.len()).map(|u| slab_prob[[cause, u]] * tree.weight(u)).collect();
    Ok(tree.path_distance(tree.leaf(0), tree.leaf(source), Some(&w)))
}

/// `C × G` table of target-to-source dissimilarities.
pub fn cophenetic_table(tree: &RootedWeightedTree, slab_prob: &Array2<f64>) -> Result<Array2<f64>, MetricsError> {
    let c = slab_prob.nrows();
    let g = tree.num_leaves().saturating_sub(1);
    let mut out = Array2::zeros((c, g));
    for cc in 0..c {
        for s in 1..=g {
            out[[cc, s - 1]] = cophenetic_dissimilarity(tree, slab_prob, cc, s)?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub csmf_accuracy: f64,
    pub top_cause: Option<TopCause>,
    /// `|π̂_c − π_c|` per cause.
    pub abs_errors: Vec<f64>,
    /// Row `c`, column `g − 1`: dissimilarity between the target and source `g`.
    pub cophenetic: Vec<Vec<f64>>,
}

impl EvaluationReport {
    /// Assembles a report. `top` pairs target cause probabilities with true
    /// labels and a `k`.
    pub fn build(
        estimate: &[f64],
        truth: &[f64],
        top: Option<(&Array2<f64>, &[usize], usize)>,
        tree: &RootedWeightedTree,
        slab_prob: &Array2<f64>,
    ) -> Result<Self, MetricsError> {
        let csmf_accuracy = csmf_accuracy(estimate, truth)?;
        let top_cause = top.map(|(p, y, k)| top_cause_accuracy(p, y, k)).transpose()?;
        let abs_errors = estimate.iter().zip(truth).map(|(a, b)| (a - b).abs()).collect();
        let table = cophenetic_table(tree, slab_prob)?;
        let cophenetic = table.rows().into_iter().map(|r| r.to_vec()).collect();
        Ok(Self { csmf_accuracy, top_cause, abs_errors, cophenetic })
    }

    /// One row per cause: `cause,<source ids...>`.
    pub fn cophenetic_csv(&self, tree: &RootedWeightedTree) -> String {
        let mut out = String::from("cause");
        for s in 1..tree.num_leaves() {
            out.push(',');
            out.push_str(tree.id(tree.leaf(s)));
        }
        out.push('\n');
        for (c, row) in self.cophenetic.iter().enumerate() {
            out.push_str(&c.to_string());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}
