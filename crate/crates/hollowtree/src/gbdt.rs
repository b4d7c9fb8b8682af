//! Gradient boosted binary classifier: Newton boosting with logistic loss
//! over regression trees whose leaves hold log-odds increments.
//!
//! Training is deterministic — no row or column subsampling, no early
//! stopping — so identical inputs always produce identical models.

use serde::{Deserialize, Serialize};

use crate::cart::{check_dims, partition_lists, presort_columns, SplitNode, TreeNode};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::TreeModel;

/// Boosting settings. Defaults mirror the reference library's historical
/// defaults: 100 rounds, learning rate 0.3, depth 6, L2 lambda 1, base
/// score 0.5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub reg_lambda: f64,
    pub base_score: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            n_rounds: 100,
            learning_rate: 0.3,
            max_depth: 6,
            reg_lambda: 1.0,
            base_score: 0.5,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 || self.learning_rate.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.reg_lambda < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "reg_lambda must be >= 0, got {}",
                self.reg_lambda
            )));
        }
        if !(self.base_score > 0.0 && self.base_score < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "base_score must be in (0, 1), got {}",
                self.base_score
            )));
        }
        Ok(())
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// An ordered ensemble of regression trees in log-odds space.
///
/// Leaf values already include the learning rate; the predicted margin is
/// `logit(base_score)` plus the sum of the leaf value each tree routes `x`
/// to. Internal node values are the sample-weighted means of their
/// children, so every tree's root value is the sample-weighted mean of its
/// leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    base_score: f64,
    learning_rate: f64,
    feature_names: Vec<String>,
    trees: Vec<TreeNode>,
}

impl BoostedModel {
    pub fn new(
        trees: Vec<TreeNode>,
        base_score: f64,
        learning_rate: f64,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if !(base_score > 0.0 && base_score < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "base_score must be in (0, 1), got {base_score}"
            )));
        }
        Ok(BoostedModel {
            base_score,
            learning_rate,
            feature_names,
            trees,
        })
    }

    pub fn trees(&self) -> &[TreeNode] {
        &self.trees
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn base_score(&self) -> f64 {
        self.base_score
    }

    /// `logit(base_score)`; exactly 0 for the default base score.
    pub fn base_margin(&self) -> f64 {
        logit(self.base_score)
    }

    /// Raw log-odds prediction.
    pub fn predict_margin(&self, x: &[f64]) -> Result<f64> {
        check_dims(self.feature_names.len(), x)?;
        let mut margin = self.base_margin();
        for tree in &self.trees {
            margin += tree.leaf_for(x).node_value;
        }
        Ok(margin)
    }

    /// Positive-class probability, strictly inside (0, 1).
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.predict_margin(x)?))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }
}

impl TreeModel for BoostedModel {
    fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        BoostedModel::predict_proba(self, x)
    }

    fn tree_roots(&self) -> Vec<&TreeNode> {
        self.trees.iter().collect()
    }
}

impl TreeModel for crate::cart::DecisionTree {
    fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        crate::cart::DecisionTree::predict_proba(self, x)
    }

    fn tree_roots(&self) -> Vec<&TreeNode> {
        vec![&self.root]
    }
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

struct BoostContext<'a> {
    rows: &'a [Vec<f64>],
    grad: Vec<f64>,
    hess: Vec<f64>,
    lambda: f64,
    shrinkage: f64,
    max_depth: usize,
}

/// Fit a boosted classifier with second-order (Newton) leaf weights.
///
/// Per round, with `p = sigmoid(margin)`: gradients are `p - y`, hessians
/// `p * (1 - p)`; a regression tree is grown greedily on the gain
/// `0.5 * (GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l))` down to
/// `max_depth`, leaves take `-G/(H+l)` scaled by the learning rate, and
/// margins are updated.
pub fn fit_gbdt(ds: &Dataset, hp: &Hyperparams) -> Result<BoostedModel> {
    hp.validate()?;
    let n_pos = ds.n_positive();
    if n_pos == 0 || n_pos == ds.n_rows() {
        return Err(Error::SingleClass);
    }

    let sorted = presort_columns(ds.rows());
    let base_margin = logit(hp.base_score);
    let mut margins = vec![base_margin; ds.n_rows()];
    // Signed targets keep the gradient computation exactly antisymmetric
    // under label inversion: t = y~ * margin is invariant, so hessians
    // match bit for bit and gradients only change sign.
    let signed: Vec<f64> = ds.labels().iter().map(|&y| 2.0 * y as f64 - 1.0).collect();

    let mut ctx = BoostContext {
        rows: ds.rows(),
        grad: vec![0.0; ds.n_rows()],
        hess: vec![0.0; ds.n_rows()],
        lambda: hp.reg_lambda,
        shrinkage: hp.learning_rate,
        max_depth: hp.max_depth,
    };

    let mut trees = Vec::with_capacity(hp.n_rounds);
    for _ in 0..hp.n_rounds {
        for i in 0..margins.len() {
            let t = signed[i] * margins[i];
            ctx.grad[i] = -signed[i] * sigmoid(-t);
            ctx.hess[i] = sigmoid(t) * sigmoid(-t);
        }
        let tree = grow_regression(&ctx, sorted.clone(), 0);
        for (i, margin) in margins.iter_mut().enumerate() {
            *margin += tree.leaf_for(&ds.rows()[i]).node_value;
        }
        trees.push(tree);
    }

    BoostedModel::new(
        trees,
        hp.base_score,
        hp.learning_rate,
        ds.feature_names().to_vec(),
    )
}

fn grow_regression(ctx: &BoostContext, lists: Vec<Vec<u32>>, depth: usize) -> TreeNode {
    let n = lists[0].len();
    let mut g_sum = 0.0;
    let mut h_sum = 0.0;
    for &i in &lists[0] {
        g_sum += ctx.grad[i as usize];
        h_sum += ctx.hess[i as usize];
    }
    let leaf_value = -g_sum / (h_sum + ctx.lambda) * ctx.shrinkage;

    if depth >= ctx.max_depth || n < 2 {
        return TreeNode::leaf(leaf_value, n, 0.0);
    }
    let Some((feature, threshold, gain)) = best_gain_split(ctx, &lists, g_sum, h_sum) else {
        return TreeNode::leaf(leaf_value, n, 0.0);
    };

    let (left_lists, right_lists) = partition_lists(&lists, ctx.rows, feature, threshold);
    drop(lists);
    let left = grow_regression(ctx, left_lists, depth + 1);
    let right = grow_regression(ctx, right_lists, depth + 1);
    let node_value = (left.n_samples as f64 * left.node_value
        + right.n_samples as f64 * right.node_value)
        / n as f64;
    TreeNode {
        node_value,
        n_samples: n,
        impurity: 0.0,
        split: Some(Box::new(SplitNode {
            feature_index: feature,
            threshold,
            gain,
            left,
            right,
        })),
    }
}

fn best_gain_split(
    ctx: &BoostContext,
    lists: &[Vec<u32>],
    g_sum: f64,
    h_sum: f64,
) -> Option<(usize, f64, f64)> {
    let n = lists[0].len();
    let parent_term = g_sum * g_sum / (h_sum + ctx.lambda);
    let mut best: Option<(usize, f64, f64)> = None;

    for (feature, list) in lists.iter().enumerate() {
        let mut gl = 0.0;
        let mut hl = 0.0;
        for window in 0..n - 1 {
            let i = list[window] as usize;
            gl += ctx.grad[i];
            hl += ctx.hess[i];
            let v = ctx.rows[i][feature];
            let v_next = ctx.rows[list[window + 1] as usize][feature];
            if v == v_next {
                continue;
            }
            let gr = g_sum - gl;
            let hr = h_sum - hl;
            let gain =
                0.5 * (gl * gl / (hl + ctx.lambda) + gr * gr / (hr + ctx.lambda) - parent_term);
            if gain > 0.0 && best.is_none_or(|(_, _, b)| gain > b) {
                best = Some((feature, (v + v_next) / 2.0, gain));
            }
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Classification quality of a model on one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub roc_auc: f64,
    pub f1: f64,
}

/// Accuracy at `threshold`, rank-statistic ROC AUC with ties averaged, and
/// F1 on the positive class (0 when there are no positive predictions).
pub fn evaluate<M: TreeModel + ?Sized>(
    model: &M,
    ds: &Dataset,
    threshold: f64,
) -> Result<EvalMetrics> {
    let mut scores = Vec::with_capacity(ds.n_rows());
    for i in 0..ds.n_rows() {
        scores.push(model.predict_proba(ds.row(i))?);
    }

    let mut correct = 0usize;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (score, &label) in scores.iter().zip(ds.labels()) {
        let predicted = (*score >= threshold) as u8;
        if predicted == label {
            correct += 1;
        }
        match (predicted, label) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 1) => fn_ += 1,
            _ => {}
        }
    }
    let accuracy = correct as f64 / ds.n_rows() as f64;
    let precision = if tp + fp > 0 {
        tp as f64 / (tp + fp) as f64
    } else {
        0.0
    };
    let recall = if tp + fn_ > 0 {
        tp as f64 / (tp + fn_) as f64
    } else {
        0.0
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };

    Ok(EvalMetrics {
        accuracy,
        roc_auc: roc_auc(&scores, ds.labels()),
        f1,
    })
}

/// Mann-Whitney rank statistic; tied scores receive their average rank.
/// Returns 0.5 when one class is absent.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return 0.5;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap().then(a.cmp(&b)));

    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share the average
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    (rank_sum_pos - n_pos as f64 * (n_pos as f64 + 1.0) / 2.0) / (n_pos as f64 * n_neg as f64)
}
