//! Binary classification decision trees with the Gini criterion.
//!
//! Every node stores the mean target of the training samples that reached
//! it (the positive-class fraction for classification trees), which is what
//! makes exact path decomposition of predictions possible. The same
//! [`TreeNode`] structure is reused by the boosting module for regression
//! trees in log-odds space.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// One node of a binary split tree.
///
/// `node_value` is the mean target over the node's training samples. For an
/// internal node it equals the sample-weighted mean of its children's
/// values. `impurity` is the Gini impurity for classification trees and 0
/// for boosted regression trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "NodeRepr", from = "NodeRepr")]
pub struct TreeNode {
    pub node_value: f64,
    pub n_samples: usize,
    pub impurity: f64,
    pub split: Option<Box<SplitNode>>,
}

/// Split data of an internal node. Rows route left iff
/// `value <= threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitNode {
    pub feature_index: usize,
    pub threshold: f64,
    /// Importance credit for this split: `n * Gini decrease` for
    /// classification trees, the boosting gain for regression trees.
    pub gain: f64,
    pub left: TreeNode,
    pub right: TreeNode,
}

impl TreeNode {
    pub fn leaf(node_value: f64, n_samples: usize, impurity: f64) -> Self {
        TreeNode {
            node_value,
            n_samples,
            impurity,
            split: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }

    /// The leaf reached by threshold routing. Assumes `x` has the right
    /// dimensionality; public entry points check it.
    pub fn leaf_for(&self, x: &[f64]) -> &TreeNode {
        let mut node = self;
        while let Some(split) = &node.split {
            node = if x[split.feature_index] <= split.threshold {
                &split.left
            } else {
                &split.right
            };
        }
        node
    }

    pub fn depth(&self) -> usize {
        match &self.split {
            None => 0,
            Some(s) => 1 + s.left.depth().max(s.right.depth()),
        }
    }

    /// Visit every split node in depth-first order.
    pub fn for_each_split(&self, f: &mut impl FnMut(&SplitNode)) {
        if let Some(split) = &self.split {
            f(split);
            split.left.for_each_split(f);
            split.right.for_each_split(f);
        }
    }
}

/// One step of a root-to-leaf traversal: the internal node whose split was
/// applied and the child the sample moved to.
#[derive(Debug, Clone, Copy)]
pub struct PathStep<'a> {
    pub node: &'a TreeNode,
    pub chosen_child: &'a TreeNode,
    pub feature_index: usize,
    pub threshold: f64,
}

/// Root-to-leaf steps for `x` on a single tree. Empty when the root is a
/// leaf. Assumes dimensions were checked by the caller.
pub fn node_path<'a>(root: &'a TreeNode, x: &[f64]) -> Vec<PathStep<'a>> {
    let mut steps = Vec::new();
    let mut node = root;
    while let Some(split) = &node.split {
        let chosen = if x[split.feature_index] <= split.threshold {
            &split.left
        } else {
            &split.right
        };
        steps.push(PathStep {
            node,
            chosen_child: chosen,
            feature_index: split.feature_index,
            threshold: split.threshold,
        });
        node = chosen;
    }
    steps
}

// Serialized form: a tagged record per node.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum NodeRepr {
    Internal {
        feature: usize,
        threshold: f64,
        value: f64,
        samples: usize,
        impurity: f64,
        gain: f64,
        left: Box<NodeRepr>,
        right: Box<NodeRepr>,
    },
    Leaf {
        value: f64,
        samples: usize,
        impurity: f64,
    },
}

impl From<TreeNode> for NodeRepr {
    fn from(node: TreeNode) -> Self {
        match node.split {
            Some(split) => NodeRepr::Internal {
                feature: split.feature_index,
                threshold: split.threshold,
                value: node.node_value,
                samples: node.n_samples,
                impurity: node.impurity,
                gain: split.gain,
                left: Box::new((split.left).into()),
                right: Box::new((split.right).into()),
            },
            None => NodeRepr::Leaf {
                value: node.node_value,
                samples: node.n_samples,
                impurity: node.impurity,
            },
        }
    }
}

impl From<NodeRepr> for TreeNode {
    fn from(repr: NodeRepr) -> Self {
        match repr {
            NodeRepr::Internal {
                feature,
                threshold,
                value,
                samples,
                impurity,
                gain,
                left,
                right,
            } => TreeNode {
                node_value: value,
                n_samples: samples,
                impurity,
                split: Some(Box::new(SplitNode {
                    feature_index: feature,
                    threshold,
                    gain,
                    left: (*left).into(),
                    right: (*right).into(),
                })),
            },
            NodeRepr::Leaf {
                value,
                samples,
                impurity,
            } => TreeNode::leaf(value, samples, impurity),
        }
    }
}

/// A fitted classification tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub feature_names: Vec<String>,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl DecisionTree {
    /// Positive-class probability: the `node_value` of the leaf `x`
    /// reaches.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        check_dims(self.feature_names.len(), x)?;
        Ok(self.root.leaf_for(x).node_value)
    }

    /// The root-to-leaf decision path for `x`.
    pub fn decision_path(&self, x: &[f64]) -> Result<Vec<PathStep<'_>>> {
        check_dims(self.feature_names.len(), x)?;
        Ok(node_path(&self.root, x))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serialization cannot fail")
    }
}

pub(crate) fn check_dims(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

// Splits with a smaller decrease than this are treated as zero improvement;
// exact-zero decreases otherwise show up as ±1 ulp of float noise.
const MIN_DECREASE: f64 = 1e-12;

/// Per-feature row indices sorted ascending by value (ties by row index).
/// Computed once per fit; node recursion partitions these lists stably so
/// split search never re-sorts.
pub(crate) fn presort_columns(rows: &[Vec<f64>]) -> Vec<Vec<u32>> {
    let n_features = rows[0].len();
    (0..n_features)
        .map(|j| {
            let mut idx: Vec<u32> = (0..rows.len() as u32).collect();
            idx.sort_by(|&a, &b| {
                rows[a as usize][j]
                    .partial_cmp(&rows[b as usize][j])
                    .expect("dataset values are finite")
                    .then(a.cmp(&b))
            });
            idx
        })
        .collect()
}

/// Stable-partition every feature's sorted list by one split.
pub(crate) fn partition_lists(
    lists: &[Vec<u32>],
    rows: &[Vec<f64>],
    feature: usize,
    threshold: f64,
) -> (Vec<Vec<u32>>, Vec<Vec<u32>>) {
    let mut left = Vec::with_capacity(lists.len());
    let mut right = Vec::with_capacity(lists.len());
    for list in lists {
        let mut l = Vec::new();
        let mut r = Vec::new();
        for &i in list {
            if rows[i as usize][feature] <= threshold {
                l.push(i);
            } else {
                r.push(i);
            }
        }
        left.push(l);
        right.push(r);
    }
    (left, right)
}

/// Binary Gini impurity from counts, in [0, 0.5].
fn gini(n: usize, n_pos: usize) -> f64 {
    2.0 * n_pos as f64 * (n - n_pos) as f64 / (n as f64 * n as f64)
}

struct CartContext<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [u8],
    max_depth: usize,
    min_samples_leaf: usize,
}

/// Fit a classification tree by greedy recursive partitioning.
///
/// At each node the split maximizing the Gini impurity decrease is chosen
/// over all features and all midpoints between consecutive distinct sorted
/// values. Ties break toward the lowest feature index, then the lowest
/// threshold. Recursion stops at `max_depth`, at pure nodes, or when no
/// split reduces impurity.
pub fn fit_tree(ds: &Dataset, max_depth: usize, min_samples_leaf: usize) -> Result<DecisionTree> {
    if min_samples_leaf == 0 {
        return Err(Error::InvalidParameter(
            "min_samples_leaf must be >= 1".into(),
        ));
    }
    let ctx = CartContext {
        rows: ds.rows(),
        labels: ds.labels(),
        max_depth,
        min_samples_leaf,
    };
    let lists = presort_columns(ds.rows());
    let root = grow_classification(&ctx, lists, 0);
    Ok(DecisionTree {
        root,
        feature_names: ds.feature_names().to_vec(),
        max_depth,
        min_samples_leaf,
    })
}

fn grow_classification(ctx: &CartContext, lists: Vec<Vec<u32>>, depth: usize) -> TreeNode {
    let n = lists[0].len();
    let n_pos = lists[0]
        .iter()
        .filter(|&&i| ctx.labels[i as usize] == 1)
        .count();
    let value = n_pos as f64 / n as f64;
    let impurity = gini(n, n_pos);
    let leaf = TreeNode::leaf(value, n, impurity);

    if depth >= ctx.max_depth || n_pos == 0 || n_pos == n || n < 2 * ctx.min_samples_leaf {
        return leaf;
    }

    let Some((feature, threshold, gain)) = best_gini_split(ctx, &lists, n, n_pos) else {
        return leaf;
    };

    let (left_lists, right_lists) = partition_lists(&lists, ctx.rows, feature, threshold);
    drop(lists);
    let left = grow_classification(ctx, left_lists, depth + 1);
    let right = grow_classification(ctx, right_lists, depth + 1);
    TreeNode {
        node_value: value,
        n_samples: n,
        impurity,
        split: Some(Box::new(SplitNode {
            feature_index: feature,
            threshold,
            gain,
            left,
            right,
        })),
    }
}

/// Best (feature, threshold, n * Gini decrease) for one node, or None when
/// no candidate improves impurity.
fn best_gini_split(
    ctx: &CartContext,
    lists: &[Vec<u32>],
    n: usize,
    n_pos: usize,
) -> Option<(usize, f64, f64)> {
    // All terms are n-weighted so the decrease is
    // parent_term - left_term - right_term with term = 2*n1*(n-n1)/n.
    let parent_term = 2.0 * n_pos as f64 * (n - n_pos) as f64 / n as f64;
    let mut best: Option<(usize, f64, f64)> = None;

    for (feature, list) in lists.iter().enumerate() {
        let mut n_left = 0usize;
        let mut pos_left = 0usize;
        for window in 0..n - 1 {
            let i = list[window] as usize;
            n_left += 1;
            pos_left += ctx.labels[i] as usize;
            let v = ctx.rows[i][feature];
            let v_next = ctx.rows[list[window + 1] as usize][feature];
            if v == v_next {
                continue;
            }
            let n_right = n - n_left;
            if n_left < ctx.min_samples_leaf || n_right < ctx.min_samples_leaf {
                continue;
            }
            let pos_right = n_pos - pos_left;
            let left_term = 2.0 * pos_left as f64 * (n_left - pos_left) as f64 / n_left as f64;
            let right_term = 2.0 * pos_right as f64 * (n_right - pos_right) as f64 / n_right as f64;
            let decrease = parent_term - left_term - right_term;
            if decrease > MIN_DECREASE && best.is_none_or(|(_, _, b)| decrease > b) {
                best = Some((feature, (v + v_next) / 2.0, decrease));
            }
        }
    }
    best
}
