//! Decision trees and gradient boosted classifiers whose predictions
//! decompose into additive per-feature contributions, plus a cross-validated
//! procedure that turns those contributions into directional,
//! magnitude-bearing feature importance for each class.
//!
//! The crate also ships the three classic baseline importance methods (Gini
//! importance, permutation importance, partial dependence) for side-by-side
//! comparison, and a CLI (`hollowtree`) that drives the whole pipeline.

pub mod cart;
pub mod cli;
pub mod contributions;
pub mod dataset;
pub mod error;
pub mod gbdt;
pub mod hots;
pub mod importance;
pub mod report;

pub use error::{Error, Result};

use cart::TreeNode;

/// Common surface of tree-based classifiers: a single decision tree or a
/// boosted ensemble. Everything needed by the importance baselines.
pub trait TreeModel {
    fn feature_names(&self) -> &[String];

    fn n_features(&self) -> usize {
        self.feature_names().len()
    }

    /// Probability of the positive class.
    fn predict_proba(&self, x: &[f64]) -> Result<f64>;

    /// Root of every tree in the model (a single root for decision trees).
    fn tree_roots(&self) -> Vec<&TreeNode>;
}

/// Predicted class at the 0.5 probability threshold.
pub fn predict_label<M: TreeModel + ?Sized>(model: &M, x: &[f64]) -> Result<u8> {
    Ok((model.predict_proba(x)? >= 0.5) as u8)
}

/// Fraction of rows whose predicted class matches the true label.
pub fn accuracy<M: TreeModel + ?Sized>(model: &M, ds: &dataset::Dataset) -> Result<f64> {
    let mut correct = 0usize;
    for i in 0..ds.n_rows() {
        if predict_label(model, ds.row(i))? == ds.label(i) {
            correct += 1;
        }
    }
    Ok(correct as f64 / ds.n_rows() as f64)
}

#[cfg(test)]
pub(crate) mod fixtures {
    //! Hand-built trees shared across module tests.

    use crate::cart::{DecisionTree, SplitNode, TreeNode};

    fn internal(
        value: f64,
        n: usize,
        feature: usize,
        threshold: f64,
        left: TreeNode,
        right: TreeNode,
    ) -> TreeNode {
        let impurity = 2.0 * value * (1.0 - value);
        TreeNode {
            node_value: value,
            n_samples: n,
            impurity,
            split: Some(Box::new(SplitNode {
                feature_index: feature,
                threshold,
                gain: 0.0,
                left,
                right,
            })),
        }
    }

    fn leaf(value: f64, n: usize) -> TreeNode {
        TreeNode::leaf(value, n, 2.0 * value * (1.0 - value))
    }

    /// Sibling value that keeps the parent's weighted-mean identity exact.
    fn sibling_value(parent_value: f64, parent_n: usize, child_value: f64, child_n: usize) -> f64 {
        (parent_value * parent_n as f64 - child_value * child_n as f64)
            / (parent_n - child_n) as f64
    }

    /// The worked-example tree: the path 0.493 -> 0.051 -> 0.25 -> 0.143 ->
    /// 1.0 splits on petal length twice, then sepal width, then sepal
    /// length. Off-path siblings are chosen so every internal node is the
    /// sample-weighted mean of its children.
    pub fn paper_tree() -> DecisionTree {
        let names = vec![
            "sepal length".to_string(),
            "sepal width".to_string(),
            "petal length".to_string(),
            "petal width".to_string(),
        ];
        let deep_leaf = leaf(1.0, 10);
        let deep_sib = leaf(sibling_value(0.143, 70, 1.0, 10), 60);
        let n4 = internal(0.143, 70, 0, 6.05, deep_sib, deep_leaf);
        let n3_sib = leaf(sibling_value(0.25, 100, 0.143, 70), 30);
        let n3 = internal(0.25, 100, 1, 3.35, n4, n3_sib);
        let n2_sib = leaf(sibling_value(0.051, 500, 0.25, 100), 400);
        let n2 = internal(0.051, 500, 2, 4.45, n2_sib, n3);
        let root_sib = leaf(sibling_value(0.493, 1000, 0.051, 500), 500);
        let root = internal(0.493, 1000, 2, 4.95, n2, root_sib);
        DecisionTree {
            root,
            feature_names: names,
            max_depth: 4,
            min_samples_leaf: 1,
        }
    }

    /// The sample flower: sepal length 6.9, sepal width 3.1, petal length
    /// 4.9; petal width takes a value no split routes on.
    pub fn table1_flower() -> [f64; 4] {
        [6.9, 3.1, 4.9, 1.8]
    }
}
