//! Additive decomposition of predictions: bias plus one signed contribution
//! per feature, obtained by summing child-minus-parent node-value
//! increments along each decision path.
//!
//! Single trees decompose in probability space; boosted models decompose in
//! log-odds (margin) space, where the per-tree increments are exactly
//! additive. Contributions are never converted per-feature back to
//! probabilities: the sigmoid is nonlinear and would break additivity.

use serde::{Deserialize, Serialize};

use crate::cart::{check_dims, node_path, DecisionTree};
use crate::error::Result;
use crate::gbdt::BoostedModel;

/// The output space a contribution vector lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContributionSpace {
    Probability,
    LogOdds,
}

impl std::fmt::Display for ContributionSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ContributionSpace::Probability => write!(f, "probability"),
            ContributionSpace::LogOdds => write!(f, "log-odds"),
        }
    }
}

/// Bias plus one signed contribution per feature for a single prediction.
///
/// `bias + contributions.sum()` equals `prediction` to machine precision;
/// features absent from every traversed path contribute exactly 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionVector {
    pub bias: f64,
    pub contributions: Vec<f64>,
    /// Leaf probability for trees, margin for ensembles.
    pub prediction: f64,
    pub space: ContributionSpace,
}

impl ContributionVector {
    /// `bias + sum(contributions) - prediction`; zero up to rounding.
    pub fn residual(&self) -> f64 {
        self.bias + self.contributions.iter().sum::<f64>() - self.prediction
    }
}

/// Decompose a single-tree prediction in probability space.
///
/// The bias is the root's node value; each path step parent -> child
/// splitting on feature `j` adds `child.node_value - parent.node_value` to
/// contribution `j`.
pub fn tree_contributions(tree: &DecisionTree, x: &[f64]) -> Result<ContributionVector> {
    check_dims(tree.feature_names.len(), x)?;
    let mut contributions = vec![0.0; tree.feature_names.len()];
    let mut value = tree.root.node_value;
    for step in node_path(&tree.root, x) {
        contributions[step.feature_index] += step.chosen_child.node_value - step.node.node_value;
        value = step.chosen_child.node_value;
    }
    Ok(ContributionVector {
        bias: tree.root.node_value,
        contributions,
        prediction: value,
        space: ContributionSpace::Probability,
    })
}

/// Decompose a boosted prediction in log-odds space.
///
/// The path rule is applied to every tree; the bias is the base margin plus
/// the sum of per-tree root values (each the sample-weighted mean of that
/// tree's leaves), and the prediction is the margin.
pub fn ensemble_contributions(model: &BoostedModel, x: &[f64]) -> Result<ContributionVector> {
    check_dims(model.feature_names().len(), x)?;
    let mut contributions = vec![0.0; model.feature_names().len()];
    let mut bias = model.base_margin();
    let mut margin = model.base_margin();
    for tree in model.trees() {
        bias += tree.node_value;
        let mut value = tree.node_value;
        for step in node_path(tree, x) {
            contributions[step.feature_index] +=
                step.chosen_child.node_value - step.node.node_value;
            value = step.chosen_child.node_value;
        }
        margin += value;
    }
    Ok(ContributionVector {
        bias,
        contributions,
        prediction: margin,
        space: ContributionSpace::LogOdds,
    })
}

/// One display row of an explanation listing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationRow {
    /// None for the bias row.
    pub feature_index: Option<usize>,
    pub feature: String,
    pub weight: f64,
    /// The feature's value in the explained input (1.0 for the bias row).
    pub value: f64,
}

impl ExplanationRow {
    pub fn is_bias(&self) -> bool {
        self.feature_index.is_none()
    }
}

/// Row ordering for explanation listings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowOrder {
    /// By |weight| descending (the default ranking).
    AbsDesc,
    /// By signed weight descending, the worked-example table layout.
    SignedDesc,
}

/// Format a contribution vector as ranked display rows.
///
/// Features with exactly zero contribution are omitted; the bias row is
/// always present and flagged. Ties in the sort key order by feature index.
pub fn explain_prediction(
    cv: &ContributionVector,
    feature_names: &[String],
    x: &[f64],
    order: RowOrder,
) -> Vec<ExplanationRow> {
    let mut rows = vec![ExplanationRow {
        feature_index: None,
        feature: "BIAS".to_string(),
        weight: cv.bias,
        value: 1.0,
    }];
    for (j, &w) in cv.contributions.iter().enumerate() {
        if w != 0.0 {
            rows.push(ExplanationRow {
                feature_index: Some(j),
                feature: feature_names[j].clone(),
                weight: w,
                value: x[j],
            });
        }
    }
    // bias sorts ahead of features on exact ties
    let tie_key = |r: &ExplanationRow| r.feature_index.map_or(-1i64, |j| j as i64);
    match order {
        RowOrder::AbsDesc => rows.sort_by(|a, b| {
            b.weight
                .abs()
                .partial_cmp(&a.weight.abs())
                .unwrap()
                .then(tie_key(a).cmp(&tie_key(b)))
        }),
        RowOrder::SignedDesc => rows.sort_by(|a, b| {
            b.weight
                .partial_cmp(&a.weight)
                .unwrap()
                .then(tie_key(a).cmp(&tie_key(b)))
        }),
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cart::{fit_tree, SplitNode, TreeNode};
    use crate::dataset::{bundled_iris_binary, make_planted_dataset, Dataset};
    use crate::fixtures::{paper_tree, table1_flower};
    use crate::gbdt::{fit_gbdt, Hyperparams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn paper_worked_example_is_reproduced() {
        let tree = paper_tree();
        let cv = tree_contributions(&tree, &table1_flower()).unwrap();
        assert_eq!(cv.bias, 0.493);
        assert!((cv.contributions[2] + 0.243).abs() < 1e-12, "petal length");
        assert!((cv.contributions[1] + 0.107).abs() < 1e-12, "sepal width");
        assert!((cv.contributions[0] - 0.857).abs() < 1e-12, "sepal length");
        assert_eq!(cv.contributions[3], 0.0, "petal width is off-path");
        assert_eq!(cv.prediction, 1.0);
        assert!(cv.residual().abs() < 1e-12);
    }

    #[test]
    fn single_leaf_tree_has_zero_contributions() {
        let ds = Dataset::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            vec![1, 1],
        )
        .unwrap();
        let tree = fit_tree(&ds, 3, 1).unwrap();
        let cv = tree_contributions(&tree, &[0.0, 0.0]).unwrap();
        assert_eq!(cv.bias, 1.0);
        assert_eq!(cv.contributions, vec![0.0, 0.0]);
        assert_eq!(cv.prediction, 1.0);
    }

    fn random_dataset(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Dataset {
        loop {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..k).map(|_| rng.gen_range(-3.0..3.0)).collect())
                .collect();
            let labels: Vec<u8> = rows
                .iter()
                .map(|r| ((r[0] + rng.gen_range(-1.0..1.0)) > 0.0) as u8)
                .collect();
            if labels.contains(&1) && labels.contains(&0) {
                let names = (0..k).map(|j| format!("f{j}")).collect();
                return Dataset::new(names, rows, labels).unwrap();
            }
        }
    }

    #[test]
    fn local_accuracy_on_random_trees() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let ds = random_dataset(&mut rng, 80, 4);
            let tree = fit_tree(&ds, 5, 1).unwrap();
            for _ in 0..100 {
                let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-4.0..4.0)).collect();
                let cv = tree_contributions(&tree, &x).unwrap();
                assert!(cv.residual().abs() < 1e-12);
                assert_eq!(cv.prediction, tree.predict_proba(&x).unwrap());
            }
        }
    }

    #[test]
    fn zero_round_model_contributes_nothing() {
        let ds = bundled_iris_binary();
        let hp = Hyperparams {
            n_rounds: 0,
            ..Default::default()
        };
        let model = fit_gbdt(&ds, &hp).unwrap();
        let cv = ensemble_contributions(&model, ds.row(0)).unwrap();
        assert_eq!(cv.bias, 0.0);
        assert!(cv.contributions.iter().all(|&c| c == 0.0));
        assert_eq!(cv.prediction, 0.0);
        assert_eq!(cv.space, ContributionSpace::LogOdds);
    }

    #[test]
    fn ensemble_local_accuracy_on_iris() {
        let ds = bundled_iris_binary();
        let model = fit_gbdt(&ds, &Hyperparams::default()).unwrap();
        for i in 0..ds.n_rows() {
            let cv = ensemble_contributions(&model, ds.row(i)).unwrap();
            assert!(cv.residual().abs() < 1e-9);
            assert_eq!(cv.prediction, model.predict_margin(ds.row(i)).unwrap());
        }
    }

    #[test]
    fn planted_signal_dominates_contributions() {
        let ds = make_planted_dataset(200, 10, &[(0, 1.0)], 0.3, 2).unwrap();
        let hp = Hyperparams {
            n_rounds: 30,
            max_depth: 3,
            ..Default::default()
        };
        let model = fit_gbdt(&ds, &hp).unwrap();
        let mut dominated = 0usize;
        for i in 0..ds.n_rows() {
            let cv = ensemble_contributions(&model, ds.row(i)).unwrap();
            let top = cv.contributions[0].abs();
            if cv.contributions[1..].iter().all(|c| c.abs() < top) {
                dominated += 1;
            }
        }
        assert!(
            dominated as f64 >= 0.95 * ds.n_rows() as f64,
            "only {dominated}/{} rows dominated by the planted feature",
            ds.n_rows()
        );
    }

    #[test]
    fn unused_features_contribute_exactly_zero() {
        // feature 1 is constant, so no tree can split on it
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![i as f64 + rng.gen_range(0.0..0.5), 7.0])
            .collect();
        let labels: Vec<u8> = (0..60).map(|i| (i >= 30) as u8).collect();
        let ds = Dataset::new(vec!["a".into(), "b".into()], rows, labels).unwrap();

        let tree = fit_tree(&ds, 4, 1).unwrap();
        let model = fit_gbdt(
            &ds,
            &Hyperparams {
                n_rounds: 10,
                ..Default::default()
            },
        )
        .unwrap();
        for i in 0..ds.n_rows() {
            assert_eq!(
                tree_contributions(&tree, ds.row(i)).unwrap().contributions[1],
                0.0
            );
            assert_eq!(
                ensemble_contributions(&model, ds.row(i))
                    .unwrap()
                    .contributions[1],
                0.0
            );
        }
    }

    #[test]
    fn contributions_match_conditional_mean_oracle() {
        // Oracle: a feature's contribution equals the change in the tree's
        // node means restricted to the traversed path, recomputed from
        // scratch per node.
        let ds = bundled_iris_binary();
        let tree = fit_tree(&ds, 4, 1).unwrap();
        for i in (0..ds.n_rows()).step_by(11) {
            let x = ds.row(i);
            let path = tree.decision_path(x).unwrap();
            let mut oracle = vec![0.0; 4];
            for step in &path {
                oracle[step.feature_index] += step.chosen_child.node_value - step.node.node_value;
            }
            let cv = tree_contributions(&tree, x).unwrap();
            assert_eq!(cv.contributions, oracle);
        }
    }

    #[test]
    fn affine_rescaling_preserves_contributions() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ds = random_dataset(&mut rng, 60, 3);
        let scaled_rows: Vec<Vec<f64>> = ds
            .rows()
            .iter()
            .map(|r| vec![r[0] * 2.0 + 0.5, r[1], r[2]])
            .collect();
        let scaled = Dataset::new(
            ds.feature_names().to_vec(),
            scaled_rows,
            ds.labels().to_vec(),
        )
        .unwrap();

        let tree_a = fit_tree(&ds, 4, 1).unwrap();
        let tree_b = fit_tree(&scaled, 4, 1).unwrap();
        let hp = Hyperparams {
            n_rounds: 10,
            max_depth: 3,
            ..Default::default()
        };
        let gbdt_a = fit_gbdt(&ds, &hp).unwrap();
        let gbdt_b = fit_gbdt(&scaled, &hp).unwrap();
        for i in 0..ds.n_rows() {
            let ca = tree_contributions(&tree_a, ds.row(i)).unwrap();
            let cb = tree_contributions(&tree_b, scaled.row(i)).unwrap();
            assert_eq!(ca.contributions, cb.contributions);
            assert_eq!(ca.bias, cb.bias);
            let ea = ensemble_contributions(&gbdt_a, ds.row(i)).unwrap();
            let eb = ensemble_contributions(&gbdt_b, scaled.row(i)).unwrap();
            assert_eq!(ea.contributions, eb.contributions);
        }
    }

    #[test]
    fn explanation_orders_match_table_layouts() {
        let tree = paper_tree();
        let flower = table1_flower();
        let cv = tree_contributions(&tree, &flower).unwrap();

        let signed = explain_prediction(&cv, &tree.feature_names, &flower, RowOrder::SignedDesc);
        let names: Vec<&str> = signed.iter().map(|r| r.feature.as_str()).collect();
        assert_eq!(
            names,
            ["sepal length", "BIAS", "sepal width", "petal length"]
        );
        assert!(signed[1].is_bias());
        assert_eq!(signed[0].value, 6.9);

        let by_abs = explain_prediction(&cv, &tree.feature_names, &flower, RowOrder::AbsDesc);
        let names: Vec<&str> = by_abs.iter().map(|r| r.feature.as_str()).collect();
        assert_eq!(
            names,
            ["sepal length", "BIAS", "petal length", "sepal width"]
        );
    }

    #[test]
    fn all_zero_contributions_show_only_bias() {
        let cv = ContributionVector {
            bias: 0.4,
            contributions: vec![0.0, 0.0, 0.0],
            prediction: 0.4,
            space: ContributionSpace::Probability,
        };
        let names = vec!["a".into(), "b".into(), "c".into()];
        let rows = explain_prediction(&cv, &names, &[1.0, 2.0, 3.0], RowOrder::AbsDesc);
        assert_eq!(rows.len(), 1);
        assert!(rows[0].is_bias());
    }

    #[test]
    fn tied_weights_order_by_feature_index() {
        // root 0.5 -> (f1) 0.3 -> (f0) leaf 0.5: increments -0.2 then +0.2
        let leaf_a = TreeNode::leaf(0.5, 1, 0.5);
        let leaf_b = TreeNode::leaf(0.1, 1, 0.18);
        let mid = TreeNode {
            node_value: 0.3,
            n_samples: 2,
            impurity: 0.42,
            split: Some(Box::new(SplitNode {
                feature_index: 0,
                threshold: 1.0,
                gain: 0.0,
                left: leaf_a,
                right: leaf_b,
            })),
        };
        let other = TreeNode::leaf(0.7, 2, 0.42);
        let root = TreeNode {
            node_value: 0.5,
            n_samples: 4,
            impurity: 0.5,
            split: Some(Box::new(SplitNode {
                feature_index: 1,
                threshold: 0.0,
                gain: 0.0,
                left: mid,
                right: other,
            })),
        };
        let tree = crate::cart::DecisionTree {
            root,
            feature_names: vec!["f0".into(), "f1".into()],
            max_depth: 2,
            min_samples_leaf: 1,
        };
        let cv = tree_contributions(&tree, &[0.5, -1.0]).unwrap();
        assert_eq!(cv.contributions, vec![0.2, -0.2]);
        let rows = explain_prediction(&cv, &tree.feature_names, &[0.5, -1.0], RowOrder::AbsDesc);
        // bias 0.5 first (largest |w|), then f0 before f1 on the 0.2 tie
        assert_eq!(rows[0].feature, "BIAS");
        assert_eq!(rows[1].feature, "f0");
        assert_eq!(rows[2].feature, "f1");
    }
}
