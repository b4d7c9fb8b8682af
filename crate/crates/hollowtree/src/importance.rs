//! The three baseline importance methods: Gini importance, permutation
//! importance, and partial dependence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{fisher_yates, Dataset};
use crate::error::{Error, Result};
use crate::{accuracy, TreeModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ImportanceMethod {
    Gini,
    Permutation { repeats: usize, seed: u64 },
}

/// Per-feature importance scores. Gini scores are nonnegative and sum to 1
/// (all zero for a model with no splits); permutation scores may be
/// negative, which is informative noise and deliberately not clipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceTable {
    #[serde(flatten)]
    pub method: ImportanceMethod,
    pub feature_names: Vec<String>,
    pub scores: Vec<f64>,
}

impl ImportanceTable {
    /// Feature indices ranked by score descending, ties by index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| {
            self.scores[b]
                .partial_cmp(&self.scores[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        order
    }
}

/// Normalized total criterion reduction per splitting feature: each split
/// adds its stored gain (`n * Gini decrease` for classification trees, the
/// boosting gain for boosted trees) to its feature, then the table is
/// scaled to sum to 1.
pub fn gini_importance<M: TreeModel + ?Sized>(model: &M) -> ImportanceTable {
    let mut scores = vec![0.0; model.n_features()];
    for root in model.tree_roots() {
        root.for_each_split(&mut |split| {
            scores[split.feature_index] += split.gain;
        });
    }
    let total: f64 = scores.iter().sum();
    if total > 0.0 {
        for s in &mut scores {
            *s /= total;
        }
    }
    ImportanceTable {
        method: ImportanceMethod::Gini,
        feature_names: model.feature_names().to_vec(),
        scores,
    }
}

/// Mean accuracy drop when one feature's column is shuffled, over
/// `repeats` shuffles. Deterministic per seed.
pub fn permutation_importance<M: TreeModel + ?Sized>(
    model: &M,
    ds: &Dataset,
    repeats: usize,
    seed: u64,
) -> Result<ImportanceTable> {
    if repeats < 1 {
        return Err(Error::InvalidParameter("repeats must be >= 1".into()));
    }
    if model.n_features() != ds.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            got: ds.n_features(),
        });
    }
    let baseline = accuracy(model, ds)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = ds.n_rows();
    let mut scores = vec![0.0; ds.n_features()];

    for feature in 0..ds.n_features() {
        let column = ds.column(feature);
        let mut rows = ds.rows().to_vec();
        let mut drop_sum = 0.0;
        for _ in 0..repeats {
            let mut perm: Vec<usize> = (0..n).collect();
            fisher_yates(&mut rng, &mut perm);
            for (i, row) in rows.iter_mut().enumerate() {
                row[feature] = column[perm[i]];
            }
            let mut correct = 0usize;
            for (row, &label) in rows.iter().zip(ds.labels()) {
                if (model.predict_proba(row)? >= 0.5) as u8 == label {
                    correct += 1;
                }
            }
            drop_sum += baseline - correct as f64 / n as f64;
        }
        scores[feature] = drop_sum / repeats as f64;
    }

    Ok(ImportanceTable {
        method: ImportanceMethod::Permutation { repeats, seed },
        feature_names: model.feature_names().to_vec(),
        scores,
    })
}

/// Mean model output as a function of one feature substituted uniformly
/// into the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdpCurve {
    pub feature: usize,
    pub feature_name: String,
    pub grid: Vec<f64>,
    pub means: Vec<f64>,
}

impl PdpCurve {
    /// Midpoint of the largest single step of the curve, if any step is
    /// non-flat. Locates the decision boundary of threshold-like curves.
    pub fn largest_jump_midpoint(&self) -> Option<f64> {
        let mut best: Option<(f64, f64)> = None;
        for w in 0..self.grid.len().saturating_sub(1) {
            let jump = (self.means[w + 1] - self.means[w]).abs();
            if jump > 0.0 && best.is_none_or(|(b, _)| jump > b) {
                best = Some((jump, (self.grid[w] + self.grid[w + 1]) / 2.0));
            }
        }
        best.map(|(_, mid)| mid)
    }
}

/// Mean model output over a grid of two features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdpSurface {
    pub features: (usize, usize),
    pub feature_names: (String, String),
    pub grid1: Vec<f64>,
    pub grid2: Vec<f64>,
    /// `means[i][j]` is the mean prediction at `(grid1[i], grid2[j])`.
    pub means: Vec<Vec<f64>>,
}

/// Quantile-spaced grid over the observed values: `grid_size` levels,
/// linearly interpolated, deduplicated to strictly increasing. A constant
/// feature collapses to a single point.
pub(crate) fn quantile_grid(values: &[f64], grid_size: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let mut grid = Vec::with_capacity(grid_size);
    for i in 0..grid_size {
        let level = i as f64 / (grid_size - 1) as f64;
        let pos = level * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        let v = if lo + 1 < n {
            sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
        } else {
            sorted[n - 1]
        };
        grid.push(v);
    }
    grid.dedup();
    grid
}

/// 1D partial dependence: at each grid value the feature's column is
/// overwritten for every row and the predictions averaged.
pub fn pdp_1d<M: TreeModel + ?Sized>(
    model: &M,
    ds: &Dataset,
    feature: usize,
    grid_size: usize,
) -> Result<PdpCurve> {
    check_pdp_args(model, ds, feature, grid_size)?;
    let grid = quantile_grid(&ds.column(feature), grid_size);
    let mut rows = ds.rows().to_vec();
    let mut means = Vec::with_capacity(grid.len());
    for &v in &grid {
        for row in &mut rows {
            row[feature] = v;
        }
        means.push(mean_prediction(model, &rows)?);
    }
    Ok(PdpCurve {
        feature,
        feature_name: model.feature_names()[feature].clone(),
        grid,
        means,
    })
}

/// 2D partial dependence over a pair of features.
pub fn pdp_2d<M: TreeModel + ?Sized>(
    model: &M,
    ds: &Dataset,
    f1: usize,
    f2: usize,
    grid_size: usize,
) -> Result<PdpSurface> {
    check_pdp_args(model, ds, f1, grid_size)?;
    check_pdp_args(model, ds, f2, grid_size)?;
    if f1 == f2 {
        return Err(Error::InvalidParameter(
            "pdp_2d requires two distinct features".into(),
        ));
    }
    let grid1 = quantile_grid(&ds.column(f1), grid_size);
    let grid2 = quantile_grid(&ds.column(f2), grid_size);
    let mut rows = ds.rows().to_vec();
    let mut means = Vec::with_capacity(grid1.len());
    for &v1 in &grid1 {
        let mut line = Vec::with_capacity(grid2.len());
        for &v2 in &grid2 {
            for row in &mut rows {
                row[f1] = v1;
                row[f2] = v2;
            }
            line.push(mean_prediction(model, &rows)?);
        }
        means.push(line);
    }
    Ok(PdpSurface {
        features: (f1, f2),
        feature_names: (
            model.feature_names()[f1].clone(),
            model.feature_names()[f2].clone(),
        ),
        grid1,
        grid2,
        means,
    })
}

fn check_pdp_args<M: TreeModel + ?Sized>(
    model: &M,
    ds: &Dataset,
    feature: usize,
    grid_size: usize,
) -> Result<()> {
    if grid_size < 2 {
        return Err(Error::InvalidParameter("grid_size must be >= 2".into()));
    }
    if model.n_features() != ds.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            got: ds.n_features(),
        });
    }
    if feature >= ds.n_features() {
        return Err(Error::InvalidParameter(format!(
            "feature index {feature} out of range for {} features",
            ds.n_features()
        )));
    }
    Ok(())
}

fn mean_prediction<M: TreeModel + ?Sized>(model: &M, rows: &[Vec<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for row in rows {
        total += model.predict_proba(row)?;
    }
    Ok(total / rows.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cart::fit_tree;
    use crate::dataset::bundled_iris_binary;
    use crate::gbdt::{fit_gbdt, Hyperparams};
    use proptest::prelude::*;

    const PETAL_LENGTH: usize = 2;
    const PETAL_WIDTH: usize = 3;

    #[test]
    fn gini_sums_to_one_and_favors_petals_on_iris() {
        let ds = bundled_iris_binary();
        let tree = fit_tree(&ds, 4, 1).unwrap();
        let table = gini_importance(&tree);
        assert!((table.scores.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(table.scores.iter().all(|&s| s >= 0.0));
        let top = table.ranking()[0];
        assert!(
            top == PETAL_LENGTH || top == PETAL_WIDTH,
            "top gini feature {top}"
        );
    }

    #[test]
    fn gini_of_single_leaf_is_all_zero() {
        let ds = crate::dataset::Dataset::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 2.0], vec![2.0, 3.0]],
            vec![0, 0],
        )
        .unwrap();
        let tree = fit_tree(&ds, 4, 1).unwrap();
        assert_eq!(gini_importance(&tree).scores, vec![0.0, 0.0]);
    }

    #[test]
    fn gini_credits_only_split_features() {
        let ds = crate::dataset::Dataset::new(
            vec!["a".into(), "b".into()],
            vec![
                vec![5.0, 0.0],
                vec![5.0, 1.0],
                vec![5.0, 2.0],
                vec![5.0, 3.0],
            ],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let tree = fit_tree(&ds, 3, 1).unwrap();
        assert_eq!(gini_importance(&tree).scores, vec![0.0, 1.0]);
    }

    #[test]
    fn gini_works_for_boosted_models() {
        let ds = bundled_iris_binary();
        let model = fit_gbdt(
            &ds,
            &Hyperparams {
                n_rounds: 10,
                ..Default::default()
            },
        )
        .unwrap();
        let table = gini_importance(&model);
        assert!((table.scores.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let top = table.ranking()[0];
        assert!(top == PETAL_LENGTH || top == PETAL_WIDTH);
    }

    #[test]
    fn permutation_ranks_petals_on_iris_tree() {
        let ds = bundled_iris_binary();
        let tree = fit_tree(&ds, 4, 1).unwrap();
        let table = permutation_importance(&tree, &ds, 30, 0).unwrap();
        let top2: Vec<usize> = table.ranking()[..2].to_vec();
        assert!(top2.contains(&PETAL_LENGTH) || top2.contains(&PETAL_WIDTH));
        assert!(
            table.scores[PETAL_LENGTH].max(table.scores[PETAL_WIDTH])
                > table.scores[0].max(table.scores[1]),
            "petals should beat sepals: {:?}",
            table.scores
        );
    }

    #[test]
    fn permutation_of_constant_feature_is_exactly_zero() {
        let ds = crate::dataset::Dataset::new(
            vec!["a".into(), "c".into()],
            (0..40).map(|i| vec![i as f64, 3.0]).collect(),
            (0..40).map(|i| (i >= 20) as u8).collect(),
        )
        .unwrap();
        let tree = fit_tree(&ds, 3, 1).unwrap();
        let table = permutation_importance(&tree, &ds, 10, 1).unwrap();
        assert_eq!(table.scores[1], 0.0);
    }

    #[test]
    fn permutation_of_unused_feature_is_exactly_zero() {
        // feature 1 varies but carries no signal; depth-1 tree ignores it
        let ds = crate::dataset::Dataset::new(
            vec!["a".into(), "b".into()],
            (0..40).map(|i| vec![i as f64, (i % 7) as f64]).collect(),
            (0..40).map(|i| (i >= 20) as u8).collect(),
        )
        .unwrap();
        let tree = fit_tree(&ds, 1, 1).unwrap();
        assert!(tree.root.split.as_ref().unwrap().feature_index == 0);
        let table = permutation_importance(&tree, &ds, 15, 5).unwrap();
        assert_eq!(table.scores[1], 0.0);
    }

    #[test]
    fn permutation_is_deterministic_per_seed() {
        let ds = bundled_iris_binary();
        let tree = fit_tree(&ds, 4, 1).unwrap();
        let a = permutation_importance(&tree, &ds, 5, 42).unwrap();
        let b = permutation_importance(&tree, &ds, 5, 42).unwrap();
        assert_eq!(a, b);
        let c = permutation_importance(&tree, &ds, 5, 43).unwrap();
        assert!(a.scores != c.scores || a.method != c.method);
    }

    #[test]
    fn permutation_rejects_zero_repeats() {
        let ds = bundled_iris_binary();
        let tree = fit_tree(&ds, 2, 1).unwrap();
        assert!(matches!(
            permutation_importance(&tree, &ds, 0, 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn pdp_petal_length_transitions_near_5cm() {
        let ds = bundled_iris_binary();
        let tree = fit_tree(&ds, 4, 1).unwrap();
        let curve = pdp_1d(&tree, &ds, PETAL_LENGTH, 50).unwrap();
        let mid = curve.largest_jump_midpoint().expect("curve is not flat");
        assert!(
            (4.5..=5.5).contains(&mid),
            "transition at {mid}, curve {:?}",
            curve.means
        );
        for w in curve.grid.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert!(curve.means.iter().all(|&m| (0.0..=1.0).contains(&m)));
    }

    #[test]
    fn pdp_of_unused_feature_is_constant() {
        let ds = crate::dataset::Dataset::new(
            vec!["a".into(), "b".into()],
            (0..40).map(|i| vec![i as f64, (i % 5) as f64]).collect(),
            (0..40).map(|i| (i >= 20) as u8).collect(),
        )
        .unwrap();
        let tree = fit_tree(&ds, 1, 1).unwrap();
        let curve = pdp_1d(&tree, &ds, 1, 10).unwrap();
        assert!(curve.means.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn pdp_of_constant_feature_is_single_point() {
        let ds = crate::dataset::Dataset::new(
            vec!["a".into(), "c".into()],
            (0..20).map(|i| vec![i as f64, 9.0]).collect(),
            (0..20).map(|i| (i >= 10) as u8).collect(),
        )
        .unwrap();
        let tree = fit_tree(&ds, 2, 1).unwrap();
        let curve = pdp_1d(&tree, &ds, 1, 25).unwrap();
        assert_eq!(curve.grid, vec![9.0]);
        assert_eq!(curve.means.len(), 1);
    }

    #[test]
    fn pdp_2d_shows_petal_interaction_corners() {
        let ds = bundled_iris_binary();
        let tree = fit_tree(&ds, 4, 1).unwrap();
        let surface = pdp_2d(&tree, &ds, PETAL_LENGTH, PETAL_WIDTH, 20).unwrap();
        let low_low = surface.means[0][0];
        let high_high = *surface.means.last().and_then(|line| line.last()).unwrap();
        assert!(low_low < 0.3, "low-petal corner {low_low}");
        assert!(high_high > 0.7, "high-petal corner {high_high}");
    }

    #[test]
    fn pdp_mean_equals_mean_prediction_for_single_feature_models() {
        // Exact identity: the model depends on one feature only and the
        // grid is precisely the set of observed values.
        let n = 30;
        let ds = crate::dataset::Dataset::new(
            vec!["a".into(), "b".into()],
            (0..n).map(|i| vec![i as f64, 4.0]).collect(),
            (0..n).map(|i| (i % 3 == 0) as u8).collect(),
        )
        .unwrap();
        let tree = fit_tree(&ds, 6, 1).unwrap();
        let curve = pdp_1d(&tree, &ds, 0, n).unwrap();
        assert_eq!(curve.grid.len(), n);
        let pdp_mean: f64 = curve.means.iter().sum::<f64>() / curve.means.len() as f64;
        let mut model_mean = 0.0;
        for i in 0..ds.n_rows() {
            model_mean += tree.predict_proba(ds.row(i)).unwrap();
        }
        model_mean /= n as f64;
        assert!((pdp_mean - model_mean).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn quantile_grid_is_strictly_increasing(
            values in proptest::collection::vec(-100.0f64..100.0, 2..60),
            grid_size in 2usize..40,
        ) {
            let grid = quantile_grid(&values, grid_size);
            prop_assert!(!grid.is_empty());
            prop_assert!(grid.len() <= grid_size);
            for w in grid.windows(2) {
                prop_assert!(w[0] < w[1]);
            }
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(grid[0] >= lo && *grid.last().unwrap() <= hi);
        }
    }
}
