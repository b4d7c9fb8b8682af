//! The HOTS procedure: filter confident correct predictions, aggregate
//! per-class log-odds contributions, sign them by comparing class means of
//! the raw feature values, and stabilize the result with stratified k-fold
//! cross-validation plus per-feature fold counts.
//!
//! Sign semantics: a feature whose values run higher in the positive class
//! (mean difference s = +1) ends up with a negative signed weight in the
//! positive-class table, and the negative-class table mirrors it; see
//! [`apply_directionality`].

use serde::{Deserialize, Serialize};

use crate::contributions::ensemble_contributions;
use crate::dataset::{stratified_kfold, Dataset, FoldPlan};
use crate::error::{Error, Result};
use crate::gbdt::{fit_gbdt, sigmoid, BoostedModel, Hyperparams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassLabel {
    Positive,
    Negative,
}

/// Mean per-feature log-odds weight over one class's kept predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class: ClassLabel,
    pub mean_weight: Vec<f64>,
    pub n_predictions_kept: usize,
}

impl ClassSummary {
    fn empty(class: ClassLabel, n_features: usize) -> Self {
        ClassSummary {
            class,
            mean_weight: vec![0.0; n_features],
            n_predictions_kept: 0,
        }
    }
}

/// Row indices that survive the confidence filter, split by predicted
/// class.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredPredictions {
    pub positive_rows: Vec<usize>,
    pub negative_rows: Vec<usize>,
}

impl FilteredPredictions {
    pub fn n_kept(&self) -> usize {
        self.positive_rows.len() + self.negative_rows.len()
    }
}

/// Keep row `i` iff the predicted class equals the true label and the
/// predicted class's probability `max(p, 1-p)` is at least `threshold`.
///
/// The confidence is computed as `sigmoid(|margin|)`, which equals
/// `max(p, 1-p)` and is exactly invariant under label inversion.
pub fn filter_predictions(
    model: &BoostedModel,
    ds: &Dataset,
    threshold: f64,
) -> Result<FilteredPredictions> {
    let mut positive_rows = Vec::new();
    let mut negative_rows = Vec::new();
    for i in 0..ds.n_rows() {
        let margin = model.predict_margin(ds.row(i))?;
        let predicted = (margin >= 0.0) as u8;
        if predicted != ds.label(i) {
            continue;
        }
        if sigmoid(margin.abs()) < threshold {
            continue;
        }
        if predicted == 1 {
            positive_rows.push(i);
        } else {
            negative_rows.push(i);
        }
    }
    Ok(FilteredPredictions {
        positive_rows,
        negative_rows,
    })
}

/// Mean contribution vector (bias ignored) over one class's kept rows.
/// An empty class yields the all-zero summary.
pub fn aggregate_class_weights(
    model: &BoostedModel,
    ds: &Dataset,
    rows: &[usize],
    class: ClassLabel,
) -> Result<ClassSummary> {
    let n_features = ds.n_features();
    if rows.is_empty() {
        return Ok(ClassSummary::empty(class, n_features));
    }
    let mut mean_weight = vec![0.0; n_features];
    for &i in rows {
        let cv = ensemble_contributions(model, ds.row(i))?;
        for (w, c) in mean_weight.iter_mut().zip(&cv.contributions) {
            *w += c;
        }
    }
    for w in &mut mean_weight {
        *w /= rows.len() as f64;
    }
    Ok(ClassSummary {
        class,
        mean_weight,
        n_predictions_kept: rows.len(),
    })
}

/// Signed class summaries plus the features whose class means tied.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedSummaries {
    pub positive: ClassSummary,
    pub negative: ClassSummary,
    /// Features with exactly zero class-mean difference; their sign fell
    /// back to the +1 tie-break.
    pub sign_ties: Vec<usize>,
}

/// Orient the aggregated weights using the per-feature class-mean
/// difference `s_k = sign(mean over true positives - mean over true
/// negatives)` computed on `reference` (the training fold), with
/// `sign(0) = +1`.
///
/// Both tables are multiplied by `-s_k`: the positive-class weight of a
/// feature that rises with the positive class comes out negative, and the
/// two class tables stay complementary under label inversion.
pub fn apply_directionality(
    positive: &ClassSummary,
    negative: &ClassSummary,
    reference: &Dataset,
) -> Result<SignedSummaries> {
    let n_pos = reference.n_positive();
    if n_pos == 0 || n_pos == reference.n_rows() {
        return Err(Error::SingleClass);
    }
    let mu_pos = reference.class_feature_means(1);
    let mu_neg = reference.class_feature_means(0);

    let mut signed_pos = positive.clone();
    let mut signed_neg = negative.clone();
    let mut sign_ties = Vec::new();
    for k in 0..reference.n_features() {
        let diff = mu_pos[k] - mu_neg[k];
        if diff == 0.0 {
            sign_ties.push(k);
        }
        let s = if diff >= 0.0 { 1.0 } else { -1.0 };
        signed_pos.mean_weight[k] *= -s;
        signed_neg.mean_weight[k] *= -s;
    }
    Ok(SignedSummaries {
        positive: signed_pos,
        negative: signed_neg,
        sign_ties,
    })
}

/// Result of one cross-validation fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HotsFoldResult {
    pub fold_index: usize,
    pub positive: ClassSummary,
    pub negative: ClassSummary,
    /// Features with nonzero aggregated weight in either class.
    pub features_used: Vec<usize>,
    pub sign_ties: Vec<usize>,
    /// Accuracy on the held-out fold.
    pub accuracy: f64,
}

/// Cross-validation settings: fold count, confidence threshold, and the
/// fold-plan seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HotsConfig {
    pub folds: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for HotsConfig {
    fn default() -> Self {
        HotsConfig {
            folds: 5,
            threshold: 0.70,
            seed: 0,
        }
    }
}

/// Echo of everything that determined a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HotsReportConfig {
    pub folds: usize,
    pub threshold: f64,
    pub seed: u64,
    pub hyperparams: Hyperparams,
}

/// The cross-validated HOTS output.
///
/// Cross-fold means average only the folds where a feature appears
/// (nonzero weight in either class), so a feature used in a single fold
/// keeps its full weight there instead of being diluted by zero padding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HotsReport {
    pub feature_names: Vec<String>,
    pub positive_mean_weight: Vec<f64>,
    pub negative_mean_weight: Vec<f64>,
    /// Number of folds each feature appeared in, in [0, k].
    pub fold_counts: Vec<usize>,
    pub fold_accuracies: Vec<f64>,
    pub folds: Vec<HotsFoldResult>,
    /// Union of per-fold sign ties.
    pub sign_ties: Vec<usize>,
    pub config: HotsReportConfig,
}

impl HotsReport {
    pub fn mean_accuracy(&self) -> f64 {
        self.fold_accuracies.iter().sum::<f64>() / self.fold_accuracies.len() as f64
    }

    /// Feature indices ranked by |cross-fold mean weight| descending for
    /// one class, ties by index.
    pub fn ranking(&self, class: ClassLabel) -> Vec<usize> {
        let weights = match class {
            ClassLabel::Positive => &self.positive_mean_weight,
            ClassLabel::Negative => &self.negative_mean_weight,
        };
        let mut order: Vec<usize> = (0..weights.len()).collect();
        order.sort_by(|&a, &b| {
            weights[b]
                .abs()
                .partial_cmp(&weights[a].abs())
                .unwrap()
                .then(a.cmp(&b))
        });
        order
    }
}

/// Run the full procedure with a stratified k-fold plan derived from the
/// config seed.
pub fn run_hots_cv(ds: &Dataset, hp: &Hyperparams, cfg: &HotsConfig) -> Result<HotsReport> {
    let plan = stratified_kfold(ds, cfg.folds, cfg.seed)?;
    run_hots_with_plan(ds, hp, &plan, cfg.threshold)
}

/// Run the full procedure on a caller-supplied fold plan.
///
/// Per fold: train on the other k-1 folds, explain and filter the held-out
/// rows, aggregate per predicted class, and sign with class means from the
/// training fold.
pub fn run_hots_with_plan(
    ds: &Dataset,
    hp: &Hyperparams,
    plan: &FoldPlan,
    threshold: f64,
) -> Result<HotsReport> {
    let k = plan.k();
    let n_features = ds.n_features();
    let mut folds = Vec::with_capacity(k);

    for fold in 0..k {
        let (train, test) = plan.split(ds, fold);
        let model = fit_gbdt(&train, hp)?;

        let mut correct = 0usize;
        for i in 0..test.n_rows() {
            let margin = model.predict_margin(test.row(i))?;
            if (margin >= 0.0) as u8 == test.label(i) {
                correct += 1;
            }
        }
        let accuracy = correct as f64 / test.n_rows() as f64;

        let kept = filter_predictions(&model, &test, threshold)?;
        let raw_pos =
            aggregate_class_weights(&model, &test, &kept.positive_rows, ClassLabel::Positive)?;
        let raw_neg =
            aggregate_class_weights(&model, &test, &kept.negative_rows, ClassLabel::Negative)?;
        let signed = apply_directionality(&raw_pos, &raw_neg, &train)?;

        let features_used: Vec<usize> = (0..n_features)
            .filter(|&j| {
                signed.positive.mean_weight[j] != 0.0 || signed.negative.mean_weight[j] != 0.0
            })
            .collect();

        folds.push(HotsFoldResult {
            fold_index: fold,
            positive: signed.positive,
            negative: signed.negative,
            features_used,
            sign_ties: signed.sign_ties,
            accuracy,
        });
    }

    let mut fold_counts = vec![0usize; n_features];
    let mut positive_mean_weight = vec![0.0; n_features];
    let mut negative_mean_weight = vec![0.0; n_features];
    for result in &folds {
        for &j in &result.features_used {
            fold_counts[j] += 1;
            positive_mean_weight[j] += result.positive.mean_weight[j];
            negative_mean_weight[j] += result.negative.mean_weight[j];
        }
    }
    for j in 0..n_features {
        if fold_counts[j] > 0 {
            positive_mean_weight[j] /= fold_counts[j] as f64;
            negative_mean_weight[j] /= fold_counts[j] as f64;
        }
    }

    let mut sign_ties: Vec<usize> = folds.iter().flat_map(|f| f.sign_ties.clone()).collect();
    sign_ties.sort_unstable();
    sign_ties.dedup();

    Ok(HotsReport {
        feature_names: ds.feature_names().to_vec(),
        positive_mean_weight,
        negative_mean_weight,
        fold_counts,
        fold_accuracies: folds.iter().map(|f| f.accuracy).collect(),
        folds,
        sign_ties,
        config: HotsReportConfig {
            folds: k,
            threshold,
            seed: plan.seed(),
            hyperparams: hp.clone(),
        },
    })
}
