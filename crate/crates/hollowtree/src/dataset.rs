//! Tabular data loading, binarization, fold planning, and synthetic
//! generators.
//!
//! CSV input is RFC-4180 with a mandatory header row, `.` decimal point and
//! UTF-8 encoding. Every non-label cell must parse as a finite number;
//! missing values are rejected at load time so that split semantics stay
//! unambiguous downstream.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// A loaded table whose label column is still raw text.
///
/// Produced by [`load_csv`]; turn it into a trainable [`Dataset`] with
/// [`RawDataset::binarize`].
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

/// A validated binary-classification dataset.
///
/// Invariants enforced at construction: every row has exactly `K` finite
/// values, labels are 0/1, and feature names are unique with length `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        let k = feature_names.len();
        if k == 0 {
            return Err(Error::InvalidDataset("no feature columns".into()));
        }
        for (i, a) in feature_names.iter().enumerate() {
            if feature_names[i + 1..].contains(a) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate feature name {a:?}"
                )));
            }
        }
        if rows.is_empty() {
            return Err(Error::InvalidDataset("no rows".into()));
        }
        if rows.len() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidDataset(format!(
                    "row {i} has {} values, expected {k}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!(
                    "row {i}, feature {:?}: non-finite value",
                    feature_names[j]
                )));
            }
        }
        if let Some(l) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::InvalidDataset(format!("label {l} is not 0 or 1")));
        }
        Ok(Self {
            feature_names,
            rows,
            labels,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    /// Index of a feature by name.
    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Values of one feature column, in row order.
    pub fn column(&self, feature: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[feature]).collect()
    }

    /// New dataset containing the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Per-feature mean over the rows whose true label equals `label`.
    pub fn class_feature_means(&self, label: u8) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_features()];
        let mut n = 0usize;
        for (row, &l) in self.rows.iter().zip(&self.labels) {
            if l == label {
                for (s, v) in sums.iter_mut().zip(row) {
                    *s += v;
                }
                n += 1;
            }
        }
        if n > 0 {
            for s in &mut sums {
                *s /= n as f64;
            }
        }
        sums
    }

    /// Serialize to CSV with a trailing `label` column. Floats are written
    /// with the shortest representation that round-trips bit-exactly.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for name in &self.feature_names {
            out.push_str(&csv_field(name));
            out.push(',');
        }
        out.push_str("label\n");
        for (row, label) in self.rows.iter().zip(&self.labels) {
            for v in row {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{label}");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|source| Error::WriteFailed {
            path: path.display().to_string(),
            source,
        })
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl RawDataset {
    /// Keep only rows labelled `positive` or `negative`, mapping them to 1
    /// and 0 respectively.
    pub fn binarize(&self, positive: &str, negative: &str) -> Result<Dataset> {
        if positive == negative {
            return Err(Error::IdenticalClassLabels(positive.to_string()));
        }
        for label in [positive, negative] {
            if !self.labels.iter().any(|l| l == label) {
                return Err(Error::LabelNotFound(label.to_string()));
            }
        }
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (row, label) in self.rows.iter().zip(&self.labels) {
            if label == positive {
                rows.push(row.clone());
                labels.push(1);
            } else if label == negative {
                rows.push(row.clone());
                labels.push(0);
            }
        }
        Dataset::new(self.feature_names.clone(), rows, labels)
    }
}

/// Load a CSV file, taking every column except `label_column` as a numeric
/// feature in header order.
pub fn load_csv(path: &Path, label_column: &str) -> Result<RawDataset> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, &path.display().to_string(), label_column)
}

fn read_csv(reader: impl Read, path: &str, label_column: &str) -> Result<RawDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Csv {
            path: path.to_string(),
            message: e.to_string(),
        })?
        .clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();
    if feature_names.is_empty() {
        return Err(Error::Csv {
            path: path.to_string(),
            message: "no feature columns besides the label".into(),
        });
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (rec_idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Csv {
            path: path.to_string(),
            message: e.to_string(),
        })?;
        let mut row = Vec::with_capacity(feature_names.len());
        for (col_idx, cell) in record.iter().enumerate() {
            if col_idx == label_idx {
                labels.push(cell.to_string());
                continue;
            }
            let parsed: std::result::Result<f64, _> = cell.trim().parse();
            match parsed {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    return Err(Error::BadCell {
                        path: path.to_string(),
                        row: rec_idx + 1,
                        column: headers[col_idx].to_string(),
                        value: cell.to_string(),
                    })
                }
            }
        }
        rows.push(row);
    }
    if rows.len() < 2 {
        return Err(Error::TooFewRows {
            path: path.to_string(),
        });
    }
    Ok(RawDataset {
        feature_names,
        rows,
        labels,
    })
}

/// The bundled Iris measurements (Fisher 1936), 150 rows, three species.
pub fn bundled_iris() -> RawDataset {
    static IRIS_CSV: &str = include_str!("../data/iris.csv");
    read_csv(IRIS_CSV.as_bytes(), "<bundled iris>", "species").expect("bundled iris data is valid")
}

/// Bundled Iris restricted to versicolor (=0) vs virginica (=1).
pub fn bundled_iris_binary() -> Dataset {
    bundled_iris()
        .binarize("virginica", "versicolor")
        .expect("bundled iris has both classes")
}

// ---------------------------------------------------------------------------
// Fold planning
// ---------------------------------------------------------------------------

/// A stratified assignment of every row to one of `k` folds.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPlan {
    k: usize,
    assignments: Vec<usize>,
    seed: u64,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    /// (train, test) datasets for one fold.
    pub fn split(&self, ds: &Dataset, fold: usize) -> (Dataset, Dataset) {
        (
            ds.subset(&self.train_indices(fold)),
            ds.subset(&self.test_indices(fold)),
        )
    }
}

pub(crate) fn fisher_yates(rng: &mut ChaCha8Rng, items: &mut [usize]) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}

/// Deterministic stratified k-fold plan: within each class, rows are
/// shuffled and dealt round-robin, so every fold's class ratio is within
/// one sample of the global ratio.
pub fn stratified_kfold(ds: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k must be >= 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0usize; ds.n_rows()];
    for class in [0u8, 1u8] {
        let mut idx: Vec<usize> = (0..ds.n_rows()).filter(|&i| ds.label(i) == class).collect();
        if idx.len() < k {
            return Err(Error::ClassSmallerThanFolds {
                class,
                k,
                size: idx.len(),
            });
        }
        fisher_yates(&mut rng, &mut idx);
        for (pos, &i) in idx.iter().enumerate() {
            assignments[i] = pos % k;
        }
    }
    Ok(FoldPlan {
        k,
        assignments,
        seed,
    })
}

/// Deterministic stratified holdout split. The test set size is
/// `round(test_fraction * N)`, allocated across classes by largest
/// remainder so the class ratio stays within one sample of the global one.
pub fn stratified_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "test_fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let n = ds.n_rows();
    let total_test = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut class_idx: Vec<Vec<usize>> = Vec::new();
    for class in [0u8, 1u8] {
        let mut idx: Vec<usize> = (0..n).filter(|&i| ds.label(i) == class).collect();
        fisher_yates(&mut rng, &mut idx);
        class_idx.push(idx);
    }

    let quotas: Vec<f64> = class_idx
        .iter()
        .map(|idx| test_fraction * idx.len() as f64)
        .collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    let mut remaining = total_test.saturating_sub(counts.iter().sum());
    for &c in order.iter().cycle().take(order.len() * 2) {
        if remaining == 0 {
            break;
        }
        if counts[c] < class_idx[c].len() {
            counts[c] += 1;
            remaining -= 1;
        }
    }

    let mut test = Vec::new();
    let mut train = Vec::new();
    for (idx, &count) in class_idx.iter().zip(&counts) {
        test.extend_from_slice(&idx[..count]);
        train.extend_from_slice(&idx[count..]);
    }
    test.sort_unstable();
    train.sort_unstable();
    Ok((ds.subset(&train), ds.subset(&test)))
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

/// Generate a dataset where a few designated features carry the label
/// signal and everything else is standard Gaussian noise.
///
/// Each signal feature is `sign * label + N(0, noise_sd)`; labels are fair
/// coin flips. Deterministic for a fixed seed.
pub fn make_planted_dataset(
    n_rows: usize,
    n_features: usize,
    signal_features: &[(usize, f64)],
    noise_sd: f64,
    seed: u64,
) -> Result<Dataset> {
    if n_rows < 20 {
        return Err(Error::InvalidParameter(format!(
            "n_rows must be >= 20, got {n_rows}"
        )));
    }
    if noise_sd < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "noise_sd must be >= 0, got {noise_sd}"
        )));
    }
    let mut signs = vec![None; n_features];
    for &(index, sign) in signal_features {
        if index >= n_features {
            return Err(Error::SignalIndexOutOfRange { index, n_features });
        }
        if signs[index].is_some() {
            return Err(Error::DuplicateSignalIndex(index));
        }
        signs[index] = Some(sign);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<u8> = (0..n_rows).map(|_| rng.gen_range(0..2u8)).collect();
    let mut rows = Vec::with_capacity(n_rows);
    for &label in &labels {
        let mut row = Vec::with_capacity(n_features);
        for sign in &signs {
            let noise: f64 = StandardNormal.sample(&mut rng);
            match sign {
                Some(s) => row.push(s * label as f64 + noise * noise_sd),
                None => row.push(noise),
            }
        }
        rows.push(row);
    }
    let feature_names = (0..n_features).map(|j| format!("f{j}")).collect();
    Dataset::new(feature_names, rows, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_csv() -> &'static str {
        "a,b,species\n1.0,2.0,x\n3.5,4.5,y\n5.0,6.0,x\n"
    }

    #[test]
    fn loads_bundled_iris() {
        let raw = bundled_iris();
        assert_eq!(raw.rows.len(), 150);
        assert_eq!(
            raw.feature_names,
            ["sepal length", "sepal width", "petal length", "petal width"]
        );
        assert_eq!(raw.labels.iter().filter(|l| *l == "setosa").count(), 50);
    }

    #[test]
    fn binarize_iris_keeps_100_rows() {
        let ds = bundled_iris_binary();
        assert_eq!(ds.n_rows(), 100);
        assert_eq!(ds.n_positive(), 50);
    }

    #[test]
    fn binarize_rejects_identical_labels() {
        let raw = bundled_iris();
        assert!(matches!(
            raw.binarize("virginica", "virginica"),
            Err(Error::IdenticalClassLabels(_))
        ));
    }

    #[test]
    fn binarize_rejects_missing_label() {
        let raw = bundled_iris();
        assert!(matches!(
            raw.binarize("virginica", "orchid"),
            Err(Error::LabelNotFound(_))
        ));
    }

    #[test]
    fn binarize_is_identity_on_binary_labels() {
        let raw = RawDataset {
            feature_names: vec!["a".into()],
            rows: vec![vec![1.0], vec![2.0], vec![3.0]],
            labels: vec!["1".into(), "0".into(), "1".into()],
        };
        let ds = raw.binarize("1", "0").unwrap();
        assert_eq!(ds.rows(), raw.rows.as_slice());
        assert_eq!(ds.labels(), &[1, 0, 1]);
    }

    #[test]
    fn read_csv_parses_features_in_header_order() {
        let raw = read_csv(toy_csv().as_bytes(), "toy", "species").unwrap();
        assert_eq!(raw.feature_names, ["a", "b"]);
        assert_eq!(raw.rows[1], [3.5, 4.5]);
        assert_eq!(raw.labels, ["x", "y", "x"]);
    }

    #[test]
    fn read_csv_rejects_single_row() {
        let err = read_csv("a,species\n1.0,x\n".as_bytes(), "toy", "species").unwrap_err();
        assert!(matches!(err, Error::TooFewRows { .. }));
        assert!(err.to_string().contains("fewer than 2 rows"));
    }

    #[test]
    fn read_csv_names_bad_cell() {
        let err = read_csv(
            "a,b,species\n1.0,abc,x\n2.0,3.0,y\n".as_bytes(),
            "toy",
            "species",
        )
        .unwrap_err();
        match err {
            Error::BadCell {
                row, column, value, ..
            } => {
                assert_eq!(row, 1);
                assert_eq!(column, "b");
                assert_eq!(value, "abc");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn read_csv_rejects_non_finite_and_missing_cells() {
        assert!(matches!(
            read_csv("a,species\nNaN,x\n1.0,y\n".as_bytes(), "toy", "species"),
            Err(Error::BadCell { .. })
        ));
        assert!(matches!(
            read_csv(
                "a,b,species\n1.0,,x\n2.0,3.0,y\n".as_bytes(),
                "toy",
                "species"
            ),
            Err(Error::BadCell { .. })
        ));
    }

    #[test]
    fn read_csv_requires_label_column() {
        assert!(matches!(
            read_csv(toy_csv().as_bytes(), "toy", "target"),
            Err(Error::MissingLabelColumn(_))
        ));
    }

    #[test]
    fn load_csv_reports_missing_file() {
        let err = load_csv(Path::new("/nonexistent/file.csv"), "species").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let ds = bundled_iris_binary();
        let text = ds.to_csv_string();
        let raw = read_csv(text.as_bytes(), "round-trip", "label").unwrap();
        let back = raw.binarize("1", "0").unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn kfold_iris_balanced_folds() {
        let ds = bundled_iris_binary();
        let plan = stratified_kfold(&ds, 5, 7).unwrap();
        for fold in 0..5 {
            let test = plan.test_indices(fold);
            assert_eq!(test.len(), 20);
            let pos = test.iter().filter(|&&i| ds.label(i) == 1).count();
            assert_eq!(pos, 10, "fold {fold} should hold 10 positives");
        }
    }

    #[test]
    fn kfold_partitions_every_row_once() {
        let ds = bundled_iris_binary();
        let plan = stratified_kfold(&ds, 4, 3).unwrap();
        let mut seen = vec![0usize; ds.n_rows()];
        for fold in 0..4 {
            for i in plan.test_indices(fold) {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn kfold_is_deterministic() {
        let ds = bundled_iris_binary();
        let a = stratified_kfold(&ds, 5, 42).unwrap();
        let b = stratified_kfold(&ds, 5, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kfold_rejects_k_larger_than_class() {
        let ds = bundled_iris_binary();
        assert!(matches!(
            stratified_kfold(&ds, 51, 0),
            Err(Error::ClassSmallerThanFolds { .. })
        ));
        assert!(matches!(
            stratified_kfold(&ds, 1, 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn stratified_split_iris_75_25() {
        let ds = bundled_iris_binary();
        let (train, test) = stratified_split(&ds, 0.25, 0).unwrap();
        assert_eq!(test.n_rows(), 25);
        assert_eq!(train.n_rows(), 75);
        let pos = test.n_positive();
        assert!((12..=13).contains(&pos), "test positives {pos}");
    }

    #[test]
    fn planted_signal_separates_class_means() {
        let ds = make_planted_dataset(200, 400, &[(0, 1.0), (1, -1.0)], 0.5, 1).unwrap();
        let mu1 = ds.class_feature_means(1);
        let mu0 = ds.class_feature_means(0);
        assert!(
            (mu1[0] - mu0[0] - 1.0).abs() < 0.25,
            "diff {}",
            mu1[0] - mu0[0]
        );
        assert!(
            (mu1[1] - mu0[1] + 1.0).abs() < 0.25,
            "diff {}",
            mu1[1] - mu0[1]
        );
        // a noise feature shows no separation
        assert!((mu1[5] - mu0[5]).abs() < 0.5);
    }

    #[test]
    fn planted_zero_noise_is_separable() {
        let ds = make_planted_dataset(40, 3, &[(2, 1.0)], 0.0, 9).unwrap();
        for i in 0..ds.n_rows() {
            assert_eq!(ds.row(i)[2], ds.label(i) as f64);
        }
    }

    #[test]
    fn planted_without_signals_gives_chance_level_cv_accuracy() {
        let ds = make_planted_dataset(80, 8, &[], 0.5, 2).unwrap();
        let plan = stratified_kfold(&ds, 4, 0).unwrap();
        let hp = crate::gbdt::Hyperparams {
            n_rounds: 10,
            max_depth: 3,
            ..Default::default()
        };
        let mut total = 0.0;
        for fold in 0..4 {
            let (train, test) = plan.split(&ds, fold);
            let model = crate::gbdt::fit_gbdt(&train, &hp).unwrap();
            total += crate::accuracy(&model, &test).unwrap();
        }
        let mean = total / 4.0;
        assert!(
            (mean - 0.5).abs() <= 0.15,
            "pure-noise CV accuracy {mean} should be near chance"
        );
    }

    #[test]
    fn planted_rejects_bad_signals() {
        assert!(matches!(
            make_planted_dataset(40, 4, &[(1, 1.0), (1, -1.0)], 0.5, 0),
            Err(Error::DuplicateSignalIndex(1))
        ));
        assert!(matches!(
            make_planted_dataset(40, 4, &[(9, 1.0)], 0.5, 0),
            Err(Error::SignalIndexOutOfRange { .. })
        ));
    }

    #[test]
    fn planted_is_pure_function_of_arguments() {
        let a = make_planted_dataset(50, 10, &[(3, -1.0)], 0.25, 11).unwrap();
        let b = make_planted_dataset(50, 10, &[(3, -1.0)], 0.25, 11).unwrap();
        assert_eq!(a, b);
        let c = make_planted_dataset(50, 10, &[(3, -1.0)], 0.25, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn dataset_rejects_invalid_shapes() {
        assert!(Dataset::new(vec!["a".into()], vec![], vec![]).is_err());
        assert!(Dataset::new(vec!["a".into(), "a".into()], vec![vec![1.0, 2.0]], vec![0]).is_err());
        assert!(Dataset::new(vec!["a".into()], vec![vec![f64::NAN]], vec![0]).is_err());
        assert!(Dataset::new(vec!["a".into()], vec![vec![1.0]], vec![2]).is_err());
    }
}
