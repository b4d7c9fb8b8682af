//! Command-line entry point: ingestion, training, baselines, explanation,
//! and the cross-validated importance pipeline, with reproducible config
//! echoed into every JSON report.
//!
//! Exit codes: 0 success, 2 usage errors, 3 unreadable or malformed input
//! files, 4 invalid configuration, 5 write failures, 1 anything else.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cart::{fit_tree, DecisionTree};
use crate::contributions::{
    ensemble_contributions, explain_prediction, tree_contributions, ContributionVector,
    ExplanationRow, RowOrder,
};
use crate::dataset::{bundled_iris_binary, load_csv, stratified_split, Dataset};
use crate::error::{Error, Result};
use crate::gbdt::{evaluate, fit_gbdt, sigmoid, BoostedModel, Hyperparams};
use crate::hots::{run_hots_cv, ClassLabel, HotsConfig, HotsReport};
use crate::importance::{gini_importance, pdp_1d, pdp_2d, permutation_importance};
use crate::report::{
    count_chart_svg, csv_table, fmt_sig6, hbar_chart_svg, heatmap_svg, line_chart_svg,
    to_canonical_json, write_text, FORMAT_VERSION,
};
use crate::TreeModel;

#[derive(Debug, Parser)]
#[command(
    name = "hollowtree",
    version,
    about = "Boosted-tree training with additive per-feature prediction decomposition \
             and cross-validated directional feature importance",
    subcommand_required = true,
    arg_required_else_help = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and evaluate it on a stratified holdout
    Train(TrainArgs),
    /// Print the per-feature contribution listing for one row
    Explain(ExplainArgs),
    /// Emit the Gini / permutation / partial-dependence baselines
    Baselines(BaselinesArgs),
    /// Emit a partial dependence curve (or surface, with --feature2)
    Pdp(PdpArgs),
    /// Cross-validated directional feature importance
    Hots(HotsArgs),
    /// Run the bundled-Iris analysis end to end
    DemoIris(DemoIrisArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV file with a header row
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the label column
    #[arg(long = "label-col")]
    pub label_col: String,
    /// Label value mapped to the positive class (=1)
    #[arg(long)]
    pub positive: String,
    /// Label value mapped to the negative class (=0)
    #[arg(long)]
    pub negative: String,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        load_csv(&self.data, &self.label_col)?.binarize(&self.positive, &self.negative)
    }
}

#[derive(Debug, Clone, Args)]
pub struct BoostArgs {
    /// Boosting rounds
    #[arg(long, default_value_t = 100)]
    pub rounds: usize,
    /// Shrinkage applied to every leaf weight
    #[arg(long = "learning-rate", default_value_t = 0.3)]
    pub learning_rate: f64,
    /// L2 regularization on leaf weights
    #[arg(long = "reg-lambda", default_value_t = 1.0)]
    pub reg_lambda: f64,
    /// Prior positive-class probability
    #[arg(long = "base-score", default_value_t = 0.5)]
    pub base_score: f64,
}

impl BoostArgs {
    fn hyperparams(&self, max_depth: usize) -> Hyperparams {
        Hyperparams {
            n_rounds: self.rounds,
            learning_rate: self.learning_rate,
            max_depth,
            reg_lambda: self.reg_lambda,
            base_score: self.base_score,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Tree,
    Gbdt,
}

impl ModelKind {
    fn as_str(self) -> &'static str {
        match self {
            ModelKind::Tree => "tree",
            ModelKind::Gbdt => "gbdt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub boost: BoostArgs,
    #[arg(long, value_enum, default_value_t = ModelKind::Gbdt)]
    pub kind: ModelKind,
    /// Maximum tree depth (pass 4 for the classic single-tree baseline)
    #[arg(long = "max-depth", default_value_t = 6)]
    pub max_depth: usize,
    /// Minimum samples per leaf (single trees only)
    #[arg(long = "min-samples-leaf", default_value_t = 1)]
    pub min_samples_leaf: usize,
    /// Fraction of rows held out for evaluation
    #[arg(long = "holdout-fraction", default_value_t = 0.25)]
    pub holdout_fraction: f64,
    #[arg(long, env = "HOLLOWTREE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "hollowtree_out")]
    pub out: PathBuf,
    /// Also print the model JSON to stdout
    #[arg(long = "dump-model")]
    pub dump_model: bool,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    /// Model file written by `train`
    #[arg(long)]
    pub model: PathBuf,
    /// CSV file holding the rows to explain
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the label column to drop
    #[arg(long = "label-col")]
    pub label_col: String,
    /// 0-based row index to explain
    #[arg(long)]
    pub row: usize,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct BaselinesArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub boost: BoostArgs,
    #[arg(long, value_enum, default_value_t = ModelKind::Tree)]
    pub kind: ModelKind,
    #[arg(long = "max-depth", default_value_t = 4)]
    pub max_depth: usize,
    /// Permutation repeats per feature
    #[arg(long, default_value_t = 30)]
    pub repeats: usize,
    #[arg(long = "grid-size", default_value_t = 50)]
    pub grid_size: usize,
    #[arg(long, env = "HOLLOWTREE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "hollowtree_out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PdpArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Feature name for the curve
    #[arg(long)]
    pub feature: String,
    /// Second feature name; switches to a 2D surface
    #[arg(long)]
    pub feature2: Option<String>,
    #[arg(long = "grid-size", default_value_t = 50)]
    pub grid_size: usize,
    #[arg(long = "max-depth", default_value_t = 4)]
    pub max_depth: usize,
    #[arg(long, default_value = "hollowtree_out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HotsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub boost: BoostArgs,
    #[arg(long = "max-depth", default_value_t = 6)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Minimum predicted-class probability for a row to be kept
    #[arg(long, default_value_t = 0.70)]
    pub threshold: f64,
    #[arg(long, env = "HOLLOWTREE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "hollowtree_out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DemoIrisArgs {
    #[arg(long, env = "HOLLOWTREE_SEED", default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value = "hollowtree_out")]
    pub out: PathBuf,
}

/// Everything that determined a run; echoed verbatim into every JSON
/// report.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub subcommand: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_column: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positive: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub negative: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hyperparams: Option<Hyperparams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_samples_leaf: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holdout_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub folds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feature: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feature2: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
    pub seed: u64,
    pub output_dir: String,
}

/// On-disk model document, loadable by `explain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelFile {
    DecisionTree(DecisionTree),
    Gbdt(BoostedModel),
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<ModelFile> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::BadModelFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if let ModelFile::Gbdt(m) = &file {
            if !(m.base_score() > 0.0 && m.base_score() < 1.0) {
                return Err(Error::BadModelFile {
                    path: path.display().to_string(),
                    message: format!("base_score {} outside (0, 1)", m.base_score()),
                });
            }
        }
        Ok(file)
    }

    pub fn feature_names(&self) -> &[String] {
        match self {
            ModelFile::DecisionTree(t) => &t.feature_names,
            ModelFile::Gbdt(m) => m.feature_names(),
        }
    }
}

/// Hyperparameters used by `demo-iris`: a compact booster whose mean
/// log-odds weights land near the single-decision-tree scale, keeping the
/// demo's bar charts directly comparable to a probability-space reading.
pub fn demo_iris_hyperparams() -> Hyperparams {
    Hyperparams {
        n_rounds: 12,
        learning_rate: 0.1,
        max_depth: 6,
        reg_lambda: 1.0,
        base_score: 0.5,
    }
}

/// Map an error to its process exit code.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Io { .. }
        | Error::Csv { .. }
        | Error::BadCell { .. }
        | Error::TooFewRows { .. }
        | Error::MissingLabelColumn(_)
        | Error::LabelNotFound(_)
        | Error::BadModelFile { .. } => 3,
        Error::InvalidParameter(_)
        | Error::InvalidDataset(_)
        | Error::IdenticalClassLabels(_)
        | Error::ClassSmallerThanFolds { .. }
        | Error::DuplicateSignalIndex(_)
        | Error::SignalIndexOutOfRange { .. }
        | Error::DimensionMismatch { .. }
        | Error::SingleClass => 4,
        Error::WriteFailed { .. } => 5,
    }
}

/// Parse argv and run; returns the process exit code.
pub fn main_entry() -> i32 {
    match Cli::try_parse() {
        Ok(cli) => match run(cli) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        },
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            code
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => run_train(args),
        Command::Explain(args) => run_explain(args),
        Command::Baselines(args) => run_baselines(args),
        Command::Pdp(args) => run_pdp(args),
        Command::Hots(args) => run_hots(args),
        Command::DemoIris(args) => run_demo_iris(args),
    }
}

fn run_train(args: TrainArgs) -> Result<()> {
    if !(args.holdout_fraction > 0.0 && args.holdout_fraction < 1.0) {
        return Err(Error::InvalidParameter(
            "holdout-fraction must be in (0, 1)".into(),
        ));
    }
    let ds = args.data.load()?;
    let (train, test) = stratified_split(&ds, args.holdout_fraction, args.seed)?;
    let hp = args.boost.hyperparams(args.max_depth);

    let (model_file, metrics) = match args.kind {
        ModelKind::Tree => {
            let tree = fit_tree(&train, args.max_depth, args.min_samples_leaf)?;
            let metrics = evaluate(&tree, &test, 0.5)?;
            (ModelFile::DecisionTree(tree), metrics)
        }
        ModelKind::Gbdt => {
            let model = fit_gbdt(&train, &hp)?;
            let metrics = evaluate(&model, &test, 0.5)?;
            (ModelFile::Gbdt(model), metrics)
        }
    };

    let config = RunConfig {
        subcommand: "train".into(),
        data: Some(args.data.data.display().to_string()),
        label_column: Some(args.data.label_col.clone()),
        positive: Some(args.data.positive.clone()),
        negative: Some(args.data.negative.clone()),
        model_kind: Some(args.kind.as_str().into()),
        hyperparams: Some(hp),
        min_samples_leaf: Some(args.min_samples_leaf),
        holdout_fraction: Some(args.holdout_fraction),
        seed: args.seed,
        output_dir: args.out.display().to_string(),
        ..Default::default()
    };

    let model_json = serde_json::to_string_pretty(&model_file).expect("model serializes");
    write_text(&args.out.join("model.json"), &model_json)?;
    let doc = json!({
        "format_version": FORMAT_VERSION,
        "config": config,
        "metrics": metrics,
    });
    write_text(&args.out.join("metrics.json"), &to_canonical_json(&doc))?;
    if args.dump_model {
        println!("{model_json}");
    } else {
        println!(
            "trained {} on {} rows; holdout accuracy {} roc_auc {} f1 {}",
            args.kind.as_str(),
            train.n_rows(),
            fmt_sig6(metrics.accuracy),
            fmt_sig6(metrics.roc_auc),
            fmt_sig6(metrics.f1),
        );
    }
    Ok(())
}

fn run_explain(args: ExplainArgs) -> Result<()> {
    let model = ModelFile::load(&args.model)?;
    let raw = load_csv(&args.data, &args.label_col)?;
    if raw.feature_names != model.feature_names() {
        return Err(Error::InvalidParameter(format!(
            "model expects features {:?}, data provides {:?}",
            model.feature_names(),
            raw.feature_names
        )));
    }
    if args.row >= raw.rows.len() {
        return Err(Error::InvalidParameter(format!(
            "row {} out of range for {} rows",
            args.row,
            raw.rows.len()
        )));
    }
    let x = &raw.rows[args.row];

    let (cv, proba): (ContributionVector, f64) = match &model {
        ModelFile::DecisionTree(tree) => {
            let cv = tree_contributions(tree, x)?;
            let p = cv.prediction;
            (cv, p)
        }
        ModelFile::Gbdt(m) => {
            let cv = ensemble_contributions(m, x)?;
            let p = sigmoid(cv.prediction);
            (cv, p)
        }
    };
    let rows = explain_prediction(&cv, model.feature_names(), x, RowOrder::SignedDesc);

    match args.format {
        OutputFormat::Text => print_explanation_text(&cv, proba, &rows),
        OutputFormat::Json => {
            let config = RunConfig {
                subcommand: "explain".into(),
                data: Some(args.data.display().to_string()),
                label_column: Some(args.label_col.clone()),
                row: Some(args.row),
                output_dir: String::new(),
                ..Default::default()
            };
            let doc = json!({
                "format_version": FORMAT_VERSION,
                "config": config,
                "prediction": cv.prediction,
                "probability": proba,
                "space": cv.space,
                "rows": rows,
            });
            print!("{}", to_canonical_json(&doc));
        }
        OutputFormat::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| vec![r.feature.clone(), fmt_sig6(r.weight), fmt_sig6(r.value)])
                .collect();
            print!("{}", csv_table(&["feature", "weight", "value"], &table));
        }
    }
    Ok(())
}

fn print_explanation_text(cv: &ContributionVector, proba: f64, rows: &[ExplanationRow]) {
    let class = (proba >= 0.5) as u8;
    println!(
        "class = {class}, probability = {} (prediction {} in {} space)",
        fmt_sig6(proba),
        fmt_sig6(cv.prediction),
        cv.space
    );
    println!("{:>12}  {:<16} {:>8}", "contribution", "feature", "value");
    for row in rows {
        println!(
            "{:>12}  {:<16} {:>8}",
            format!("{:+}", crate::report::sig6(row.weight)),
            row.feature,
            fmt_sig6(row.value)
        );
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect()
}

fn run_baselines(args: BaselinesArgs) -> Result<()> {
    let ds = args.data.load()?;
    let hp = args.boost.hyperparams(args.max_depth);
    let model: Box<dyn TreeModel> = match args.kind {
        ModelKind::Tree => Box::new(fit_tree(&ds, args.max_depth, 1)?),
        ModelKind::Gbdt => Box::new(fit_gbdt(&ds, &hp)?),
    };
    let model = model.as_ref();

    let gini = gini_importance(model);
    let permutation = permutation_importance(model, &ds, args.repeats, args.seed)?;
    let ranking = gini.ranking();
    let (top, second) = (ranking[0], ranking[1]);
    let pdp = pdp_1d(model, &ds, top, args.grid_size)?;
    let surface = pdp_2d(model, &ds, top, second, args.grid_size)?;

    let config = RunConfig {
        subcommand: "baselines".into(),
        data: Some(args.data.data.display().to_string()),
        label_column: Some(args.data.label_col.clone()),
        positive: Some(args.data.positive.clone()),
        negative: Some(args.data.negative.clone()),
        model_kind: Some(args.kind.as_str().into()),
        hyperparams: Some(hp),
        repeats: Some(args.repeats),
        grid_size: Some(args.grid_size),
        seed: args.seed,
        output_dir: args.out.display().to_string(),
        ..Default::default()
    };

    for (table, stem) in [(&gini, "gini"), (&permutation, "permutation")] {
        let rows: Vec<Vec<String>> = table
            .feature_names
            .iter()
            .zip(&table.scores)
            .map(|(n, s)| vec![n.clone(), fmt_sig6(*s)])
            .collect();
        write_text(
            &args.out.join(format!("{stem}.csv")),
            &csv_table(&["feature", "score"], &rows),
        )?;
        let entries: Vec<(String, f64)> = table
            .feature_names
            .iter()
            .cloned()
            .zip(table.scores.iter().copied())
            .collect();
        write_text(
            &args.out.join(format!("{stem}.svg")),
            &hbar_chart_svg(&format!("{stem} importance"), &entries),
        )?;
    }

    let pdp_rows: Vec<Vec<String>> = pdp
        .grid
        .iter()
        .zip(&pdp.means)
        .map(|(g, m)| vec![fmt_sig6(*g), fmt_sig6(*m)])
        .collect();
    let pdp_stem = format!("pdp_{}", sanitize(&pdp.feature_name));
    write_text(
        &args.out.join(format!("{pdp_stem}.csv")),
        &csv_table(&[&pdp.feature_name, "partial_dependence"], &pdp_rows),
    )?;
    write_text(
        &args.out.join(format!("{pdp_stem}.svg")),
        &line_chart_svg(
            &format!("partial dependence: {}", pdp.feature_name),
            &pdp.grid,
            &pdp.means,
        ),
    )?;

    let mut surf_rows = Vec::new();
    for (i, v1) in surface.grid1.iter().enumerate() {
        for (j, v2) in surface.grid2.iter().enumerate() {
            surf_rows.push(vec![
                fmt_sig6(*v1),
                fmt_sig6(*v2),
                fmt_sig6(surface.means[i][j]),
            ]);
        }
    }
    let surf_stem = format!(
        "pdp2d_{}_{}",
        sanitize(&surface.feature_names.0),
        sanitize(&surface.feature_names.1)
    );
    write_text(
        &args.out.join(format!("{surf_stem}.csv")),
        &csv_table(
            &[
                &surface.feature_names.0,
                &surface.feature_names.1,
                "partial_dependence",
            ],
            &surf_rows,
        ),
    )?;
    write_text(
        &args.out.join(format!("{surf_stem}.svg")),
        &heatmap_svg(
            &format!(
                "partial dependence: {} vs {}",
                surface.feature_names.0, surface.feature_names.1
            ),
            &surface.grid1,
            &surface.grid2,
            &surface.means,
        ),
    )?;

    let doc = json!({
        "format_version": FORMAT_VERSION,
        "config": config,
        "gini": gini,
        "permutation": permutation,
        "pdp": pdp,
        "pdp_2d": surface,
    });
    write_text(&args.out.join("baselines.json"), &to_canonical_json(&doc))?;
    println!(
        "baselines written to {}; top gini feature: {}",
        args.out.display(),
        gini.feature_names[top]
    );
    Ok(())
}

fn run_pdp(args: PdpArgs) -> Result<()> {
    let ds = args.data.load()?;
    let tree = fit_tree(&ds, args.max_depth, 1)?;
    let feature = ds
        .feature_index(&args.feature)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown feature {:?}", args.feature)))?;

    let config = RunConfig {
        subcommand: "pdp".into(),
        data: Some(args.data.data.display().to_string()),
        label_column: Some(args.data.label_col.clone()),
        positive: Some(args.data.positive.clone()),
        negative: Some(args.data.negative.clone()),
        feature: Some(args.feature.clone()),
        feature2: args.feature2.clone(),
        grid_size: Some(args.grid_size),
        output_dir: args.out.display().to_string(),
        ..Default::default()
    };

    match &args.feature2 {
        None => {
            let curve = pdp_1d(&tree, &ds, feature, args.grid_size)?;
            let rows: Vec<Vec<String>> = curve
                .grid
                .iter()
                .zip(&curve.means)
                .map(|(g, m)| vec![fmt_sig6(*g), fmt_sig6(*m)])
                .collect();
            write_text(
                &args.out.join("pdp.csv"),
                &csv_table(&[&curve.feature_name, "partial_dependence"], &rows),
            )?;
            write_text(
                &args.out.join("pdp.svg"),
                &line_chart_svg(
                    &format!("partial dependence: {}", curve.feature_name),
                    &curve.grid,
                    &curve.means,
                ),
            )?;
            let doc = json!({
                "format_version": FORMAT_VERSION,
                "config": config,
                "pdp": curve,
            });
            write_text(&args.out.join("pdp.json"), &to_canonical_json(&doc))?;
        }
        Some(name2) => {
            let f2 = ds
                .feature_index(name2)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown feature {name2:?}")))?;
            let surface = pdp_2d(&tree, &ds, feature, f2, args.grid_size)?;
            let mut rows = Vec::new();
            for (i, v1) in surface.grid1.iter().enumerate() {
                for (j, v2) in surface.grid2.iter().enumerate() {
                    rows.push(vec![
                        fmt_sig6(*v1),
                        fmt_sig6(*v2),
                        fmt_sig6(surface.means[i][j]),
                    ]);
                }
            }
            write_text(
                &args.out.join("pdp.csv"),
                &csv_table(
                    &[
                        &surface.feature_names.0,
                        &surface.feature_names.1,
                        "partial_dependence",
                    ],
                    &rows,
                ),
            )?;
            write_text(
                &args.out.join("pdp.svg"),
                &heatmap_svg(
                    &format!(
                        "partial dependence: {} vs {}",
                        surface.feature_names.0, surface.feature_names.1
                    ),
                    &surface.grid1,
                    &surface.grid2,
                    &surface.means,
                ),
            )?;
            let doc = json!({
                "format_version": FORMAT_VERSION,
                "config": config,
                "pdp_2d": surface,
            });
            write_text(&args.out.join("pdp.json"), &to_canonical_json(&doc))?;
        }
    }
    println!("partial dependence written to {}", args.out.display());
    Ok(())
}

fn run_hots(args: HotsArgs) -> Result<()> {
    if args.folds < 2 {
        return Err(Error::InvalidParameter(format!(
            "k must be >= 2, got {}",
            args.folds
        )));
    }
    let ds = args.data.load()?;
    let hp = args.boost.hyperparams(args.max_depth);
    let cfg = HotsConfig {
        folds: args.folds,
        threshold: args.threshold,
        seed: args.seed,
    };
    let report = run_hots_cv(&ds, &hp, &cfg)?;

    let config = RunConfig {
        subcommand: "hots".into(),
        data: Some(args.data.data.display().to_string()),
        label_column: Some(args.data.label_col.clone()),
        positive: Some(args.data.positive.clone()),
        negative: Some(args.data.negative.clone()),
        hyperparams: Some(hp),
        folds: Some(args.folds),
        threshold: Some(args.threshold),
        seed: args.seed,
        output_dir: args.out.display().to_string(),
        ..Default::default()
    };
    write_hots_artifacts(&report, &config, &args.out)
}

fn run_demo_iris(args: DemoIrisArgs) -> Result<()> {
    let ds = bundled_iris_binary();
    let hp = demo_iris_hyperparams();
    let cfg = HotsConfig {
        folds: 5,
        threshold: 0.70,
        seed: args.seed,
    };
    let report = run_hots_cv(&ds, &hp, &cfg)?;
    let config = RunConfig {
        subcommand: "demo-iris".into(),
        data: Some("<bundled iris>".into()),
        label_column: Some("species".into()),
        positive: Some("virginica".into()),
        negative: Some("versicolor".into()),
        hyperparams: Some(hp),
        folds: Some(5),
        threshold: Some(0.70),
        seed: args.seed,
        output_dir: args.out.display().to_string(),
        ..Default::default()
    };
    write_hots_artifacts(&report, &config, &args.out)
}

fn write_hots_artifacts(report: &HotsReport, config: &RunConfig, out: &Path) -> Result<()> {
    let doc = json!({
        "format_version": FORMAT_VERSION,
        "config": config,
        "report": report,
    });
    write_text(&out.join("hots_report.json"), &to_canonical_json(&doc))?;

    for (weights, stem, title) in [
        (
            &report.positive_mean_weight,
            "positive_class",
            "positive class mean weights",
        ),
        (
            &report.negative_mean_weight,
            "negative_class",
            "negative class mean weights",
        ),
    ] {
        let rows: Vec<Vec<String>> = report
            .feature_names
            .iter()
            .zip(weights.iter())
            .zip(&report.fold_counts)
            .map(|((n, w), c)| vec![n.clone(), fmt_sig6(*w), c.to_string()])
            .collect();
        write_text(
            &out.join(format!("{stem}.csv")),
            &csv_table(&["feature", "mean_weight", "fold_count"], &rows),
        )?;
        let entries: Vec<(String, f64)> = report
            .feature_names
            .iter()
            .cloned()
            .zip(weights.iter().copied())
            .collect();
        write_text(
            &out.join(format!("{stem}.svg")),
            &hbar_chart_svg(title, &entries),
        )?;
    }

    let count_rows: Vec<Vec<String>> = report
        .feature_names
        .iter()
        .zip(&report.fold_counts)
        .map(|(n, c)| vec![n.clone(), c.to_string()])
        .collect();
    write_text(
        &out.join("fold_counts.csv"),
        &csv_table(&["feature", "fold_count"], &count_rows),
    )?;
    let count_entries: Vec<(String, usize)> = report
        .feature_names
        .iter()
        .cloned()
        .zip(report.fold_counts.iter().copied())
        .collect();
    write_text(
        &out.join("fold_counts.svg"),
        &count_chart_svg("fold counts", &count_entries, report.config.folds),
    )?;

    let top = report.ranking(ClassLabel::Positive)[0];
    println!(
        "hots report written to {}; mean fold accuracy {}; top positive-class feature: {} ({})",
        out.display(),
        fmt_sig6(report.mean_accuracy()),
        report.feature_names[top],
        fmt_sig6(report.positive_mean_weight[top]),
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_parses_hots_flags() {
        let cli = Cli::try_parse_from([
            "hollowtree",
            "hots",
            "--data",
            "d.csv",
            "--label-col",
            "species",
            "--positive",
            "virginica",
            "--negative",
            "versicolor",
            "--folds",
            "5",
            "--threshold",
            "0.7",
            "--seed",
            "9",
        ])
        .unwrap();
        match cli.command {
            Command::Hots(args) => {
                assert_eq!(args.folds, 5);
                assert_eq!(args.seed, 9);
                assert_eq!(args.boost.rounds, 100);
            }
            _ => panic!("wrong subcommand"),
        }
    }

    fn iris() -> Dataset {
        crate::dataset::bundled_iris_binary()
    }

    #[test]
    fn model_file_round_trips_both_kinds() {
        let ds = iris();
        let tree = fit_tree(&ds, 3, 1).unwrap();
        let file = ModelFile::DecisionTree(tree);
        let text = serde_json::to_string(&file).unwrap();
        assert!(text.contains("\"model\":\"decision_tree\""));
        let back: ModelFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, file);

        let model = fit_gbdt(
            &ds,
            &Hyperparams {
                n_rounds: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let file = ModelFile::Gbdt(model);
        let text = serde_json::to_string(&file).unwrap();
        assert!(text.contains("\"model\":\"gbdt\""));
        let back: ModelFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, file);
    }

    #[test]
    fn exit_codes_are_distinct_per_category() {
        let io = Error::Io {
            path: "x".into(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "gone"),
        };
        assert_eq!(exit_code(&io), 3);
        assert_eq!(exit_code(&Error::InvalidParameter("k".into())), 4);
        let w = Error::WriteFailed {
            path: "x".into(),
            source: std::io::Error::new(std::io::ErrorKind::PermissionDenied, "ro"),
        };
        assert_eq!(exit_code(&w), 5);
    }
}
