//! Command-line surface of the `best` binary.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::csv_io::{self, ColumnType};
use crate::data::{Dataset, PredictorId};
use crate::error::{Error, Result};
use crate::experiment::{
    importance_study, run_experiment, run_experiment_serial, ExperimentConfig, ImportanceConfig, FULL_SIZES,
};
use crate::missing::{Strategy, StrategyTag};
use crate::model::Model;
use crate::policy::{AvailabilityPolicy, PolicySpec};
use crate::simgen::{self, CensorKind, CensorSpec, Tail, TruthDesign};
use crate::splitting::Measure;
use crate::tree::{empirical_loss, prune_sequence, select_by_validation, FitOptions};

#[derive(Debug, Parser)]
#[command(name = "best", version, about = "Branch-exclusive split trees for data with missing values")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a tree on a CSV file and write the model.
    Fit(FitArgs),
    /// Predict labels for a CSV file with a saved model.
    Predict(PredictArgs),
    /// Prune a saved model against a validation CSV.
    Prune(PruneArgs),
    /// Run the simulated replicate × size × strategy accuracy study.
    Experiment(ExperimentArgs),
    /// Compare forest importances on complete, SC and BEST data.
    Importance(ImportanceArgs),
    /// Write a simulated, optionally censored, dataset as CSV.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Training CSV; the last column is the response.
    #[arg(long)]
    pub train: PathBuf,
    /// Policy file with `root:` and `unlock` lines.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Column types file overriding inference.
    #[arg(long)]
    pub types: Option<PathBuf>,
    #[arg(long, default_value = "best")]
    pub strategy: StrategyTag,
    #[arg(long, default_value_t = 5)]
    pub beta: usize,
    #[arg(long, default_value = "gini")]
    pub measure: Measure,
    /// Prune with the validation CSV, or a held-out share of the training rows.
    #[arg(long)]
    pub prune: bool,
    #[arg(long)]
    pub validation: Option<PathBuf>,
    /// Share of training rows held out for pruning without `--validation`.
    #[arg(long, default_value_t = 0.25)]
    pub holdout: f64,
    #[arg(long, env = "BEST_SEED", default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Predictions file, one label per line; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub validation: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// mar-gate, mar-response, mnar-numeric, mnar-categorical or none.
    #[arg(long, default_value = "mar-gate")]
    pub censor: String,
    #[arg(long, value_delimiter = ',', default_values_t = StrategyTag::ALL.to_vec())]
    pub strategies: Vec<StrategyTag>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![100, 500, 2000])]
    pub sizes: Vec<usize>,
    /// Training sizes 100, 500, 1000, 2000 and 5000.
    #[arg(long)]
    pub full: bool,
    #[arg(long, default_value_t = 20)]
    pub replicates: usize,
    #[arg(long, default_value_t = 500)]
    pub validation_size: usize,
    #[arg(long, default_value_t = 2000)]
    pub test_size: usize,
    #[arg(long, default_value_t = simgen::DEFAULT_NOISE)]
    pub noise: f64,
    #[arg(long, default_value_t = 5)]
    pub beta: usize,
    #[arg(long, default_value = "gini")]
    pub measure: Measure,
    #[arg(long, env = "BEST_SEED", default_value_t = 42)]
    pub seed: u64,
    /// Run replicates one at a time.
    #[arg(long)]
    pub serial: bool,
    /// Report path; a `.tsv` sidecar is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ImportanceArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    #[arg(long)]
    pub mtry: Option<usize>,
    #[arg(long, default_value_t = simgen::DEFAULT_NOISE)]
    pub noise: f64,
    #[arg(long, env = "BEST_SEED", default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = simgen::DEFAULT_NOISE)]
    pub noise: f64,
    /// Seed of the truth tree; the sample uses `--seed`.
    #[arg(long, default_value_t = 1)]
    pub truth_seed: u64,
    #[arg(long, env = "BEST_SEED", default_value_t = 42)]
    pub seed: u64,
    /// Censoring kind; omitted leaves the data complete.
    #[arg(long)]
    pub censor: Option<CensorKind>,
    /// Censored predictor name, e.g. X2; random among those the truth uses.
    #[arg(long)]
    pub target: Option<String>,
    /// Gate predictor name for mar-gate.
    #[arg(long)]
    pub gate: Option<String>,
    /// Response label whose rows lose the target (mar-response).
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// below or above (mnar-numeric).
    #[arg(long)]
    pub tail: Option<String>,
    /// Masked category labels (mnar-categorical).
    #[arg(long, value_delimiter = ',')]
    pub categories: Option<Vec<String>>,
    #[arg(long)]
    pub out: PathBuf,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load_types(path: Option<&Path>) -> Result<HashMap<String, ColumnType>> {
    match path {
        Some(p) => csv_io::parse_types(&read_text(p)?),
        None => Ok(HashMap::new()),
    }
}

fn load_policy(path: Option<&Path>, ds: &Dataset) -> Result<AvailabilityPolicy> {
    match path {
        Some(p) => AvailabilityPolicy::compile(&PolicySpec::parse(&read_text(p)?)?, ds.schema()),
        None => Ok(AvailabilityPolicy::permissive(ds.schema())),
    }
}

fn holdout(ds: &Dataset, share: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(share > 0.0 && share < 1.0) {
        return Err(Error::Config(format!("holdout share must lie in (0, 1), got {share}")));
    }
    let mut idx: Vec<usize> = (0..ds.n()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let k = ((ds.n() as f64 * share).round() as usize).clamp(1, ds.n().saturating_sub(1).max(1));
    let (val, train) = idx.split_at(k);
    let (mut val, mut train) = (val.to_vec(), train.to_vec());
    val.sort_unstable();
    train.sort_unstable();
    if train.is_empty() {
        return Err(Error::Data("too few rows to hold out a validation set".into()));
    }
    Ok((ds.select_rows(&train)?, ds.select_rows(&val)?))
}

/// Returns the lines printed on success.
pub fn cmd_fit(a: &FitArgs) -> Result<String> {
    let (raw, response) = csv_io::load_training(&a.train, &load_types(a.types.as_deref())?)?;
    let policy = load_policy(a.policy.as_deref(), &raw)?;
    let base = FitOptions {
        beta: a.beta,
        measure: a.measure,
        ..FitOptions::default()
    };
    let (train, validation) = match (a.prune, &a.validation) {
        (false, _) => (raw, None),
        (true, Some(p)) => {
            let (val, _) = csv_io::load_with_schema(p, raw.schema())?;
            (raw, Some(val))
        }
        (true, None) => {
            let (t, v) = holdout(&raw, a.holdout, a.seed)?;
            (t, Some(v))
        }
    };
    let model = Model::train(&train, &response, &policy, &Strategy::new(a.strategy), &base, validation.as_ref())?;
    write_text(&a.out, &model.to_text())?;
    let loss = empirical_loss(&model.tree, &model.prepare(&train)?);
    Ok(format!(
        "strategy {}\nleaves {}\ndepth {}\ntraining loss {:.4}\nmodel written to {}\n",
        a.strategy,
        model.tree.n_leaves(),
        model.tree.depth(),
        loss,
        a.out.display()
    ))
}

fn load_model(path: &Path) -> Result<Model> {
    Model::from_text(&read_text(path)?)
}

/// Loads `path` against the model's schema. A column set that differs from
/// the model's predictors is a fingerprint mismatch.
fn load_for_model(model: &Model, path: &Path) -> Result<(Dataset, bool)> {
    let table = csv_io::read_table(path)?;
    let names: Vec<&str> = model.schema.predictors().iter().map(|p| p.name.as_str()).collect();
    let missing: Vec<&str> = names.iter().copied().filter(|n| !table.headers.iter().any(|h| h == n)).collect();
    if !missing.is_empty() {
        return Err(Error::Fingerprint {
            expected: model.schema.fingerprint(),
            found: format!("columns {:?} (missing {})", table.headers, missing.join(", ")),
        });
    }
    csv_io::table_with_schema(&table, &model.schema)
}

pub fn cmd_predict(a: &PredictArgs) -> Result<String> {
    let model = load_model(&a.model)?;
    let (ds, has_response) = load_for_model(&model, &a.data)?;
    let pred = model.predict(&ds)?;
    let classes = model.schema.classes();
    let mut lines = String::new();
    for p in &pred {
        lines.push_str(&classes[*p as usize]);
        lines.push('\n');
    }
    let mut msg = String::new();
    match &a.out {
        Some(path) => {
            write_text(path, &lines)?;
            msg.push_str(&format!("{} predictions written to {}\n", pred.len(), path.display()));
        }
        None => msg.push_str(&lines),
    }
    if has_response {
        msg.push_str(&format!("accuracy {:.4}\n", model.accuracy(&ds)?));
    }
    Ok(msg)
}

pub fn cmd_prune(a: &PruneArgs) -> Result<String> {
    let mut model = load_model(&a.model)?;
    let (val, _) = load_for_model(&model, &a.validation)?;
    let seq = prune_sequence(&model.tree);
    let before = model.tree.n_leaves();
    model.tree = select_by_validation(&seq, &model.prepare(&val)?);
    write_text(&a.out, &model.to_text())?;
    let alphas: Vec<String> = seq.alphas().iter().map(|x| format!("{x:.4}")).collect();
    Ok(format!(
        "alphas {}\nleaves {} -> {}\nvalidation loss {:.4}\nmodel written to {}\n",
        alphas.join(" "),
        before,
        model.tree.n_leaves(),
        empirical_loss(&model.tree, &model.prepare(&val)?),
        a.out.display()
    ))
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("tsv")
}

pub fn experiment_config(a: &ExperimentArgs) -> Result<ExperimentConfig> {
    let censor = match a.censor.as_str() {
        "none" => None,
        s => Some(s.parse()?),
    };
    let cfg = ExperimentConfig {
        censor,
        strategies: a.strategies.clone(),
        sizes: if a.full { FULL_SIZES.to_vec() } else { a.sizes.clone() },
        replicates: a.replicates,
        validation_size: a.validation_size,
        test_size: a.test_size,
        noise: a.noise,
        beta: a.beta,
        measure: a.measure,
        seed: a.seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_experiment(a: &ExperimentArgs) -> Result<String> {
    let cfg = experiment_config(a)?;
    let report = if a.serial {
        run_experiment_serial(&cfg)?
    } else {
        run_experiment(&cfg)?
    };
    let table = report.to_table();
    if let Some(out) = &a.out {
        write_text(out, &table)?;
        write_text(&sidecar(out), &report.to_tsv())?;
    }
    Ok(table)
}

pub fn cmd_importance(a: &ImportanceArgs) -> Result<String> {
    let study = importance_study(&ImportanceConfig {
        n: a.n,
        n_trees: a.trees,
        mtry: a.mtry,
        noise: a.noise,
        seed: a.seed,
    })?;
    let table = study.to_table();
    if let Some(out) = &a.out {
        write_text(out, &table)?;
        write_text(&sidecar(out), &study.to_tsv())?;
    }
    Ok(table)
}

fn predictor_index(name: &str) -> Result<PredictorId> {
    simgen::sim_schema()
        .index_of(name)
        .ok_or_else(|| Error::Config(format!("unknown simulated predictor {name:?}")))
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<String> {
    let schema = simgen::sim_schema();
    let target = a.target.as_deref().map(predictor_index).transpose()?;
    let gate = a.gate.as_deref().map(predictor_index).transpose()?;
    let design = match (a.censor, gate, target) {
        (Some(CensorKind::MarGate), Some(g), Some(t)) => TruthDesign::MarGate { gate: g, target: t },
        (Some(CensorKind::MarGate), _, _) => {
            return Err(Error::Config("mar-gate needs both --gate and --target".into()));
        }
        _ => TruthDesign::Standard,
    };
    let truth = simgen::sample_truth_with(a.truth_seed, &design);
    let mut ds = simgen::sample_dataset(&truth, a.n, a.noise, a.seed)?;
    if let Some(kind) = a.censor {
        let mut spec = CensorSpec::new(kind, a.seed ^ 0x5eed);
        spec.target = target;
        spec.gate = gate;
        if kind == CensorKind::MarGate {
            ds = simgen::binarize_gate(&ds, gate.expect("checked above"))?;
            spec.gate_open = vec![1];
        }
        spec.label = a
            .label
            .as_deref()
            .map(|l| schema.class_index(l).ok_or_else(|| Error::Config(format!("unknown label {l:?}"))))
            .transpose()?;
        spec.threshold = a.threshold;
        spec.tail = match a.tail.as_deref() {
            None => None,
            Some("below") => Some(Tail::Below),
            Some("above") => Some(Tail::Above),
            Some(other) => return Err(Error::Config(format!("tail must be below or above, got {other:?}"))),
        };
        if let Some(cats) = &a.categories {
            let t = target.ok_or_else(|| Error::Config("--categories needs --target".into()))?;
            let p = schema.predictor(t);
            spec.categories = Some(
                cats.iter()
                    .map(|c| p.category_index(c).ok_or_else(|| Error::Config(format!("unknown category {c:?}"))))
                    .collect::<Result<_>>()?,
            );
        }
        ds = simgen::censor(&ds, &spec, &truth.used_predictors())?;
    }
    csv_io::write_dataset_file(&ds, "Y", &a.out)?;
    let missing: usize = (0..ds.n_predictors()).map(|j| ds.missing_count(j)).sum();
    Ok(format!("{} rows, {} missing cells written to {}\n", ds.n(), missing, a.out.display()))
}

pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Prune(a) => cmd_prune(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Importance(a) => cmd_importance(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}
