//! Simulation studies: the replicate × size × strategy accuracy matrix and
//! the forest importance comparison.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{Dataset, PredictorId};
use crate::error::{Error, Result};
use crate::forest::{derive_seed, gini_importance, Forest, ForestConfig, ImportanceReport};
use crate::missing::{best_transform, sc_transform, Strategy, StrategyTag};
use crate::model::Model;
use crate::policy::{AvailabilityPolicy, PolicySpec};
use crate::simgen::{
    binarize_gate, is_numeric, sample_dataset, sample_truth_with, sim_schema, CensorKind, CensorSpec, GroundTruthTree,
    TruthDesign, DEFAULT_NOISE, N_CATEGORICAL, N_NUMERIC,
};
use crate::splitting::Measure;
use crate::tree::FitOptions;

pub const DEFAULT_SIZES: [usize; 3] = [100, 500, 2000];
pub const FULL_SIZES: [usize; 5] = [100, 500, 1000, 2000, 5000];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// `None` leaves the data complete.
    pub censor: Option<CensorKind>,
    pub strategies: Vec<StrategyTag>,
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub validation_size: usize,
    pub test_size: usize,
    pub noise: f64,
    pub beta: usize,
    pub measure: Measure,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            censor: Some(CensorKind::MarGate),
            strategies: StrategyTag::ALL.to_vec(),
            sizes: DEFAULT_SIZES.to_vec(),
            replicates: 20,
            validation_size: 500,
            test_size: 2000,
            noise: DEFAULT_NOISE,
            beta: FitOptions::default().beta,
            measure: Measure::Gini,
            seed: 42,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(Error::Config("sizes must be non-empty and at least 1".into()));
        }
        if self.validation_size == 0 || self.test_size == 0 {
            return Err(Error::Config("validation and test sizes must be at least 1".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("no strategies selected".into()));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::Config(format!("noise must lie in [0, 1], got {}", self.noise)));
        }
        Ok(())
    }

    fn describe(&self) -> Vec<(&'static str, String)> {
        let join = |v: Vec<String>| v.join(",");
        vec![
            ("censor", self.censor.map_or("none".to_string(), |c| c.to_string())),
            ("strategies", join(self.strategies.iter().map(|s| s.to_string()).collect())),
            ("sizes", join(self.sizes.iter().map(|s| s.to_string()).collect())),
            ("replicates", self.replicates.to_string()),
            ("validation", self.validation_size.to_string()),
            ("test", self.test_size.to_string()),
            ("noise", self.noise.to_string()),
            ("beta", self.beta.to_string()),
            ("measure", self.measure.to_string()),
            ("seed", self.seed.to_string()),
            ("held-out censoring", "same mechanism as training".to_string()),
        ]
    }
}

/// One replicate at one training size: the three datasets after censoring
/// and the user policy BEST is given.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub truth: GroundTruthTree,
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    pub user_policy: AvailabilityPolicy,
    pub target: Option<PredictorId>,
}

fn pick(rng: &mut ChaCha8Rng, from: std::ops::Range<usize>) -> PredictorId {
    rng.gen_range(from)
}

/// Builds the scenario for `seed`: truth, datasets and censoring.
pub fn scenario(
    censor_kind: Option<CensorKind>,
    sizes: (usize, usize, usize),
    noise: f64,
    seed: u64,
) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let (design, gate_target) = match censor_kind {
        Some(CensorKind::MarGate) => {
            let gate = pick(&mut rng, N_NUMERIC..N_NUMERIC + N_CATEGORICAL);
            let target = pick(&mut rng, 0..N_NUMERIC);
            (TruthDesign::MarGate { gate, target }, Some((gate, target)))
        }
        _ => (TruthDesign::Standard, None),
    };
    let truth = sample_truth_with(derive_seed(seed, 1), &design);
    let draw = |n, k| sample_dataset(&truth, n, noise, derive_seed(seed, k));
    let (mut train, mut validation, mut test) = (draw(sizes.0, 2)?, draw(sizes.1, 3)?, draw(sizes.2, 4)?);
    if let Some((gate, _)) = gate_target {
        train = binarize_gate(&train, gate)?;
        validation = binarize_gate(&validation, gate)?;
        test = binarize_gate(&test, gate)?;
    }
    let schema = train.schema().clone();
    let Some(kind) = censor_kind else {
        return Ok(Scenario {
            user_policy: AvailabilityPolicy::permissive(&schema),
            truth,
            train,
            validation,
            test,
            target: None,
        });
    };
    let mut spec = CensorSpec::new(kind, derive_seed(seed, 5));
    let mut user_policy = AvailabilityPolicy::permissive(&schema);
    if let Some((gate, target)) = gate_target {
        spec.target = Some(target);
        spec.gate = Some(gate);
        spec.gate_open = vec![1];
        let text = format!(
            "unlock {} when {} in {{1}}\n",
            schema.predictor(target).name,
            schema.predictor(gate).name
        );
        user_policy = AvailabilityPolicy::compile(&PolicySpec::parse(&text)?, &schema)?;
    }
    let want_numeric = kind != CensorKind::MnarCategorical;
    let used: Vec<PredictorId> = truth
        .used_predictors()
        .into_iter()
        .filter(|&j| is_numeric(j) == want_numeric)
        .collect();
    let eligible = if used.is_empty() {
        (0..N_NUMERIC + N_CATEGORICAL).filter(|&j| is_numeric(j) == want_numeric).collect()
    } else {
        used
    };
    let resolved = spec.resolve(&train, &eligible)?;
    Ok(Scenario {
        truth,
        train: resolved.apply(&train)?,
        validation: resolved.apply(&validation)?,
        test: resolved.apply(&test)?,
        user_policy,
        target: Some(resolved.target),
    })
}

/// Test accuracy of each strategy in one scenario; trees are pruned on the
/// validation set.
pub fn evaluate(sc: &Scenario, strategies: &[StrategyTag], base: &FitOptions) -> Result<Vec<f64>> {
    strategies
        .iter()
        .map(|&tag| {
            let model = Model::train(&sc.train, "Y", &sc.user_policy, &Strategy::new(tag), base, Some(&sc.validation))?;
            model.accuracy(&sc.test)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub strategy: StrategyTag,
    pub size: usize,
    pub mean: f64,
    pub sd: f64,
    /// Per-replicate test accuracies, in replicate order.
    pub accuracies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn cell_seed(master: u64, replicate: usize, size_index: usize) -> u64 {
    derive_seed(derive_seed(master, replicate as u64), size_index as u64)
}

fn run_cell(cfg: &ExperimentConfig, r: usize, s: usize) -> Result<Vec<f64>> {
    let sizes = (cfg.sizes[s], cfg.validation_size, cfg.test_size);
    let sc = scenario(cfg.censor, sizes, cfg.noise, cell_seed(cfg.seed, r, s))?;
    let base = FitOptions {
        beta: cfg.beta,
        measure: cfg.measure,
        ..FitOptions::default()
    };
    evaluate(&sc, &cfg.strategies, &base)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_with(cfg, true)
}

/// Same as [`run_experiment`] without replicate-level threads.
pub fn run_experiment_serial(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_with(cfg, false)
}

fn run_with(cfg: &ExperimentConfig, parallel: bool) -> Result<ExperimentReport> {
    cfg.validate()?;
    let cells: Vec<(usize, usize)> = (0..cfg.replicates)
        .flat_map(|r| (0..cfg.sizes.len()).map(move |s| (r, s)))
        .collect();
    let results: Vec<Vec<f64>> = if parallel {
        cells.par_iter().map(|&(r, s)| run_cell(cfg, r, s)).collect::<Result<_>>()?
    } else {
        cells.iter().map(|&(r, s)| run_cell(cfg, r, s)).collect::<Result<_>>()?
    };
    let mut rows = Vec::new();
    for (si, &size) in cfg.sizes.iter().enumerate() {
        for (k, &strategy) in cfg.strategies.iter().enumerate() {
            let accuracies: Vec<f64> = cells
                .iter()
                .zip(&results)
                .filter(|((_, s), _)| *s == si)
                .map(|(_, acc)| acc[k])
                .collect();
            let (mean, sd) = mean_sd(&accuracies);
            rows.push(ReportRow {
                strategy,
                size,
                mean,
                sd,
                accuracies,
            });
        }
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        rows,
    })
}

impl ExperimentReport {
    pub fn get(&self, strategy: StrategyTag, size: usize) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.strategy == strategy && r.size == size)
    }

    /// Aligned table: one line per training size, a mean and S.D. column
    /// pair per strategy.
    pub fn to_table(&self) -> String {
        let mut out = String::from("BEST simulation report\n");
        for (k, v) in self.config.describe() {
            let _ = writeln!(out, "  {k:<19}{v}");
        }
        out.push('\n');
        let strategies = &self.config.strategies;
        let _ = write!(out, "{:>6}", "n");
        for s in strategies {
            let _ = write!(out, "  {:^16}", s.label());
        }
        out.push('\n');
        let _ = write!(out, "{:>6}", "");
        for _ in strategies {
            let _ = write!(out, "  {:>7} {:>8}", "Mean", "S.D.");
        }
        out.push('\n');
        for &size in &self.config.sizes {
            let _ = write!(out, "{size:>6}");
            for &s in strategies {
                let row = self.get(s, size).expect("every cell is reported");
                let _ = write!(out, "  {:>7.4} {:>8.4}", row.mean, row.sd);
            }
            out.push('\n');
        }
        out
    }

    /// Tab-separated sidecar with the same numbers as [`Self::to_table`].
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.config.describe() {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str("strategy\tsize\tmean\tsd\n");
        for r in &self.rows {
            let _ = writeln!(out, "{}\t{}\t{:.4}\t{:.4}", r.strategy.label(), r.size, r.mean, r.sd);
        }
        out
    }
}

/// Forest importance comparison: complete data, SC and BEST on the same
/// truth, with `X5` unused by the truth and masked when the response takes
/// one label.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceConfig {
    pub n: usize,
    pub n_trees: usize,
    pub mtry: Option<usize>,
    pub noise: f64,
    pub seed: u64,
}

impl Default for ImportanceConfig {
    fn default() -> Self {
        ImportanceConfig {
            n: 1000,
            n_trees: 100,
            mtry: None,
            noise: DEFAULT_NOISE,
            seed: 42,
        }
    }
}

/// Predictor the importance design censors.
pub const IMPORTANCE_TARGET: PredictorId = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceStudy {
    pub config: ImportanceConfig,
    /// Response label whose rows lose `X5`.
    pub censored_label: String,
    /// Complete, SC and BEST, in that order.
    pub rows: Vec<(String, ImportanceReport)>,
}

pub fn importance_study(cfg: &ImportanceConfig) -> Result<ImportanceStudy> {
    if cfg.n == 0 {
        return Err(Error::Config("sample size must be at least 1".into()));
    }
    let truth = sample_truth_with(derive_seed(cfg.seed, 1), &TruthDesign::Excluding(IMPORTANCE_TARGET));
    let complete = sample_dataset(&truth, cfg.n, cfg.noise, derive_seed(cfg.seed, 2))?;
    let spec = CensorSpec {
        target: Some(IMPORTANCE_TARGET),
        ..CensorSpec::new(CensorKind::MarResponse, derive_seed(cfg.seed, 3))
    };
    let resolved = spec.resolve(&complete, &[])?;
    let censored = resolved.apply(&complete)?;
    let label = match resolved.process {
        crate::simgen::Process::Response { label } => label,
        _ => unreachable!("response censoring"),
    };
    let forest_cfg = |k: u64, strategy: StrategyTag| ForestConfig {
        n_trees: cfg.n_trees,
        mtry: cfg.mtry,
        bootstrap: true,
        seed: derive_seed(cfg.seed, 10 + k),
        tree: Strategy::new(strategy).fit_options(&FitOptions {
            beta: 1,
            ..FitOptions::default()
        }),
    };
    let report = |ds: &Dataset, policy: &AvailabilityPolicy, k, tag| -> Result<ImportanceReport> {
        let f = Forest::fit(ds, policy, &forest_cfg(k, tag))?;
        Ok(gini_importance(&f, ds.schema()))
    };
    let complete_report = report(&complete, &AvailabilityPolicy::permissive(complete.schema()), 0, StrategyTag::Svi)?;
    let (sc_data, _) = sc_transform(&censored)?;
    let sc_report = report(&sc_data, &AvailabilityPolicy::permissive(sc_data.schema()), 1, StrategyTag::Sc)?;
    let (best_data, best_policy, _) = best_transform(&censored, &AvailabilityPolicy::permissive(censored.schema()))?;
    let best_report = report(&best_data, &best_policy, 2, StrategyTag::Best)?;
    Ok(ImportanceStudy {
        config: cfg.clone(),
        censored_label: sim_schema().classes()[label as usize].clone(),
        rows: vec![
            ("Complete".into(), complete_report),
            ("SC".into(), sc_report),
            ("BEST".into(), best_report),
        ],
    })
}

impl ImportanceStudy {
    pub fn row(&self, name: &str) -> Option<&ImportanceReport> {
        self.rows.iter().find(|(n, _)| n == name).map(|(_, r)| r)
    }

    /// Every predictor name appearing in any row, in schema order with
    /// indicators last.
    fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = Vec::new();
        for (_, r) in &self.rows {
            for n in &r.names {
                if !cols.contains(n) {
                    cols.push(n.clone());
                }
            }
        }
        cols
    }

    pub fn to_table(&self) -> String {
        let c = &self.config;
        let mut out = String::from("Gini decrease importance, mean per tree\n");
        let _ = writeln!(
            out,
            "  n={} trees={} mtry={} noise={} seed={} censored: X5 where Y={}\n",
            c.n,
            c.n_trees,
            c.mtry.map_or("auto".into(), |m| m.to_string()),
            c.noise,
            c.seed,
            self.censored_label
        );
        let cols = self.columns();
        let _ = write!(out, "{:<10}", "");
        for n in &cols {
            let _ = write!(out, "{n:>10}");
        }
        out.push('\n');
        for (name, r) in &self.rows {
            let _ = write!(out, "{name:<10}");
            for n in &cols {
                match r.get(n) {
                    Some(v) => {
                        let _ = write!(out, "{v:>10.4}");
                    }
                    None => {
                        let _ = write!(out, "{:>10}", "-");
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_tsv(&self) -> String {
        let c = &self.config;
        let mut out = format!(
            "# n={}\n# trees={}\n# mtry={}\n# noise={}\n# seed={}\n# censored_label={}\nrow\tpredictor\timportance\n",
            c.n,
            c.n_trees,
            c.mtry.map_or("auto".into(), |m| m.to_string()),
            c.noise,
            c.seed,
            self.censored_label
        );
        for (name, r) in &self.rows {
            for (p, v) in r.names.iter().zip(&r.mean) {
                let _ = writeln!(out, "{name}\t{p}\t{v:.4}");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            strategies: vec![StrategyTag::Svi, StrategyTag::Best],
            sizes: vec![60],
            replicates: 1,
            validation_size: 40,
            test_size: 80,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn sample_sd_and_single_value() {
        assert_eq!(mean_sd(&[0.5]), (0.5, 0.0));
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn single_replicate_two_strategies() {
        let rep = run_experiment(&tiny()).unwrap();
        assert_eq!(rep.rows.len(), 2);
        assert!(rep.rows.iter().all(|r| r.sd == 0.0 && (0.0..=1.0).contains(&r.mean)));
        let tsv = rep.to_tsv();
        assert!(tsv.contains("# seed=42"));
        assert_eq!(tsv.lines().filter(|l| !l.starts_with('#')).count(), 3);
    }

    #[test]
    fn parallel_equals_serial() {
        let cfg = ExperimentConfig {
            replicates: 3,
            sizes: vec![40, 80],
            censor: Some(CensorKind::MnarCategorical),
            ..tiny()
        };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment_serial(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_table(), b.to_table());
    }

    #[test]
    fn table_and_tsv_agree() {
        let rep = run_experiment(&ExperimentConfig {
            replicates: 2,
            ..tiny()
        })
        .unwrap();
        let table = rep.to_table();
        for line in rep.to_tsv().lines().filter(|l| !l.starts_with('#')).skip(1) {
            let f: Vec<&str> = line.split('\t').collect();
            assert!(table.contains(f[2]) && table.contains(f[3]), "{line}");
        }
    }

    #[test]
    fn gate_scenario_masks_target_where_gate_closed() {
        let sc = scenario(Some(CensorKind::MarGate), (300, 50, 50), 0.3, 9).unwrap();
        let TruthDesign::MarGate { gate, target } = sc.truth.design else { panic!() };
        assert_eq!(sc.target, Some(target));
        for i in 0..sc.train.n() {
            let open = sc.train.category(gate, i).unwrap() == 1;
            assert_eq!(sc.train.is_observed(target, i), open);
        }
        assert!(sc.user_policy.is_gated(target));
    }

    #[test]
    fn invalid_configs_rejected() {
        for cfg in [
            ExperimentConfig { replicates: 0, ..tiny() },
            ExperimentConfig { sizes: vec![0], ..tiny() },
            ExperimentConfig { strategies: vec![], ..tiny() },
        ] {
            assert!(run_experiment(&cfg).is_err());
        }
    }

    #[test]
    fn importance_rows_have_expected_columns() {
        let study = importance_study(&ImportanceConfig {
            n: 300,
            n_trees: 10,
            ..ImportanceConfig::default()
        })
        .unwrap();
        assert!(study.row("Complete").unwrap().get("M(X5)").is_none());
        assert!(study.row("SC").unwrap().get("M(X5)").is_none());
        assert!(study.row("BEST").unwrap().get("M(X5)").is_some());
        assert!(study.to_table().contains("M(X5)"));
    }
}
