//! Bagged trees with per-node feature subsampling and Gini-decrease
//! importance.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{Cells, ClassId, Dataset, PredictorId, Schema};
use crate::error::{Error, Result};
use crate::policy::AvailabilityPolicy;
use crate::splitting::{Measure, Region};
use crate::tree::{FitOptions, Node, NodeKind, Tree};

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Candidates per node; `None` means the ceiling of the square root of
    /// the node's available count.
    pub mtry: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
    /// Growth options for every tree (forest trees are not pruned).
    pub tree: FitOptions,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            mtry: None,
            bootstrap: true,
            seed: 0,
            tree: FitOptions::default(),
        }
    }
}

impl ForestConfig {
    fn validate(&self, m: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("a forest needs at least one tree".into()));
        }
        if let Some(k) = self.mtry {
            if k == 0 || k > m {
                return Err(Error::Config(format!("mtry must lie in 1..={m}, got {k}")));
            }
        }
        Ok(())
    }
}

/// SplitMix64 finaliser.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of stream `index` under `master`; independent of scheduling.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(1)))
}

/// Draws the per-node candidate predictors of a forest tree.
#[derive(Debug)]
pub struct FeatureSampler {
    rng: ChaCha8Rng,
    mtry: Option<usize>,
}

impl FeatureSampler {
    pub fn new(seed: u64, mtry: Option<usize>) -> Self {
        FeatureSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            mtry,
        }
    }

    /// An ascending subset of `varying`. Its size is `mtry` (or the
    /// square-root default over `available` predictors), capped by the
    /// number of varying predictors.
    pub fn draw(&mut self, available: usize, varying: &[PredictorId]) -> Vec<PredictorId> {
        let k = self
            .mtry
            .unwrap_or_else(|| (available as f64).sqrt().ceil() as usize)
            .max(1);
        if varying.len() <= k {
            return varying.to_vec();
        }
        let mut picked: Vec<PredictorId> = sample(&mut self.rng, varying.len(), k)
            .into_iter()
            .map(|i| varying[i])
            .collect();
        picked.sort_unstable();
        picked
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub seeds: Vec<u64>,
    pub config: ForestConfig,
}

fn fit_one(ds: &Dataset, policy: &AvailabilityPolicy, cfg: &ForestConfig, seed: u64) -> Result<Tree> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let region = if cfg.bootstrap {
        let n = ds.n();
        let mut counts = vec![0u32; n];
        for _ in 0..n {
            counts[rng.gen_range(0..n)] += 1;
        }
        let rows: Vec<usize> = (0..n).filter(|&i| counts[i] > 0).collect();
        Region {
            weights: rows.iter().map(|&i| f64::from(counts[i]) * ds.weight(i)).collect(),
            rows,
            available: policy.root().clone(),
        }
    } else {
        Region::root(ds, policy.root().clone())
    };
    let mut sampler = FeatureSampler::new(rng.gen(), cfg.mtry);
    Tree::fit_region(ds, policy, &cfg.tree, region, Some(&mut sampler))
}

impl Forest {
    /// Fits `cfg.n_trees` trees concurrently; tree `t` depends only on
    /// `(cfg.seed, t)`.
    pub fn fit(ds: &Dataset, policy: &AvailabilityPolicy, cfg: &ForestConfig) -> Result<Forest> {
        cfg.validate(ds.n_predictors())?;
        let seeds: Vec<u64> = (0..cfg.n_trees as u64).map(|t| derive_seed(cfg.seed, t)).collect();
        let trees = seeds
            .par_iter()
            .map(|&s| fit_one(ds, policy, cfg, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Forest {
            trees,
            seeds,
            config: cfg.clone(),
        })
    }

    /// Same result as [`Forest::fit`], one tree at a time.
    pub fn fit_serial(ds: &Dataset, policy: &AvailabilityPolicy, cfg: &ForestConfig) -> Result<Forest> {
        cfg.validate(ds.n_predictors())?;
        let seeds: Vec<u64> = (0..cfg.n_trees as u64).map(|t| derive_seed(cfg.seed, t)).collect();
        let trees = seeds
            .iter()
            .map(|&s| fit_one(ds, policy, cfg, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Forest {
            trees,
            seeds,
            config: cfg.clone(),
        })
    }

    pub fn predict(&self, obs: &impl Cells) -> ClassId {
        predict_forest(self, obs)
    }

    pub fn accuracy(&self, ds: &Dataset) -> f64 {
        let mut right = 0.0;
        for i in 0..ds.n() {
            if self.predict(&ds.row(i)) == ds.response(i) {
                right += ds.weight(i);
            }
        }
        right / ds.total_weight()
    }

    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(out, "bestfmt=1");
        let _ = writeln!(out, "kind=forest");
        let _ = writeln!(out, "n_trees={}", c.n_trees);
        let _ = writeln!(out, "mtry={}", c.mtry.map_or("auto".to_string(), |k| k.to_string()));
        let _ = writeln!(out, "bootstrap={}", c.bootstrap);
        let _ = writeln!(out, "seed={}", c.seed);
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(out, "tree_seeds={}", seeds.join(","));
        for t in &self.trees {
            out.push_str(&t.to_text());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Forest> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut field = |key: &str| -> Result<(usize, String)> {
            let (no, line) = lines
                .next()
                .ok_or_else(|| Error::format(0, format!("missing {key}")))?;
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .map(|v| (no, v.to_string()))
                .ok_or_else(|| Error::format(no, format!("expected `{key}=`, found {line:?}")))
        };
        let (no, v) = field("bestfmt")?;
        if v != "1" {
            return Err(Error::format(no, format!("unsupported format version {v:?}")));
        }
        let (no, kind) = field("kind")?;
        if kind != "forest" {
            return Err(Error::format(no, format!("expected kind=forest, found {kind:?}")));
        }
        let bad = |no: usize, k: &str| Error::format(no, format!("bad value for {k}"));
        let (no, v) = field("n_trees")?;
        let n_trees: usize = v.parse().map_err(|_| bad(no, "n_trees"))?;
        let (no, v) = field("mtry")?;
        let mtry = if v == "auto" {
            None
        } else {
            Some(v.parse().map_err(|_| bad(no, "mtry"))?)
        };
        let (no, v) = field("bootstrap")?;
        let bootstrap = v.parse().map_err(|_| bad(no, "bootstrap"))?;
        let (no, v) = field("seed")?;
        let seed = v.parse().map_err(|_| bad(no, "seed"))?;
        let (no, v) = field("tree_seeds")?;
        let seeds = v
            .split(',')
            .map(|s| s.parse().map_err(|_| bad(no, "tree_seeds")))
            .collect::<Result<Vec<u64>>>()?;
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            trees.push(Tree::parse_lines(&mut lines)?);
        }
        if seeds.len() != n_trees {
            return Err(Error::format(no, "tree_seeds length differs from n_trees"));
        }
        let tree = trees.first().map(|t| t.options.clone()).unwrap_or_default();
        Ok(Forest {
            trees,
            seeds,
            config: ForestConfig {
                n_trees,
                mtry,
                bootstrap,
                seed,
                tree,
            },
        })
    }
}

/// Plurality vote; ties go to the first class.
pub fn predict_forest(f: &Forest, obs: &impl Cells) -> ClassId {
    let k = f.trees[0].root.stats.distribution.n_classes();
    let mut votes = vec![0usize; k];
    for t in &f.trees {
        votes[t.predict(obs) as usize] += 1;
    }
    let mut best = 0;
    for (q, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = q;
        }
    }
    best as ClassId
}

/// Per-predictor Gini decrease, summed over trees and averaged per tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceReport {
    pub names: Vec<String>,
    pub total: Vec<f64>,
    pub mean: Vec<f64>,
}

impl ImportanceReport {
    /// Mean importance per tree.
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|j| self.mean[j])
    }

    /// Predictor indices by decreasing importance (lower index on ties).
    pub fn ranking(&self) -> Vec<PredictorId> {
        let mut order: Vec<PredictorId> = (0..self.total.len()).collect();
        order.sort_by(|&a, &b| self.total[b].total_cmp(&self.total[a]).then(a.cmp(&b)));
        order
    }

    pub fn top(&self) -> &str {
        &self.names[self.ranking()[0]]
    }
}

/// Weighted Gini decrease `n·Q − (n_L·Q_L + n_R·Q_R)` of every internal
/// node, accumulated on the split predictor.
pub fn gini_importance(f: &Forest, schema: &Schema) -> ImportanceReport {
    let m = schema.n_predictors();
    let mut total = vec![0.0; m];
    for t in &f.trees {
        let recorded = t.options.measure == Measure::Gini;
        t.root.visit(&mut |node| {
            if let NodeKind::Internal(b) = &node.kind {
                let cost = |n: &Node| {
                    if recorded {
                        n.stats.cost()
                    } else {
                        Measure::Gini.weighted(&n.stats.distribution)
                    }
                };
                let decrease = cost(node) - cost(&b.left) - cost(&b.right);
                total[b.split.predictor] += decrease.max(0.0);
            }
        });
    }
    let n = f.trees.len() as f64;
    ImportanceReport {
        names: schema.predictors().iter().map(|p| p.name.clone()).collect(),
        mean: total.iter().map(|v| v / n).collect(),
        total,
    }
}
