//! Ground-truth trees, simulated datasets and censoring processes.
//!
//! The truth is a full binary tree of depth 4 over eight predictors: four
//! standard normal (`X1`..`X4`) and four categorical with four equiprobable
//! levels (`X5`..`X8`). Leaves carry one of four labels; a sampled row keeps
//! its leaf label with probability `1 − noise` and otherwise gets one of the
//! other three labels uniformly.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{ClassId, Column, Dataset, Predictor, PredictorId, Schema, Value};
use crate::error::{Error, Result};
use crate::splitting::{Split, SplitRule};

pub const N_NUMERIC: usize = 4;
pub const N_CATEGORICAL: usize = 4;
pub const N_LEVELS: usize = 4;
pub const N_CLASSES: usize = 4;
pub const TRUTH_DEPTH: usize = 4;
pub const DEFAULT_NOISE: f64 = 0.3;

const N_INTERNAL: usize = (1 << TRUTH_DEPTH) - 1;
const N_LEAVES: usize = 1 << TRUTH_DEPTH;

/// Schema shared by every simulated dataset.
pub fn sim_schema() -> Schema {
    let mut predictors: Vec<Predictor> = (1..=N_NUMERIC).map(|j| Predictor::numeric(format!("X{j}"))).collect();
    let levels: Vec<String> = (0..N_LEVELS).map(|c| format!("c{c}")).collect();
    predictors.extend((N_NUMERIC + 1..=N_NUMERIC + N_CATEGORICAL).map(|j| Predictor::categorical(format!("X{j}"), levels.clone())));
    let classes = (0..N_CLASSES).map(|q| char::from(b'A' + q as u8).to_string()).collect();
    Schema::new(predictors, classes).expect("simulation schema is valid")
}

pub fn is_numeric(j: PredictorId) -> bool {
    j < N_NUMERIC
}

/// Constraints on how the truth tree is drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum TruthDesign {
    Standard,
    /// The root splits categorical `gate` into `{c0,c1}` (closed) and
    /// `{c2,c3}` (open) and the gate is not used again; numeric `target` is
    /// split in the open child and never on the closed side.
    MarGate { gate: PredictorId, target: PredictorId },
    /// `predictor` is never used.
    Excluding(PredictorId),
}

/// Categories of the gate that keep the target observed.
pub const GATE_OPEN: [u32; 2] = [2, 3];

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthTree {
    /// Internal splits in heap order: node `i` has children `2i+1`, `2i+2`.
    pub splits: Vec<Split>,
    pub labels: Vec<ClassId>,
    /// Probability of reaching each leaf.
    pub leaf_mass: Vec<f64>,
    pub design: TruthDesign,
}

#[derive(Clone)]
struct Constraints {
    intervals: Vec<(f64, f64)>,
    allowed: Vec<Vec<u32>>,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

fn region_mass(c: &Constraints) -> f64 {
    let n = std_normal();
    let num: f64 = c.intervals.iter().map(|&(lo, hi)| n.cdf(hi) - n.cdf(lo)).product();
    let cat: f64 = c.allowed.iter().map(|a| a.len() as f64 / N_LEVELS as f64).product();
    num * cat
}

struct Builder<'a> {
    rng: ChaCha8Rng,
    design: &'a TruthDesign,
    splits: Vec<Option<Split>>,
    masses: Vec<f64>,
}

impl Builder<'_> {
    fn eligible(&self, c: &Constraints, closed_side: bool) -> Vec<PredictorId> {
        (0..N_NUMERIC + N_CATEGORICAL)
            .filter(|&j| match self.design {
                TruthDesign::Excluding(x) => j != *x,
                TruthDesign::MarGate { gate, target } => j != *gate && !(closed_side && j == *target),
                TruthDesign::Standard => true,
            })
            .filter(|&j| is_numeric(j) || c.allowed[j - N_NUMERIC].len() >= 2)
            .collect()
    }

    fn numeric_split(&mut self, j: PredictorId, c: &Constraints) -> Split {
        let n = std_normal();
        let (lo, hi) = c.intervals[j];
        let u: f64 = self.rng.gen_range(0.1..0.9);
        let (plo, phi) = (n.cdf(lo), n.cdf(hi));
        let t = n.inverse_cdf(plo + u * (phi - plo));
        Split::numeric(j, t.clamp(lo.max(-1e6), hi.min(1e6)))
    }

    fn categorical_split(&mut self, j: PredictorId, c: &Constraints) -> Split {
        let allowed = &c.allowed[j - N_NUMERIC];
        let nsub = (1u32 << allowed.len()) - 2;
        let r = self.rng.gen_range(1..=nsub);
        let left: Vec<u32> = allowed
            .iter()
            .enumerate()
            .filter(|(b, _)| r >> b & 1 == 1)
            .map(|(_, &cat)| cat)
            .collect();
        Split::categorical(j, left)
    }

    fn children(split: &Split, c: &Constraints) -> (Constraints, Constraints) {
        let (mut l, mut r) = (c.clone(), c.clone());
        match &split.rule {
            SplitRule::Threshold(t) => {
                l.intervals[split.predictor].1 = *t;
                r.intervals[split.predictor].0 = *t;
            }
            SplitRule::Categories(set) => {
                let k = split.predictor - N_NUMERIC;
                l.allowed[k].retain(|x| set.contains(*x));
                r.allowed[k].retain(|x| !set.contains(*x));
            }
        }
        (l, r)
    }

    fn build(&mut self, node: usize, depth: usize, c: Constraints, closed_side: bool) {
        if depth == TRUTH_DEPTH {
            self.masses[node - N_INTERNAL] = region_mass(&c);
            return;
        }
        let split = match (self.design, node) {
            (TruthDesign::MarGate { gate, .. }, 0) => Split::categorical(*gate, vec![0, 1]),
            (TruthDesign::MarGate { target, .. }, 2) => self.numeric_split(*target, &c),
            _ => {
                let eligible = self.eligible(&c, closed_side);
                let j = *eligible.choose(&mut self.rng).expect("numeric predictors stay eligible");
                if is_numeric(j) {
                    self.numeric_split(j, &c)
                } else {
                    self.categorical_split(j, &c)
                }
            }
        };
        let (l, r) = Self::children(&split, &c);
        self.splits[node] = Some(split);
        let gate_root = matches!(self.design, TruthDesign::MarGate { .. }) && node == 0;
        self.build(2 * node + 1, depth + 1, l, closed_side || gate_root);
        self.build(2 * node + 2, depth + 1, r, closed_side);
    }
}

/// Leaf labels with distinct siblings, every label used, and each label's
/// noiseless mass within `[0.05, 0.6]` when such a labelling is found.
fn draw_labels(rng: &mut ChaCha8Rng, masses: &[f64]) -> Vec<ClassId> {
    let mut last = Vec::new();
    for _ in 0..1000 {
        let mut labels = Vec::with_capacity(N_LEAVES);
        for _ in 0..N_LEAVES / 2 {
            let a = rng.gen_range(0..N_CLASSES as ClassId);
            let mut b = rng.gen_range(0..N_CLASSES as ClassId - 1);
            if b >= a {
                b += 1;
            }
            labels.push(a);
            labels.push(b);
        }
        let mut per_class = [0.0; N_CLASSES];
        for (l, m) in labels.iter().zip(masses) {
            per_class[*l as usize] += m;
        }
        let all_used = (0..N_CLASSES as ClassId).all(|q| labels.contains(&q));
        if all_used && per_class.iter().all(|&p| (0.05..=0.6).contains(&p)) {
            return labels;
        }
        if all_used {
            last = labels;
        }
    }
    last
}

pub fn sample_truth(seed: u64) -> GroundTruthTree {
    sample_truth_with(seed, &TruthDesign::Standard)
}

pub fn sample_truth_with(seed: u64, design: &TruthDesign) -> GroundTruthTree {
    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(seed),
        design,
        splits: vec![None; N_INTERNAL],
        masses: vec![0.0; N_LEAVES],
    };
    let root = Constraints {
        intervals: vec![(f64::NEG_INFINITY, f64::INFINITY); N_NUMERIC],
        allowed: vec![(0..N_LEVELS as u32).collect(); N_CATEGORICAL],
    };
    b.build(0, 0, root, false);
    let labels = draw_labels(&mut b.rng, &b.masses);
    GroundTruthTree {
        splits: b.splits.into_iter().map(|s| s.expect("every internal node is split")).collect(),
        labels,
        leaf_mass: b.masses,
        design: design.clone(),
    }
}

impl GroundTruthTree {
    /// Leaf index (0..16) reached by a fully observed row.
    pub fn leaf_of(&self, row: &[Value]) -> usize {
        let mut node = 0;
        while node < N_INTERNAL {
            let s = &self.splits[node];
            node = match s.side_of_value(row[s.predictor]) {
                crate::policy::Side::Left => 2 * node + 1,
                crate::policy::Side::Right => 2 * node + 2,
            };
        }
        node - N_INTERNAL
    }

    pub fn label_of(&self, row: &[Value]) -> ClassId {
        self.labels[self.leaf_of(row)]
    }

    /// Predictors used by at least one split, ascending.
    pub fn used_predictors(&self) -> Vec<PredictorId> {
        let mut used: Vec<PredictorId> = self.splits.iter().map(|s| s.predictor).collect();
        used.sort_unstable();
        used.dedup();
        used
    }
}

/// `n` rows drawn from the predictor marginals and labelled by `truth`
/// with label noise `noise`.
pub fn sample_dataset(truth: &GroundTruthTree, n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Config("sample size must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::Config(format!("noise must lie in [0, 1], got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = std_normal();
    let m = N_NUMERIC + N_CATEGORICAL;
    let mut num = vec![Vec::new(); N_NUMERIC];
    let mut cat = vec![Vec::new(); N_CATEGORICAL];
    let mut response = Vec::with_capacity(n);
    let mut row = vec![Value::Numeric(0.0); m];
    for _ in 0..n {
        for (j, col) in num.iter_mut().enumerate() {
            let x: f64 = rng.sample(normal);
            col.push(x);
            row[j] = Value::Numeric(x);
        }
        for (k, col) in cat.iter_mut().enumerate() {
            let c = rng.gen_range(0..N_LEVELS as u32);
            col.push(c);
            row[N_NUMERIC + k] = Value::Category(c);
        }
        let label = truth.label_of(&row);
        let y = if rng.gen::<f64>() < noise {
            let other = rng.gen_range(0..N_CLASSES as ClassId - 1);
            if other >= label {
                other + 1
            } else {
                other
            }
        } else {
            label
        };
        response.push(y);
    }
    let columns = num
        .into_iter()
        .map(Column::Numeric)
        .chain(cat.into_iter().map(Column::Categorical))
        .collect();
    Dataset::new(sim_schema(), columns, vec![vec![true; n]; m], response, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensorKind {
    MarGate,
    MarResponse,
    MnarNumeric,
    MnarCategorical,
}

impl CensorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CensorKind::MarGate => "mar-gate",
            CensorKind::MarResponse => "mar-response",
            CensorKind::MnarNumeric => "mnar-numeric",
            CensorKind::MnarCategorical => "mnar-categorical",
        }
    }
}

impl std::fmt::Display for CensorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CensorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "mar-gate" => Ok(CensorKind::MarGate),
            "mar-response" => Ok(CensorKind::MarResponse),
            "mnar-numeric" => Ok(CensorKind::MnarNumeric),
            "mnar-categorical" => Ok(CensorKind::MnarCategorical),
            _ => Err(Error::Config(format!("unknown censoring kind {s:?}"))),
        }
    }
}

/// Which side of the threshold is masked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    Below,
    Above,
}

/// A censoring process; unset parameters are drawn by [`CensorSpec::resolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct CensorSpec {
    pub kind: CensorKind,
    pub target: Option<PredictorId>,
    pub gate: Option<PredictorId>,
    pub gate_open: Vec<u32>,
    pub label: Option<ClassId>,
    pub threshold: Option<f64>,
    pub tail: Option<Tail>,
    pub categories: Option<Vec<u32>>,
    pub seed: u64,
}

impl CensorSpec {
    pub fn new(kind: CensorKind, seed: u64) -> Self {
        CensorSpec {
            kind,
            target: None,
            gate: None,
            gate_open: GATE_OPEN.to_vec(),
            label: None,
            threshold: None,
            tail: None,
            categories: None,
            seed,
        }
    }

    /// Fixes every random parameter. `eligible` lists the predictors a
    /// random target may be drawn from; threshold ranges come from `ds`.
    pub fn resolve(&self, ds: &Dataset, eligible: &[PredictorId]) -> Result<Censor> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let schema = ds.schema();
        let want_numeric = match self.kind {
            CensorKind::MarGate | CensorKind::MnarNumeric => Some(true),
            CensorKind::MnarCategorical => Some(false),
            CensorKind::MarResponse => None,
        };
        let target = match self.target {
            Some(t) => t,
            None => {
                let pool: Vec<PredictorId> = eligible
                    .iter()
                    .copied()
                    .filter(|&j| want_numeric.map_or(true, |w| schema.predictor(j).kind.is_numeric() == w))
                    .collect();
                *pool
                    .choose(&mut rng)
                    .ok_or_else(|| Error::Config(format!("no eligible target for {} censoring", self.kind)))?
            }
        };
        if target >= schema.n_predictors() {
            return Err(Error::Config(format!("target {target} out of range")));
        }
        let numeric = schema.predictor(target).kind.is_numeric();
        if want_numeric.is_some_and(|w| w != numeric) {
            return Err(Error::Config(format!(
                "{} censoring needs a {} target, {:?} is not",
                self.kind,
                if numeric { "categorical" } else { "numeric" },
                schema.predictor(target).name
            )));
        }
        let process = match self.kind {
            CensorKind::MarGate => {
                let gate = self
                    .gate
                    .ok_or_else(|| Error::Config("gate censoring needs a gate predictor".into()))?;
                if schema.predictor(gate).kind.is_numeric() {
                    return Err(Error::Config("the gate predictor must be categorical".into()));
                }
                Process::Gate {
                    gate,
                    open: self.gate_open.clone(),
                }
            }
            CensorKind::MarResponse => Process::Response {
                label: self
                    .label
                    .unwrap_or_else(|| rng.gen_range(0..ds.n_classes() as ClassId)),
            },
            CensorKind::MnarNumeric => {
                let tail = self.tail.unwrap_or(if rng.gen::<bool>() { Tail::Above } else { Tail::Below });
                let threshold = match self.threshold {
                    Some(t) => t,
                    None => {
                        let obs: Vec<f64> = (0..ds.n()).filter_map(|i| ds.numeric(target, i)).collect();
                        let lo = obs.iter().copied().fold(f64::INFINITY, f64::min);
                        let hi = obs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        if !(lo < hi) {
                            lo
                        } else {
                            rng.gen_range(lo..hi)
                        }
                    }
                };
                Process::Threshold { threshold, tail }
            }
            CensorKind::MnarCategorical => {
                let c = schema.predictor(target).n_categories() as u32;
                let categories = match &self.categories {
                    Some(s) => s.clone(),
                    None => {
                        let r = rng.gen_range(1..(1u32 << c) - 1);
                        (0..c).filter(|b| r >> b & 1 == 1).collect()
                    }
                };
                Process::Subset { categories }
            }
        };
        Ok(Censor {
            kind: self.kind,
            target,
            process,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Process {
    Gate { gate: PredictorId, open: Vec<u32> },
    Response { label: ClassId },
    Threshold { threshold: f64, tail: Tail },
    Subset { categories: Vec<u32> },
}

/// A fully parameterised censoring process, applied identically to every
/// dataset of a replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct Censor {
    pub kind: CensorKind,
    pub target: PredictorId,
    pub process: Process,
}

impl Censor {
    /// Masks cells of the target; values, responses and row count are
    /// untouched.
    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        let j = self.target;
        let mask: Vec<bool> = (0..ds.n())
            .map(|i| {
                let observed = ds.is_observed(j, i);
                observed
                    && match &self.process {
                        Process::Gate { gate, open } => ds.category(*gate, i).is_some_and(|g| open.contains(&g)),
                        Process::Response { label } => ds.response(i) != *label,
                        Process::Threshold { threshold, tail } => {
                            let x = ds.numeric(j, i).unwrap_or(*threshold);
                            match tail {
                                Tail::Below => x >= *threshold,
                                Tail::Above => x <= *threshold,
                            }
                        }
                        Process::Subset { categories } => {
                            ds.category(j, i).is_some_and(|c| !categories.contains(&c))
                        }
                    }
            })
            .collect();
        ds.with_mask(j, mask)
    }
}

/// Replaces categorical `gate` by a 0/1 predictor equal to 1 on
/// [`GATE_OPEN`]. Lossless for data drawn from a gate design truth, which
/// never splits the gate below the root.
pub fn binarize_gate(ds: &Dataset, gate: PredictorId) -> Result<Dataset> {
    let p = ds.schema().predictor(gate);
    if p.kind.is_numeric() {
        return Err(Error::Config(format!("gate {:?} must be categorical", p.name)));
    }
    let codes = (0..ds.n())
        .map(|i| ds.category(gate, i).map_or(0, |c| u32::from(GATE_OPEN.contains(&c))))
        .collect();
    ds.with_column(
        gate,
        Predictor::categorical(p.name.clone(), ["0", "1"]),
        Column::Categorical(codes),
        ds.mask(gate).to_vec(),
    )
}

/// Resolves `spec` on `ds` and applies it.
pub fn censor(ds: &Dataset, spec: &CensorSpec, eligible: &[PredictorId]) -> Result<Dataset> {
    spec.resolve(ds, eligible)?.apply(ds)
}
