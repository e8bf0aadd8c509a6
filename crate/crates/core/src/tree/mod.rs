//! Branch-exclusive tree induction, prediction and empirical loss.

mod format;
mod prune;

use std::fmt;
use std::str::FromStr;

pub use prune::{prune_sequence, select_by_validation, PruneSequence};

use crate::data::{Cells, ClassId, Dataset, PredictorId};
use crate::error::{Error, Result};
use crate::forest::FeatureSampler;
use crate::missing::{build_surrogates, dbi_route_fit, StrategyTag, Surrogate};
use crate::policy::{Availability, AvailabilityPolicy, Side};
use crate::splitting::{self, best_split_among, ClassHistogram, Measure, Region, Split};

/// Splits whose impurity decrease is at most this fraction of the node
/// weight are rejected.
pub const ZERO_GAIN_TOLERANCE: f64 = 1e-12;

/// What happens to observations whose split value is missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Routing {
    /// Dropped during fitting; at prediction they follow the heavier child.
    #[default]
    Exclude,
    /// Sent to both children with proportional weights; prediction votes
    /// over every reachable leaf.
    Distribute,
    /// Routed by up to `max` surrogate splits, then the heavier child.
    Surrogate { max: usize },
}

impl fmt::Display for Routing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Routing::Exclude => f.write_str("exclude"),
            Routing::Distribute => f.write_str("distribute"),
            Routing::Surrogate { max } => write!(f, "surrogate:{max}"),
        }
    }
}

impl FromStr for Routing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exclude" => Ok(Routing::Exclude),
            "distribute" => Ok(Routing::Distribute),
            _ => s
                .strip_prefix("surrogate:")
                .and_then(|m| m.parse().ok())
                .map(|max| Routing::Surrogate { max })
                .ok_or_else(|| Error::Config(format!("unknown routing {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Regions with weighted count at most `beta` become leaves.
    pub beta: usize,
    pub measure: Measure,
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub routing: Routing,
    pub strategy: StrategyTag,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            beta: 5,
            measure: Measure::Gini,
            max_depth: 30,
            min_child_weight: 1.0,
            routing: Routing::Exclude,
            strategy: StrategyTag::Best,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Weighted count at most beta.
    TooFew,
    /// A single class.
    Pure,
    /// No available predictor varies.
    NoVariation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Grow,
    Stop(StopReason),
}

/// Checks the three growth conditions on a nonempty region.
pub fn check_stopping(region: &Region, beta: usize, ds: &Dataset) -> Verdict {
    if region.weight() <= beta as f64 {
        return Verdict::Stop(StopReason::TooFew);
    }
    if region.histogram(ds).n_present() <= 1 {
        return Verdict::Stop(StopReason::Pure);
    }
    if !region.available.available().any(|j| splitting::varies(ds, region, j)) {
        return Verdict::Stop(StopReason::NoVariation);
    }
    Verdict::Grow
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeStats {
    pub weight: f64,
    pub impurity: f64,
    pub distribution: ClassHistogram,
    pub available: Availability,
    pub depth: usize,
}

impl NodeStats {
    /// `n·Q` of the node.
    pub fn cost(&self) -> f64 {
        self.weight * self.impurity
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub split: Split,
    pub left: Node,
    pub right: Node,
    pub surrogates: Vec<Surrogate>,
    pub fallback: Side,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Leaf,
    Internal(Box<Branch>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub stats: NodeStats,
    /// Majority class of `stats.distribution`.
    pub label: ClassId,
    pub kind: NodeKind,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf)
    }

    pub fn branch(&self) -> Option<&Branch> {
        match &self.kind {
            NodeKind::Internal(b) => Some(b),
            NodeKind::Leaf => None,
        }
    }

    pub fn n_leaves(&self) -> usize {
        match &self.kind {
            NodeKind::Leaf => 1,
            NodeKind::Internal(b) => b.left.n_leaves() + b.right.n_leaves(),
        }
    }

    pub fn depth(&self) -> usize {
        match &self.kind {
            NodeKind::Leaf => 0,
            NodeKind::Internal(b) => 1 + b.left.depth().max(b.right.depth()),
        }
    }

    fn collapse(&mut self) {
        self.kind = NodeKind::Leaf;
    }

    /// Preorder traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Node)) {
        f(self);
        if let NodeKind::Internal(b) = &self.kind {
            b.left.visit(f);
            b.right.visit(f);
        }
    }
}

/// A fitted classification tree over one (possibly transformed) schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub root: Node,
    pub schema_fingerprint: String,
    pub policy_fingerprint: String,
    pub options: FitOptions,
}

impl Tree {
    /// Grows a tree on every row of `ds`.
    pub fn fit(ds: &Dataset, policy: &AvailabilityPolicy, options: &FitOptions) -> Result<Tree> {
        let region = Region::root(ds, policy.root().clone());
        Tree::fit_region(ds, policy, options, region, None)
    }

    pub(crate) fn fit_region(
        ds: &Dataset,
        policy: &AvailabilityPolicy,
        options: &FitOptions,
        region: Region,
        sampler: Option<&mut FeatureSampler>,
    ) -> Result<Tree> {
        if options.beta < 1 {
            return Err(Error::Config("beta must be at least 1".into()));
        }
        let schema_fingerprint = ds.schema().fingerprint();
        if policy.schema_fingerprint() != schema_fingerprint {
            return Err(Error::Fingerprint {
                expected: schema_fingerprint,
                found: policy.schema_fingerprint().to_string(),
            });
        }
        if region.is_empty() {
            return Err(Error::Data("cannot fit a tree on an empty region".into()));
        }
        let mut grower = Grower {
            ds,
            policy,
            options,
            sampler,
            excluded: 0.0,
        };
        let root = grower.grow(region, 0);
        if grower.excluded > 0.0 {
            log::warn!(
                "{} weight of observations with a missing split value was excluded while fitting",
                grower.excluded
            );
        }
        Ok(Tree {
            root,
            schema_fingerprint,
            policy_fingerprint: policy.fingerprint(),
            options: options.clone(),
        })
    }

    pub fn routing(&self) -> Routing {
        self.options.routing
    }

    pub fn n_leaves(&self) -> usize {
        self.root.n_leaves()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn predict(&self, obs: &impl Cells) -> ClassId {
        match self.routing() {
            Routing::Distribute => crate::missing::dbi_predict(self, obs),
            _ => self.leaf_for(obs).label,
        }
    }

    /// Leaf reached by single-path routing (fallback or surrogates at
    /// missing split values).
    pub fn leaf_for(&self, obs: &impl Cells) -> &Node {
        let mut node = &self.root;
        while let NodeKind::Internal(b) = &node.kind {
            let side = b.split.side_of(obs).unwrap_or_else(|| match self.routing() {
                Routing::Surrogate { .. } => b
                    .surrogates
                    .iter()
                    .find_map(|s| s.side_of(obs))
                    .unwrap_or(b.fallback),
                _ => b.fallback,
            });
            node = match side {
                Side::Left => &b.left,
                Side::Right => &b.right,
            };
        }
        node
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Vec<ClassId> {
        (0..ds.n()).map(|i| self.predict(&ds.row(i))).collect()
    }

    /// Preorder list of nodes.
    pub fn nodes(&self) -> Vec<&Node> {
        let mut out = Vec::new();
        self.root.visit(&mut |n| out.push(n));
        out
    }
}

/// Weighted fraction of misclassified observations.
pub fn empirical_loss(tree: &Tree, ds: &Dataset) -> f64 {
    let mut wrong = 0.0;
    for i in 0..ds.n() {
        if tree.predict(&ds.row(i)) != ds.response(i) {
            wrong += ds.weight(i);
        }
    }
    wrong / ds.total_weight()
}

/// A split on a root-locked predictor with no unlocking ancestor.
#[derive(Debug, Clone, PartialEq)]
pub struct GatingViolation {
    pub predictor: PredictorId,
    pub depth: usize,
}

/// Audits every root-to-node path: each split on a predictor locked at the
/// root must sit below an ancestor split with a firing rule enabling it.
pub fn gating_violations(tree: &Tree, policy: &AvailabilityPolicy) -> Vec<GatingViolation> {
    fn walk<'a>(
        node: &'a Node,
        path: &mut Vec<(&'a Split, Side)>,
        policy: &AvailabilityPolicy,
        out: &mut Vec<GatingViolation>,
    ) {
        let NodeKind::Internal(b) = &node.kind else {
            return;
        };
        let j = b.split.predictor;
        if !policy.root().is_available(j) {
            let unlocked = path.iter().any(|(split, side)| {
                policy
                    .rules()
                    .iter()
                    .any(|r| r.enables.contains(&j) && policy.rule_fires(r, split, *side))
            });
            if !unlocked {
                out.push(GatingViolation {
                    predictor: j,
                    depth: node.stats.depth,
                });
            }
        }
        for (side, child) in [(Side::Left, &b.left), (Side::Right, &b.right)] {
            path.push((&b.split, side));
            walk(child, path, policy, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    walk(&tree.root, &mut Vec::new(), policy, &mut out);
    out
}

struct Grower<'a, 's> {
    ds: &'a Dataset,
    policy: &'a AvailabilityPolicy,
    options: &'a FitOptions,
    sampler: Option<&'s mut FeatureSampler>,
    excluded: f64,
}

impl Grower<'_, '_> {
    fn leaf(stats: NodeStats) -> Node {
        Node {
            label: stats.distribution.argmax(),
            stats,
            kind: NodeKind::Leaf,
        }
    }

    /// Single-path partition; rows with the split value missing are dropped
    /// (exclude) or follow surrogates, then the fallback side.
    fn partition(&mut self, region: &Region, split: &Split, surrogates: &[Surrogate], fallback: Side) -> (Region, Region) {
        let ds = self.ds;
        let empty = || Region {
            rows: Vec::new(),
            weights: Vec::new(),
            available: region.available.clone(),
        };
        let (mut left, mut right) = (empty(), empty());
        for (&i, &w) in region.rows.iter().zip(&region.weights) {
            let side = match split.side_in(ds, i) {
                Some(side) => side,
                None if self.options.routing == Routing::Exclude => {
                    self.excluded += w;
                    continue;
                }
                None => surrogates
                    .iter()
                    .find_map(|s| s.side_of(&ds.row(i)))
                    .unwrap_or(fallback),
            };
            let target = match side {
                Side::Left => &mut left,
                Side::Right => &mut right,
            };
            target.rows.push(i);
            target.weights.push(w);
        }
        (left, right)
    }

    fn grow(&mut self, region: Region, depth: usize) -> Node {
        let ds = self.ds;
        let distribution = region.histogram(ds);
        let stats = NodeStats {
            weight: distribution.total(),
            impurity: self.options.measure.of(&distribution),
            distribution,
            available: region.available.clone(),
            depth,
        };
        if depth >= self.options.max_depth
            || check_stopping(&region, self.options.beta, ds) != Verdict::Grow
        {
            return Self::leaf(stats);
        }
        let varying: Vec<PredictorId> = region
            .available
            .available()
            .filter(|&j| splitting::varies(ds, &region, j))
            .collect();
        let candidates = match self.sampler.as_deref_mut() {
            Some(s) => s.draw(region.available.count(), &varying),
            None => varying,
        };
        let Some(eval) = best_split_among(
            ds,
            &region,
            self.options.measure,
            self.options.min_child_weight,
            &candidates,
        ) else {
            return Self::leaf(stats);
        };
        if eval.gain() <= ZERO_GAIN_TOLERANCE * stats.weight.max(1.0) {
            return Self::leaf(stats);
        }

        let split = eval.split.clone();
        let fallback = eval.heavier_side();
        let surrogates = match self.options.routing {
            Routing::Surrogate { max } => build_surrogates(ds, &region, &split, max),
            _ => Vec::new(),
        };
        let (left_avail, right_avail) = self.policy.apply_unlock(&region.available, &split);
        let (mut left, mut right) = match self.options.routing {
            Routing::Distribute => dbi_route_fit(ds, &region, &split),
            _ => self.partition(&region, &split, &surrogates, fallback),
        };
        left.available = left_avail;
        right.available = right_avail;
        drop(region);
        let left = self.grow(left, depth + 1);
        let right = self.grow(right, depth + 1);
        Node {
            label: stats.distribution.argmax(),
            stats,
            kind: NodeKind::Internal(Box::new(Branch {
                split,
                left,
                right,
                surrogates,
                fallback,
            })),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Observation, Predictor, Schema, Value};
    use crate::policy::PolicySpec;

    fn schema2() -> Schema {
        Schema::new(
            vec![Predictor::numeric("x"), Predictor::categorical("g", ["0", "1"])],
            vec!["A".into(), "B".into()],
        )
        .unwrap()
    }

    fn ds_from(rows: &[(Option<f64>, Option<u32>, u32)]) -> Dataset {
        let cells: Vec<_> = rows
            .iter()
            .map(|(x, g, _)| vec![x.map(Value::Numeric), g.map(Value::Category)])
            .collect();
        Dataset::from_rows(schema2(), &cells, rows.iter().map(|r| r.2).collect()).unwrap()
    }

    fn opts(beta: usize) -> FitOptions {
        FitOptions {
            beta,
            ..FitOptions::default()
        }
    }

    #[test]
    fn stopping_conditions() {
        let rows: Vec<_> = (0..5).map(|i| (Some(i as f64), Some(0), i % 2)).collect();
        let ds = ds_from(&rows);
        let region = Region::root(&ds, Availability::all(2));
        assert_eq!(check_stopping(&region, 10, &ds), Verdict::Stop(StopReason::TooFew));

        let rows: Vec<_> = (0..100).map(|i| (Some(i as f64), Some(1), 0)).collect();
        let ds = ds_from(&rows);
        let region = Region::root(&ds, Availability::all(2));
        assert_eq!(check_stopping(&region, 5, &ds), Verdict::Stop(StopReason::Pure));

        let rows: Vec<_> = (0..20).map(|i| (Some(1.0), Some(1), i % 2)).collect();
        let ds = ds_from(&rows);
        let region = Region::root(&ds, Availability::all(2));
        assert_eq!(check_stopping(&region, 5, &ds), Verdict::Stop(StopReason::NoVariation));
        let ds = ds_from(&[(Some(1.0), Some(0), 0), (Some(2.0), Some(1), 1)]);
        let region = Region::root(&ds, Availability::all(2));
        assert_eq!(check_stopping(&region, 1, &ds), Verdict::Grow);
    }

    #[test]
    fn constant_response_gives_single_leaf() {
        let rows: Vec<_> = (0..30).map(|i| (Some(i as f64), Some(i % 2), 1)).collect();
        let ds = ds_from(&rows);
        let t = Tree::fit(&ds, &AvailabilityPolicy::permissive(ds.schema()), &opts(1)).unwrap();
        assert!(t.root.is_leaf());
        assert_eq!(t.root.label, 1);
    }

    #[test]
    fn beta_zero_rejected() {
        let ds = ds_from(&[(Some(1.0), Some(0), 0), (Some(2.0), Some(1), 1)]);
        assert!(Tree::fit(&ds, &AvailabilityPolicy::permissive(ds.schema()), &opts(0)).is_err());
    }

    #[test]
    fn policy_for_other_schema_rejected() {
        let ds = ds_from(&[(Some(1.0), Some(0), 0), (Some(2.0), Some(1), 1)]);
        let other = Schema::new(vec![Predictor::numeric("z")], vec!["A".into(), "B".into()]).unwrap();
        let err = Tree::fit(&ds, &AvailabilityPolicy::permissive(&other), &opts(1)).unwrap_err();
        assert_eq!(err.exit_code(), 5);
    }

    #[test]
    fn xor_like_data_is_separated() {
        // class = (x > 2) xor (g == 1), noiseless
        let mut rows = Vec::new();
        for i in 0..40 {
            let x = (i % 5) as f64;
            let g = (i / 5 % 2) as u32;
            rows.push((Some(x), Some(g), ((x > 2.0) as u32) ^ g));
        }
        let ds = ds_from(&rows);
        let t = Tree::fit(&ds, &AvailabilityPolicy::permissive(ds.schema()), &opts(1)).unwrap();
        assert_eq!(empirical_loss(&t, &ds), 0.0);
    }

    fn gate_tree() -> (Tree, AvailabilityPolicy) {
        // x only matters when g == 1; x missing whenever g == 0
        let mut rows = Vec::new();
        for i in 0..60 {
            let g = (i % 2) as u32;
            let x = (i / 2) as f64;
            if g == 1 {
                rows.push((Some(x), Some(1), (x > 14.0) as u32));
            } else {
                rows.push((None, Some(0), 0));
            }
        }
        let ds = ds_from(&rows);
        let policy = AvailabilityPolicy::compile(
            &PolicySpec::parse("unlock x when g in {1}").unwrap(),
            ds.schema(),
        )
        .unwrap();
        let t = Tree::fit(&ds, &policy, &opts(1)).unwrap();
        (t, policy)
    }

    #[test]
    fn gated_predictor_only_below_unlock() {
        let (t, policy) = gate_tree();
        assert!(gating_violations(&t, &policy).is_empty());
        let b = t.root.branch().unwrap();
        assert_eq!(b.split.predictor, 1);
        assert_eq!(b.right.branch().unwrap().split.predictor, 0);
    }

    #[test]
    fn missing_gated_value_routes_away() {
        let (t, _) = gate_tree();
        let schema = schema2();
        let obs = Observation::new(&schema, vec![None, Some(Value::Category(0))]).unwrap();
        let leaf = t.leaf_for(&obs);
        assert!(leaf.is_leaf());
        assert!(!leaf.stats.available.is_available(0));
        assert_eq!(t.predict(&obs), 0);
    }

    fn one_split_tree(fallback: Side) -> Tree {
        let leaf = |label: ClassId, counts: Vec<f64>| Node {
            stats: NodeStats {
                weight: counts.iter().sum(),
                impurity: 0.0,
                distribution: ClassHistogram::from_counts(counts),
                available: Availability::all(2),
                depth: 1,
            },
            label,
            kind: NodeKind::Leaf,
        };
        Tree {
            root: Node {
                stats: NodeStats {
                    weight: 10.0,
                    impurity: 0.5,
                    distribution: ClassHistogram::from_counts(vec![5.0, 5.0]),
                    available: Availability::all(2),
                    depth: 0,
                },
                label: 0,
                kind: NodeKind::Internal(Box::new(Branch {
                    split: Split::numeric(0, 1.5),
                    left: leaf(0, vec![5.0, 0.0]),
                    right: leaf(1, vec![0.0, 5.0]),
                    surrogates: vec![],
                    fallback,
                })),
            },
            schema_fingerprint: schema2().fingerprint(),
            policy_fingerprint: String::new(),
            options: FitOptions::default(),
        }
    }

    #[test]
    fn prediction_routing() {
        let t = one_split_tree(Side::Right);
        let s = schema2();
        let low = Observation::new(&s, vec![Some(Value::Numeric(1.0)), None]).unwrap();
        let missing = Observation::new(&s, vec![None, None]).unwrap();
        assert_eq!(t.predict(&low), 0);
        assert_eq!(t.predict(&missing), 1);
        assert_eq!(one_split_tree(Side::Left).predict(&missing), 0);
    }

    #[test]
    fn loss_arithmetic() {
        let t = one_split_tree(Side::Left);
        let rows: Vec<_> = (0..10)
            .map(|i| (Some(if i < 5 { 1.0 } else { 2.0 }), Some(0), if i < 3 { 1 } else if i < 5 { 0 } else { 1 }))
            .collect();
        let ds = ds_from(&rows);
        assert!((empirical_loss(&t, &ds) - 0.3).abs() < 1e-15);
        let perfect = ds_from(&[(Some(1.0), None, 0), (Some(2.0), None, 1)]);
        assert_eq!(empirical_loss(&t, &perfect), 0.0);
        let wrong = ds_from(&[(Some(1.0), None, 1), (Some(2.0), None, 0)]);
        assert_eq!(empirical_loss(&t, &wrong), 1.0);
    }

    #[test]
    fn routing_text() {
        for r in [Routing::Exclude, Routing::Distribute, Routing::Surrogate { max: 5 }] {
            assert_eq!(r.to_string().parse::<Routing>().unwrap(), r);
        }
    }
}
