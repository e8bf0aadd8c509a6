//! Predictor availability: which predictors may be split on at the root, and
//! which splits unlock further predictors in their children.
//!
//! Policies are written as line-oriented text:
//!
//! ```text
//! # comments start with '#'
//! root: credits grade_math
//! unlock grade_stat when credits_stat > 0 side=right
//! unlock x5 when M(x5) in {1}
//! ```
//!
//! A numeric rule `when g > b` fires for a split `g <= s` when `s >= b`, and
//! `when g <= b` fires when `s <= b`. The update goes to the child named by
//! `side` (default: right for `>`, left for `<=`). A categorical rule fires
//! for a child whose whole category set lies inside the listed set. Children
//! of a categorical split are `left = subset`, `right = complement in the
//! schema`.

use std::fmt;

use sha2::{Digest, Sha256};

use crate::data::{PredictorId, PredictorKind, Schema};
use crate::error::{Error, Result};
use crate::splitting::{Split, SplitRule};

/// Per-predictor availability flags.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Availability(Vec<bool>);

impl Availability {
    pub fn all(m: usize) -> Self {
        Availability(vec![true; m])
    }

    pub fn none(m: usize) -> Self {
        Availability(vec![false; m])
    }

    pub fn from_flags(flags: Vec<bool>) -> Self {
        Availability(flags)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_available(&self, j: PredictorId) -> bool {
        self.0[j]
    }

    pub fn enable(&mut self, j: PredictorId) {
        self.0[j] = true;
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }

    pub fn available(&self) -> impl Iterator<Item = PredictorId> + '_ {
        self.0.iter().enumerate().filter(|(_, b)| **b).map(|(j, _)| j)
    }

    pub fn flags(&self) -> &[bool] {
        &self.0
    }

    /// True when every predictor available here is also available in `other`.
    pub fn is_subset_of(&self, other: &Availability) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| !a || *b)
    }

    /// `0`/`1` string, one character per predictor.
    pub fn to_bits(&self) -> String {
        self.0.iter().map(|b| if *b { '1' } else { '0' }).collect()
    }

    pub fn from_bits(bits: &str) -> Option<Self> {
        bits.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Availability)
    }

    fn extended(&self, m: usize) -> Self {
        let mut v = self.0.clone();
        v.resize(m, true);
        Availability(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }

    pub fn parse(s: &str) -> Option<Side> {
        match s {
            "left" | "L" => Some(Side::Left),
            "right" | "R" => Some(Side::Right),
            _ => None,
        }
    }

    pub fn flip(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// Comparison between the chosen split point and a rule's bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// split point >= bound
    AtLeast,
    /// split point <= bound
    AtMost,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    Numeric {
        side: Side,
        bound: f64,
        direction: Direction,
    },
    /// Sorted category codes.
    Categorical { categories: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnlockRule {
    pub gate: PredictorId,
    pub condition: Condition,
    /// Predictors enabled in the matching child, ascending.
    pub enables: Vec<PredictorId>,
}

/// Parsed but unvalidated policy text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolicySpec {
    pub root: Option<Vec<String>>,
    pub rules: Vec<RuleSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleAction {
    Unlock,
    /// Parsed so that it can be rejected with a precise message.
    Lock,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleSpec {
    pub action: RuleAction,
    pub targets: Vec<String>,
    pub gate: String,
    pub test: GateTest,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateTest {
    Greater { bound: f64, side: Option<Side> },
    AtMost { bound: f64, side: Option<Side> },
    In(Vec<String>),
}

impl PolicySpec {
    pub fn parse(text: &str) -> Result<PolicySpec> {
        let mut spec = PolicySpec::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("root:") {
                if spec.root.is_some() {
                    return Err(Error::Policy(format!("line {line_no}: duplicate root line")));
                }
                spec.root = Some(rest.split_whitespace().map(str::to_string).collect());
                continue;
            }
            spec.rules.push(parse_rule(line).map_err(|m| Error::Policy(format!("line {line_no}: {m}")))?);
        }
        Ok(spec)
    }
}

fn parse_rule(line: &str) -> std::result::Result<RuleSpec, String> {
    let (head, cond) = line
        .split_once(" when ")
        .ok_or_else(|| "expected `unlock <target>... when <condition>`".to_string())?;
    let mut head = head.split_whitespace();
    let action = match head.next() {
        Some("unlock") => RuleAction::Unlock,
        Some("lock") => RuleAction::Lock,
        other => return Err(format!("unknown directive {other:?}")),
    };
    let targets: Vec<String> = head.map(str::to_string).collect();
    if targets.is_empty() {
        return Err("rule names no target predictor".into());
    }
    let cond = cond.trim();
    if let Some((gate, set)) = cond.split_once(" in ") {
        let set = set.trim();
        let inner = set
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(|| format!("category set must be written {{a,b}}, got {set:?}"))?;
        let cats: Vec<String> = inner
            .split(',')
            .map(|c| c.trim().to_string())
            .filter(|c| !c.is_empty())
            .collect();
        if cats.is_empty() {
            return Err("empty category set".into());
        }
        return Ok(RuleSpec {
            action,
            targets,
            gate: gate.trim().to_string(),
            test: GateTest::In(cats),
        });
    }
    let toks: Vec<&str> = cond.split_whitespace().collect();
    let (gate, op) = match toks.as_slice() {
        [gate, op, ..] => (gate.to_string(), *op),
        _ => return Err(format!("cannot parse condition {cond:?}")),
    };
    let bound = toks
        .get(2)
        .and_then(|b| b.parse::<f64>().ok())
        .filter(|b| b.is_finite())
        .ok_or_else(|| format!("numeric rule on {gate:?} is missing its threshold bound"))?;
    let mut side = None;
    for extra in &toks[3..] {
        let value = extra
            .strip_prefix("side=")
            .ok_or_else(|| format!("unexpected token {extra:?}"))?;
        side = Some(Side::parse(value).ok_or_else(|| format!("bad side {value:?}"))?);
    }
    let test = match op {
        ">" => GateTest::Greater { bound, side },
        "<=" => GateTest::AtMost { bound, side },
        _ => return Err(format!("unknown comparison {op:?}, use `>` or `<=`")),
    };
    Ok(RuleSpec {
        action,
        targets,
        gate,
        test,
    })
}

/// Compiled availability structure bound to one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct AvailabilityPolicy {
    root: Availability,
    rules: Vec<UnlockRule>,
    names: Vec<String>,
    categories: Vec<Option<Vec<String>>>,
    schema_fingerprint: String,
}

impl AvailabilityPolicy {
    /// Every predictor available at the root, no rules.
    pub fn permissive(schema: &Schema) -> Self {
        AvailabilityPolicy {
            root: Availability::all(schema.n_predictors()),
            rules: Vec::new(),
            names: schema.predictors().iter().map(|p| p.name.clone()).collect(),
            categories: schema
                .predictors()
                .iter()
                .map(|p| p.categories().map(<[String]>::to_vec))
                .collect(),
            schema_fingerprint: schema.fingerprint(),
        }
    }

    /// Validates `spec` against `schema`.
    ///
    /// Without a `root:` line every predictor that is not the target of an
    /// unlock rule is available at the root.
    pub fn compile(spec: &PolicySpec, schema: &Schema) -> Result<Self> {
        let mut policy = AvailabilityPolicy::permissive(schema);
        let lookup = |name: &str| {
            schema
                .index_of(name)
                .ok_or_else(|| Error::Policy(format!("unknown predictor {name:?}")))
        };
        for rule in &spec.rules {
            let gate = lookup(&rule.gate)?;
            if rule.action == RuleAction::Lock {
                return Err(Error::Policy(format!(
                    "rule on {:?} disables predictors; availability may only grow down a branch",
                    rule.gate
                )));
            }
            let mut enables = rule
                .targets
                .iter()
                .map(|t| lookup(t))
                .collect::<Result<Vec<_>>>()?;
            enables.sort_unstable();
            enables.dedup();
            let predictor = schema.predictor(gate);
            let condition = match (&rule.test, &predictor.kind) {
                (GateTest::Greater { bound, side }, PredictorKind::Numeric) => Condition::Numeric {
                    side: side.unwrap_or(Side::Right),
                    bound: *bound,
                    direction: Direction::AtLeast,
                },
                (GateTest::AtMost { bound, side }, PredictorKind::Numeric) => Condition::Numeric {
                    side: side.unwrap_or(Side::Left),
                    bound: *bound,
                    direction: Direction::AtMost,
                },
                (GateTest::In(_), PredictorKind::Numeric) => {
                    return Err(Error::Policy(format!(
                        "rule on numeric predictor {:?} is missing its threshold bound",
                        rule.gate
                    )))
                }
                (GateTest::In(labels), PredictorKind::Categorical { .. }) => {
                    let mut categories = labels
                        .iter()
                        .map(|l| {
                            predictor.category_index(l).ok_or_else(|| {
                                Error::Policy(format!(
                                    "unknown category {l:?} of predictor {:?}",
                                    rule.gate
                                ))
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    categories.sort_unstable();
                    categories.dedup();
                    Condition::Categorical { categories }
                }
                (_, PredictorKind::Categorical { .. }) => {
                    return Err(Error::Policy(format!(
                        "categorical predictor {:?} needs an `in {{...}}` condition",
                        rule.gate
                    )))
                }
            };
            policy.rules.push(UnlockRule {
                gate,
                condition,
                enables,
            });
        }
        policy.root = match &spec.root {
            Some(names) => {
                let mut root = Availability::none(schema.n_predictors());
                for name in names {
                    root.enable(lookup(name)?);
                }
                root
            }
            None => {
                let mut root = Availability::all(schema.n_predictors());
                for r in &policy.rules {
                    for &t in &r.enables {
                        root.0[t] = false;
                    }
                }
                root
            }
        };
        for j in policy.unreachable() {
            log::warn!(
                "predictor {:?} is not available at the root and no rule unlocks it",
                policy.names[j]
            );
        }
        Ok(policy)
    }

    pub fn root(&self) -> &Availability {
        &self.root
    }

    pub fn rules(&self) -> &[UnlockRule] {
        &self.rules
    }

    pub fn n_predictors(&self) -> usize {
        self.root.len()
    }

    pub fn schema_fingerprint(&self) -> &str {
        &self.schema_fingerprint
    }

    /// True when `j` starts locked and some rule unlocks it.
    pub fn is_gated(&self, j: PredictorId) -> bool {
        !self.root.is_available(j)
    }

    /// Predictors neither available at the root nor enabled by any rule.
    pub fn unreachable(&self) -> Vec<PredictorId> {
        (0..self.n_predictors())
            .filter(|&j| !self.root.is_available(j))
            .filter(|&j| !self.rules.iter().any(|r| r.enables.contains(&j)))
            .collect()
    }

    /// Does `rule` fire for the child on `side` of `split`?
    pub fn rule_fires(&self, rule: &UnlockRule, split: &Split, side: Side) -> bool {
        if rule.gate != split.predictor {
            return false;
        }
        match (&rule.condition, &split.rule) {
            (
                Condition::Numeric {
                    side: rule_side,
                    bound,
                    direction,
                },
                SplitRule::Threshold(s),
            ) => {
                *rule_side == side
                    && match direction {
                        Direction::AtLeast => *s >= *bound,
                        Direction::AtMost => *s <= *bound,
                    }
            }
            (Condition::Categorical { categories }, SplitRule::Categories(left)) => {
                let n_cats = self.categories[rule.gate].as_ref().map_or(0, Vec::len) as u32;
                let inside = |c: u32| categories.binary_search(&c).is_ok();
                match side {
                    Side::Left => left.iter().all(inside),
                    Side::Right => (0..n_cats).filter(|c| !left.contains(*c)).all(inside),
                }
            }
            _ => false,
        }
    }

    /// Child masks after `split`: the parent mask plus every enabled
    /// predictor of a rule firing for that child.
    pub fn apply_unlock(&self, available: &Availability, split: &Split) -> (Availability, Availability) {
        let mut left = available.clone();
        let mut right = available.clone();
        for rule in self.rules.iter().filter(|r| r.gate == split.predictor) {
            for (side, mask) in [(Side::Left, &mut left), (Side::Right, &mut right)] {
                if self.rule_fires(rule, split, side) {
                    for &t in &rule.enables {
                        mask.enable(t);
                    }
                }
            }
        }
        (left, right)
    }

    /// Rebinds the policy to a schema extended with appended predictors,
    /// which start available at the root.
    pub(crate) fn extended_to(&self, schema: &Schema) -> Self {
        let base = AvailabilityPolicy::permissive(schema);
        AvailabilityPolicy {
            root: self.root.extended(schema.n_predictors()),
            rules: self.rules.clone(),
            ..base
        }
    }

    /// Locks `target` at the root and unlocks it in the `gate ∈ categories`
    /// child.
    pub(crate) fn add_categorical_gate(&mut self, gate: PredictorId, categories: Vec<u32>, target: PredictorId) {
        self.root.0[target] = false;
        self.rules.push(UnlockRule {
            gate,
            condition: Condition::Categorical { categories },
            enables: vec![target],
        });
    }

    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.schema_fingerprint.as_bytes());
        h.update(self.to_string().as_bytes());
        hex::encode(&h.finalize()[..8])
    }
}

impl fmt::Display for AvailabilityPolicy {
    /// Canonical policy text; parses back to an equivalent policy.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let root: Vec<&str> = self.root.available().map(|j| self.names[j].as_str()).collect();
        writeln!(f, "root: {}", root.join(" "))?;
        for r in &self.rules {
            let targets: Vec<&str> = r.enables.iter().map(|&j| self.names[j].as_str()).collect();
            write!(f, "unlock {} when {} ", targets.join(" "), self.names[r.gate])?;
            match &r.condition {
                Condition::Numeric {
                    side,
                    bound,
                    direction,
                } => {
                    let op = match direction {
                        Direction::AtLeast => ">",
                        Direction::AtMost => "<=",
                    };
                    writeln!(f, "{op} {bound} side={}", side.as_str())?;
                }
                Condition::Categorical { categories } => {
                    let cats = self.categories[r.gate].as_deref().unwrap_or(&[]);
                    let labels: Vec<&str> =
                        categories.iter().map(|&c| cats[c as usize].as_str()).collect();
                    writeln!(f, "in {{{}}}", labels.join(","))?;
                }
            }
        }
        Ok(())
    }
}
