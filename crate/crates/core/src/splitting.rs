//! Impurity measures and exhaustive best-split search.
//!
//! Candidate splits for predictor `j` are built from the in-region rows where
//! `j` is observed; rows with `j` missing never touch its histograms.
//! Candidates are ranked by the impurity decrease they achieve on those rows,
//! scaled by the observed fraction of the region's weight. On fully observed
//! regions this ranking is the same as minimising `n_L·Q_L + n_R·Q_R`.

use std::fmt;
use std::str::FromStr;

use crate::data::{Cells, ClassId, Column, Dataset, PredictorId, Value};
use crate::error::{Error, Result};
use crate::policy::{Availability, Side};

/// Exhaustive subset enumeration is used up to this many distinct categories.
pub const MAX_EXHAUSTIVE_CATEGORIES: usize = 15;

/// Candidates whose scaled gains differ by less than this fraction of the
/// region weight are treated as tied.
pub(crate) const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Measure {
    #[default]
    Gini,
    Deviance,
    Misclassification,
}

impl Measure {
    pub fn as_str(self) -> &'static str {
        match self {
            Measure::Gini => "gini",
            Measure::Deviance => "deviance",
            Measure::Misclassification => "misclassification",
        }
    }

    /// Impurity of a histogram; zero for an empty one.
    pub(crate) fn of(self, h: &ClassHistogram) -> f64 {
        let total = h.total();
        if total <= 0.0 {
            return 0.0;
        }
        let p = h.counts.iter().map(|c| c / total);
        match self {
            Measure::Gini => p.map(|p| p * (1.0 - p)).sum(),
            Measure::Deviance => -p.filter(|p| *p > 0.0).map(|p| p * p.ln()).sum::<f64>(),
            Measure::Misclassification => 1.0 - p.fold(0.0, f64::max),
        }
    }

    /// `n·Q` for a histogram with total `n`.
    pub(crate) fn weighted(self, h: &ClassHistogram) -> f64 {
        h.total() * self.of(h)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gini" => Ok(Measure::Gini),
            "deviance" | "entropy" => Ok(Measure::Deviance),
            "misclassification" | "error" => Ok(Measure::Misclassification),
            _ => Err(Error::Config(format!("unknown impurity measure {s:?}"))),
        }
    }
}

/// Weighted class counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassHistogram {
    counts: Vec<f64>,
}

impl ClassHistogram {
    pub fn new(k: usize) -> Self {
        ClassHistogram {
            counts: vec![0.0; k],
        }
    }

    pub fn from_counts(counts: Vec<f64>) -> Self {
        ClassHistogram { counts }
    }

    pub fn add(&mut self, class: ClassId, weight: f64) {
        self.counts[class as usize] += weight;
    }

    pub fn add_histogram(&mut self, other: &ClassHistogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    /// `self − other`, clamped at zero per class.
    pub(crate) fn minus(&self, other: &ClassHistogram) -> ClassHistogram {
        ClassHistogram::from_counts(
            self.counts
                .iter()
                .zip(&other.counts)
                .map(|(a, b)| (a - b).max(0.0))
                .collect(),
        )
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    /// Majority class, lowest index on ties.
    pub fn argmax(&self) -> ClassId {
        let mut best = 0;
        for (q, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = q;
            }
        }
        best as ClassId
    }

    /// Number of classes with positive weight.
    pub fn n_present(&self) -> usize {
        self.counts.iter().filter(|c| **c > 0.0).count()
    }
}

/// Impurity of `h` under `measure`.
pub fn impurity(h: &ClassHistogram, measure: Measure) -> Result<f64> {
    if !(h.total() > 0.0) {
        return Err(Error::Split("impurity of an empty histogram".into()));
    }
    Ok(measure.of(h))
}

/// Sorted, deduplicated set of category codes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CategorySet(Vec<u32>);

impl CategorySet {
    pub fn new(mut codes: Vec<u32>) -> Self {
        codes.sort_unstable();
        codes.dedup();
        CategorySet(codes)
    }

    pub fn contains(&self, c: u32) -> bool {
        self.0.binary_search(&c).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn codes(&self) -> &[u32] {
        &self.0
    }
}

impl fmt::Display for CategorySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitRule {
    /// Left when value <= threshold.
    Threshold(f64),
    /// Left when the category is in the set.
    Categories(CategorySet),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub predictor: PredictorId,
    pub rule: SplitRule,
}

impl Split {
    pub fn numeric(predictor: PredictorId, threshold: f64) -> Self {
        Split {
            predictor,
            rule: SplitRule::Threshold(threshold),
        }
    }

    pub fn categorical(predictor: PredictorId, left: Vec<u32>) -> Self {
        Split {
            predictor,
            rule: SplitRule::Categories(CategorySet::new(left)),
        }
    }

    pub fn side_of_value(&self, value: Value) -> Side {
        let left = match (&self.rule, value) {
            (SplitRule::Threshold(t), Value::Numeric(v)) => v <= *t,
            (SplitRule::Categories(set), Value::Category(c)) => set.contains(c),
            // Kind mismatches are rejected when observations are built.
            _ => false,
        };
        if left {
            Side::Left
        } else {
            Side::Right
        }
    }

    /// Side for an observation, `None` when the split value is missing.
    pub fn side_of(&self, obs: &impl Cells) -> Option<Side> {
        obs.cell(self.predictor).map(|v| self.side_of_value(v))
    }

    pub(crate) fn side_in(&self, ds: &Dataset, i: usize) -> Option<Side> {
        ds.value(self.predictor, i).map(|v| self.side_of_value(v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitEvaluation {
    pub split: Split,
    /// `n_L·Q_L + n_R·Q_R` over the rows observed on the split predictor.
    pub total_impurity: f64,
    /// `n·Q` of the same rows before splitting.
    pub parent_impurity: f64,
    /// `(parent_impurity − total_impurity)` times the observed weight
    /// fraction; the quantity maximised by [`best_split`].
    pub score: f64,
    pub left: ClassHistogram,
    pub right: ClassHistogram,
}

impl SplitEvaluation {
    pub fn gain(&self) -> f64 {
        self.parent_impurity - self.total_impurity
    }

    /// Heavier child on the observed rows, left on ties.
    pub fn heavier_side(&self) -> Side {
        if self.right.total() > self.left.total() {
            Side::Right
        } else {
            Side::Left
        }
    }

    /// Left share of the observed weight.
    pub fn left_fraction(&self) -> f64 {
        self.left.total() / (self.left.total() + self.right.total())
    }
}

/// Observations reaching a node, with their (possibly fractional) weights,
/// and the predictors available there.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub rows: Vec<usize>,
    pub weights: Vec<f64>,
    pub available: Availability,
}

impl Region {
    /// Every row of `ds` at its dataset weight.
    pub fn root(ds: &Dataset, available: Availability) -> Self {
        Region {
            rows: (0..ds.n()).collect(),
            weights: ds.weights().to_vec(),
            available,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn histogram(&self, ds: &Dataset) -> ClassHistogram {
        let mut h = ClassHistogram::new(ds.n_classes());
        for (&i, &w) in self.rows.iter().zip(&self.weights) {
            h.add(ds.response(i), w);
        }
        h
    }

    fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.rows.iter().copied().zip(self.weights.iter().copied())
    }
}

/// True when predictor `j` takes at least two distinct observed values in
/// the region.
pub(crate) fn varies(ds: &Dataset, region: &Region, j: PredictorId) -> bool {
    let (col, mask) = ds.column_raw(j);
    let mut first: Option<Value> = None;
    for &i in &region.rows {
        if !mask[i] {
            continue;
        }
        let v = match col {
            Column::Numeric(v) => Value::Numeric(v[i]),
            Column::Categorical(v) => Value::Category(v[i]),
        };
        match first {
            None => first = Some(v),
            Some(f) if f != v => return true,
            Some(_) => {}
        }
    }
    false
}

struct NumericEntry {
    value: f64,
    class: ClassId,
    weight: f64,
}

fn numeric_entries(values: &[f64], mask: &[bool], ds: &Dataset, region: &Region) -> Vec<NumericEntry> {
    let mut entries: Vec<NumericEntry> = region
        .entries()
        .filter(|(i, _)| mask[*i])
        .map(|(i, weight)| NumericEntry {
            value: values[i],
            class: ds.response(i),
            weight,
        })
        .collect();
    entries.sort_by(|a, b| a.value.total_cmp(&b.value));
    entries
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi {
        lo
    } else {
        mid
    }
}

/// Per-category histograms over observed in-region rows, plus the sorted
/// list of categories present.
fn category_histograms(
    codes: &[u32],
    mask: &[bool],
    ds: &Dataset,
    region: &Region,
) -> (Vec<ClassHistogram>, Vec<u32>) {
    let n_cats = codes
        .iter()
        .zip(mask)
        .filter(|(_, o)| **o)
        .map(|(c, _)| *c as usize + 1)
        .max()
        .unwrap_or(0);
    let mut hists = vec![ClassHistogram::new(ds.n_classes()); n_cats];
    for (i, w) in region.entries() {
        if mask[i] {
            hists[codes[i] as usize].add(ds.response(i), w);
        }
    }
    let present = (0..n_cats as u32)
        .filter(|&c| hists[c as usize].total() > 0.0)
        .collect();
    (hists, present)
}

/// Candidate left subsets in tie-break order.
fn category_subsets(
    hists: &[ClassHistogram],
    present: &[u32],
    k: usize,
) -> std::result::Result<Vec<Vec<u32>>, String> {
    let c = present.len();
    if c < 2 {
        return Ok(Vec::new());
    }
    if c <= MAX_EXHAUSTIVE_CATEGORIES {
        // Subsets containing the first present category, excluding the full set.
        let free = c - 1;
        let mut subsets: Vec<Vec<u32>> = (0..(1u32 << free) - 1)
            .map(|r| {
                let mut s = vec![present[0]];
                s.extend((0..free).filter(|b| r >> b & 1 == 1).map(|b| present[b + 1]));
                s
            })
            .collect();
        subsets.sort();
        return Ok(subsets);
    }
    if k != 2 {
        return Err(format!(
            "{c} distinct categories exceed the exhaustive limit of {MAX_EXHAUSTIVE_CATEGORIES} and the ordering shortcut needs 2 classes, not {k}"
        ));
    }
    let mut order = present.to_vec();
    let share = |c: u32| {
        let h = &hists[c as usize];
        h.counts()[1] / h.total()
    };
    order.sort_by(|a, b| share(*a).total_cmp(&share(*b)).then(a.cmp(b)));
    Ok((1..c)
        .map(|len| {
            let mut s = order[..len].to_vec();
            s.sort_unstable();
            s
        })
        .collect())
}

/// All candidate splits of predictor `j` within the region, in tie-break
/// order.
pub fn enumerate_splits(ds: &Dataset, region: &Region, j: PredictorId) -> Result<Vec<Split>> {
    let (col, mask) = ds.column_raw(j);
    if !region.rows.iter().any(|&i| mask[i]) {
        return Err(Error::Split(format!(
            "predictor {:?} is missing for every observation in the region",
            ds.schema().predictor(j).name
        )));
    }
    match col {
        Column::Numeric(values) => {
            let entries = numeric_entries(values, mask, ds, region);
            Ok(entries
                .windows(2)
                .filter(|w| w[1].value > w[0].value)
                .map(|w| Split::numeric(j, midpoint(w[0].value, w[1].value)))
                .collect())
        }
        Column::Categorical(codes) => {
            let (hists, present) = category_histograms(codes, mask, ds, region);
            let subsets = category_subsets(&hists, &present, ds.n_classes()).map_err(Error::Split)?;
            Ok(subsets.into_iter().map(|s| Split::categorical(j, s)).collect())
        }
    }
}

struct Scorer {
    measure: Measure,
    min_child_weight: f64,
    scale: f64,
    parent: f64,
    tolerance: f64,
}

impl Scorer {
    fn evaluate(&self, split: Split, left: ClassHistogram, right: ClassHistogram) -> Option<SplitEvaluation> {
        if left.total() < self.min_child_weight || right.total() < self.min_child_weight {
            return None;
        }
        let total = self.measure.weighted(&left) + self.measure.weighted(&right);
        Some(SplitEvaluation {
            split,
            total_impurity: total,
            parent_impurity: self.parent,
            score: self.scale * (self.parent - total),
            left,
            right,
        })
    }
}

/// Keeps `candidate` only if it beats `best` by more than the tolerance.
fn keep_better(best: &mut Option<SplitEvaluation>, candidate: SplitEvaluation, tolerance: f64) {
    match best {
        Some(b) if candidate.score <= b.score + tolerance => {}
        _ => *best = Some(candidate),
    }
}

fn best_for_predictor(
    ds: &Dataset,
    region: &Region,
    region_weight: f64,
    j: PredictorId,
    measure: Measure,
    min_child_weight: f64,
) -> Option<SplitEvaluation> {
    let (col, mask) = ds.column_raw(j);
    let tolerance = TIE_TOLERANCE * region_weight.max(1.0);
    let mut best = None;
    match col {
        Column::Numeric(values) => {
            let entries = numeric_entries(values, mask, ds, region);
            if entries.len() < 2 {
                return None;
            }
            let mut observed = ClassHistogram::new(ds.n_classes());
            for e in &entries {
                observed.add(e.class, e.weight);
            }
            let scorer = Scorer {
                measure,
                min_child_weight,
                scale: observed.total() / region_weight,
                parent: measure.weighted(&observed),
                tolerance,
            };
            let mut left = ClassHistogram::new(ds.n_classes());
            for w in 0..entries.len() - 1 {
                left.add(entries[w].class, entries[w].weight);
                let (lo, hi) = (entries[w].value, entries[w + 1].value);
                if hi > lo {
                    let right = observed.minus(&left);
                    if let Some(ev) = scorer.evaluate(Split::numeric(j, midpoint(lo, hi)), left.clone(), right) {
                        keep_better(&mut best, ev, scorer.tolerance);
                    }
                }
            }
        }
        Column::Categorical(codes) => {
            let (hists, present) = category_histograms(codes, mask, ds, region);
            let subsets = match category_subsets(&hists, &present, ds.n_classes()) {
                Ok(s) => s,
                Err(msg) => {
                    log::debug!("skipping predictor {j}: {msg}");
                    return None;
                }
            };
            let mut observed = ClassHistogram::new(ds.n_classes());
            for &c in &present {
                observed.add_histogram(&hists[c as usize]);
            }
            let scorer = Scorer {
                measure,
                min_child_weight,
                scale: observed.total() / region_weight,
                parent: measure.weighted(&observed),
                tolerance,
            };
            for subset in subsets {
                let mut left = ClassHistogram::new(ds.n_classes());
                for &c in &subset {
                    left.add_histogram(&hists[c as usize]);
                }
                let right = observed.minus(&left);
                if let Some(ev) = scorer.evaluate(Split::categorical(j, subset), left, right) {
                    keep_better(&mut best, ev, scorer.tolerance);
                }
            }
        }
    }
    best
}

/// Best split over every available predictor of the region.
///
/// Candidates leaving less than `min_child_weight` on either side are
/// discarded. Ties go to the lowest predictor index, then the smallest
/// threshold or lexicographically smallest subset.
pub fn best_split(
    ds: &Dataset,
    region: &Region,
    measure: Measure,
    min_child_weight: f64,
) -> Option<SplitEvaluation> {
    let candidates: Vec<PredictorId> = region.available.available().collect();
    best_split_among(ds, region, measure, min_child_weight, &candidates)
}

/// [`best_split`] restricted to `predictors` (ascending).
pub(crate) fn best_split_among(
    ds: &Dataset,
    region: &Region,
    measure: Measure,
    min_child_weight: f64,
    predictors: &[PredictorId],
) -> Option<SplitEvaluation> {
    let region_weight = region.weight();
    if !(region_weight > 0.0) {
        return None;
    }
    let tolerance = TIE_TOLERANCE * region_weight.max(1.0);
    let mut best: Option<SplitEvaluation> = None;
    for &j in predictors {
        if let Some(ev) = best_for_predictor(ds, region, region_weight, j, measure, min_child_weight) {
            keep_better(&mut best, ev, tolerance);
        }
    }
    best
}
