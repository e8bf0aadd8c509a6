//! Schema, columnar dataset with per-cell missingness, and derived
//! missingness indicators.
//!
//! Masked cells keep whatever value sits in storage, but that value is never
//! readable through the public accessors: [`Dataset::value`] and friends
//! return `None` for them. Strategies that fill missing cells therefore work
//! as dataset transforms producing a new [`Dataset`].

use std::collections::{HashMap, HashSet};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub type PredictorId = usize;
pub type ClassId = u32;

/// Name given to the missingness indicator of a predictor.
pub fn indicator_name(name: &str) -> String {
    format!("M({name})")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredictorKind {
    Numeric,
    Categorical { categories: Vec<String> },
}

impl PredictorKind {
    pub fn is_numeric(&self) -> bool {
        matches!(self, PredictorKind::Numeric)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predictor {
    pub name: String,
    pub kind: PredictorKind,
}

impl Predictor {
    pub fn numeric(name: impl Into<String>) -> Self {
        Predictor {
            name: name.into(),
            kind: PredictorKind::Numeric,
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        categories: impl IntoIterator<Item = S>,
    ) -> Self {
        Predictor {
            name: name.into(),
            kind: PredictorKind::Categorical {
                categories: categories.into_iter().map(Into::into).collect(),
            },
        }
    }

    pub fn categories(&self) -> Option<&[String]> {
        match &self.kind {
            PredictorKind::Categorical { categories } => Some(categories),
            PredictorKind::Numeric => None,
        }
    }

    pub fn n_categories(&self) -> usize {
        self.categories().map_or(0, <[String]>::len)
    }

    pub fn category_index(&self, label: &str) -> Option<u32> {
        self.categories()?
            .iter()
            .position(|c| c == label)
            .map(|i| i as u32)
    }
}

/// Ordered predictors plus the ordered set of class labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    predictors: Vec<Predictor>,
    classes: Vec<String>,
}

impl Schema {
    pub fn new(predictors: Vec<Predictor>, classes: Vec<String>) -> Result<Self> {
        if classes.len() < 2 {
            return Err(Error::Schema(format!(
                "at least 2 class labels required, got {}",
                classes.len()
            )));
        }
        let mut seen = HashSet::new();
        for c in &classes {
            if !seen.insert(c.as_str()) {
                return Err(Error::Schema(format!("duplicate class label {c:?}")));
            }
        }
        let mut names = HashSet::new();
        for p in &predictors {
            if !names.insert(p.name.as_str()) {
                return Err(Error::Schema(format!("duplicate predictor name {:?}", p.name)));
            }
            if let Some(cats) = p.categories() {
                if cats.is_empty() {
                    return Err(Error::Schema(format!(
                        "categorical predictor {:?} has no categories",
                        p.name
                    )));
                }
                let mut seen = HashSet::new();
                for c in cats {
                    if !seen.insert(c.as_str()) {
                        return Err(Error::Schema(format!(
                            "duplicate category {c:?} in predictor {:?}",
                            p.name
                        )));
                    }
                }
            }
        }
        Ok(Schema {
            predictors,
            classes,
        })
    }

    pub fn n_predictors(&self) -> usize {
        self.predictors.len()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn predictors(&self) -> &[Predictor] {
        &self.predictors
    }

    pub fn predictor(&self, j: PredictorId) -> &Predictor {
        &self.predictors[j]
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_index(&self, label: &str) -> Option<ClassId> {
        self.classes.iter().position(|c| c == label).map(|i| i as ClassId)
    }

    pub fn index_of(&self, name: &str) -> Option<PredictorId> {
        self.predictors.iter().position(|p| p.name == name)
    }

    /// Stable digest of names, kinds, categories and classes.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.predictors {
            h.update(p.name.as_bytes());
            h.update([0u8]);
            match &p.kind {
                PredictorKind::Numeric => h.update(b"num"),
                PredictorKind::Categorical { categories } => {
                    h.update(b"cat");
                    for c in categories {
                        h.update([1u8]);
                        h.update(c.as_bytes());
                    }
                }
            }
            h.update([2u8]);
        }
        h.update(b"classes");
        for c in &self.classes {
            h.update([1u8]);
            h.update(c.as_bytes());
        }
        hex::encode(&h.finalize()[..8])
    }

    pub(crate) fn with_predictor(&self, p: Predictor) -> Result<Schema> {
        let mut predictors = self.predictors.clone();
        predictors.push(p);
        Schema::new(predictors, self.classes.clone())
    }

    pub(crate) fn with_replaced(&self, j: PredictorId, p: Predictor) -> Result<Schema> {
        let mut predictors = self.predictors.clone();
        predictors[j] = p;
        Schema::new(predictors, self.classes.clone())
    }
}

/// One readable cell value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Numeric(f64),
    Category(u32),
}

impl Value {
    pub fn as_numeric(self) -> Option<f64> {
        match self {
            Value::Numeric(v) => Some(v),
            Value::Category(_) => None,
        }
    }

    pub fn as_category(self) -> Option<u32> {
        match self {
            Value::Category(c) => Some(c),
            Value::Numeric(_) => None,
        }
    }
}

/// Read access to the predictor cells of a single observation.
pub trait Cells {
    fn cell(&self, j: PredictorId) -> Option<Value>;
}

/// A standalone observation, e.g. one built for prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    cells: Vec<Option<Value>>,
}

impl Observation {
    /// Builds an observation checked against `schema`.
    pub fn new(schema: &Schema, cells: Vec<Option<Value>>) -> Result<Self> {
        if cells.len() != schema.n_predictors() {
            return Err(Error::Data(format!(
                "observation has {} cells, schema has {} predictors",
                cells.len(),
                schema.n_predictors()
            )));
        }
        for (j, cell) in cells.iter().enumerate() {
            let p = schema.predictor(j);
            match (cell, &p.kind) {
                (None, _) => {}
                (Some(Value::Numeric(v)), PredictorKind::Numeric) if v.is_finite() => {}
                (Some(Value::Category(c)), PredictorKind::Categorical { categories })
                    if (*c as usize) < categories.len() => {}
                (Some(v), _) => {
                    return Err(Error::Data(format!(
                        "value {v:?} does not fit predictor {:?}",
                        p.name
                    )))
                }
            }
        }
        Ok(Observation { cells })
    }

    /// Parses text cells, `None` meaning missing.
    pub fn from_labels(schema: &Schema, cells: &[Option<&str>]) -> Result<Self> {
        let mut out = Vec::with_capacity(cells.len());
        for (j, cell) in cells.iter().enumerate() {
            let p = schema.predictors().get(j).ok_or_else(|| {
                Error::Data(format!("observation has more than {} cells", schema.n_predictors()))
            })?;
            out.push(match cell {
                None => None,
                Some(text) => Some(parse_cell(p, text).map_err(Error::Data)?),
            });
        }
        Observation::new(schema, out)
    }
}

impl Cells for Observation {
    fn cell(&self, j: PredictorId) -> Option<Value> {
        self.cells[j]
    }
}

/// Storage for one predictor column.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<u32>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, i: usize) -> Value {
        match self {
            Column::Numeric(v) => Value::Numeric(v[i]),
            Column::Categorical(v) => Value::Category(v[i]),
        }
    }

    fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&i| v[i]).collect()),
            Column::Categorical(v) => Column::Categorical(rows.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// Immutable table of predictors with observed-flags, class response and
/// per-observation weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    columns: Vec<Column>,
    mask: Vec<Vec<bool>>,
    response: Vec<ClassId>,
    weights: Vec<f64>,
}

impl Dataset {
    /// Assembles a dataset, checking every structural invariant.
    ///
    /// `mask[j][i]` is true when cell `(i, j)` is observed. `weights`
    /// defaults to all ones.
    pub fn new(
        schema: Schema,
        columns: Vec<Column>,
        mask: Vec<Vec<bool>>,
        response: Vec<ClassId>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = response.len();
        if n == 0 {
            return Err(Error::Data("no observations".into()));
        }
        let m = schema.n_predictors();
        if columns.len() != m || mask.len() != m {
            return Err(Error::Data(format!(
                "expected {m} columns and masks, got {} and {}",
                columns.len(),
                mask.len()
            )));
        }
        for (j, (col, mk)) in columns.iter().zip(&mask).enumerate() {
            let p = schema.predictor(j);
            if col.len() != n || mk.len() != n {
                return Err(Error::Data(format!(
                    "column {:?} has {} entries, expected {n}",
                    p.name,
                    col.len()
                )));
            }
            match (col, &p.kind) {
                (Column::Numeric(v), PredictorKind::Numeric) => {
                    if let Some(i) = (0..n).find(|&i| mk[i] && !v[i].is_finite()) {
                        return Err(Error::Data(format!(
                            "non-finite value in row {i} of {:?}",
                            p.name
                        )));
                    }
                }
                (Column::Categorical(v), PredictorKind::Categorical { categories }) => {
                    if let Some(i) = (0..n).find(|&i| mk[i] && v[i] as usize >= categories.len())
                    {
                        return Err(Error::Data(format!(
                            "category code out of range in row {i} of {:?}",
                            p.name
                        )));
                    }
                }
                _ => {
                    return Err(Error::Data(format!(
                        "column storage does not match kind of {:?}",
                        p.name
                    )))
                }
            }
        }
        let k = schema.n_classes() as ClassId;
        if let Some(i) = response.iter().position(|&y| y >= k) {
            return Err(Error::Data(format!("response out of range in row {i}")));
        }
        let weights = weights.unwrap_or_else(|| vec![1.0; n]);
        if weights.len() != n {
            return Err(Error::Data("weights length differs from row count".into()));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Data(format!("weight in row {i} must be positive and finite")));
        }
        Ok(Dataset {
            schema,
            columns,
            mask,
            response,
            weights,
        })
    }

    /// Builds from per-row cell values, `None` meaning missing.
    pub fn from_rows(
        schema: Schema,
        rows: &[Vec<Option<Value>>],
        response: Vec<ClassId>,
    ) -> Result<Self> {
        let m = schema.n_predictors();
        let mut columns: Vec<Column> = schema
            .predictors()
            .iter()
            .map(|p| match p.kind {
                PredictorKind::Numeric => Column::Numeric(Vec::with_capacity(rows.len())),
                PredictorKind::Categorical { .. } => {
                    Column::Categorical(Vec::with_capacity(rows.len()))
                }
            })
            .collect();
        let mut mask = vec![Vec::with_capacity(rows.len()); m];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Data(format!(
                    "row {i} has {} cells, expected {m}",
                    row.len()
                )));
            }
            for (j, cell) in row.iter().enumerate() {
                mask[j].push(cell.is_some());
                match (&mut columns[j], cell) {
                    (Column::Numeric(v), Some(Value::Numeric(x))) => v.push(*x),
                    (Column::Numeric(v), None) => v.push(0.0),
                    (Column::Categorical(v), Some(Value::Category(c))) => v.push(*c),
                    (Column::Categorical(v), None) => v.push(0),
                    _ => {
                        return Err(Error::Data(format!(
                            "row {i}: value kind does not match predictor {:?}",
                            schema.predictor(j).name
                        )))
                    }
                }
            }
        }
        Dataset::new(schema, columns, mask, response, None)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn n(&self) -> usize {
        self.response.len()
    }

    pub fn n_predictors(&self) -> usize {
        self.columns.len()
    }

    pub fn n_classes(&self) -> usize {
        self.schema.n_classes()
    }

    pub fn is_observed(&self, j: PredictorId, i: usize) -> bool {
        self.mask[j][i]
    }

    pub fn mask(&self, j: PredictorId) -> &[bool] {
        &self.mask[j]
    }

    pub fn missing_count(&self, j: PredictorId) -> usize {
        self.mask[j].iter().filter(|o| !**o).count()
    }

    pub fn has_missing(&self) -> bool {
        self.mask.iter().any(|m| m.iter().any(|o| !o))
    }

    pub fn value(&self, j: PredictorId, i: usize) -> Option<Value> {
        self.mask[j][i].then(|| self.columns[j].get(i))
    }

    pub fn numeric(&self, j: PredictorId, i: usize) -> Option<f64> {
        match &self.columns[j] {
            Column::Numeric(v) if self.mask[j][i] => Some(v[i]),
            _ => None,
        }
    }

    pub fn category(&self, j: PredictorId, i: usize) -> Option<u32> {
        match &self.columns[j] {
            Column::Categorical(v) if self.mask[j][i] => Some(v[i]),
            _ => None,
        }
    }

    pub fn response(&self, i: usize) -> ClassId {
        self.response[i]
    }

    pub fn responses(&self) -> &[ClassId] {
        &self.response
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn row(&self, i: usize) -> Row<'_> {
        Row { ds: self, i }
    }

    /// Observed-only view of a column: value storage plus mask.
    pub(crate) fn column_raw(&self, j: PredictorId) -> (&Column, &[bool]) {
        (&self.columns[j], &self.mask[j])
    }

    /// New dataset containing `rows` in the given order (repeats allowed).
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        Dataset::new(
            self.schema.clone(),
            self.columns.iter().map(|c| c.select(rows)).collect(),
            self.mask
                .iter()
                .map(|m| rows.iter().map(|&i| m[i]).collect())
                .collect(),
            rows.iter().map(|&i| self.response[i]).collect(),
            Some(rows.iter().map(|&i| self.weights[i]).collect()),
        )
    }

    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Dataset> {
        Dataset::new(
            self.schema.clone(),
            self.columns.clone(),
            self.mask.clone(),
            self.response.clone(),
            Some(weights),
        )
    }

    /// Same data with the mask of predictor `j` replaced.
    pub fn with_mask(&self, j: PredictorId, mask: Vec<bool>) -> Result<Dataset> {
        let mut all = self.mask.clone();
        all[j] = mask;
        Dataset::new(
            self.schema.clone(),
            self.columns.clone(),
            all,
            self.response.clone(),
            Some(self.weights.clone()),
        )
    }

    /// Replaces predictor `j` (definition, storage and mask).
    pub(crate) fn with_column(
        &self,
        j: PredictorId,
        predictor: Predictor,
        column: Column,
        mask: Vec<bool>,
    ) -> Result<Dataset> {
        let schema = self.schema.with_replaced(j, predictor)?;
        let mut columns = self.columns.clone();
        columns[j] = column;
        let mut all = self.mask.clone();
        all[j] = mask;
        Dataset::new(
            schema,
            columns,
            all,
            self.response.clone(),
            Some(self.weights.clone()),
        )
    }

    pub(crate) fn with_appended(
        &self,
        predictor: Predictor,
        column: Column,
        mask: Vec<bool>,
    ) -> Result<Dataset> {
        let schema = self.schema.with_predictor(predictor)?;
        let mut columns = self.columns.clone();
        columns.push(column);
        let mut all = self.mask.clone();
        all.push(mask);
        Dataset::new(
            schema,
            columns,
            all,
            self.response.clone(),
            Some(self.weights.clone()),
        )
    }

    /// Hidden storage for a masked cell. Test-only access.
    #[cfg(test)]
    pub(crate) fn set_hidden(&mut self, j: PredictorId, i: usize, value: Value) {
        assert!(!self.mask[j][i], "only masked cells may be perturbed");
        match (&mut self.columns[j], value) {
            (Column::Numeric(v), Value::Numeric(x)) => v[i] = x,
            (Column::Categorical(v), Value::Category(c)) => v[i] = c,
            _ => panic!("kind mismatch"),
        }
    }

    /// Stored value regardless of the mask; used by censoring oracles.
    #[cfg(test)]
    pub(crate) fn hidden(&self, j: PredictorId, i: usize) -> Value {
        self.columns[j].get(i)
    }
}

/// Borrowed view of one dataset row.
#[derive(Debug, Clone, Copy)]
pub struct Row<'a> {
    ds: &'a Dataset,
    i: usize,
}

impl Cells for Row<'_> {
    fn cell(&self, j: PredictorId) -> Option<Value> {
        self.ds.value(j, self.i)
    }
}

fn parse_cell(p: &Predictor, text: &str) -> std::result::Result<Value, String> {
    match &p.kind {
        PredictorKind::Numeric => match text.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Value::Numeric(v)),
            _ => Err(format!("cannot parse {text:?} as a number for {:?}", p.name)),
        },
        PredictorKind::Categorical { .. } => p
            .category_index(text)
            .map(Value::Category)
            .ok_or_else(|| format!("unknown category {text:?} for {:?}", p.name)),
    }
}

/// Builds a dataset from raw text records: one cell per predictor followed
/// by the response cell.
pub fn build_dataset(
    rows: &[Vec<String>],
    schema: Schema,
    missing_tokens: &HashSet<String>,
) -> Result<Dataset> {
    if rows.is_empty() {
        return Err(Error::Data("no observations".into()));
    }
    let m = schema.n_predictors();
    let class_lookup: HashMap<&str, ClassId> = schema
        .classes()
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i as ClassId))
        .collect();
    let mut cells = Vec::with_capacity(rows.len());
    let mut response = Vec::with_capacity(rows.len());
    for (i, rec) in rows.iter().enumerate() {
        if rec.len() != m + 1 {
            return Err(Error::Data(format!(
                "row {i} has {} cells, expected {}",
                rec.len(),
                m + 1
            )));
        }
        let mut row = Vec::with_capacity(m);
        for (j, text) in rec[..m].iter().enumerate() {
            if missing_tokens.contains(text.as_str()) {
                row.push(None);
            } else {
                let v = parse_cell(schema.predictor(j), text)
                    .map_err(|msg| Error::Data(format!("row {i}: {msg}")))?;
                row.push(Some(v));
            }
        }
        let y = &rec[m];
        if missing_tokens.contains(y.as_str()) {
            return Err(Error::Data(format!("row {i}: response is missing")));
        }
        let y = *class_lookup
            .get(y.as_str())
            .ok_or_else(|| Error::Data(format!("row {i}: unknown response label {y:?}")))?;
        cells.push(row);
        response.push(y);
    }
    Dataset::from_rows(schema, &cells, response)
}

/// Appends the 0/1 indicator `M(name_j)`, equal to 1 exactly where
/// predictor `j` is observed.
pub fn derive_missingness(ds: &Dataset, j: PredictorId) -> Result<Dataset> {
    if j >= ds.n_predictors() {
        return Err(Error::Schema(format!("predictor index {j} out of range")));
    }
    let name = indicator_name(&ds.schema().predictor(j).name);
    if ds.schema().index_of(&name).is_some() {
        return Err(Error::Schema(format!("predictor {name:?} already exists")));
    }
    let values = ds.mask(j).iter().map(|&o| u32::from(o)).collect();
    ds.with_appended(
        Predictor::categorical(name, ["0", "1"]),
        Column::Categorical(values),
        vec![true; ds.n()],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tokens() -> HashSet<String> {
        ["", "NA"].iter().map(|s| s.to_string()).collect()
    }

    fn one_numeric() -> Schema {
        Schema::new(vec![Predictor::numeric("x")], vec!["a".into(), "b".into()]).unwrap()
    }

    fn rec(cells: &[&str]) -> Vec<String> {
        cells.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_numeric_with_missing_token() {
        let rows = vec![rec(&["1.5", "a"]), rec(&["NA", "b"]), rec(&["2.0", "a"])];
        let ds = build_dataset(&rows, one_numeric(), &tokens()).unwrap();
        assert_eq!(ds.mask(0), &[true, false, true]);
        assert_eq!(ds.numeric(0, 0), Some(1.5));
        assert_eq!(ds.numeric(0, 1), None);
        assert_eq!(ds.numeric(0, 2), Some(2.0));
    }

    #[test]
    fn empty_rows_rejected() {
        let err = build_dataset(&[], one_numeric(), &tokens()).unwrap_err();
        assert!(err.to_string().contains("no observations"));
    }

    #[test]
    fn unknown_category_names_row_and_predictor() {
        let schema = Schema::new(
            vec![Predictor::categorical("colour", ["red", "green"])],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let rows = vec![rec(&["red", "a"]), rec(&["blue", "b"])];
        let msg = build_dataset(&rows, schema, &tokens()).unwrap_err().to_string();
        assert!(msg.contains("row 1"), "{msg}");
        assert!(msg.contains("colour"), "{msg}");
    }

    #[test]
    fn ragged_and_bad_cells_rejected() {
        let s = one_numeric();
        assert!(build_dataset(&[rec(&["1"])], s.clone(), &tokens()).is_err());
        assert!(build_dataset(&[rec(&["abc", "a"])], s.clone(), &tokens()).is_err());
        assert!(build_dataset(&[rec(&["1", "zzz"])], s.clone(), &tokens()).is_err());
        assert!(build_dataset(&[rec(&["1", "NA"])], s, &tokens()).is_err());
    }

    #[test]
    fn schema_invariants() {
        assert!(Schema::new(vec![], vec!["a".into()]).is_err());
        assert!(Schema::new(
            vec![Predictor::numeric("x"), Predictor::numeric("x")],
            vec!["a".into(), "b".into()]
        )
        .is_err());
        assert!(Schema::new(
            vec![Predictor::categorical("c", ["u", "u"])],
            vec!["a".into(), "b".into()]
        )
        .is_err());
    }

    #[test]
    fn derive_missingness_indicator() {
        let ds = Dataset::from_rows(
            one_numeric(),
            &[
                vec![Some(Value::Numeric(1.0))],
                vec![None],
                vec![Some(Value::Numeric(3.0))],
                vec![Some(Value::Numeric(4.0))],
            ],
            vec![0, 1, 0, 1],
        )
        .unwrap();
        let out = derive_missingness(&ds, 0).unwrap();
        assert_eq!(out.schema().predictor(1).name, "M(x)");
        let col: Vec<_> = (0..4).map(|i| out.category(1, i).unwrap()).collect();
        assert_eq!(col, vec![1, 0, 1, 1]);
        assert_eq!(out.column_raw(0), ds.column_raw(0));
        assert!(derive_missingness(&out, 0).is_err());
        assert!(derive_missingness(&ds, 3).is_err());
    }

    #[test]
    fn fully_observed_indicator_is_all_ones() {
        let ds = Dataset::from_rows(
            one_numeric(),
            &[vec![Some(Value::Numeric(1.0))], vec![Some(Value::Numeric(2.0))]],
            vec![0, 1],
        )
        .unwrap();
        let out = derive_missingness(&ds, 0).unwrap();
        assert!((0..2).all(|i| out.category(1, i) == Some(1)));
    }

    #[test]
    fn rejects_bad_weights() {
        let ds = Dataset::from_rows(one_numeric(), &[vec![None]], vec![0]).unwrap();
        assert!(ds.with_weights(vec![0.0]).is_err());
        assert!(ds.with_weights(vec![f64::NAN]).is_err());
        assert!(ds.with_weights(vec![2.5]).is_ok());
    }

    #[test]
    fn fingerprint_tracks_schema() {
        let a = one_numeric();
        let b = Schema::new(vec![Predictor::numeric("y")], vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(a.fingerprint(), one_numeric().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
