//! Dataset transforms fitted on training data: mean/mode fill, chained
//! regression fill, separate class and missingness gating.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::data::{derive_missingness, indicator_name, Column, Dataset, Predictor, PredictorId, Value};
use crate::error::{Error, Result};
use crate::policy::AvailabilityPolicy;

/// Label of the category added by the separate-class transform.
pub const MISSING_CATEGORY: &str = "⟨missing⟩";

const RIDGE: f64 = 1e-6;

/// Per-predictor model used to re-impute one predictor from the others.
#[derive(Debug, Clone, PartialEq)]
pub enum PviModel {
    /// Intercept followed by one coefficient per design feature.
    Linear { coefficients: Vec<f64> },
    /// Nearest centroid in standardised feature space; `None` for
    /// categories never observed.
    Centroid {
        means: Vec<f64>,
        scales: Vec<f64>,
        centroids: Vec<Option<Vec<f64>>>,
    },
}

/// A transform fitted on training data, replayed on validation, test and
/// prediction data.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedTransform {
    Identity,
    Svi {
        fills: Vec<Option<Value>>,
    },
    Pvi {
        fills: Vec<Option<Value>>,
        iterations: usize,
        models: Vec<Option<PviModel>>,
    },
    Sc {
        sentinels: Vec<Option<f64>>,
        extended: Vec<PredictorId>,
    },
    Best {
        indicators: Vec<PredictorId>,
    },
}

/// Storage of one column with missing cells as `None`.
enum Cells {
    Num(Vec<Option<f64>>),
    Cat(Vec<Option<u32>>),
}

fn cells(ds: &Dataset, j: PredictorId) -> Cells {
    let (col, mask) = ds.column_raw(j);
    match col {
        Column::Numeric(v) => Cells::Num(v.iter().zip(mask).map(|(x, o)| o.then_some(*x)).collect()),
        Column::Categorical(v) => Cells::Cat(v.iter().zip(mask).map(|(c, o)| o.then_some(*c)).collect()),
    }
}

/// Observed mean or mode (first category on ties); `None` when the column
/// has no observed cell.
fn column_fill(ds: &Dataset, j: PredictorId) -> Option<Value> {
    match cells(ds, j) {
        Cells::Num(v) => {
            let obs: Vec<f64> = v.into_iter().flatten().collect();
            (!obs.is_empty()).then(|| Value::Numeric(obs.iter().sum::<f64>() / obs.len() as f64))
        }
        Cells::Cat(v) => {
            let mut counts = vec![0usize; ds.schema().predictor(j).n_categories()];
            for c in v.into_iter().flatten() {
                counts[c as usize] += 1;
            }
            let mut best: Option<(usize, usize)> = None;
            for (c, &n) in counts.iter().enumerate() {
                if n > 0 && best.is_none_or(|(_, b)| n > b) {
                    best = Some((c, n));
                }
            }
            best.map(|(c, _)| Value::Category(c as u32))
        }
    }
}

fn fills_for(ds: &Dataset) -> Vec<Option<Value>> {
    (0..ds.n_predictors()).map(|j| column_fill(ds, j)).collect()
}

fn require_fills(ds: &Dataset, fills: &[Option<Value>]) -> Result<()> {
    for (j, f) in fills.iter().enumerate() {
        if f.is_none() && ds.missing_count(j) > 0 {
            return Err(Error::Data(format!(
                "predictor {:?} has no observed values to impute from",
                ds.schema().predictor(j).name
            )));
        }
    }
    Ok(())
}

fn check_width(ds: &Dataset, m: usize) -> Result<()> {
    if ds.n_predictors() != m {
        return Err(Error::Schema(format!(
            "transform expects {m} predictors, data has {}",
            ds.n_predictors()
        )));
    }
    Ok(())
}

/// Replaces the storage of predictor `j` with fully observed values.
fn replace_num(ds: &Dataset, j: PredictorId, values: Vec<f64>) -> Result<Dataset> {
    let p = ds.schema().predictor(j).clone();
    ds.with_column(j, p, Column::Numeric(values), vec![true; ds.n()])
}

fn replace_cat(ds: &Dataset, j: PredictorId, p: Predictor, codes: Vec<u32>, mask: Vec<bool>) -> Result<Dataset> {
    ds.with_column(j, p, Column::Categorical(codes), mask)
}

fn apply_fills(ds: &Dataset, fills: &[Option<Value>]) -> Result<Dataset> {
    let mut out = ds.clone();
    for (j, fill) in fills.iter().enumerate() {
        if ds.missing_count(j) == 0 {
            continue;
        }
        let Some(fill) = fill else {
            log::warn!(
                "no fill value for {:?}; its missing cells stay missing",
                ds.schema().predictor(j).name
            );
            continue;
        };
        out = match (cells(ds, j), fill) {
            (Cells::Num(v), Value::Numeric(x)) => replace_num(&out, j, v.into_iter().map(|c| c.unwrap_or(*x)).collect())?,
            (Cells::Cat(v), Value::Category(c)) => {
                let p = ds.schema().predictor(j).clone();
                replace_cat(&out, j, p, v.into_iter().map(|x| x.unwrap_or(*c)).collect(), vec![true; ds.n()])?
            }
            _ => return Err(Error::Schema("fill value kind does not match predictor".into())),
        };
    }
    Ok(out)
}

/// Mean (numeric) or mode (categorical) imputation.
pub fn svi_transform(ds: &Dataset) -> Result<(Dataset, FittedTransform)> {
    let fills = fills_for(ds);
    require_fills(ds, &fills)?;
    Ok((apply_fills(ds, &fills)?, FittedTransform::Svi { fills }))
}

/// Completed values of every predictor, as design inputs.
#[derive(Clone)]
enum Filled {
    Num(Vec<f64>),
    Cat(Vec<u32>, usize),
}

fn filled_columns(ds: &Dataset, fills: &[Option<Value>]) -> Vec<Filled> {
    (0..ds.n_predictors())
        .map(|j| match (cells(ds, j), fills[j]) {
            (Cells::Num(v), f) => Filled::Num(v.into_iter().map(|x| x.or(f.and_then(Value::as_numeric)).unwrap_or(0.0)).collect()),
            (Cells::Cat(v), f) => Filled::Cat(
                v.into_iter().map(|x| x.or(f.and_then(Value::as_category)).unwrap_or(0)).collect(),
                ds.schema().predictor(j).n_categories(),
            ),
        })
        .collect()
}

/// Design row for predicting `target`: every other predictor, categoricals
/// as dummies for all but their first category.
fn features(cols: &[Filled], target: PredictorId, i: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for (k, col) in cols.iter().enumerate() {
        if k == target {
            continue;
        }
        match col {
            Filled::Num(v) => out.push(v[i]),
            Filled::Cat(v, c) => out.extend((1..*c).map(|q| f64::from(v[i] as usize == q))),
        }
    }
    out
}

fn fit_model(cols: &[Filled], mask: &[bool], target: PredictorId) -> Option<PviModel> {
    let rows: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    if rows.is_empty() {
        return None;
    }
    let design: Vec<Vec<f64>> = rows.iter().map(|&i| features(cols, target, i)).collect();
    let p = design[0].len();
    match &cols[target] {
        Filled::Num(y) => {
            let x = DMatrix::from_fn(rows.len(), p + 1, |r, c| if c == 0 { 1.0 } else { design[r][c - 1] });
            let yv = DVector::from_iterator(rows.len(), rows.iter().map(|&i| y[i]));
            let mut gram = x.transpose() * &x;
            for d in 1..=p {
                gram[(d, d)] += RIDGE;
            }
            let rhs = x.transpose() * yv;
            let beta = gram
                .clone()
                .cholesky()
                .map(|ch| ch.solve(&rhs))
                .or_else(|| gram.lu().solve(&rhs))?;
            Some(PviModel::Linear {
                coefficients: beta.iter().copied().collect(),
            })
        }
        Filled::Cat(y, n_cats) => {
            let n = rows.len() as f64;
            let means: Vec<f64> = (0..p).map(|c| design.iter().map(|r| r[c]).sum::<f64>() / n).collect();
            let scales: Vec<f64> = (0..p)
                .map(|c| {
                    let var = design.iter().map(|r| (r[c] - means[c]).powi(2)).sum::<f64>() / n;
                    if var > 0.0 {
                        var.sqrt()
                    } else {
                        1.0
                    }
                })
                .collect();
            let mut sums = vec![vec![0.0; p]; *n_cats];
            let mut counts = vec![0usize; *n_cats];
            for (r, &i) in design.iter().zip(&rows) {
                let q = y[i] as usize;
                counts[q] += 1;
                for c in 0..p {
                    sums[q][c] += (r[c] - means[c]) / scales[c];
                }
            }
            let centroids = sums
                .into_iter()
                .zip(&counts)
                .map(|(s, &n)| (n > 0).then(|| s.into_iter().map(|v| v / n as f64).collect()))
                .collect();
            Some(PviModel::Centroid {
                means,
                scales,
                centroids,
            })
        }
    }
}

impl PviModel {
    fn predict(&self, x: &[f64]) -> Value {
        match self {
            PviModel::Linear { coefficients } => {
                Value::Numeric(coefficients[0] + coefficients[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>())
            }
            PviModel::Centroid {
                means,
                scales,
                centroids,
            } => {
                let z: Vec<f64> = x.iter().zip(means.iter().zip(scales)).map(|(v, (m, s))| (v - m) / s).collect();
                let mut best: Option<(usize, f64)> = None;
                for (q, c) in centroids.iter().enumerate() {
                    let Some(c) = c else { continue };
                    let d: f64 = c.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum();
                    if best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((q, d));
                    }
                }
                Value::Category(best.map_or(0, |(q, _)| q as u32))
            }
        }
    }
}

/// One imputation round over the originally missing cells, in schema order.
fn impute_round(cols: &mut [Filled], masks: &[Vec<bool>], models: &[Option<PviModel>]) {
    for j in 0..cols.len() {
        let Some(model) = &models[j] else { continue };
        for i in 0..masks[j].len() {
            if masks[j][i] {
                continue;
            }
            let x = features(cols, j, i);
            match (&mut cols[j], model.predict(&x)) {
                (Filled::Num(v), Value::Numeric(y)) => v[i] = y,
                (Filled::Cat(v, _), Value::Category(q)) => v[i] = q,
                _ => {}
            }
        }
    }
}

fn write_filled(ds: &Dataset, cols: Vec<Filled>) -> Result<Dataset> {
    let mut out = ds.clone();
    for (j, col) in cols.into_iter().enumerate() {
        if ds.missing_count(j) == 0 {
            continue;
        }
        out = match col {
            Filled::Num(v) => replace_num(&out, j, v)?,
            Filled::Cat(v, _) => {
                let p = ds.schema().predictor(j).clone();
                replace_cat(&out, j, p, v, vec![true; ds.n()])?
            }
        };
    }
    Ok(out)
}

/// Chained-equations single imputation: mean/mode warm start, then
/// `iterations` rounds re-imputing each originally missing cell from the
/// other predictors (ridge-damped least squares for numeric, nearest
/// standardised centroid for categorical).
pub fn pvi_transform(ds: &Dataset, iterations: usize) -> Result<(Dataset, FittedTransform)> {
    let fills = fills_for(ds);
    require_fills(ds, &fills)?;
    let m = ds.n_predictors();
    let masks: Vec<Vec<bool>> = (0..m).map(|j| ds.mask(j).to_vec()).collect();
    let mut cols = filled_columns(ds, &fills);
    for _ in 0..iterations {
        for j in 0..m {
            if ds.missing_count(j) == 0 {
                continue;
            }
            let model = fit_model(&cols, &masks[j], j);
            let mut only = vec![None; m];
            only[j] = model;
            impute_round(&mut cols, &masks, &only);
        }
    }
    let models: Vec<Option<PviModel>> = (0..m).map(|j| fit_model(&cols, &masks[j], j)).collect();
    let out = write_filled(ds, cols)?;
    Ok((
        out,
        FittedTransform::Pvi {
            fills,
            iterations,
            models,
        },
    ))
}

fn sentinel(ds: &Dataset, j: PredictorId) -> Option<f64> {
    let Cells::Num(v) = cells(ds, j) else { return None };
    let obs: Vec<f64> = v.into_iter().flatten().collect();
    if obs.is_empty() {
        log::warn!(
            "predictor {:?} is entirely missing; using sentinel 0",
            ds.schema().predictor(j).name
        );
        return Some(0.0);
    }
    let max = obs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = obs.iter().copied().fold(f64::INFINITY, f64::min);
    let range = max - min;
    Some(max + if range > 0.0 { range } else { 1.0 })
}

fn with_missing_category(p: &Predictor) -> Predictor {
    let mut labels = p.categories().unwrap_or(&[]).to_vec();
    labels.push(MISSING_CATEGORY.to_string());
    Predictor::categorical(p.name.clone(), labels)
}

fn apply_sc(ds: &Dataset, sentinels: &[Option<f64>], extended: &[PredictorId]) -> Result<Dataset> {
    let mut out = ds.clone();
    for j in 0..ds.n_predictors() {
        let is_extended = extended.contains(&j);
        match cells(ds, j) {
            Cells::Num(v) => {
                if ds.missing_count(j) == 0 {
                    continue;
                }
                let s = sentinels[j].unwrap_or(0.0);
                out = replace_num(&out, j, v.into_iter().map(|x| x.unwrap_or(s)).collect())?;
            }
            Cells::Cat(v) if is_extended => {
                let p = ds.schema().predictor(j);
                let code = p.n_categories() as u32;
                out = replace_cat(
                    &out,
                    j,
                    with_missing_category(p),
                    v.into_iter().map(|x| x.unwrap_or(code)).collect(),
                    vec![true; ds.n()],
                )?;
            }
            Cells::Cat(_) => {
                if ds.missing_count(j) > 0 {
                    log::warn!(
                        "predictor {:?} had no missing training values; its missing cells stay missing",
                        ds.schema().predictor(j).name
                    );
                }
            }
        }
    }
    Ok(out)
}

/// Separate class: numeric cells get a sentinel beyond the observed range,
/// categorical predictors with missing cells gain a missing category.
pub fn sc_transform(ds: &Dataset) -> Result<(Dataset, FittedTransform)> {
    let sentinels: Vec<Option<f64>> = (0..ds.n_predictors()).map(|j| sentinel(ds, j)).collect();
    let extended: Vec<PredictorId> = (0..ds.n_predictors())
        .filter(|&j| !ds.schema().predictor(j).kind.is_numeric() && ds.missing_count(j) > 0)
        .collect();
    let out = apply_sc(ds, &sentinels, &extended)?;
    Ok((out, FittedTransform::Sc { sentinels, extended }))
}

fn append_indicators(ds: &Dataset, indicators: &[PredictorId]) -> Result<Dataset> {
    let mut out = ds.clone();
    for &j in indicators {
        out = derive_missingness(&out, j)?;
    }
    Ok(out)
}

/// Appends `M(j)` for every predictor with missing cells that the user
/// policy does not already gate, locks `j` at the root and unlocks it in
/// the `M(j) = 1` child.
pub fn best_transform(
    ds: &Dataset,
    user_policy: &AvailabilityPolicy,
) -> Result<(Dataset, AvailabilityPolicy, FittedTransform)> {
    if user_policy.schema_fingerprint() != ds.schema().fingerprint() {
        return Err(Error::Fingerprint {
            expected: ds.schema().fingerprint(),
            found: user_policy.schema_fingerprint().to_string(),
        });
    }
    let indicators: Vec<PredictorId> = (0..ds.n_predictors())
        .filter(|&j| ds.missing_count(j) > 0 && !user_policy.is_gated(j))
        .collect();
    let out = append_indicators(ds, &indicators)?;
    let mut policy = user_policy.extended_to(out.schema());
    for &j in &indicators {
        let name = indicator_name(&ds.schema().predictor(j).name);
        let gate = out.schema().index_of(&name).expect("indicator was just appended");
        policy.add_categorical_gate(gate, vec![1], j);
    }
    Ok((out, policy, FittedTransform::Best { indicators }))
}

fn fmt_value(v: &Option<Value>) -> String {
    match v {
        Some(Value::Numeric(x)) => format!("num {x}"),
        Some(Value::Category(c)) => format!("cat {c}"),
        None => "none".to_string(),
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_floats(s: &str) -> Option<Vec<f64>> {
    if s.is_empty() {
        return Some(Vec::new());
    }
    s.split(',').map(|x| x.parse().ok()).collect()
}

impl FittedTransform {
    pub fn name(&self) -> &'static str {
        match self {
            FittedTransform::Identity => "identity",
            FittedTransform::Svi { .. } => "svi",
            FittedTransform::Pvi { .. } => "pvi",
            FittedTransform::Sc { .. } => "sc",
            FittedTransform::Best { .. } => "best",
        }
    }

    /// Replays the transform on data with the training (raw) schema.
    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        match self {
            FittedTransform::Identity => Ok(ds.clone()),
            FittedTransform::Svi { fills } => {
                check_width(ds, fills.len())?;
                apply_fills(ds, fills)
            }
            FittedTransform::Pvi {
                fills,
                iterations,
                models,
            } => {
                check_width(ds, fills.len())?;
                let m = ds.n_predictors();
                let masks: Vec<Vec<bool>> = (0..m).map(|j| ds.mask(j).to_vec()).collect();
                let mut cols = filled_columns(ds, fills);
                for _ in 0..*iterations {
                    impute_round(&mut cols, &masks, models);
                }
                write_filled(ds, cols)
            }
            FittedTransform::Sc { sentinels, extended } => {
                check_width(ds, sentinels.len())?;
                apply_sc(ds, sentinels, extended)
            }
            FittedTransform::Best { indicators } => append_indicators(ds, indicators),
        }
    }

    /// Line-oriented text form, terminated by `end-transform`.
    pub fn to_text(&self) -> String {
        let mut out = format!("transform={}\n", self.name());
        match self {
            FittedTransform::Identity => {}
            FittedTransform::Svi { fills } => {
                for (j, f) in fills.iter().enumerate() {
                    let _ = writeln!(out, "fill {j} {}", fmt_value(f));
                }
            }
            FittedTransform::Pvi {
                fills,
                iterations,
                models,
            } => {
                let _ = writeln!(out, "iterations {iterations}");
                for (j, f) in fills.iter().enumerate() {
                    let _ = writeln!(out, "fill {j} {}", fmt_value(f));
                }
                for (j, model) in models.iter().enumerate() {
                    match model {
                        None => {
                            let _ = writeln!(out, "model {j} none");
                        }
                        Some(PviModel::Linear { coefficients }) => {
                            let _ = writeln!(out, "model {j} linear {}", join(coefficients));
                        }
                        Some(PviModel::Centroid {
                            means,
                            scales,
                            centroids,
                        }) => {
                            let cents: Vec<String> = centroids
                                .iter()
                                .map(|c| c.as_ref().map_or("-".to_string(), |c| join(c)))
                                .collect();
                            let _ = writeln!(
                                out,
                                "model {j} centroid {} {} {}",
                                join(means),
                                join(scales),
                                cents.join(";")
                            );
                        }
                    }
                }
            }
            FittedTransform::Sc { sentinels, extended } => {
                for (j, s) in sentinels.iter().enumerate() {
                    match s {
                        Some(s) => {
                            let _ = writeln!(out, "sentinel {j} {s}");
                        }
                        None => {
                            let _ = writeln!(out, "sentinel {j} none");
                        }
                    }
                }
                for j in extended {
                    let _ = writeln!(out, "extend {j}");
                }
            }
            FittedTransform::Best { indicators } => {
                for j in indicators {
                    let _ = writeln!(out, "indicator {j}");
                }
            }
        }
        out.push_str("end-transform\n");
        out
    }

    pub fn from_text(text: &str) -> Result<FittedTransform> {
        FittedTransform::parse_lines(&mut text.lines().enumerate().map(|(i, l)| (i + 1, l)))
    }

    pub(crate) fn parse_lines<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<FittedTransform> {
        let (no, head) = lines
            .next()
            .ok_or_else(|| Error::format(0, "expected a transform section"))?;
        let kind = head
            .strip_prefix("transform=")
            .ok_or_else(|| Error::format(no, format!("expected `transform=`, found {head:?}")))?
            .to_string();
        let mut fills = Vec::new();
        let mut models = Vec::new();
        let mut iterations = 0;
        let mut sentinels = Vec::new();
        let mut extended = Vec::new();
        let mut indicators = Vec::new();
        loop {
            let (no, line) = lines
                .next()
                .ok_or_else(|| Error::format(0, "transform section is not terminated"))?;
            if line == "end-transform" {
                break;
            }
            let bad = || Error::format(no, format!("malformed transform line {line:?}"));
            let parts: Vec<&str> = line.split(' ').collect();
            let index = |k: usize| parts.get(k).and_then(|s| s.parse::<usize>().ok()).ok_or_else(bad);
            match parts[0] {
                "fill" => {
                    if index(1)? != fills.len() {
                        return Err(bad());
                    }
                    fills.push(match (parts.get(2), parts.get(3)) {
                        (Some(&"num"), Some(x)) => Some(Value::Numeric(x.parse().map_err(|_| bad())?)),
                        (Some(&"cat"), Some(c)) => Some(Value::Category(c.parse().map_err(|_| bad())?)),
                        (Some(&"none"), None) => None,
                        _ => return Err(bad()),
                    });
                }
                "iterations" => iterations = index(1)?,
                "model" => {
                    if index(1)? != models.len() {
                        return Err(bad());
                    }
                    let floats = |k: usize| parts.get(k).and_then(|s| parse_floats(s)).ok_or_else(bad);
                    models.push(match parts.get(2) {
                        Some(&"none") => None,
                        Some(&"linear") => Some(PviModel::Linear {
                            coefficients: floats(3)?,
                        }),
                        Some(&"centroid") => {
                            let cents = parts.get(5).ok_or_else(bad)?;
                            let centroids = cents
                                .split(';')
                                .map(|c| if c == "-" { Some(None) } else { parse_floats(c).map(Some) })
                                .collect::<Option<Vec<_>>>()
                                .ok_or_else(bad)?;
                            Some(PviModel::Centroid {
                                means: floats(3)?,
                                scales: floats(4)?,
                                centroids,
                            })
                        }
                        _ => return Err(bad()),
                    });
                }
                "sentinel" => {
                    if index(1)? != sentinels.len() {
                        return Err(bad());
                    }
                    sentinels.push(match parts.get(2) {
                        Some(&"none") => None,
                        Some(x) => Some(x.parse().map_err(|_| bad())?),
                        None => return Err(bad()),
                    });
                }
                "extend" => extended.push(index(1)?),
                "indicator" => indicators.push(index(1)?),
                _ => return Err(bad()),
            }
        }
        Ok(match kind.as_str() {
            "identity" => FittedTransform::Identity,
            "svi" => FittedTransform::Svi { fills },
            "pvi" => FittedTransform::Pvi {
                fills,
                iterations,
                models,
            },
            "sc" => FittedTransform::Sc { sentinels, extended },
            "best" => FittedTransform::Best { indicators },
            other => return Err(Error::format(no, format!("unknown transform {other:?}"))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{PredictorKind, Schema};
    use crate::policy::PolicySpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_num(rows: &[(Option<f64>, Option<f64>)]) -> Dataset {
        let schema = Schema::new(
            vec![Predictor::numeric("x1"), Predictor::numeric("x2")],
            vec!["A".into(), "B".into()],
        )
        .unwrap();
        let cells: Vec<_> = rows
            .iter()
            .map(|(a, b)| vec![a.map(Value::Numeric), b.map(Value::Numeric)])
            .collect();
        Dataset::from_rows(schema, &cells, (0..rows.len() as u32).map(|i| i % 2).collect()).unwrap()
    }

    fn cat_ds(cells: &[Option<&str>]) -> Dataset {
        let schema = Schema::new(
            vec![Predictor::categorical("g", ["a", "b"])],
            vec!["A".into(), "B".into()],
        )
        .unwrap();
        let rows: Vec<_> = cells
            .iter()
            .map(|c| vec![c.map(|l| Value::Category(schema.predictor(0).category_index(l).unwrap()))])
            .collect();
        Dataset::from_rows(schema, &rows, vec![0; cells.len()]).unwrap()
    }

    #[test]
    fn svi_mean_and_mode() {
        let ds = two_num(&[(Some(1.0), Some(0.0)), (None, Some(0.0)), (Some(3.0), Some(0.0))]);
        let (out, _) = svi_transform(&ds).unwrap();
        assert_eq!(out.numeric(0, 1), Some(2.0));
        assert!(!out.has_missing());

        let ds = cat_ds(&[Some("a"), Some("a"), None, Some("b")]);
        let (out, _) = svi_transform(&ds).unwrap();
        assert_eq!(out.category(0, 2), Some(0));

        // tie between a and b goes to the first category
        let ds = cat_ds(&[Some("b"), Some("a"), None]);
        assert_eq!(svi_transform(&ds).unwrap().0.category(0, 2), Some(0));
    }

    #[test]
    fn complete_data_is_unchanged() {
        let ds = two_num(&[(Some(1.0), Some(2.0)), (Some(3.0), Some(4.0))]);
        assert_eq!(svi_transform(&ds).unwrap().0, ds);
        assert_eq!(pvi_transform(&ds, 5).unwrap().0, ds);
        assert_eq!(sc_transform(&ds).unwrap().0, ds);
        let (out, policy, _) = best_transform(&ds, &AvailabilityPolicy::permissive(ds.schema())).unwrap();
        assert_eq!(out, ds);
        assert!(policy.rules().is_empty());
    }

    #[test]
    fn fully_missing_column_is_an_error() {
        let ds = two_num(&[(None, Some(2.0)), (None, Some(4.0))]);
        assert!(svi_transform(&ds).is_err());
        assert!(pvi_transform(&ds, 2).is_err());
        let (out, _) = sc_transform(&ds).unwrap();
        assert_eq!(out.numeric(0, 0), Some(0.0));
    }

    #[test]
    fn pvi_recovers_exact_linear_relation() {
        let mut rows: Vec<_> = (0..10).map(|i| (Some(i as f64), Some(2.0 * i as f64))).collect();
        rows[3].1 = None;
        let ds = two_num(&rows);
        let (out, _) = pvi_transform(&ds, 5).unwrap();
        let v = out.numeric(1, 3).unwrap();
        assert!((v - 6.0).abs() < 1e-6, "{v}");
        assert_eq!(out.numeric(1, 4), Some(8.0));
    }

    #[test]
    fn pvi_zero_slope_gives_the_mean() {
        // x1 in {-1, 1}, x2 in {0, 2} balanced so the sample slope is exactly 0.
        let mut rows = Vec::new();
        for i in 0..40 {
            let x1 = if i % 2 == 0 { -1.0 } else { 1.0 };
            let x2 = if (i / 2) % 2 == 0 { 0.0 } else { 2.0 };
            rows.push((Some(x1), Some(x2)));
        }
        rows.push((Some(1.0), None));
        let ds = two_num(&rows);
        let (out, t) = pvi_transform(&ds, 1).unwrap();
        assert!((out.numeric(1, 40).unwrap() - 1.0).abs() < 1e-6);
        let FittedTransform::Pvi { models, .. } = t else { unreachable!() };
        let Some(PviModel::Linear { coefficients }) = &models[1] else { unreachable!() };
        assert!(coefficients[1].abs() < 1e-9);
    }

    #[test]
    fn pvi_slope_on_independent_noise_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut rows: Vec<_> = (0..200_000)
            .map(|_| (Some(rng.gen::<f64>() * 2.0 - 1.0), Some(rng.gen::<f64>() * 2.0 - 1.0)))
            .collect();
        rows[0].1 = None;
        let ds = two_num(&rows);
        let (_, t) = pvi_transform(&ds, 1).unwrap();
        let FittedTransform::Pvi { models, .. } = t else { unreachable!() };
        let Some(PviModel::Linear { coefficients }) = &models[1] else { unreachable!() };
        assert!(coefficients[1].abs() < 1e-2, "slope {}", coefficients[1]);
    }

    #[test]
    fn pvi_categorical_uses_nearest_centroid() {
        let schema = Schema::new(
            vec![Predictor::numeric("x"), Predictor::categorical("g", ["lo", "hi"])],
            vec!["A".into(), "B".into()],
        )
        .unwrap();
        let mut rows: Vec<_> = (0..20)
            .map(|i| {
                let x = i as f64;
                vec![Some(Value::Numeric(x)), Some(Value::Category(u32::from(i >= 10)))]
            })
            .collect();
        rows.push(vec![Some(Value::Numeric(18.5)), None]);
        rows.push(vec![Some(Value::Numeric(0.5)), None]);
        let ds = Dataset::from_rows(schema, &rows, vec![0; 22]).unwrap();
        let (out, _) = pvi_transform(&ds, 3).unwrap();
        assert_eq!(out.category(1, 20), Some(1));
        assert_eq!(out.category(1, 21), Some(0));
    }

    #[test]
    fn sc_sentinel_and_category() {
        let ds = two_num(&[(Some(0.0), Some(1.0)), (Some(100.0), Some(1.0)), (None, Some(1.0))]);
        let (out, _) = sc_transform(&ds).unwrap();
        assert_eq!(out.numeric(0, 2), Some(200.0));

        let ds = cat_ds(&[Some("a"), None, Some("b")]);
        let (out, _) = sc_transform(&ds).unwrap();
        assert_eq!(out.schema().predictor(0).categories().unwrap(), ["a", "b", MISSING_CATEGORY]);
        assert_eq!(out.category(0, 1), Some(2));
    }

    #[test]
    fn sc_constant_column_uses_unit_range() {
        let ds = two_num(&[(Some(5.0), Some(1.0)), (None, Some(1.0))]);
        assert_eq!(sc_transform(&ds).unwrap().0.numeric(0, 1), Some(6.0));
    }

    #[test]
    fn best_gates_each_incomplete_predictor() {
        let ds = two_num(&[(None, Some(1.0)), (Some(2.0), None), (Some(3.0), Some(3.0))]);
        let (out, policy, _) = best_transform(&ds, &AvailabilityPolicy::permissive(ds.schema())).unwrap();
        assert_eq!(out.n_predictors(), 4);
        assert_eq!(out.schema().predictor(2).name, "M(x1)");
        assert_eq!(policy.rules().len(), 2);
        assert!(!policy.root().is_available(0));
        assert!(policy.root().is_available(2));
        assert_eq!(out.mask(0), ds.mask(0));
        assert!(policy.to_string().contains("unlock x1 when M(x1) in {1}"));
    }

    #[test]
    fn best_leaves_user_gated_predictors_alone() {
        let schema = Schema::new(
            vec![Predictor::numeric("credits5"), Predictor::numeric("x5")],
            vec!["A".into(), "B".into()],
        )
        .unwrap();
        let rows = vec![
            vec![Some(Value::Numeric(0.0)), None],
            vec![Some(Value::Numeric(3.0)), Some(Value::Numeric(1.0))],
        ];
        let ds = Dataset::from_rows(schema, &rows, vec![0, 1]).unwrap();
        let user = AvailabilityPolicy::compile(
            &PolicySpec::parse("unlock x5 when credits5 > 0").unwrap(),
            ds.schema(),
        )
        .unwrap();
        let (out, policy, _) = best_transform(&ds, &user).unwrap();
        assert_eq!(out.n_predictors(), 2);
        assert_eq!(policy.rules().len(), 1);
    }

    #[test]
    fn transforms_replay_and_round_trip() {
        let mut rows: Vec<_> = (0..30)
            .map(|i| (Some(i as f64), Some((i * 7 % 11) as f64)))
            .collect();
        rows[4].0 = None;
        rows[9].1 = None;
        let train = two_num(&rows);
        let test = two_num(&[(None, Some(3.0)), (Some(2.0), None), (Some(1.0), Some(1.0))]);
        let policy = AvailabilityPolicy::permissive(train.schema());
        let (svi_out, svi) = svi_transform(&train).unwrap();
        let (pvi_out, pvi) = pvi_transform(&train, 4).unwrap();
        let (_, sc) = sc_transform(&train).unwrap();
        let (best_out, _, best) = best_transform(&train, &policy).unwrap();
        assert_eq!(svi.apply(&train).unwrap(), svi_out);
        assert_eq!(pvi.apply(&train).unwrap().numeric(0, 0), pvi_out.numeric(0, 0));
        assert_eq!(best.apply(&train).unwrap(), best_out);
        for t in [FittedTransform::Identity, svi, pvi, sc, best] {
            let text = t.to_text();
            let back = FittedTransform::from_text(&text).unwrap();
            assert_eq!(back, t);
            assert_eq!(back.to_text(), text);
            let applied = t.apply(&test).unwrap();
            assert_eq!(applied.n(), 3);
            if !matches!(t, FittedTransform::Identity | FittedTransform::Best { .. }) {
                assert!(!applied.has_missing());
                assert!(matches!(applied.schema().predictor(0).kind, PredictorKind::Numeric));
            }
        }
    }

    #[test]
    fn transforms_do_not_touch_input() {
        let ds = two_num(&[(Some(1.0), None), (None, Some(2.0)), (Some(3.0), Some(4.0))]);
        let copy = ds.clone();
        let _ = svi_transform(&ds).unwrap();
        let _ = pvi_transform(&ds, 3).unwrap();
        let _ = sc_transform(&ds).unwrap();
        let _ = best_transform(&ds, &AvailabilityPolicy::permissive(ds.schema())).unwrap();
        assert_eq!(ds, copy);
    }
}
