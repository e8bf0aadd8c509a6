//! Surrogate splits: backup splits on other predictors that best reproduce
//! the primary partition.

use crate::data::{Cells, Column, Dataset, PredictorId};
use crate::policy::Side;
use crate::splitting::{enumerate_splits, Region, Split, SplitRule};

#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    pub split: Split,
    /// Sends observations to the opposite side of `split`.
    pub reversed: bool,
    /// Weighted share of jointly observed rows sent to the primary's side.
    pub agreement: f64,
}

impl Surrogate {
    pub fn side_of(&self, obs: &impl Cells) -> Option<Side> {
        self.split
            .side_of(obs)
            .map(|s| if self.reversed { s.flip() } else { s })
    }
}

/// Best-agreeing split on `k`, as `(split, agreement toward primary-left
/// going left, baseline)`.
fn best_on(ds: &Dataset, rows: &[(usize, f64, bool)], k: PredictorId) -> Option<(Surrogate, f64)> {
    let (col, mask) = ds.column_raw(k);
    let joint: Vec<(usize, f64, bool)> = rows.iter().copied().filter(|(i, _, _)| mask[*i]).collect();
    let total: f64 = joint.iter().map(|r| r.1).sum();
    if !(total > 0.0) {
        return None;
    }
    let primary_left: f64 = joint.iter().filter(|r| r.2).map(|r| r.1).sum();
    let baseline = primary_left.max(total - primary_left) / total;
    let mut best: Option<(Split, f64)> = None;
    let mut consider = |split: Split, agree_left: f64| {
        let a = agree_left / total;
        let score = a.max(1.0 - a);
        if best.as_ref().is_none_or(|(_, b)| score > b.max(1.0 - b) + 1e-12) {
            best = Some((split, a));
        }
    };
    match col {
        Column::Numeric(values) => {
            let mut sorted = joint.clone();
            sorted.sort_by(|a, b| values[a.0].total_cmp(&values[b.0]));
            // agreement = (primary-left weight going left) + (primary-right weight going right)
            let mut left_w = 0.0;
            let mut left_primary_left = 0.0;
            for w in 0..sorted.len().saturating_sub(1) {
                let (i, wt, pl) = sorted[w];
                left_w += wt;
                if pl {
                    left_primary_left += wt;
                }
                let (lo, hi) = (values[i], values[sorted[w + 1].0]);
                if hi > lo {
                    let right_primary_right = (total - primary_left) - (left_w - left_primary_left);
                    let t = lo + (hi - lo) / 2.0;
                    let t = if t >= hi { lo } else { t };
                    consider(Split::numeric(k, t), left_primary_left + right_primary_right);
                }
            }
        }
        Column::Categorical(codes) => {
            let sub = Region {
                rows: joint.iter().map(|r| r.0).collect(),
                weights: joint.iter().map(|r| r.1).collect(),
                available: crate::policy::Availability::all(ds.n_predictors()),
            };
            let splits = enumerate_splits(ds, &sub, k).ok()?;
            let n_cats = ds.schema().predictor(k).n_categories();
            let mut w_cat = vec![0.0; n_cats];
            let mut pl_cat = vec![0.0; n_cats];
            for &(i, wt, pl) in &joint {
                w_cat[codes[i] as usize] += wt;
                if pl {
                    pl_cat[codes[i] as usize] += wt;
                }
            }
            for split in splits {
                let SplitRule::Categories(set) = &split.rule else { continue };
                let (lw, lpl) = set
                    .iter()
                    .fold((0.0, 0.0), |(a, b), c| (a + w_cat[c as usize], b + pl_cat[c as usize]));
                let right_primary_right = (total - primary_left) - (lw - lpl);
                consider(split, lpl + right_primary_right);
            }
        }
    }
    let (split, a) = best?;
    let reversed = 1.0 - a > a;
    Some((
        Surrogate {
            split,
            reversed,
            agreement: if reversed { 1.0 - a } else { a },
        },
        baseline,
    ))
}

/// Up to `max` surrogates for `primary` among the other predictors
/// available in the region, ordered by decreasing agreement. A surrogate
/// must agree more often than sending everything to the majority side.
pub fn build_surrogates(ds: &Dataset, region: &Region, primary: &Split, max: usize) -> Vec<Surrogate> {
    if max == 0 {
        return Vec::new();
    }
    let rows: Vec<(usize, f64, bool)> = region
        .rows
        .iter()
        .zip(&region.weights)
        .filter_map(|(&i, &w)| primary.side_in(ds, i).map(|s| (i, w, s == Side::Left)))
        .collect();
    let mut out: Vec<Surrogate> = region
        .available
        .available()
        .filter(|&k| k != primary.predictor)
        .filter_map(|k| best_on(ds, &rows, k))
        .filter(|(s, baseline)| s.agreement > baseline + 1e-12)
        .map(|(s, _)| s)
        .collect();
    out.sort_by(|a, b| b.agreement.total_cmp(&a.agreement));
    out.truncate(max);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Predictor, Schema, Value};
    use crate::policy::Availability;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ds(cols: usize, rows: &[Vec<Option<f64>>], y: Vec<u32>) -> Dataset {
        let schema = Schema::new(
            (0..cols).map(|j| Predictor::numeric(format!("x{}", j + 1))).collect(),
            vec!["A".into(), "B".into()],
        )
        .unwrap();
        let cells: Vec<_> = rows
            .iter()
            .map(|r| r.iter().map(|v| v.map(Value::Numeric)).collect())
            .collect();
        Dataset::from_rows(schema, &cells, y).unwrap()
    }

    #[test]
    fn duplicate_column_agrees_fully() {
        let rows: Vec<_> = (0..20).map(|i| vec![Some(i as f64), Some(i as f64)]).collect();
        let d = ds(2, &rows, (0..20).map(|i| u32::from(i >= 10)).collect());
        let region = Region::root(&d, Availability::all(2));
        let s = build_surrogates(&d, &region, &Split::numeric(0, 9.5), 5);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].split.predictor, 1);
        assert_eq!(s[0].agreement, 1.0);
        assert!(!s[0].reversed);
    }

    #[test]
    fn mirrored_column_is_reversed() {
        let rows: Vec<_> = (0..20).map(|i| vec![Some(i as f64), Some(-(i as f64))]).collect();
        let d = ds(2, &rows, vec![0; 20]);
        let region = Region::root(&d, Availability::all(2));
        let s = build_surrogates(&d, &region, &Split::numeric(0, 9.5), 5);
        assert!(s[0].reversed);
        assert_eq!(s[0].agreement, 1.0);
        let obs = crate::data::Observation::new(d.schema(), vec![None, Some(Value::Numeric(-15.0))]).unwrap();
        assert_eq!(s[0].side_of(&obs), Some(Side::Right));
    }

    #[test]
    fn independent_noise_stays_near_baseline() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<_> = (0..500)
            .map(|_| vec![Some(rng.gen::<f64>()), Some(rng.gen::<f64>())])
            .collect();
        let d = ds(2, &rows, vec![0; 500]);
        let region = Region::root(&d, Availability::all(2));
        let primary = Split::numeric(0, 0.5);
        let rows_side: Vec<_> = (0..500)
            .map(|i| (i, 1.0, primary.side_in(&d, i) == Some(Side::Left)))
            .collect();
        let (s, baseline) = best_on(&d, &rows_side, 1).unwrap();
        assert!(s.agreement <= baseline + 0.1, "{} vs {baseline}", s.agreement);
        for sur in build_surrogates(&d, &region, &primary, 5) {
            assert!(sur.agreement <= baseline + 0.1);
        }
    }

    #[test]
    fn no_other_predictor_gives_empty_list() {
        let rows: Vec<_> = (0..10).map(|i| vec![Some(i as f64)]).collect();
        let d = ds(1, &rows, vec![0; 10]);
        let region = Region::root(&d, Availability::all(1));
        assert!(build_surrogates(&d, &region, &Split::numeric(0, 4.5), 5).is_empty());
    }

    #[test]
    fn agreements_non_increasing_and_capped() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<_> = (0..300)
            .map(|_| {
                let x: f64 = rng.gen();
                (0..6)
                    .map(|j| Some(if j == 0 { x } else { x + rng.gen::<f64>() * j as f64 * 0.2 }))
                    .collect()
            })
            .collect();
        let d = ds(6, &rows, vec![0; 300]);
        let region = Region::root(&d, Availability::all(6));
        let s = build_surrogates(&d, &region, &Split::numeric(0, 0.5), 3);
        assert_eq!(s.len(), 3);
        assert!(s.windows(2).all(|w| w[0].agreement >= w[1].agreement));
        assert!(s.iter().all(|x| x.split.predictor != 0));
    }

    #[test]
    fn locked_predictors_are_not_surrogates() {
        let rows: Vec<_> = (0..20).map(|i| vec![Some(i as f64), Some(i as f64)]).collect();
        let d = ds(2, &rows, vec![0; 20]);
        let region = Region::root(&d, Availability::from_flags(vec![true, false]));
        assert!(build_surrogates(&d, &region, &Split::numeric(0, 9.5), 5).is_empty());
    }
}
