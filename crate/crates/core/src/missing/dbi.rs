//! Distribution-based imputation: fractional routing of observations whose
//! split value is missing.

use crate::data::{Cells, ClassId, Dataset};
use crate::policy::Side;
use crate::splitting::{Region, Split};
use crate::tree::{Node, NodeKind, Tree};

/// Partitions `region` by `split`. Rows with the split value missing go to
/// both children, their weight scaled by the observed left/right shares.
/// Children inherit the parent's availability.
pub fn dbi_route_fit(ds: &Dataset, region: &Region, split: &Split) -> (Region, Region) {
    let empty = || Region {
        rows: Vec::new(),
        weights: Vec::new(),
        available: region.available.clone(),
    };
    let (mut left, mut right) = (empty(), empty());
    let mut observed = [0.0, 0.0];
    let sides: Vec<Option<Side>> = region.rows.iter().map(|&i| split.side_in(ds, i)).collect();
    for (side, &w) in sides.iter().zip(&region.weights) {
        match side {
            Some(Side::Left) => observed[0] += w,
            Some(Side::Right) => observed[1] += w,
            None => {}
        }
    }
    let total = observed[0] + observed[1];
    let share = if total > 0.0 { observed[0] / total } else { 0.5 };
    for ((&i, &w), side) in region.rows.iter().zip(&region.weights).zip(sides) {
        match side {
            Some(Side::Left) => {
                left.rows.push(i);
                left.weights.push(w);
            }
            Some(Side::Right) => {
                right.rows.push(i);
                right.weights.push(w);
            }
            None => {
                let wl = w * share;
                left.rows.push(i);
                left.weights.push(wl);
                right.rows.push(i);
                right.weights.push(w - wl);
            }
        }
    }
    (left, right)
}

fn accumulate(node: &Node, mass: f64, obs: &impl Cells, votes: &mut [f64]) {
    match &node.kind {
        NodeKind::Leaf => {
            let dist = &node.stats.distribution;
            let total = dist.total();
            for (v, c) in votes.iter_mut().zip(dist.counts()) {
                *v += mass * c / total;
            }
        }
        NodeKind::Internal(b) => match b.split.side_of(obs) {
            Some(Side::Left) => accumulate(&b.left, mass, obs, votes),
            Some(Side::Right) => accumulate(&b.right, mass, obs, votes),
            None => {
                let (wl, wr) = (b.left.stats.weight, b.right.stats.weight);
                let share = wl / (wl + wr);
                accumulate(&b.left, mass * share, obs, votes);
                accumulate(&b.right, mass * (1.0 - share), obs, votes);
            }
        },
    }
}

/// Weighted vote over every leaf reachable by forking at missing split
/// values; ties go to the first class.
pub fn dbi_predict(tree: &Tree, obs: &impl Cells) -> ClassId {
    let mut votes = vec![0.0; tree.root.stats.distribution.n_classes()];
    accumulate(&tree.root, 1.0, obs, &mut votes);
    let mut best = 0;
    for (q, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = q;
        }
    }
    best as ClassId
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Observation, Predictor, Schema, Value};
    use crate::policy::{Availability, AvailabilityPolicy};
    use crate::splitting::ClassHistogram;
    use crate::tree::{Branch, FitOptions, NodeStats, Routing};

    fn schema() -> Schema {
        Schema::new(vec![Predictor::numeric("x")], vec!["A".into(), "B".into()]).unwrap()
    }

    fn ds(values: &[Option<f64>]) -> Dataset {
        let rows: Vec<_> = values.iter().map(|v| vec![v.map(Value::Numeric)]).collect();
        Dataset::from_rows(schema(), &rows, vec![0; values.len()]).unwrap()
    }

    #[test]
    fn missing_row_split_proportionally() {
        let mut vals: Vec<_> = (0..10).map(|i| Some(i as f64)).collect();
        vals.push(None);
        let d = ds(&vals);
        let region = Region::root(&d, Availability::all(1));
        let (l, r) = dbi_route_fit(&d, &region, &Split::numeric(0, 5.5));
        assert_eq!(l.rows.len(), 7);
        assert!((l.weights[6] - 0.6).abs() < 1e-15);
        assert!((r.weights[4] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn fractional_weight_halves() {
        let d = ds(&[Some(0.0), Some(1.0), None]);
        let region = Region {
            rows: vec![0, 1, 2],
            weights: vec![1.0, 1.0, 0.5],
            available: Availability::all(1),
        };
        let (l, r) = dbi_route_fit(&d, &region, &Split::numeric(0, 0.5));
        assert_eq!(l.weights, vec![1.0, 0.25]);
        assert_eq!(r.weights, vec![1.0, 0.25]);
    }

    #[test]
    fn complete_rows_are_a_plain_partition() {
        let d = ds(&[Some(0.0), Some(1.0), Some(2.0)]);
        let region = Region::root(&d, Availability::all(1));
        let (l, r) = dbi_route_fit(&d, &region, &Split::numeric(0, 0.5));
        assert_eq!((l.rows, r.rows), (vec![0], vec![1, 2]));
    }

    fn stump(left: [f64; 2], right: [f64; 2]) -> Tree {
        let node = |c: [f64; 2], depth, kind| {
            let distribution = ClassHistogram::from_counts(c.to_vec());
            Node {
                stats: NodeStats {
                    weight: distribution.total(),
                    impurity: 0.0,
                    distribution: distribution.clone(),
                    available: Availability::all(1),
                    depth,
                },
                label: distribution.argmax(),
                kind,
            }
        };
        let root = node(
            [left[0] + right[0], left[1] + right[1]],
            0,
            NodeKind::Internal(Box::new(Branch {
                split: Split::numeric(0, 0.0),
                left: node(left, 1, NodeKind::Leaf),
                right: node(right, 1, NodeKind::Leaf),
                surrogates: vec![],
                fallback: Side::Left,
            })),
        );
        Tree {
            root,
            schema_fingerprint: schema().fingerprint(),
            policy_fingerprint: String::new(),
            options: FitOptions {
                routing: Routing::Distribute,
                ..FitOptions::default()
            },
        }
    }

    #[test]
    fn votes_at_missing_root() {
        let missing = Observation::new(&schema(), vec![None]).unwrap();
        // 50/50, pure A left, pure B right: tie goes to A
        assert_eq!(dbi_predict(&stump([5.0, 0.0], [0.0, 5.0]), &missing), 0);
        // 0.7/0.3, pure B left, pure A right
        assert_eq!(dbi_predict(&stump([0.0, 7.0], [3.0, 0.0]), &missing), 1);
        let low = Observation::new(&schema(), vec![Some(Value::Numeric(-1.0))]).unwrap();
        assert_eq!(dbi_predict(&stump([0.0, 7.0], [3.0, 0.0]), &low), 1);
        assert_eq!(dbi_predict(&stump([7.0, 0.0], [0.0, 3.0]), &low), 0);
    }

    #[test]
    fn fully_observed_matches_plain_prediction() {
        let mut vals: Vec<_> = (0..40).map(|i| Some(i as f64)).collect();
        vals[3] = None;
        let rows: Vec<_> = vals.iter().map(|v| vec![v.map(Value::Numeric)]).collect();
        let y = (0..40).map(|i| u32::from(i % 10 >= 5)).collect();
        let d = Dataset::from_rows(schema(), &rows, y).unwrap();
        let opts = FitOptions {
            beta: 1,
            routing: Routing::Distribute,
            ..FitOptions::default()
        };
        let t = Tree::fit(&d, &AvailabilityPolicy::permissive(d.schema()), &opts).unwrap();
        for i in 0..40 {
            if i == 3 {
                continue;
            }
            assert_eq!(dbi_predict(&t, &d.row(i)), t.leaf_for(&d.row(i)).label);
        }
    }
}
