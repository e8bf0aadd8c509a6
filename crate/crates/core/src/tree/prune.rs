//! Weakest-link cost-complexity pruning and validation-set selection.

use super::{empirical_loss, Node, NodeKind, Tree};
use crate::data::Dataset;

/// Nested subtrees from the full tree down to the root stump, each tagged
/// with the critical `alpha` at which it becomes optimal.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneSequence {
    entries: Vec<(f64, Tree)>,
}

impl PruneSequence {
    pub fn entries(&self) -> &[(f64, Tree)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.entries.iter().map(|(a, _)| *a).collect()
    }
}

/// `(Σ leaf cost, leaf count)` for the subtree rooted at `node`.
fn subtree_cost(node: &Node) -> (f64, usize) {
    match &node.kind {
        NodeKind::Leaf => (node.stats.cost(), 1),
        NodeKind::Internal(b) => {
            let (cl, nl) = subtree_cost(&b.left);
            let (cr, nr) = subtree_cost(&b.right);
            (cl + cr, nl + nr)
        }
    }
}

/// Cost increase per removed leaf when collapsing `node`.
fn link_strength(node: &Node) -> f64 {
    let (cost, leaves) = subtree_cost(node);
    (node.stats.cost() - cost) / (leaves - 1) as f64
}

fn weakest_link(node: &Node) -> Option<f64> {
    match &node.kind {
        NodeKind::Leaf => None,
        NodeKind::Internal(b) => {
            let mut best = link_strength(node);
            for child in [&b.left, &b.right] {
                if let Some(g) = weakest_link(child) {
                    best = best.min(g);
                }
            }
            Some(best)
        }
    }
}

fn collapse_at_most(node: &mut Node, threshold: f64) {
    if node.is_leaf() {
        return;
    }
    if link_strength(node) <= threshold {
        node.collapse();
        return;
    }
    if let NodeKind::Internal(b) = &mut node.kind {
        collapse_at_most(&mut b.left, threshold);
        collapse_at_most(&mut b.right, threshold);
    }
}

/// Collapses until every remaining link is stronger than `threshold`.
fn collapse_until(tree: &mut Tree, threshold: f64) {
    while let Some(g) = weakest_link(&tree.root) {
        if g > threshold {
            break;
        }
        collapse_at_most(&mut tree.root, threshold);
    }
}

/// Weakest-link pruning. Zero-gain links collapse into the `alpha = 0`
/// entry, so alphas are strictly increasing.
pub fn prune_sequence(tree: &Tree) -> PruneSequence {
    let tolerance = 1e-12 * tree.root.stats.weight.max(1.0);
    let mut current = tree.clone();
    collapse_until(&mut current, tolerance);
    let mut entries = vec![(0.0, current.clone())];
    while let Some(alpha) = weakest_link(&current.root) {
        collapse_until(&mut current, alpha + tolerance);
        entries.push((alpha, current.clone()));
    }
    PruneSequence { entries }
}

/// Subtree with the lowest validation loss; ties go to the smaller tree.
pub fn select_by_validation(seq: &PruneSequence, validation: &Dataset) -> Tree {
    let mut best: Option<(f64, &Tree)> = None;
    for (_, tree) in &seq.entries {
        let loss = empirical_loss(tree, validation);
        match best {
            Some((b, _)) if loss > b + 1e-12 => {}
            _ => best = Some((loss, tree)),
        }
    }
    best.expect("prune sequences are never empty").1.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Predictor, Schema, Value};
    use crate::policy::{Availability, Side};
    use crate::splitting::{ClassHistogram, Measure, Split};
    use crate::tree::{Branch, FitOptions, NodeStats};

    fn node(counts: &[f64], depth: usize, kind: NodeKind) -> Node {
        let distribution = ClassHistogram::from_counts(counts.to_vec());
        Node {
            stats: NodeStats {
                weight: distribution.total(),
                impurity: Measure::Gini.of(&distribution),
                distribution: distribution.clone(),
                available: Availability::all(1),
                depth,
            },
            label: distribution.argmax(),
            kind,
        }
    }

    fn internal(counts: &[f64], depth: usize, threshold: f64, left: Node, right: Node) -> Node {
        node(
            counts,
            depth,
            NodeKind::Internal(Box::new(Branch {
                split: Split::numeric(0, threshold),
                left,
                right,
                surrogates: vec![],
                fallback: Side::Left,
            })),
        )
    }

    fn tree(root: Node) -> Tree {
        Tree {
            root,
            schema_fingerprint: schema().fingerprint(),
            policy_fingerprint: String::new(),
            options: FitOptions::default(),
        }
    }

    fn schema() -> Schema {
        Schema::new(vec![Predictor::numeric("x")], vec!["A".into(), "B".into()]).unwrap()
    }

    /// root [10,10] -(x<=0)-> left [8,2] -(x<=-1)-> [8,0] | [0,2]; right leaf [2,8]
    fn depth_two() -> Tree {
        let left = internal(
            &[8.0, 2.0],
            1,
            -1.0,
            node(&[8.0, 0.0], 2, NodeKind::Leaf),
            node(&[0.0, 2.0], 2, NodeKind::Leaf),
        );
        tree(internal(&[10.0, 10.0], 0, 0.0, left, node(&[2.0, 8.0], 1, NodeKind::Leaf)))
    }

    fn validation(rows: &[(f64, u32)]) -> Dataset {
        let cells: Vec<_> = rows.iter().map(|(x, _)| vec![Some(Value::Numeric(*x))]).collect();
        Dataset::from_rows(schema(), &cells, rows.iter().map(|r| r.1).collect()).unwrap()
    }

    #[test]
    fn stump_gives_single_entry() {
        let seq = prune_sequence(&tree(node(&[3.0, 1.0], 0, NodeKind::Leaf)));
        assert_eq!(seq.alphas(), vec![0.0]);
    }

    #[test]
    fn zero_gain_link_merges_into_alpha_zero() {
        let t = tree(internal(
            &[4.0, 4.0],
            0,
            0.0,
            node(&[2.0, 2.0], 1, NodeKind::Leaf),
            node(&[2.0, 2.0], 1, NodeKind::Leaf),
        ));
        let seq = prune_sequence(&t);
        assert_eq!(seq.len(), 1);
        assert_eq!(seq.entries()[0].0, 0.0);
        assert!(seq.entries()[0].1.root.is_leaf());
    }

    #[test]
    fn critical_alphas_by_hand() {
        // g(left) = (10*0.32 - 0) / 1 = 3.2; g(root) = (10 - 3.2) / 2 = 3.4.
        // After collapsing left: g(root) = (10 - 6.4) / 1 = 3.6.
        let seq = prune_sequence(&depth_two());
        let alphas = seq.alphas();
        assert_eq!(alphas.len(), 3);
        assert_eq!(alphas[0], 0.0);
        assert!((alphas[1] - 3.2).abs() < 1e-12);
        assert!((alphas[2] - 3.6).abs() < 1e-12);
        let leaves: Vec<_> = seq.entries().iter().map(|(_, t)| t.n_leaves()).collect();
        assert_eq!(leaves, vec![3, 2, 1]);
    }

    #[test]
    fn separable_validation_keeps_full_tree() {
        let seq = prune_sequence(&depth_two());
        let val = validation(&[(-2.0, 0), (-0.5, 1), (1.0, 1), (-3.0, 0)]);
        assert_eq!(select_by_validation(&seq, &val).n_leaves(), 3);
    }

    #[test]
    fn equal_losses_pick_the_stump() {
        // Every subtree predicts 0 at x=-2 (3 errors of 6) and the two leaf
        // labels at x=1 split the 4 rows evenly (2 errors either way).
        let seq = prune_sequence(&depth_two());
        let mut rows = vec![(-2.0, 0), (-2.0, 1), (-2.0, 0), (-2.0, 1), (-2.0, 0), (-2.0, 1)];
        rows.extend([(1.0, 0), (1.0, 0), (1.0, 1), (1.0, 1)]);
        let val = validation(&rows);
        for (_, t) in seq.entries() {
            assert!((empirical_loss(t, &val) - 0.5).abs() < 1e-15);
        }
        assert!(select_by_validation(&seq, &val).root.is_leaf());
    }

    #[test]
    fn single_entry_selection() {
        let stump = tree(node(&[3.0, 1.0], 0, NodeKind::Leaf));
        let seq = prune_sequence(&stump);
        assert_eq!(select_by_validation(&seq, &validation(&[(0.0, 1)])), stump);
    }
}
