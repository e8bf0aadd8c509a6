//! Weakest-link pruning: the nested subtree sequence and validation choice.

use best_trees::simgen::{sample_dataset, sample_truth};
use best_trees::tree::{empirical_loss, prune_sequence, select_by_validation};
use best_trees::{AvailabilityPolicy, FitOptions, Tree};

fn main() -> best_trees::Result<()> {
    let truth = sample_truth(3);
    let train = sample_dataset(&truth, 600, 0.3, 1)?;
    let val = sample_dataset(&truth, 500, 0.3, 2)?;
    let test = sample_dataset(&truth, 2000, 0.3, 3)?;
    let opts = FitOptions { beta: 1, ..FitOptions::default() };
    let full = Tree::fit(&train, &AvailabilityPolicy::permissive(train.schema()), &opts)?;

    let seq = prune_sequence(&full);
    println!("{:>10} {:>7} {:>9} {:>9}", "alpha", "leaves", "val loss", "test loss");
    for (alpha, t) in seq.entries().iter().step_by((seq.len() / 12).max(1)) {
        println!("{alpha:>10.4} {:>7} {:>9.4} {:>9.4}", t.n_leaves(), empirical_loss(t, &val), empirical_loss(t, &test));
    }
    let chosen = select_by_validation(&seq, &val);
    println!("chosen: {} leaves, test loss {:.4} (full tree {:.4})", chosen.n_leaves(), empirical_loss(&chosen, &test), empirical_loss(&full, &test));
    Ok(())
}
