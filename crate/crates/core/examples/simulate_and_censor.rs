//! The ground-truth generator and the four censoring processes.

use best_trees::simgen::{censor, sample_dataset, sample_truth, CensorKind, CensorSpec};

fn main() -> best_trees::Result<()> {
    let truth = sample_truth(7);
    let names: Vec<String> = truth.used_predictors().iter().map(|&j| format!("X{}", j + 1)).collect();
    println!("truth uses {}", names.join(" "));
    println!("leaf labels {:?}", truth.labels);
    let ds = sample_dataset(&truth, 5000, 0.3, 8)?;
    for kind in [CensorKind::MarResponse, CensorKind::MnarNumeric, CensorKind::MnarCategorical] {
        let spec = CensorSpec::new(kind, 9);
        let c = spec.resolve(&ds, &truth.used_predictors())?;
        let out = c.apply(&ds)?;
        println!(
            "{kind:<17} target X{} masked {:>5.1}%  {:?}",
            c.target + 1,
            100.0 * out.missing_count(c.target) as f64 / out.n() as f64,
            c.process
        );
    }
    let gated = CensorSpec { target: Some(0), gate: Some(7), ..CensorSpec::new(CensorKind::MarGate, 1) };
    let out = censor(&ds, &gated, &[])?;
    println!("mar-gate          target X1 masked {:>5.1}%", 100.0 * out.missing_count(0) as f64 / out.n() as f64);
    Ok(())
}
