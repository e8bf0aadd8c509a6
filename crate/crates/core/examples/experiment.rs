//! A small replicate × size × strategy accuracy study.

use best_trees::experiment::{run_experiment, ExperimentConfig};
use best_trees::simgen::CensorKind;

fn main() -> best_trees::Result<()> {
    let cfg = ExperimentConfig {
        censor: Some(CensorKind::MarResponse),
        sizes: vec![100, 500],
        replicates: 5,
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&cfg)?;
    print!("{}", report.to_table());
    Ok(())
}
