//! CSV in, model out, predictions back: the library calls behind `best fit`
//! and `best predict`.

use std::collections::HashMap;

use best_trees::csv_io::{load_training, load_with_schema, write_dataset_file};
use best_trees::missing::{Strategy, StrategyTag};
use best_trees::model::Model;
use best_trees::simgen::{censor, sample_dataset, sample_truth, CensorKind, CensorSpec};
use best_trees::{AvailabilityPolicy, FitOptions};

fn main() -> best_trees::Result<()> {
    let dir = std::env::temp_dir().join(format!("best-csv-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| best_trees::Error::io(&dir, e))?;
    let truth = sample_truth(2);
    let spec = CensorSpec { target: Some(1), ..CensorSpec::new(CensorKind::MarResponse, 3) };
    for (name, seed, n) in [("train.csv", 1, 800), ("test.csv", 2, 400)] {
        let ds = censor(&sample_dataset(&truth, n, 0.3, seed)?, &spec, &[])?;
        write_dataset_file(&ds, "Y", &dir.join(name))?;
    }

    let (train, response) = load_training(&dir.join("train.csv"), &HashMap::new())?;
    let policy = AvailabilityPolicy::permissive(train.schema());
    let model = Model::train(&train, &response, &policy, &Strategy::new(StrategyTag::Best), &FitOptions::default(), None)?;
    let (test, _) = load_with_schema(&dir.join("test.csv"), &model.schema)?;
    println!("inferred {} predictors, classes {:?}", model.schema.n_predictors(), model.schema.classes());
    println!("policy after the BEST transform:\n{}", model.policy);
    println!("test accuracy {:.4}", model.accuracy(&test)?);
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
