//! Fit a single tree on an in-memory dataset and score new observations.

use best_trees::{AvailabilityPolicy, Dataset, FitOptions, Observation, Predictor, Schema, Tree, Value};

fn main() -> best_trees::Result<()> {
    let schema = Schema::new(
        vec![Predictor::numeric("age"), Predictor::categorical("plan", ["basic", "pro", "team"])],
        vec!["stay".into(), "churn".into()],
    )?;
    // churn when young on the basic plan, or old on any plan
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..120 {
        let age = 18.0 + (i % 60) as f64;
        let plan = (i % 3) as u32;
        rows.push(vec![Some(Value::Numeric(age)), Some(Value::Category(plan))]);
        labels.push(u32::from((age < 30.0 && plan == 0) || age > 65.0));
    }
    let ds = Dataset::from_rows(schema.clone(), &rows, labels)?;

    let tree = Tree::fit(&ds, &AvailabilityPolicy::permissive(&schema), &FitOptions::default())?;
    println!("leaves {}, depth {}", tree.n_leaves(), tree.depth());
    println!("training loss {:.3}", best_trees::tree::empirical_loss(&tree, &ds));

    for (age, plan) in [("22", "basic"), ("22", "pro"), ("70", "team")] {
        let obs = Observation::from_labels(&schema, &[Some(age), Some(plan)])?;
        println!("age {age:>2}, {plan:<5} -> {}", schema.classes()[tree.predict(&obs) as usize]);
    }
    // a missing age follows the heavier branch
    let obs = Observation::from_labels(&schema, &[None, Some("basic")])?;
    println!("age ??, basic -> {}", schema.classes()[tree.predict(&obs) as usize]);
    Ok(())
}
