//! A grade is only meaningful for students who took credits in the
//! department, so `grade` is locked until a split isolates `credits > 0`.

use best_trees::tree::gating_violations;
use best_trees::{AvailabilityPolicy, Dataset, FitOptions, PolicySpec, Predictor, Schema, Tree, Value};

fn main() -> best_trees::Result<()> {
    let schema = Schema::new(
        vec![Predictor::numeric("credits"), Predictor::numeric("grade"), Predictor::numeric("age")],
        vec!["dropout".into(), "complete".into()],
    )?;
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..300 {
        let credits = (i % 4) as f64;
        let age = 18.0 + (i % 7) as f64;
        let grade = (credits > 0.0).then(|| 50.0 + ((i * 37) % 50) as f64);
        let complete = grade.map_or(i % 5 == 0, |g| g >= 65.0);
        rows.push(vec![Some(Value::Numeric(credits)), grade.map(Value::Numeric), Some(Value::Numeric(age))]);
        y.push(u32::from(complete));
    }
    let ds = Dataset::from_rows(schema.clone(), &rows, y)?;

    let spec = PolicySpec::parse("root: credits age\nunlock grade when credits > 0.5 side=right\n")?;
    let policy = AvailabilityPolicy::compile(&spec, &schema)?;
    print!("{policy}");

    let tree = Tree::fit(&ds, &policy, &FitOptions::default())?;
    println!("leaves {}, gating violations {}", tree.n_leaves(), gating_violations(&tree, &policy).len());
    for node in tree.nodes() {
        if let best_trees::tree::NodeKind::Internal(b) = &node.kind {
            println!("{:indent$}split {} at depth {}", "", schema.predictor(b.split.predictor).name, node.stats.depth, indent = 2 * node.stats.depth);
        }
    }
    Ok(())
}
