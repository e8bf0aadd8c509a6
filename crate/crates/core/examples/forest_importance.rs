//! Gini-decrease importance when a predictor goes missing with one response
//! label: SC credits the predictor, BEST credits its missingness indicator.

use best_trees::experiment::{importance_study, ImportanceConfig};

fn main() -> best_trees::Result<()> {
    let study = importance_study(&ImportanceConfig { n: 1000, n_trees: 60, ..ImportanceConfig::default() })?;
    print!("{}", study.to_table());
    for (row, report) in &study.rows {
        println!("{row:<9} top predictor {}", report.top());
    }
    Ok(())
}
