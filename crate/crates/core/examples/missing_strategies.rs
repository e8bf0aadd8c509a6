//! Six ways to handle one MNAR-censored dataset, scored on held-out data.

use best_trees::experiment::{evaluate, scenario};
use best_trees::missing::StrategyTag;
use best_trees::simgen::CensorKind;
use best_trees::FitOptions;

fn main() -> best_trees::Result<()> {
    for kind in [CensorKind::MarResponse, CensorKind::MnarNumeric] {
        let sc = scenario(Some(kind), (800, 500, 2000), 0.3, 11)?;
        let target = sc.target.expect("censored scenario");
        let name = &sc.train.schema().predictor(target).name;
        let share = sc.train.missing_count(target) as f64 / sc.train.n() as f64;
        println!("{kind}: {name} missing in {:.0}% of training rows", 100.0 * share);
        let acc = evaluate(&sc, &StrategyTag::ALL, &FitOptions::default())?;
        for (tag, a) in StrategyTag::ALL.iter().zip(acc) {
            println!("  {:<10}{a:.4}", tag.label());
        }
    }
    Ok(())
}
