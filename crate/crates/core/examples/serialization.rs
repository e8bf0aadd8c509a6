//! Models and forests as versioned text documents.

use best_trees::experiment::scenario;
use best_trees::forest::{Forest, ForestConfig};
use best_trees::missing::{Strategy, StrategyTag};
use best_trees::model::Model;
use best_trees::simgen::CensorKind;
use best_trees::{AvailabilityPolicy, FitOptions};

fn main() -> best_trees::Result<()> {
    let sc = scenario(Some(CensorKind::MarGate), (500, 200, 500), 0.3, 5)?;
    let model = Model::train(&sc.train, "Y", &sc.user_policy, &Strategy::new(StrategyTag::Best), &FitOptions::default(), Some(&sc.validation))?;
    let text = model.to_text();
    println!("model document: {} lines", text.lines().count());
    let policy = text.lines().skip_while(|l| *l != "policy").take_while(|l| *l != "end-policy");
    for line in text.lines().take(3).chain(policy) {
        println!("  {line}");
    }
    let back = Model::from_text(&text)?;
    assert_eq!(back.to_text(), text);
    println!("reloaded model accuracy {:.4}", back.accuracy(&sc.test)?);

    let cfg = ForestConfig { n_trees: 5, ..ForestConfig::default() };
    let data = best_trees::missing::svi_transform(&sc.train)?.0;
    let forest = Forest::fit(&data, &AvailabilityPolicy::permissive(data.schema()), &cfg)?;
    let ftext = forest.to_text();
    assert_eq!(Forest::from_text(&ftext)?.to_text(), ftext);
    println!("forest document: {} lines, header:", ftext.lines().count());
    for line in ftext.lines().take(7) {
        println!("  {line}");
    }
    Ok(())
}
