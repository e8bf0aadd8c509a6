//! A fitted tree bundled with everything needed to score raw data: the
//! input schema, the strategy's fitted transform and the policy it was
//! grown under.

use std::fmt::Write as _;

use crate::data::{ClassId, Dataset, Predictor, PredictorKind, Schema};
use crate::error::{Error, Result};
use crate::missing::{FittedTransform, Strategy};
use crate::policy::{AvailabilityPolicy, PolicySpec};
use crate::tree::{prune_sequence, select_by_validation, FitOptions, Tree};

#[derive(Debug, Clone)]
pub struct Model {
    /// Schema of the raw input, before any transform.
    pub schema: Schema,
    pub response_name: String,
    pub transform: FittedTransform,
    /// Schema the tree was grown on.
    pub fitted_schema: Schema,
    pub policy: AvailabilityPolicy,
    pub tree: Tree,
}

impl Model {
    /// Fits `strategy` on raw training data; with a validation set the tree
    /// is pruned to the subtree with the lowest validation loss.
    pub fn train(
        train: &Dataset,
        response_name: &str,
        user_policy: &AvailabilityPolicy,
        strategy: &Strategy,
        base: &FitOptions,
        validation: Option<&Dataset>,
    ) -> Result<Model> {
        let prepared = strategy.prepare(train, user_policy)?;
        let mut tree = Tree::fit(&prepared.data, &prepared.policy, &strategy.fit_options(base))?;
        if let Some(val) = validation {
            let val = prepared.transform.apply(val)?;
            tree = select_by_validation(&prune_sequence(&tree), &val);
        }
        Ok(Model {
            schema: train.schema().clone(),
            response_name: response_name.to_string(),
            fitted_schema: prepared.data.schema().clone(),
            transform: prepared.transform,
            policy: prepared.policy,
            tree,
        })
    }

    fn check(&self, ds: &Dataset) -> Result<()> {
        let found = ds.schema().fingerprint();
        let expected = self.schema.fingerprint();
        if found != expected {
            return Err(Error::Fingerprint { expected, found });
        }
        Ok(())
    }

    /// Applies the transform and returns the data the tree sees.
    pub fn prepare(&self, ds: &Dataset) -> Result<Dataset> {
        self.check(ds)?;
        self.transform.apply(ds)
    }

    pub fn predict(&self, ds: &Dataset) -> Result<Vec<ClassId>> {
        Ok(self.tree.predict_dataset(&self.prepare(ds)?))
    }

    pub fn accuracy(&self, ds: &Dataset) -> Result<f64> {
        let pred = self.predict(ds)?;
        let mut right = 0.0;
        for (i, p) in pred.iter().enumerate() {
            if *p == ds.response(i) {
                right += ds.weight(i);
            }
        }
        Ok(right / ds.total_weight())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "bestfmt=1");
        let _ = writeln!(out, "kind=model");
        let _ = writeln!(out, "response={}", self.response_name);
        write_schema(&mut out, "schema", &self.schema);
        out.push_str(&self.transform.to_text());
        write_schema(&mut out, "fitted-schema", &self.fitted_schema);
        out.push_str("policy\n");
        out.push_str(&self.policy.to_string());
        out.push_str("end-policy\n");
        out.push_str(&self.tree.to_text());
        out
    }

    pub fn from_text(text: &str) -> Result<Model> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut expect = |want: &str| -> Result<String> {
            let (no, line) = lines.next().ok_or_else(|| Error::format(0, format!("missing {want}")))?;
            line.strip_prefix(want)
                .map(String::from)
                .ok_or_else(|| Error::format(no, format!("expected {want:?}")))
        };
        expect("bestfmt=1")?;
        expect("kind=model")?;
        let response_name = expect("response=")?;
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).skip(3);
        let schema = parse_schema(&mut lines, "schema")?;
        let transform = FittedTransform::parse_lines(&mut lines)?;
        let fitted_schema = parse_schema(&mut lines, "fitted-schema")?;
        let (no, head) = lines.next().ok_or_else(|| Error::format(0, "missing policy section"))?;
        if head != "policy" {
            return Err(Error::format(no, "expected \"policy\""));
        }
        let mut policy_text = String::new();
        loop {
            let (_, line) = lines.next().ok_or_else(|| Error::format(no, "unterminated policy section"))?;
            if line == "end-policy" {
                break;
            }
            policy_text.push_str(line);
            policy_text.push('\n');
        }
        let policy = AvailabilityPolicy::compile(&PolicySpec::parse(&policy_text)?, &fitted_schema)?;
        let tree = Tree::parse_lines(&mut lines)?;
        if tree.schema_fingerprint != fitted_schema.fingerprint() {
            return Err(Error::Fingerprint {
                expected: fitted_schema.fingerprint(),
                found: tree.schema_fingerprint,
            });
        }
        if tree.policy_fingerprint != policy.fingerprint() {
            return Err(Error::Fingerprint {
                expected: policy.fingerprint(),
                found: tree.policy_fingerprint,
            });
        }
        Ok(Model {
            schema,
            response_name,
            transform,
            fitted_schema,
            policy,
            tree,
        })
    }
}

fn write_schema(out: &mut String, tag: &str, schema: &Schema) {
    let _ = writeln!(out, "{tag} predictors={}", schema.n_predictors());
    for p in schema.predictors() {
        match &p.kind {
            PredictorKind::Numeric => {
                let _ = writeln!(out, "numeric\t{}", p.name);
            }
            PredictorKind::Categorical { categories } => {
                let _ = writeln!(out, "categorical\t{}\t{}", p.name, categories.join("\t"));
            }
        }
    }
    let _ = writeln!(out, "classes\t{}", schema.classes().join("\t"));
}

fn parse_schema<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, tag: &str) -> Result<Schema> {
    let (no, head) = lines.next().ok_or_else(|| Error::format(0, format!("missing {tag} section")))?;
    let m: usize = head
        .strip_prefix(tag)
        .and_then(|r| r.strip_prefix(" predictors="))
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| Error::format(no, format!("expected \"{tag} predictors=N\"")))?;
    let mut predictors = Vec::with_capacity(m);
    for _ in 0..m {
        let (no, line) = lines.next().ok_or_else(|| Error::format(no, "truncated schema"))?;
        let mut f = line.split('\t');
        predictors.push(match (f.next(), f.next()) {
            (Some("numeric"), Some(name)) => Predictor::numeric(name),
            (Some("categorical"), Some(name)) => Predictor::categorical(name, f),
            _ => return Err(Error::format(no, "bad predictor line")),
        });
    }
    let (no, line) = lines.next().ok_or_else(|| Error::format(no, "missing classes line"))?;
    let classes = line
        .strip_prefix("classes\t")
        .ok_or_else(|| Error::format(no, "expected classes line"))?
        .split('\t')
        .map(String::from)
        .collect();
    Schema::new(predictors, classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Value;
    use crate::missing::StrategyTag;

    fn schema() -> Schema {
        Schema::new(
            vec![Predictor::numeric("x"), Predictor::categorical("c", ["lo", "hi"])],
            vec!["no".into(), "yes".into()],
        )
        .unwrap()
    }

    fn data() -> Dataset {
        let rows: Vec<_> = (0..30)
            .map(|i| {
                let x = (i % 3 != 0).then_some(Value::Numeric(i as f64));
                vec![x, Some(Value::Category((i % 2) as u32))]
            })
            .collect();
        let y = (0..30).map(|i| u32::from(i >= 15 || i % 3 == 0)).collect();
        Dataset::from_rows(schema(), &rows, y).unwrap()
    }

    #[test]
    fn text_round_trip_every_strategy() {
        let ds = data();
        let user = AvailabilityPolicy::permissive(ds.schema());
        for tag in StrategyTag::ALL {
            let opts = FitOptions {
                beta: 2,
                ..FitOptions::default()
            };
            let m = Model::train(&ds, "y", &user, &Strategy::new(tag), &opts, Some(&ds)).unwrap();
            let text = m.to_text();
            let back = Model::from_text(&text).unwrap();
            assert_eq!(back.to_text(), text, "{tag}");
            assert_eq!(back.predict(&ds).unwrap(), m.predict(&ds).unwrap());
        }
    }

    #[test]
    fn best_model_records_indicator_rule() {
        let ds = data();
        let user = AvailabilityPolicy::permissive(ds.schema());
        let m = Model::train(&ds, "y", &user, &Strategy::new(StrategyTag::Best), &FitOptions::default(), None).unwrap();
        let text = m.to_text();
        assert!(text.contains("unlock x when M(x) in {1}"), "{text}");
    }

    #[test]
    fn foreign_schema_is_a_fingerprint_error() {
        let ds = data();
        let user = AvailabilityPolicy::permissive(ds.schema());
        let m = Model::train(&ds, "y", &user, &Strategy::new(StrategyTag::Svi), &FitOptions::default(), None).unwrap();
        let other = Schema::new(vec![Predictor::numeric("x"), Predictor::numeric("c")], vec!["no".into(), "yes".into()]).unwrap();
        let rows = vec![vec![Some(Value::Numeric(1.0)), Some(Value::Numeric(0.0))]];
        let foreign = Dataset::from_rows(other, &rows, vec![0]).unwrap();
        assert_eq!(m.predict(&foreign).unwrap_err().exit_code(), 5);
    }

    #[test]
    fn tampered_tree_rejected() {
        let ds = data();
        let user = AvailabilityPolicy::permissive(ds.schema());
        let m = Model::train(&ds, "y", &user, &Strategy::new(StrategyTag::Dbi), &FitOptions::default(), None).unwrap();
        let fp = m.tree.schema_fingerprint.clone();
        let text = m.to_text().replace(&format!("schema={fp}"), "schema=0000000000000000");
        assert_eq!(Model::from_text(&text).unwrap_err().exit_code(), 5);
    }
}
