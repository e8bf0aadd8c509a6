//! Versioned text serialisation of trees.
//!
//! ```text
//! bestfmt=1
//! kind=tree
//! schema=<fingerprint>
//! policy=<fingerprint>
//! strategy=best
//! routing=exclude
//! measure=gini
//! beta=5
//! max_depth=30
//! min_child_weight=1
//! nodes=3
//! split d=0 w=10 q=0.5 y=0 dist=5,5 avail=11 var=0 thr=1.5 fallback=left sur=-
//! leaf d=1 w=5 q=0 y=0 dist=5,0 avail=11
//! leaf d=1 w=5 q=0 y=1 dist=0,5 avail=11
//! ```
//!
//! Nodes are listed in preorder. Floats use the shortest representation that
//! parses back to the same value, so parsing and re-emitting is bytewise
//! stable.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{Branch, FitOptions, Node, NodeKind, NodeStats, Tree};
use crate::error::{Error, Result};
use crate::missing::Surrogate;
use crate::policy::{Availability, Side};
use crate::splitting::{CategorySet, ClassHistogram, Split, SplitRule};

pub const FORMAT_HEADER: &str = "bestfmt=1";

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn split_token(split: &Split) -> String {
    match &split.rule {
        SplitRule::Threshold(t) => format!("n{}@{t}", split.predictor),
        SplitRule::Categories(set) => format!("c{}@{}", split.predictor, set),
    }
}

fn parse_split_token(tok: &str) -> Option<Split> {
    let (head, value) = tok.split_once('@')?;
    let predictor = head.get(1..)?.parse().ok()?;
    match head.as_bytes().first()? {
        b'n' => Some(Split::numeric(predictor, value.parse().ok()?)),
        b'c' => Some(Split::categorical(predictor, parse_list(value)?)),
        _ => None,
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Option<Vec<T>> {
    if s.is_empty() {
        return Some(Vec::new());
    }
    s.split(',').map(|x| x.parse().ok()).collect()
}

fn write_node(out: &mut String, node: &Node) {
    let s = &node.stats;
    let common = format!(
        "d={} w={} q={} y={} dist={} avail={}",
        s.depth,
        s.weight,
        s.impurity,
        node.label,
        join(s.distribution.counts()),
        s.available.to_bits()
    );
    match &node.kind {
        NodeKind::Leaf => {
            let _ = writeln!(out, "leaf {common}");
        }
        NodeKind::Internal(b) => {
            let rule = match &b.split.rule {
                SplitRule::Threshold(t) => format!("thr={t}"),
                SplitRule::Categories(set) => format!("cats={set}"),
            };
            let sur = if b.surrogates.is_empty() {
                "-".to_string()
            } else {
                b.surrogates
                    .iter()
                    .map(|s| {
                        format!(
                            "{}:{}:{}",
                            split_token(&s.split),
                            if s.reversed { "r" } else { "s" },
                            s.agreement
                        )
                    })
                    .collect::<Vec<_>>()
                    .join(";")
            };
            let _ = writeln!(
                out,
                "split {common} var={} {rule} fallback={} sur={sur}",
                b.split.predictor,
                b.fallback.as_str()
            );
            write_node(out, &b.left);
            write_node(out, &b.right);
        }
    }
}

impl Tree {
    pub fn to_text(&self) -> String {
        let o = &self.options;
        let mut out = String::new();
        let _ = writeln!(out, "{FORMAT_HEADER}");
        let _ = writeln!(out, "kind=tree");
        let _ = writeln!(out, "schema={}", self.schema_fingerprint);
        let _ = writeln!(out, "policy={}", self.policy_fingerprint);
        let _ = writeln!(out, "strategy={}", o.strategy);
        let _ = writeln!(out, "routing={}", o.routing);
        let _ = writeln!(out, "measure={}", o.measure);
        let _ = writeln!(out, "beta={}", o.beta);
        let _ = writeln!(out, "max_depth={}", o.max_depth);
        let _ = writeln!(out, "min_child_weight={}", o.min_child_weight);
        let _ = writeln!(out, "nodes={}", self.nodes().len());
        write_node(&mut out, &self.root);
        out
    }

    pub fn from_text(text: &str) -> Result<Tree> {
        Tree::parse_lines(&mut text.lines().enumerate().map(|(i, l)| (i + 1, l)))
    }

    /// Parses one tree document from a line stream, consuming exactly its
    /// lines.
    pub(crate) fn parse_lines<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<Tree> {
        let mut next = |key: &str| -> Result<(usize, String)> {
            let (no, line) = lines
                .next()
                .ok_or_else(|| Error::format(0, format!("unexpected end of input, expected {key}")))?;
            if key == FORMAT_HEADER {
                return if line == FORMAT_HEADER {
                    Ok((no, String::new()))
                } else {
                    Err(Error::format(no, format!("expected {FORMAT_HEADER:?}, found {line:?}")))
                };
            }
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .map(|v| (no, v.to_string()))
                .ok_or_else(|| Error::format(no, format!("expected `{key}=`, found {line:?}")))
        };
        fn parsed<T: std::str::FromStr>((no, v): (usize, String), key: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::format(no, format!("bad value {v:?} for {key}")))
        }
        next(FORMAT_HEADER)?;
        let (no, kind) = next("kind")?;
        if kind != "tree" {
            return Err(Error::format(no, format!("expected kind=tree, found {kind:?}")));
        }
        let schema_fingerprint = next("schema")?.1;
        let policy_fingerprint = next("policy")?.1;
        let strategy = next("strategy")?;
        let strategy = strategy
            .1
            .parse()
            .map_err(|_| Error::format(strategy.0, "unknown strategy"))?;
        let routing = next("routing")?;
        let routing = routing
            .1
            .parse()
            .map_err(|_| Error::format(routing.0, "unknown routing"))?;
        let measure = next("measure")?;
        let measure = measure
            .1
            .parse()
            .map_err(|_| Error::format(measure.0, "unknown measure"))?;
        let options = FitOptions {
            beta: parsed(next("beta")?, "beta")?,
            max_depth: parsed(next("max_depth")?, "max_depth")?,
            min_child_weight: parsed(next("min_child_weight")?, "min_child_weight")?,
            measure,
            routing,
            strategy,
        };
        let count: usize = parsed(next("nodes")?, "nodes")?;
        let mut node_lines = Vec::with_capacity(count);
        for _ in 0..count {
            node_lines.push(
                lines
                    .next()
                    .ok_or_else(|| Error::format(0, "node listing is truncated"))?,
            );
        }
        let mut iter = node_lines.into_iter();
        let root = parse_node(&mut iter)?;
        if let Some((no, _)) = iter.next() {
            return Err(Error::format(no, "node listing has trailing nodes"));
        }
        Ok(Tree {
            root,
            schema_fingerprint,
            policy_fingerprint,
            options,
        })
    }
}

fn parse_node<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<Node> {
    let (no, line) = lines
        .next()
        .ok_or_else(|| Error::format(0, "node listing ended early"))?;
    let bad = |msg: &str| Error::format(no, msg.to_string());
    let mut parts = line.split(' ');
    let tag = parts.next().unwrap_or("");
    let fields: HashMap<&str, &str> = parts.filter_map(|p| p.split_once('=')).collect();
    let field = |k: &str| fields.get(k).copied().ok_or_else(|| bad(&format!("missing field {k}")));
    let num = |k: &str| -> Result<f64> { field(k)?.parse().map_err(|_| bad(&format!("bad {k}"))) };
    let stats = NodeStats {
        depth: field("d")?.parse().map_err(|_| bad("bad d"))?,
        weight: num("w")?,
        impurity: num("q")?,
        distribution: ClassHistogram::from_counts(parse_list(field("dist")?).ok_or_else(|| bad("bad dist"))?),
        available: Availability::from_bits(field("avail")?).ok_or_else(|| bad("bad avail"))?,
    };
    let label = field("y")?.parse().map_err(|_| bad("bad y"))?;
    let kind = match tag {
        "leaf" => NodeKind::Leaf,
        "split" => {
            let predictor = field("var")?.parse().map_err(|_| bad("bad var"))?;
            let rule = if let Some(t) = fields.get("thr") {
                SplitRule::Threshold(t.parse().map_err(|_| bad("bad thr"))?)
            } else {
                SplitRule::Categories(CategorySet::new(
                    parse_list(field("cats")?).ok_or_else(|| bad("bad cats"))?,
                ))
            };
            let fallback = Side::parse(field("fallback")?).ok_or_else(|| bad("bad fallback"))?;
            let sur = field("sur")?;
            let surrogates = if sur == "-" {
                Vec::new()
            } else {
                sur.split(';')
                    .map(|s| {
                        let mut it = s.split(':');
                        let split = it.next().and_then(parse_split_token)?;
                        let reversed = match it.next()? {
                            "r" => true,
                            "s" => false,
                            _ => return None,
                        };
                        let agreement = it.next()?.parse().ok()?;
                        Some(Surrogate {
                            split,
                            reversed,
                            agreement,
                        })
                    })
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| bad("bad surrogate list"))?
            };
            let left = parse_node(lines)?;
            let right = parse_node(lines)?;
            NodeKind::Internal(Box::new(Branch {
                split: Split { predictor, rule },
                left,
                right,
                surrogates,
                fallback,
            }))
        }
        _ => return Err(bad(&format!("unknown node tag {tag:?}"))),
    };
    Ok(Node { stats, label, kind })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, Predictor, Schema, Value};
    use crate::policy::AvailabilityPolicy;
    use crate::tree::Routing;

    fn sample_tree(routing: Routing) -> Tree {
        let schema = Schema::new(
            vec![
                Predictor::numeric("x"),
                Predictor::categorical("g", ["a", "b", "c"]),
                Predictor::numeric("z"),
            ],
            vec!["A".into(), "B".into(), "C".into()],
        )
        .unwrap();
        let rows: Vec<_> = (0..60)
            .map(|i| {
                let x = (i as f64 * 0.37).sin();
                let g = (i % 3) as u32;
                let z = if i % 7 == 0 { None } else { Some(Value::Numeric(x * 2.0 + 0.1)) };
                vec![Some(Value::Numeric(x)), Some(Value::Category(g)), z]
            })
            .collect();
        let y = (0..60).map(|i| ((i % 3) as u32 + (i % 5 == 0) as u32) % 3).collect();
        let ds = Dataset::from_rows(schema, &rows, y).unwrap();
        let opts = FitOptions {
            beta: 2,
            routing,
            ..FitOptions::default()
        };
        Tree::fit(&ds, &AvailabilityPolicy::permissive(ds.schema()), &opts).unwrap()
    }

    #[test]
    fn round_trip_is_bytewise() {
        for routing in [Routing::Exclude, Routing::Distribute, Routing::Surrogate { max: 3 }] {
            let t = sample_tree(routing);
            let text = t.to_text();
            let back = Tree::from_text(&text).unwrap();
            assert_eq!(back, t);
            assert_eq!(back.to_text(), text);
        }
    }

    #[test]
    fn rejects_wrong_header_and_truncation() {
        let text = sample_tree(Routing::Exclude).to_text();
        assert!(Tree::from_text(&text.replacen("bestfmt=1", "bestfmt=2", 1)).is_err());
        let truncated: String = text.lines().take(13).map(|l| format!("{l}\n")).collect();
        assert!(Tree::from_text(&truncated).is_err());
    }
}
