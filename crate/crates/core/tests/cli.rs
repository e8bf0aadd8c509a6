use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_best");

fn best(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("BEST_SEED")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = best(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

const COMPLETE: &str = "\
x,colour,y
1.0,red,no
2.0,red,no
3.0,blue,no
4.0,blue,no
5.0,red,no
6.0,blue,yes
7.0,red,yes
8.0,blue,yes
9.0,red,yes
10.0,blue,yes
";

fn tree_section(model: &str) -> String {
    // strategy, routing and surrogate lists legitimately differ
    let start = model.find("kind=tree").unwrap();
    model[start..]
        .lines()
        .filter(|l| !l.starts_with("strategy=") && !l.starts_with("routing="))
        .map(|l| l.split(" sur=").next().unwrap())
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn complete_data_gives_same_tree_for_every_strategy() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("train.csv"), COMPLETE).unwrap();
    let mut trees = Vec::new();
    for s in ["dbi", "svi", "pvi", "sc", "surrogate", "best"] {
        ok(dir.path(), &["fit", "--train", "train.csv", "--strategy", s, "--beta", "1", "--out", "m.best"]);
        trees.push(tree_section(&fs::read_to_string(dir.path().join("m.best")).unwrap()));
    }
    assert!(trees.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn loss_zero_fit_predicts_training_data_exactly() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("train.csv"), COMPLETE).unwrap();
    let fit = ok(dir.path(), &["fit", "--train", "train.csv", "--beta", "1", "--out", "m.best"]);
    assert!(fit.contains("training loss 0.0000"), "{fit}");
    assert!(fit.contains("leaves 2"));
    let pred = ok(dir.path(), &["predict", "--model", "m.best", "--data", "train.csv", "--out", "p.txt"]);
    assert!(pred.contains("accuracy 1.0000"), "{pred}");
    let labels = fs::read_to_string(dir.path().join("p.txt")).unwrap();
    assert_eq!(labels.lines().count(), 10);
}

#[test]
fn predictions_follow_row_order() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("train.csv"), COMPLETE).unwrap();
    ok(dir.path(), &["fit", "--train", "train.csv", "--beta", "1", "--out", "m.best"]);
    let mut lines: Vec<&str> = COMPLETE.lines().skip(1).collect();
    let forward = lines.iter().map(|l| l.rsplit_once(',').unwrap().0).collect::<Vec<_>>().join("\n");
    fs::write(dir.path().join("a.csv"), format!("x,colour\n{forward}\n")).unwrap();
    lines.reverse();
    let backward = lines.iter().map(|l| l.rsplit_once(',').unwrap().0).collect::<Vec<_>>().join("\n");
    fs::write(dir.path().join("b.csv"), format!("x,colour\n{backward}\n")).unwrap();
    let a = ok(dir.path(), &["predict", "--model", "m.best", "--data", "a.csv"]);
    let b = ok(dir.path(), &["predict", "--model", "m.best", "--data", "b.csv"]);
    assert!(!a.contains("accuracy"));
    let mut rev: Vec<&str> = b.lines().collect();
    rev.reverse();
    assert_eq!(a.lines().collect::<Vec<_>>(), rev);
}

#[test]
fn best_model_records_indicator_rule() {
    let dir = tempfile::tempdir().unwrap();
    let data = COMPLETE.replace("3.0,blue", "NA,blue").replace("8.0,blue", ",blue");
    fs::write(dir.path().join("train.csv"), data).unwrap();
    ok(dir.path(), &["fit", "--train", "train.csv", "--out", "m.best"]);
    let model = fs::read_to_string(dir.path().join("m.best")).unwrap();
    assert!(model.contains("unlock x when M(x) in {1}"), "{model}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let out = best(p, &["fit", "--train", "missing.csv", "--out", "m.best"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));

    fs::write(p.join("train.csv"), COMPLETE).unwrap();
    fs::write(p.join("bad.pol"), "unlock x when nope in {a}\n").unwrap();
    let out = best(p, &["fit", "--train", "train.csv", "--policy", "bad.pol", "--out", "m.best"]);
    assert_eq!(out.status.code(), Some(4));

    fs::write(p.join("ragged.csv"), "x,y\n1,a,extra\n").unwrap();
    let out = best(p, &["fit", "--train", "ragged.csv", "--out", "m.best"]);
    assert_eq!(out.status.code(), Some(3));

    ok(p, &["fit", "--train", "train.csv", "--out", "m.best"]);
    fs::write(p.join("other.csv"), "z,colour\n1,red\n").unwrap();
    let out = best(p, &["predict", "--model", "m.best", "--data", "other.csv"]);
    assert_eq!(out.status.code(), Some(5));

    let out = best(p, &["fit", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn prune_with_holdout_and_prune_command() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["simulate", "--n", "400", "--out", "train.csv"]);
    ok(p, &["simulate", "--n", "200", "--seed", "9", "--out", "val.csv"]);
    let full = ok(p, &["fit", "--train", "train.csv", "--beta", "1", "--out", "full.best"]);
    let pruned = ok(p, &["fit", "--train", "train.csv", "--beta", "1", "--prune", "--out", "held.best"]);
    let leaves = |s: &str| -> usize { s.lines().find_map(|l| l.strip_prefix("leaves ")).unwrap().parse().unwrap() };
    assert!(leaves(&pruned) < leaves(&full));
    let msg = ok(p, &["prune", "--model", "full.best", "--validation", "val.csv", "--out", "pruned.best"]);
    assert!(msg.starts_with("alphas 0.0000"));
    ok(p, &["predict", "--model", "pruned.best", "--data", "val.csv"]);
}

#[test]
fn experiment_files_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let args = |out: &'static str, serial: bool| {
        let mut a = vec![
            "experiment", "--censor", "mar-response", "--strategies", "sc,best,dbi", "--sizes", "60,120",
            "--replicates", "3", "--validation-size", "60", "--test-size", "100", "--out", out,
        ];
        if serial {
            a.push("--serial");
        }
        a
    };
    ok(p, &args("a.txt", false));
    ok(p, &args("b.txt", false));
    ok(p, &args("c.txt", true));
    let read = |f: &str| fs::read(p.join(f)).unwrap();
    assert_eq!(read("a.txt"), read("b.txt"));
    assert_eq!(read("a.tsv"), read("b.tsv"));
    assert_eq!(read("a.txt"), read("c.txt"));
    assert_eq!(read("a.tsv"), read("c.tsv"));
    let tsv = String::from_utf8(read("a.tsv")).unwrap();
    assert!(tsv.contains("# seed=42"));
    assert_eq!(tsv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 6);
}

#[test]
fn seed_environment_variable_overrides_default() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["experiment", "--strategies", "sc", "--sizes", "50", "--replicates", "1", "--test-size", "50", "--validation-size", "50"])
        .current_dir(dir.path())
        .env("BEST_SEED", "7")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("seed               7"));
}

#[test]
fn importance_command_writes_table_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let table = ok(dir.path(), &["importance", "--n", "300", "--trees", "8", "--out", "imp.txt"]);
    assert!(table.contains("M(X5)"));
    let tsv = fs::read_to_string(dir.path().join("imp.tsv")).unwrap();
    assert!(tsv.lines().any(|l| l.starts_with("BEST\tM(X5)\t")));
    assert!(!tsv.lines().any(|l| l.starts_with("SC\tM(X5)")));
}

#[test]
fn simulate_applies_requested_censoring() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["simulate", "--n", "500", "--censor", "mnar-categorical", "--target", "X6", "--categories", "c0,c3", "--out", "d.csv"],
    );
    let text = fs::read_to_string(dir.path().join("d.csv")).unwrap();
    for line in text.lines().skip(1) {
        let x6 = line.split(',').nth(5).unwrap();
        assert!(x6 == "NA" || x6 == "c1" || x6 == "c2", "{line}");
    }
    let out = best(dir.path(), &["simulate", "--censor", "mar-gate", "--out", "g.csv"]);
    assert_eq!(out.status.code(), Some(1));
}
