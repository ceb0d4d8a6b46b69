use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_match")).current_dir(dir).env("MATCH_THREADS", "2").args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Raw records: pair `i` shares a topic and a few symbols between
/// statement and proof; `short` marks records cut below the length floor.
fn raw_file(n: usize, short: &[usize]) -> String {
    let mut s = String::new();
    for i in 0..n {
        let topic: Vec<String> = (0..3).map(|k| format!("t:topic{}", (i * 3 + k) % 50)).collect();
        let syms = ["a", "b", "n", "x", "y", "z", "k"];
        let sym = |k: usize| format!("m:{}", syms[(i + k) % syms.len()]);
        let mut statement: Vec<String> = topic.iter().cycle().take(12).cloned().collect();
        statement.extend((0..8).map(sym));
        let mut proof: Vec<String> = topic.iter().cycle().take(15).cloned().collect();
        proof.extend((0..6).map(sym));
        proof.push("x:%3Cmath%3E%3Cmfrac%3E%3Cmi%3Ep%3C/mi%3E%3Cmi%3Eq%3C/mi%3E%3C/mfrac%3E%3C/math%3E".into());
        if short.contains(&i) {
            statement.truncate(5);
        }
        s.push_str(&format!("p{i}\tart{}\tmath.CO\t{}\t{}\n", i / 2, statement.join(" "), proof.join(" ")));
    }
    s
}

#[test]
fn ingest_reports_and_strict_exit() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("raw.tsv"), raw_file(5, &[3])).unwrap();
    let o = run(dir.path(), &["ingest", "raw.tsv", "-o", "clean.tsv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "kept 4, rejected 1 (too short)");
    let clean = fs::read_to_string(dir.path().join("clean.tsv")).unwrap();
    assert_eq!(clean.lines().count(), 4);
    assert!(clean.contains("m:p m:q"), "embedded MathML linearized");

    let o = run(dir.path(), &["ingest", "raw.tsv", "-o", "strict.tsv", "--strict"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(dir.path(), &["ingest", "clean.tsv", "-o", "again.tsv"]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(dir.path().join("again.tsv")).unwrap(), clean);
    assert!(dir.path().join("ingest.manifest").exists());
}

#[test]
fn split_unmixed_is_pure_and_replayable() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("raw.tsv"), raw_file(40, &[])).unwrap();
    assert!(run(dir.path(), &["ingest", "raw.tsv", "-o", "corpus.tsv"]).status.success());
    let o = run(dir.path(), &["--out-dir", "a", "split", "--mode", "unmixed", "--seed", "7", "corpus.tsv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut owner = std::collections::HashMap::new();
    let mut total = 0;
    for part in ["train", "dev", "test"] {
        let text = fs::read_to_string(dir.path().join(format!("a/{part}.tsv"))).unwrap();
        assert!(text.starts_with(&format!("#!split={part}")));
        for line in text.lines().filter(|l| !l.starts_with('#')) {
            let article = line.split('\t').nth(1).unwrap().to_owned();
            assert_eq!(*owner.entry(article).or_insert(part), part, "article split across sets");
            total += 1;
        }
    }
    assert_eq!(total, 40);

    let o = run(dir.path(), &["--config", "a/split.manifest", "--out-dir", "b", "split"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for part in ["train", "dev", "test"] {
        assert_eq!(
            fs::read(dir.path().join(format!("a/{part}.tsv"))).unwrap(),
            fs::read(dir.path().join(format!("b/{part}.tsv"))).unwrap()
        );
    }
    let manifest = fs::read_to_string(dir.path().join("a/split.manifest")).unwrap();
    assert!(manifest.contains("# version: "));
    assert!(manifest.contains("# input: corpus.tsv sha256="));
    assert!(manifest.contains("split_mode = unmixed"));
    assert!(manifest.contains("seed = 7"));
}

#[test]
fn train_eval_grid_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("raw.tsv"), raw_file(30, &[])).unwrap();
    assert!(run(p, &["ingest", "raw.tsv", "-o", "corpus.tsv"]).status.success());
    assert!(run(p, &["split", "corpus.tsv"]).status.success());
    let model_flags = ["--encoder", "pooled", "--d", "8", "--epochs", "3", "--batch-size", "6"];

    let mut args = vec!["--quiet", "train", "--train", "train.tsv", "--dev", "dev.tsv"];
    args.extend(model_flags);
    let o = run(p, &args);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["model.pmm", "last.ckpt", "history.tsv", "evals.tsv", "train.manifest"] {
        assert!(p.join(f).exists(), "{f} missing");
    }
    let first = fs::read(p.join("model.pmm")).unwrap();
    let o = run(p, &["--config", "train.manifest", "train"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(p.join("model.pmm")).unwrap(), first, "retraining from the manifest is byte-identical");

    let o = run(p, &["eval", "test.tsv", "--model", "model.pmm"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("MRR"));
    assert!(fs::read_to_string(p.join("eval.txt")).unwrap().contains(">=20"));

    let o = run(p, &["eval", "--corpus", "test.tsv", "--model", "model.pmm", "--decode", "global", "--k", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("k=2"));
    assert!(fs::read_to_string(p.join("eval.tsv")).unwrap().contains("k\t2"));

    let o = run(p, &["eval", "--corpus", "test.tsv", "--model", "model.pmm", "--decode", "global", "--k", "500"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("'k'"));

    let o = run(p, &["eval", "--corpus", "test.tsv", "--encoder", "tfidf", "--channel", "math"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let mut args =
        vec!["--quiet", "--out-dir", "g", "grid", "--train", "train.tsv", "--dev", "dev.tsv", "--test", "test.tsv"];
    args.extend(["--levels", "conservation,partial,full,transposition"]);
    args.extend(model_flags);
    let o = run(p, &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(p.join("g/grid.txt")).unwrap();
    assert_eq!(table.lines().count(), 5, "header plus four rows");
    let tsv = fs::read_to_string(p.join("g/grid.tsv")).unwrap();
    assert_eq!(tsv.lines().filter(|l| !l.starts_with("source")).count(), 16);
}

#[test]
fn errors_name_fields_and_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = run(p, &["train", "--train", "missing.tsv", "--dev", "missing.tsv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("'train'"));

    fs::write(p.join("bad.conf"), "lr = fast\n").unwrap();
    let o = run(p, &["--config", "bad.conf", "vocab", "x.tsv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("'lr'"));

    let o = run(p, &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));

    fs::write(p.join("broken.tsv"), "p1\ta\tc\tq:bad\tm:x\n").unwrap();
    let o = run(p, &["vocab", "broken.tsv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 1"));
    assert!(fs::read_to_string(p.join("vocab.manifest")).unwrap().contains("# status: error"));
}

#[test]
fn channel_filter_drops_token_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("raw.tsv"), raw_file(4, &[])).unwrap();
    assert!(run(p, &["ingest", "raw.tsv", "-o", "c.tsv"]).status.success());
    for (channel, keep) in [("math", "m:"), ("text", "t:")] {
        let out = format!("{channel}.vocab");
        let o = run(p, &["--channel", channel, "vocab", "c.tsv", "-o", &out]);
        assert!(o.status.success(), "{}", stderr(&o));
        let vocab = fs::read_to_string(p.join(&out)).unwrap();
        let tokens: Vec<&str> = vocab.lines().skip(1).map(|l| l.split('\t').nth(2).unwrap()).collect();
        assert!(!tokens.is_empty());
        assert!(tokens.iter().all(|t| t.starts_with(keep)), "{channel}: {tokens:?}");
    }
}
