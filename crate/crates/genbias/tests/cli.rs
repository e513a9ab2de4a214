mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;
use genbias::fixture::save_table;
use genbias::report::RunReport;
use genbias_core::{MaskPrediction, TableBackend};

fn genbias(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_genbias"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_report(p: &Path) -> RunReport {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn line_count(p: &Path) -> usize {
    std::fs::read_to_string(p).unwrap().lines().count()
}

#[test]
fn extract_partitions_six_sentences() {
    let dir = tempfile::tempdir().unwrap();
    let lex = write(dir.path(), "en.tsv", EN_LEXICON);
    let corpus = write(
        dir.path(),
        "corpus.txt",
        "He came over.\nThe actor left.\nShe smiled.\nThe waitress sat down.\nHe and she talked.\nThe dog barked.\n",
    );
    let out = dir.path().join("parts");
    let o = genbias(&["extract", "--lexicon", s(&lex), "--corpus", s(&corpus), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for (name, n) in [("male.ndjson", 2), ("female.ndjson", 2), ("multi.ndjson", 1), ("neutral.ndjson", 1)] {
        assert_eq!(line_count(&out.join(name)), n, "{name}");
    }
    assert!(stdout(&o).contains("50.00 / 50.00 (1.00:1)"), "{}", stdout(&o));
    let report = read_report(&out.join("report.json"));
    assert_eq!(report.distribution.unwrap().male_count, 2);
}

#[test]
fn missing_lexicon_exits_2_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write(dir.path(), "c.txt", "he ran\n");
    let missing = dir.path().join("nope.tsv");
    let o = genbias(&["extract", "--lexicon", s(&missing), "--corpus", s(&corpus)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains(s(&missing)), "{}", stderr(&o));
}

#[test]
fn empty_corpus_exits_0_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let lex = write(dir.path(), "en.tsv", EN_LEXICON);
    let corpus = write(dir.path(), "c.txt", "");
    let out = dir.path().join("parts");
    let o = genbias(&["extract", "--lexicon", s(&lex), "--corpus", s(&corpus), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).to_lowercase().contains("no sentences"), "{}", stderr(&o));
    assert_eq!(line_count(&out.join("male.ndjson")), 0);
}

#[test]
fn lexicon_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let lex = write(dir.path(), "bad.tsv", "lang=de\ner\tsie\nihn\tsie\n");
    let corpus = write(dir.path(), "c.txt", "er kam\n");
    let o = genbias(&["extract", "--lexicon", s(&lex), "--corpus", s(&corpus)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("sie"), "{}", stderr(&o));
}

fn sbm_setup(dir: &Path) -> (String, String, String) {
    let fx = sbm_fixture();
    let lex = write(dir, "en.tsv", EN_LEXICON);
    let corpus = write(dir, "corpus.txt", &fx.corpus);
    let table = dir.join("table.json");
    save_table(&table, &fx.table).unwrap();
    (
        s(&lex).to_string(),
        s(&corpus).to_string(),
        format!("table:{}", table.display()),
    )
}

#[test]
fn eval_sbm_reports_75() {
    let dir = tempfile::tempdir().unwrap();
    let (lex, corpus, backend) = sbm_setup(dir.path());
    let out = dir.path().join("report.json");
    let o = genbias(&[
        "eval", "--lexicon", &lex, "--corpus", &corpus, "--backend", &backend, "--metrics", "sbm", "--folds", "1",
        "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("SBM: 75.00"), "{}", stdout(&o));
    let report = read_report(&out);
    assert_eq!(report.scores[0].value, 0.75);
    assert!(report.sbm_pairing.is_some());
}

#[test]
fn eval_mbe_five_folds_has_per_fold_values() {
    let dir = tempfile::tempdir().unwrap();
    let (lex, corpus, backend) = sbm_setup(dir.path());
    let out = dir.path().join("report.json");
    let o = genbias(&[
        "eval", "--lexicon", &lex, "--corpus", &corpus, "--backend", &backend, "--metrics", "mbe,sbm", "--folds", "5",
        "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = read_report(&out);
    let mbe = report.scores.iter().find(|s| s.metric.name() == "MBE").unwrap();
    assert_eq!(mbe.per_fold.as_ref().unwrap().len(), 5);
    assert!(mbe.stddev.is_some());
    assert_eq!(report.folds.len(), 5);
}

#[test]
fn rerun_from_report_config_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (lex, corpus, backend) = sbm_setup(dir.path());
    let out = dir.path().join("report.json");
    let args = [
        "eval", "--lexicon", &lex, "--corpus", &corpus, "--backend", &backend, "--metrics", "sbm,mbe", "--folds", "3",
        "--seed", "42", "--out", s(&out),
    ];
    assert_eq!(code(&genbias(&args)), 0);
    let first = std::fs::read(&out).unwrap();
    let saved = dir.path().join("saved.json");
    std::fs::copy(&out, &saved).unwrap();
    let o = genbias(&["eval", "--config", s(&saved)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read(&out).unwrap(), first);
}

#[test]
fn toml_config_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let (lex, corpus, backend) = sbm_setup(dir.path());
    let cfg = write(
        dir.path(),
        "run.toml",
        &format!("lexicon = {lex:?}\ncorpus = {corpus:?}\nbackend = {backend:?}\nmetrics = [\"sbm\"]\nfolds = 2\nseed = 1\n"),
    );
    let out = dir.path().join("r.json");
    let o = genbias(&["eval", "--config", s(&cfg), "--folds", "1", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = read_report(&out);
    assert_eq!(report.config.folds, 1);
    assert_eq!(report.config.seed, 1);
}

#[test]
fn dbm_with_lsg_fails_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    let (lex, corpus, _) = sbm_setup(dir.path());
    let backend = format!("http:{}", dead_address());
    let o = genbias(&[
        "eval", "--lexicon", &lex, "--corpus", &corpus, "--backend", &backend, "--method", "lsg", "--metrics", "dbm",
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("msg"));
}

#[test]
fn msg_with_unreachable_backend_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let (lex, corpus, _) = sbm_setup(dir.path());
    let backend = format!("http:{}", dead_address());
    let o = genbias(&[
        "pairs", "--lexicon", &lex, "--corpus", &corpus, "--backend", &backend, "--method", "msg", "--max-retries",
        "0",
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("/v1/info"), "{}", stderr(&o));
}

#[test]
fn unbalanceable_corpus_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let fx = sbm_fixture();
    let lex = write(dir.path(), "en.tsv", EN_LEXICON);
    let corpus = write(dir.path(), "c.txt", "he came over .\nan actor left\n");
    let table = dir.path().join("t.json");
    save_table(&table, &fx.table).unwrap();
    let o = genbias(&[
        "eval", "--lexicon", s(&lex), "--corpus", s(&corpus), "--backend", &format!("table:{}", table.display()),
    ]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn missing_table_entry_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let lex = write(dir.path(), "en.tsv", EN_LEXICON);
    let corpus = write(dir.path(), "c.txt", "he ran\nshe ran\n");
    let table = dir.path().join("t.json");
    save_table(&table, &TableBackend::new()).unwrap();
    let o = genbias(&[
        "eval", "--lexicon", s(&lex), "--corpus", s(&corpus), "--backend", &format!("table:{}", table.display()),
        "--folds", "1",
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn lsg_pairs_on_waitress_sentence() {
    let dir = tempfile::tempdir().unwrap();
    let lex = write(dir.path(), "en.tsv", EN_LEXICON);
    let corpus = write(dir.path(), "c.txt", "The waitress came over.\n");
    let out = dir.path().join("pairs");
    let o = genbias(&["pairs", "--lexicon", s(&lex), "--corpus", s(&corpus), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("pairs.ndjson")).unwrap();
    assert_eq!(text.lines().count(), 1);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["male_text"], "The waiter came over.");
    assert_eq!(first["female_text"], "The waitress came over.");
    assert_eq!(first["origin"], "lexicon");
}

#[test]
fn coverage_on_table_shaped_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let en = write(dir.path(), "en.tsv", EN_LEXICON);
    let de = write(dir.path(), "de.tsv", "lang=de\nmatch=token\ner\tsie\nMann\tFrau\n");
    let (mut src, mut tgt) = (String::new(), String::new());
    for i in 0..1226 {
        src.push_str("he came home\n");
        tgt.push_str(if i < 1124 { "er kam nach Hause\n" } else { "jemand kam nach Hause\n" });
    }
    for _ in 0..50 {
        src.push_str("it rained\n");
        tgt.push_str("es regnete\n");
    }
    for _ in 0..30 {
        src.push_str("she left\n");
        tgt.push('\n');
    }
    let src = write(dir.path(), "src.txt", &src);
    let tgt = write(dir.path(), "tgt.txt", &tgt);
    let out = dir.path().join("cov.json");
    let args = [
        "coverage", "--lexicon", s(&en), "--lexicon-tgt", s(&de), "--corpus", s(&src), "--corpus-tgt", s(&tgt),
        "--sample-size", "1306", "--seed", "3", "--out", s(&out),
    ];
    let o = genbias(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("91.7%"), "{}", stdout(&o));
    let first = std::fs::read(&out).unwrap();
    assert_eq!(code(&genbias(&args)), 0);
    assert_eq!(std::fs::read(&out).unwrap(), first);

    let mut too_big = args.to_vec();
    too_big[10] = "5000";
    let o = genbias(&too_big);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn sweep_k_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let lex = write(dir.path(), "en.tsv", EN_LEXICON);
    let corpus = write(dir.path(), "c.txt", "he ran\n");
    let mut table = TableBackend::new();
    let p = |t: &str, prob: f64| MaskPrediction { token: t.into(), prob };
    table.insert_fill_mask("he ran", 0, vec![p("she", 0.5), p("it", 0.3), p("he", 0.1)]).unwrap();
    let t = dir.path().join("t.json");
    save_table(&t, &table).unwrap();
    let out = dir.path().join("k.csv");
    let o = genbias(&[
        "sweep-k", "--lexicon", s(&lex), "--corpus", s(&corpus), "--backend", &format!("table:{}", t.display()),
        "--k-max", "4", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "k,proportion\n1,0.5\n2,0.5\n3,1\n4,1\n");
}

#[test]
fn report_exports_csv_series() {
    let dir = tempfile::tempdir().unwrap();
    let (lex, corpus, backend) = sbm_setup(dir.path());
    let out = dir.path().join("report.json");
    let o = genbias(&["eval", "--lexicon", &lex, "--corpus", &corpus, "--backend", &backend, "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv_dir = dir.path().join("csv");
    let o = genbias(&["report", "--from", s(&out), "--out", s(&csv_dir)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("SBM"));
    let types = std::fs::read_to_string(csv_dir.join("word_types.csv")).unwrap();
    assert!(types.starts_with("origin,male,female\nlexicon,"), "{types}");
}

#[test]
fn bad_flags_exit_2() {
    let o = genbias(&["eval", "--backend", "gpu:0"]);
    assert_eq!(code(&o), 2);
    let o = genbias(&["eval", "--metrics", "xyz"]);
    assert_eq!(code(&o), 2);
}
