use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const WORDS: [&str; 6] = ["alpha", "beta", "gamma", "delta", "omega", "kappa"];

fn sarcasm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sarcasm"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Corpus whose label is carried by the reply word `great` or `fine`,
/// with matching embeddings and lexicons.
fn fixture() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let mut corpus = String::new();
    for i in 0..60 {
        let (label, cue) = if i % 2 == 0 { ("S", "great") } else { ("NS", "fine") };
        let (a, b, c) = (WORDS[i % 6], WORDS[(i / 2) % 6], WORDS[(i / 3) % 6]);
        writeln!(
            corpus,
            r#"{{"id":"t{i}","platform":"forum","context":["The {a} is here. Then {b} left."],"reply":"Oh {cue} {c} indeed.","label":"{label}"}}"#
        )
        .unwrap();
    }
    fs::write(dir.path().join("corpus.jsonl"), corpus).unwrap();

    let vocab: Vec<&str> = WORDS
        .iter()
        .copied()
        .chain([
            "the", "is", "here", "then", "left", "oh", "great", "fine", "indeed", ".",
        ])
        .collect();
    let mut emb = format!("{} 4\n", vocab.len());
    for (i, w) in vocab.iter().enumerate() {
        let v: Vec<String> = (0..4)
            .map(|k| format!("{:.3}", ((i * 7 + k * 3) % 11) as f64 / 10.0 - 0.5))
            .collect();
        writeln!(emb, "{w} {}", v.join(" ")).unwrap();
    }
    fs::write(dir.path().join("emb.vec"), emb).unwrap();

    let lex = dir.path().join("lex");
    fs::create_dir(&lex).unwrap();
    fs::write(lex.join("categories.tsv"), "posemo\tgreat\nnegemo\tleft\n").unwrap();
    fs::write(lex.join("positive.txt"), "great\n").unwrap();
    fs::write(lex.join("negative.txt"), "left\n").unwrap();
    fs::write(lex.join("negations.txt"), "not\n").unwrap();

    let out = sarcasm(dir.path(), &["prepare", "--corpus", "corpus.jsonl", "-o", "data"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    dir
}

const LSTM: [&str; 8] = [
    "--embeddings",
    "emb.vec",
    "--embedding-dim",
    "4",
    "--hidden-dim",
    "3",
    "--data",
    "data",
];

fn with<'a>(head: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
    head.iter().chain(tail).copied().collect()
}

fn metrics_line(path: PathBuf) -> serde_json::Value {
    let text = fs::read_to_string(path).unwrap();
    serde_json::from_str(text.lines().next().unwrap()).unwrap()
}

#[test]
fn gradcheck_passes_for_every_variant() {
    let dir = tempfile::tempdir().unwrap();
    let out = sarcasm(dir.path(), &["gradcheck", "-o", "gc"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = fs::read_to_string(dir.path().join("gc/gradcheck.jsonl")).unwrap();
    assert_eq!(report.lines().count(), 6);
    assert!(report.lines().all(|l| l.contains("\"passed\":true")));
}

#[test]
fn eval_of_stored_predictions_matches_hand_computed_scores() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = String::new();
    for (gold, label, n) in [("S", "S", 250), ("NS", "S", 107), ("S", "NS", 75), ("NS", "NS", 300)] {
        for _ in 0..n {
            writeln!(rows, r#"{{"gold":"{gold}","label":"{label}"}}"#).unwrap();
        }
    }
    fs::write(dir.path().join("preds.jsonl"), rows).unwrap();
    let out = sarcasm(dir.path(), &["eval", "--predictions", "preds.jsonl", "-o", "m"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let m = metrics_line(dir.path().join("m/metrics.jsonl"));
    let s = &m["S"];
    assert_eq!(s["tp"], 250);
    assert!((s["precision"].as_f64().unwrap() - 70.03).abs() < 0.01);
    assert!((s["recall"].as_f64().unwrap() - 76.92).abs() < 0.01);
    assert!((s["f1"].as_f64().unwrap() - 73.32).abs() < 0.01, "{s}");
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("70.03") && table.contains("76.92"), "{table}");
}

#[test]
fn missing_embeddings_is_a_config_error_without_artifacts() {
    let dir = fixture();
    let out = sarcasm(
        dir.path(),
        &["train", "--data", "data", "--embeddings", "missing.vec", "-o", "run"],
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("`embeddings`"), "{}", stderr(&out));
    assert!(!dir.path().join("run").exists());

    let out = sarcasm(dir.path(), &["train", "--data", "data", "-o", "run"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("`embeddings`"));
    assert!(!dir.path().join("run").exists());
}

#[test]
fn config_file_is_validated_and_flags_override_it() {
    let dir = fixture();
    fs::write(dir.path().join("bad.toml"), "dropout = 2.0\n").unwrap();
    let out = sarcasm(dir.path(), &["train", "--config", "bad.toml", "-o", "run"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("dropout"));
    assert!(!dir.path().join("run").exists());

    fs::write(dir.path().join("typo.toml"), "hiden_dim = 4\n").unwrap();
    let out = sarcasm(dir.path(), &["train", "--config", "typo.toml", "-o", "run"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("hiden_dim"));

    fs::write(dir.path().join("run.toml"), "variant = \"concat\"\nepochs = 50\n").unwrap();
    let args = with(&["train", "--config", "run.toml", "--epochs", "2", "-o", "run"], &LSTM);
    let out = sarcasm(dir.path(), &args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let effective = fs::read_to_string(dir.path().join("run/config.toml")).unwrap();
    assert!(effective.contains("variant = \"concat\""));
    assert!(effective.contains("epochs = 2"));
    assert_eq!(
        fs::read_to_string(dir.path().join("run/train_log.jsonl"))
            .unwrap()
            .lines()
            .count(),
        2
    );
}

#[test]
fn reply_only_task_rejects_context_variants() {
    let dir = fixture();
    let args = with(
        &["train", "--task", "reply_only", "--variant", "conditional", "-o", "run"],
        &LSTM,
    );
    let out = sarcasm(dir.path(), &args);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("`variant`"));
}

#[test]
fn malformed_corpus_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.jsonl"), "{\"id\": \"1\"}\n").unwrap();
    let out = sarcasm(dir.path(), &["prepare", "--corpus", "c.jsonl", "-o", "data"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));
}

#[test]
fn divergent_training_exits_with_numeric_status() {
    let dir = fixture();
    let args = with(&["train", "--lr", "1e308", "--epochs", "2", "-o", "run"], &LSTM);
    let out = sarcasm(dir.path(), &args);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("epoch"));
    assert!(!dir.path().join("run").exists());
}

#[test]
fn lstm_pipeline_is_deterministic() {
    let dir = fixture();
    for run in ["a", "b"] {
        let [model_dir, pred, eval, att] = ["model", "pred", "eval", "att"].map(|d| format!("{run}/{d}"));
        let model = format!("{model_dir}/model.ckpt");
        let steps = [
            with(
                &["train", "--variant", "hier_attn", "--epochs", "3", "-o", &model_dir],
                &LSTM,
            ),
            with(&["predict", "--model", &model, "-o", &pred], &LSTM),
            with(&["eval", "--model", &model, "-o", &eval], &LSTM),
            with(&["attention", "--model", &model, "-o", &att], &LSTM),
        ];
        for args in steps {
            let out = sarcasm(dir.path(), &args);
            assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
        }
    }
    let read = |p: &str| fs::read(dir.path().join(p)).unwrap();
    for file in [
        "model/model.ckpt",
        "model/train_log.jsonl",
        "pred/predictions.jsonl",
        "eval/metrics.jsonl",
    ] {
        assert_eq!(read(&format!("a/{file}")), read(&format!("b/{file}")), "{file} differs");
    }
    let heatmaps = fs::read_dir(dir.path().join("a/att/heatmaps")).unwrap().count();
    assert_eq!(heatmaps, 6);
    let preds = fs::read_to_string(dir.path().join("a/pred/predictions.jsonl")).unwrap();
    assert!(preds
        .lines()
        .all(|l| l.contains("\"attention\"") && l.contains("\"probs\"")));
}

#[test]
fn attention_needs_an_attention_model() {
    let dir = fixture();
    let out = sarcasm(
        dir.path(),
        &with(&["train", "--variant", "concat", "--epochs", "1", "-o", "m"], &LSTM),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = sarcasm(
        dir.path(),
        &with(&["attention", "--model", "m/model.ckpt", "-o", "att"], &LSTM),
    );
    assert_eq!(code(&out), 1);
    assert!(!dir.path().join("att").exists());
}

#[test]
fn svm_learns_the_reply_cue() {
    let dir = fixture();
    let out = sarcasm(
        dir.path(),
        &[
            "train",
            "--variant",
            "svm",
            "--data",
            "data",
            "--lexicons",
            "lex",
            "-o",
            "svm",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = sarcasm(
        dir.path(),
        &[
            "eval",
            "--model",
            "svm/model.svm",
            "--data",
            "data",
            "--lexicons",
            "lex",
            "-o",
            "eval",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let m = metrics_line(dir.path().join("eval/metrics.jsonl"));
    assert_eq!(m["model"], "svm");
    assert_eq!(m["S"]["f1"], 100.0);

    let out = sarcasm(
        dir.path(),
        &["train", "--variant", "svm", "--data", "data", "-o", "svm2"],
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("`lexicons`"));
}
