use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_billclass"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn billclass")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn lines(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.trim().is_empty()).count()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SMALL: &[&str] = &[
    "--dim", "16", "--embed-epochs", "3", "--hidden-dim", "8", "--dense-dim", "16", "--epochs", "3",
    "--batch-size", "32",
];

#[test]
fn help_documents_defaults() {
    let out = run(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    for needle in ["batch_size = 256", "max_tokens = 1500", "dim = 400", "hidden_dim = 128", "learning_rate = 0.001", "beta2 = 0.999"] {
        assert!(text.contains(needle), "missing {needle}");
    }
    let train = stdout(&run(&["train", "--help"]));
    assert!(train.contains("[default: 256]"));
    assert!(train.contains("[default: 0.2]"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&run(&[])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["gradcheck", "--no-such-flag"])), 2);
    assert_eq!(code(&run(&["baseline", "--method", "cnn", "--train", "a", "--val", "b", "--test", "c"])), 2);
    assert_eq!(code(&run(&["train", "--batch-size", "many", "--train", "a", "--val", "b", "-o", "m"])), 2);
}

#[test]
fn runtime_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.bin");
    let corpus = dir.path().join("c.jsonl");
    assert_eq!(code(&run(&["synth", "--docs", "16", "-o", p(&corpus)])), 0);

    let out = run(&["predict", "--model", p(&missing), p(&corpus)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.bin"));

    let out = run(&["split", p(&dir.path().join("absent.jsonl")), "--out-dir", p(dir.path())]);
    assert_eq!(code(&out), 1);
    let out = run(&["split", p(&corpus), "--out-dir", p(dir.path()), "--train", "10", "--val", "10", "--test", "10"]);
    assert_eq!(code(&out), 1);

    let not_a_model = dir.path().join("junk.bin");
    fs::write(&not_a_model, b"hello").unwrap();
    assert_eq!(code(&run(&["eval", "--model", p(&not_a_model), "--test", p(&corpus)])), 1);
}

#[test]
fn split_reproduces_published_partition_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    assert_eq!(code(&run(&["synth", "--docs", "2397", "--seed", "3", "-o", p(&corpus)])), 0);
    assert_eq!(lines(&corpus), 2397);
    let out_dir = dir.path().join("split");
    let out = run(&["split", p(&corpus), "--out-dir", p(&out_dir), "--train", "1509", "--val", "377", "--test", "472"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(lines(&out_dir.join("train.jsonl")), 1509);
    assert_eq!(lines(&out_dir.join("val.jsonl")), 377);
    assert_eq!(lines(&out_dir.join("test.jsonl")), 472);

    // Fractions cover every document.
    let frac = dir.path().join("frac");
    assert_eq!(code(&run(&["split", p(&corpus), "--out-dir", p(&frac)])), 0);
    let total: usize = ["train", "val", "test"].iter().map(|s| lines(&frac.join(format!("{s}.jsonl")))).sum();
    assert_eq!(total, 2397);
}

#[test]
fn gradcheck_passes() {
    let out = run(&["gradcheck"]);
    assert_eq!(code(&out), 0, "{}{}", stdout(&out), String::from_utf8_lossy(&out.stderr));
    let first = stdout(&out).lines().next().unwrap().to_string();
    let report: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert!(report["max_rel_error"].as_f64().unwrap() < 1e-4);
    assert!(report["checked"].as_u64().unwrap() > 0);
}

fn tiny_split(dir: &Path, docs: &str) -> std::path::PathBuf {
    let corpus = dir.join("corpus.jsonl");
    assert_eq!(code(&run(&["synth", "--docs", docs, "--seed", "2", "-o", p(&corpus)])), 0);
    let split = dir.join("split");
    assert_eq!(code(&run(&["split", p(&corpus), "--out-dir", p(&split), "--seed", "4"])), 0);
    split
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let split = tiny_split(dir.path(), "120");
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[train]\nbatch_size = 256\nepochs = 7\n").unwrap();
    let report_dir = dir.path().join("rep");
    let out = run(&[
        "baseline", "--method", "tfidf-svm", "--train", p(&split.join("train.jsonl")), "--val",
        p(&split.join("val.jsonl")), "--test", p(&split.join("test.jsonl")), "--out-dir", p(&report_dir),
        "--config", p(&cfg), "--batch-size", "64",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(report_dir.join("tfidf-svm/report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["train"]["batch_size"], 64);
    assert_eq!(report["config"]["train"]["epochs"], 7);
    assert!(report_dir.join("comparison.txt").is_file());

    // An empty file resolves to the defaults.
    let empty = dir.path().join("empty.toml");
    fs::write(&empty, "").unwrap();
    let out = run(&[
        "baseline", "--method", "tfidf-svm", "--train", p(&split.join("train.jsonl")), "--val",
        p(&split.join("val.jsonl")), "--test", p(&split.join("test.jsonl")), "--out-dir", p(&report_dir),
        "--config", p(&empty),
    ]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(report_dir.join("tfidf-svm/report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["train"]["batch_size"], 256);
    assert_eq!(report["config"]["prep"]["max_tokens"], 1500);

    for bad in ["[train]\nbatch_size = 0\n", "[train]\nbatchsize = 3\n", "[train]\nbatch_size = \"x\"\n"] {
        fs::write(&cfg, bad).unwrap();
        let out = run(&["train-embed", p(&split.join("train.jsonl")), "-o", p(&dir.path().join("e.bin")), "--config", p(&cfg)]);
        assert_eq!(code(&out), 1, "{bad}");
    }
    let out = run(&["train-embed", p(&split.join("train.jsonl")), "-o", "e.bin", "--batch-size", "0"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn embed_train_eval_predict_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let split = tiny_split(dir.path(), "200");
    let (train, val, test) = (split.join("train.jsonl"), split.join("val.jsonl"), split.join("test.jsonl"));
    let emb = dir.path().join("models/embed.bin");
    let mut args = vec!["train-embed", p(&train), "-o", p(&emb)];
    args.extend_from_slice(SMALL);
    let out = run(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let model = dir.path().join("models/clf.bin");
    let mut args = vec!["train", "--train", p(&train), "--val", p(&val), "--embedding", p(&emb), "-o", p(&model)];
    args.extend_from_slice(SMALL);
    let out = run(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let history = fs::read_to_string(dir.path().join("models/history.csv")).unwrap();
    assert!(history.starts_with("epoch,train_loss,val_loss,val_macro_f1\n"));
    assert_eq!(history.lines().count(), 4);
    assert!(dir.path().join("models/clf.bin.toml").is_file());

    let rep = dir.path().join("report");
    let out = run(&["eval", "--model", p(&model), "--test", p(&test), "--out-dir", p(&rep)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["report.json", "confusion.csv", "table.txt"] {
        assert!(rep.join(f).is_file(), "{f}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(rep.join("report.json")).unwrap()).unwrap();
    // The config echoed into the report is the one the model was trained with.
    assert_eq!(report["config"]["embed"]["dim"], 16);
    assert_eq!(report["config"]["train"]["hidden_dim"], 8);
    let first = fs::read(rep.join("report.json")).unwrap();
    let out = run(&["eval", "--model", p(&model), "--test", p(&test), "--out-dir", p(&rep)]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read(rep.join("report.json")).unwrap(), first);

    let out = run(&["predict", "--model", p(&model), p(&test)]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), lines(&test));
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["label"].as_str().unwrap().starts_with("NASS-"));
        let probs = v["probs"].as_array().unwrap();
        assert_eq!(probs.len(), 8);
        let sum: f64 = probs.iter().map(|x| x.as_f64().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-4);
    }
}

#[test]
fn training_without_embedding_in_f64() {
    let dir = tempfile::tempdir().unwrap();
    let split = tiny_split(dir.path(), "80");
    let model = dir.path().join("clf.bin");
    let (train, val, hist) = (split.join("train.jsonl"), split.join("val.jsonl"), dir.path().join("h.csv"));
    let mut args = vec!["train", "--train", p(&train), "--val", p(&val), "-o", p(&model), "--f64", "--history", p(&hist)];
    args.extend_from_slice(SMALL);
    let out = run(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("h.csv").is_file());
    let out = run(&["predict", "--model", p(&model), p(&split.join("test.jsonl"))]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn ingest_directory_with_labels_and_extractor() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("bills");
    fs::create_dir(&src).unwrap();
    fs::write(src.join("b1.txt"), "An Act to amend the Income Tax Act.").unwrap();
    fs::write(src.join("b2.txt"), "An Act respecting fisheries.").unwrap();
    fs::write(src.join("labels.jsonl"), "{\"id\":\"b1\",\"label\":\"NASS-3\"}\n").unwrap();
    let out = dir.path().join("corpus.jsonl");
    let res = run(&["ingest", p(&src), "-o", p(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let docs: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(docs.len(), 2);
    assert_eq!(docs[0]["id"], "b1");
    assert_eq!(docs[0]["label"], "NASS-3");
    assert!(docs[1]["label"].is_null());

    let scans = dir.path().join("scans");
    fs::create_dir(&scans).unwrap();
    fs::write(scans.join("s1.pdf"), "scanned text one").unwrap();
    fs::write(scans.join("s2.pdf"), "scanned text two").unwrap();
    let out2 = dir.path().join("ocr.jsonl");
    let res = run(&["ingest", p(&scans), "-o", p(&out2), "--ocr-cmd", "cat {}"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let text = fs::read_to_string(&out2).unwrap();
    assert!(text.contains("scanned text one") && text.contains("scanned text two"));

    let res = run(&["ingest", p(&scans), "-o", p(&out2), "--ocr-cmd", "false"]);
    assert_eq!(code(&res), 1);
    let res = run(&["ingest", p(&dir.path().join("none")), "-o", p(&out2)]);
    assert_eq!(code(&res), 1);
}
