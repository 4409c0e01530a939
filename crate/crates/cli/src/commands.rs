use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use billclass::config::RunConfig;
use billclass::corpus::{
    generate_synthetic_corpus, load_corpus, load_text_dir_with, save_corpus, split_corpus, Corpus, CorpusFormat,
    SplitSizes, SplitSpec, SynthSpec,
};
use billclass::embed::EmbeddingModel;
use billclass::eval::{render_report, text_table, Report};
use billclass::nn::{finite_difference_check, tiny_gradcheck_setup, ClassifierModel};
use billclass::persist::{load_model, read_manifest, save_model, Persist};
use billclass::pipeline::{
    encode_all, history_csv, metadata, predict_all, prepare_split, run_benchmark, score, train_classifier,
    train_embedding, Method,
};
use billclass::textprep::Preprocessor;
use billclass::Scalar;

use crate::{Command, ConfigArgs, MethodArg};

pub fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Ingest { input, out, labels, ocr_cmd } => ingest(&input, &out, labels, ocr_cmd.as_deref()),
        Command::Split { corpus, out_dir, train, val, test, seed, no_stratify } => {
            split(&corpus, &out_dir, [&train, &val, &test], seed, !no_stratify)
        }
        Command::TrainEmbed { corpus, out, config } => {
            let cfg = resolve(&config, None)?;
            if config.f64 {
                train_embed::<f64>(&corpus, &out, &cfg)
            } else {
                train_embed::<f32>(&corpus, &out, &cfg)
            }
        }
        Command::Train { train, val, embedding, out, history, config } => {
            let cfg = resolve(&config, None)?;
            let wide = match &embedding {
                Some(p) => model_dtype(p)? == f64::DTYPE,
                None => config.f64,
            };
            let args = TrainArgs { train, val, embedding, out, history };
            if wide {
                train_classifier_cmd::<f64>(&args, &cfg)
            } else {
                train_classifier_cmd::<f32>(&args, &cfg)
            }
        }
        Command::Eval { model, test, out_dir, config } => {
            let cfg = resolve(&config, Some(&model))?;
            let dir = out_dir.unwrap_or_else(|| cfg.eval.output_dir.clone());
            if model_dtype(&model)? == f64::DTYPE {
                eval::<f64>(&model, &test, &dir, &cfg)
            } else {
                eval::<f32>(&model, &test, &dir, &cfg)
            }
        }
        Command::Predict { model, corpus, config } => {
            let cfg = resolve(&config, Some(&model))?;
            if model_dtype(&model)? == f64::DTYPE {
                predict::<f64>(&model, &corpus, &cfg)
            } else {
                predict::<f32>(&model, &corpus, &cfg)
            }
        }
        Command::Baseline { method, train, val, test, out_dir, config } => {
            let cfg = resolve(&config, None)?;
            let dir = out_dir.unwrap_or_else(|| cfg.eval.output_dir.clone());
            let mut methods: Vec<Method> = Vec::new();
            for m in method.iter().flat_map(|m: &MethodArg| m.methods()) {
                if !methods.contains(&m) {
                    methods.push(m);
                }
            }
            baseline(&methods, [&train, &val, &test], &dir, &cfg, config.f64)
        }
        Command::Gradcheck { seed, step } => gradcheck(seed, step),
        Command::Synth { docs, seed, imbalanced, out } => synth(docs, seed, imbalanced, &out),
    }
}

/// File (explicit, else the sidecar written next to `model`, else defaults),
/// then flag overrides, then validation.
fn resolve(args: &ConfigArgs, model: Option<&Path>) -> Result<RunConfig> {
    let sidecar = model.map(config_sidecar).filter(|p| p.is_file());
    let path = args.config.clone().or(sidecar);
    if let Some(p) = &path {
        if !p.is_file() {
            bail!("config file {} not found", p.display());
        }
    }
    let mut cfg = RunConfig::load(path.as_deref())?;
    if let Some(v) = args.batch_size {
        cfg.train.batch_size = v;
    }
    if let Some(v) = args.epochs {
        cfg.train.epochs = v;
    }
    if let Some(v) = args.patience {
        cfg.train.patience = v;
    }
    if let Some(v) = args.seed {
        cfg.train.seed = v;
        cfg.embed.seed = v;
        cfg.svm.seed = v;
    }
    if let Some(v) = args.threads {
        cfg.train.threads = v;
    }
    if args.deterministic {
        cfg.train.threads = 1;
    }
    if let Some(v) = args.dim {
        cfg.embed.dim = v;
    }
    if let Some(v) = args.embed_epochs {
        cfg.embed.epochs = v;
    }
    if let Some(v) = args.max_tokens {
        cfg.prep.max_tokens = v;
    }
    if let Some(v) = args.hidden_dim {
        cfg.train.hidden_dim = v;
    }
    if let Some(v) = args.dense_dim {
        cfg.train.dense_dim = v;
    }
    if let Some(v) = args.dropout {
        cfg.train.dropout = v;
    }
    if let Some(v) = args.learning_rate {
        cfg.train.learning_rate = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn config_sidecar(model: &Path) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(".toml");
    PathBuf::from(s)
}

fn model_dtype(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading model {}", path.display()))?;
    Ok(read_manifest(&bytes)?.0.dtype)
}

fn load<M: Persist>(path: &Path) -> Result<M> {
    load_model(path).with_context(|| format!("loading model {}", path.display()))
}

fn read_corpus(path: &Path) -> Result<Corpus> {
    load_corpus(path, &CorpusFormat::Jsonl).with_context(|| format!("reading corpus {}", path.display()))
}

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build()?.install(f)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn ingest(input: &Path, out: &Path, labels: Option<PathBuf>, ocr_cmd: Option<&str>) -> Result<ExitCode> {
    let corpus = if input.is_dir() {
        match ocr_cmd {
            Some(template) => load_text_dir_with(input, labels.as_deref(), |p| run_extractor(template, p).map(Some)),
            None => load_corpus(input, &CorpusFormat::TextDir { manifest: labels }),
        }
    } else if input.is_file() {
        if ocr_cmd.is_some() || labels.is_some() {
            bail!("--ocr-cmd and --labels apply to directory input only");
        }
        load_corpus(input, &CorpusFormat::Jsonl)
    } else {
        bail!("input {} not found", input.display());
    };
    let corpus = corpus.with_context(|| format!("ingesting {}", input.display()))?;
    ensure_parent(out)?;
    save_corpus(out, &corpus)?;
    let labeled = corpus.documents().iter().filter(|d| d.label.is_some()).count();
    println!("{} documents ({labeled} labeled) -> {}", corpus.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn run_extractor(template: &str, path: &Path) -> billclass::Result<String> {
    let file = path.to_string_lossy();
    let mut argv: Vec<String> = template.split_whitespace().map(str::to_string).collect();
    if argv.is_empty() {
        return Err(billclass::Error::Config("--ocr-cmd is empty".into()));
    }
    if argv.iter().any(|a| a.contains("{}")) {
        argv.iter_mut().for_each(|a| *a = a.replace("{}", &file));
    } else {
        argv.push(file.into_owned());
    }
    let output = std::process::Command::new(&argv[0])
        .args(&argv[1..])
        .output()
        .map_err(|e| billclass::Error::io(path, e))?;
    if !output.status.success() {
        return Err(billclass::Error::Config(format!(
            "extractor failed on {} ({}): {}",
            path.display(),
            output.status,
            String::from_utf8_lossy(&output.stderr).trim()
        )));
    }
    Ok(String::from_utf8_lossy(&output.stdout).into_owned())
}

fn parse_sizes(parts: [&String; 3]) -> Result<SplitSizes> {
    if let [Ok(train), Ok(val), Ok(test)] = parts.map(|s| s.parse::<usize>()) {
        return Ok(SplitSizes::Counts { train, val, test });
    }
    let f = parts.map(|s| s.parse::<f64>());
    match f {
        [Ok(train), Ok(val), Ok(test)] => Ok(SplitSizes::Fractions { train, val, test }),
        _ => bail!("split sizes must be three counts or three fractions"),
    }
}

fn split(corpus: &Path, out_dir: &Path, sizes: [&String; 3], seed: u64, stratified: bool) -> Result<ExitCode> {
    let sizes = parse_sizes(sizes)?;
    let corpus = read_corpus(corpus)?;
    let (tr, va, te) = split_corpus(&corpus, &SplitSpec { sizes, seed, stratified })?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    for (name, part) in [("train", &tr), ("val", &va), ("test", &te)] {
        let p = out_dir.join(format!("{name}.jsonl"));
        save_corpus(&p, part)?;
        println!("{name}: {} documents -> {}", part.len(), p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn train_embed<T: Scalar>(corpus: &Path, out: &Path, cfg: &RunConfig) -> Result<ExitCode> {
    let corpus = read_corpus(corpus)?;
    let prep = Preprocessor::new(cfg.prep.clone())?;
    let (model, history) = in_pool(cfg.train.threads, || {
        let seqs = prep.process_all(corpus.documents())?;
        Ok(train_embedding::<T>(&seqs, &cfg.embed)?)
    })?;
    ensure_parent(out)?;
    save_model(&model, out)?;
    println!(
        "embedding: {} documents, {} words, dim {}, final epoch loss {:.4} -> {}",
        model.doc_ids.len(),
        model.vocab.len(),
        model.dim(),
        history.epoch_loss.last().copied().unwrap_or(f64::NAN),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

struct TrainArgs {
    train: PathBuf,
    val: PathBuf,
    embedding: Option<PathBuf>,
    out: PathBuf,
    history: Option<PathBuf>,
}

fn train_classifier_cmd<T: Scalar>(args: &TrainArgs, cfg: &RunConfig) -> Result<ExitCode> {
    let prep = Preprocessor::new(cfg.prep.clone())?;
    let train = prepare_split(&read_corpus(&args.train)?, &prep)?;
    let val = prepare_split(&read_corpus(&args.val)?, &prep)?;
    let (model, history) = in_pool(cfg.train.threads, || {
        let embedding: EmbeddingModel<T> = match &args.embedding {
            Some(p) => load(p)?,
            None => train_embedding(&train.seqs, &cfg.embed)?.0,
        };
        Ok(train_classifier(&embedding, &train, &val, cfg, cfg.train.doc_vector_prefix)?)
    })?;
    ensure_parent(&args.out)?;
    save_model(&model, &args.out)?;
    let sidecar = config_sidecar(&args.out);
    fs::write(&sidecar, cfg.to_toml()).with_context(|| format!("writing {}", sidecar.display()))?;
    let history_path = args.history.clone().unwrap_or_else(|| {
        args.out.parent().map_or_else(|| PathBuf::from("history.csv"), |d| d.join("history.csv"))
    });
    ensure_parent(&history_path)?;
    fs::write(&history_path, history_csv(&history)).with_context(|| format!("writing {}", history_path.display()))?;
    if let Some(last) = history.last() {
        println!(
            "{} epochs, last val loss {:.4}, val macro-F1 {:.4}",
            history.len(),
            last.val_loss,
            last.val_macro_f1
        );
    }
    println!("model -> {}, history -> {}", args.out.display(), history_path.display());
    Ok(ExitCode::SUCCESS)
}

fn eval<T: Scalar>(model_path: &Path, test: &Path, dir: &Path, cfg: &RunConfig) -> Result<ExitCode> {
    let model: ClassifierModel<T> = load(model_path)?;
    let prep = Preprocessor::new(cfg.prep.clone())?;
    let test = prepare_split(&read_corpus(test)?, &prep)?;
    let preds = in_pool(cfg.train.threads, || {
        let xs = encode_all(&model, &test.seqs)?;
        Ok(predict_all(&model, &xs)?)
    })?;
    let labels = test.corpus.label_set();
    let (metrics, cm) = score(&test.labels, &preds, labels.len())?;
    let meta = metadata(Method::BilstmDoc2vec, cfg);
    render_report(labels, &metrics, &cm, &meta, dir)?;
    print!("{}", text_table(&Report::new(labels, &metrics, &cm, &meta)));
    println!("report -> {}", dir.display());
    Ok(ExitCode::SUCCESS)
}

fn predict<T: Scalar>(model_path: &Path, corpus: &Path, cfg: &RunConfig) -> Result<ExitCode> {
    let model: ClassifierModel<T> = load(model_path)?;
    let corpus = read_corpus(corpus)?;
    let prep = Preprocessor::new(cfg.prep.clone())?;
    let rows = in_pool(cfg.train.threads, || {
        let seqs = prep.process_all(corpus.documents())?;
        let xs = encode_all(&model, &seqs)?;
        xs.iter().map(|x| Ok(model.predict_input(x)?)).collect::<Result<Vec<_>>>()
    })?;
    let labels = corpus.label_set();
    for (doc, (class, probs)) in corpus.documents().iter().zip(rows) {
        let probs: Vec<f64> = probs.iter().map(|p| p.to_f64().unwrap_or(f64::NAN)).collect();
        let line = serde_json::json!({ "id": doc.id, "label": labels.id(class), "probs": probs });
        println!("{line}");
    }
    Ok(ExitCode::SUCCESS)
}

fn baseline(methods: &[Method], paths: [&PathBuf; 3], dir: &Path, cfg: &RunConfig, wide: bool) -> Result<ExitCode> {
    let [tr, va, te] = paths.map(|p| read_corpus(p));
    let (tr, va, te) = (tr?, va?, te?);
    let bench = if wide {
        run_benchmark::<f64>((&tr, &va, &te), cfg, methods, Some(dir))?
    } else {
        run_benchmark::<f32>((&tr, &va, &te), cfg, methods, Some(dir))?
    };
    print!("{}", billclass::eval::comparison_table(&bench.comparison));
    println!("reports -> {}", dir.display());
    Ok(ExitCode::SUCCESS)
}

fn gradcheck(seed: u64, step: f64) -> Result<ExitCode> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(anyhow!("--step must be a positive number"));
    }
    let (model, input, label) = tiny_gradcheck_setup(seed)?;
    let report = finite_difference_check(&model, &input, label, seed, step)?;
    println!("{}", serde_json::to_string(&report)?);
    if report.max_rel_error < 1e-4 {
        println!("gradcheck passed: max relative error {:.3e}", report.max_rel_error);
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "gradcheck failed: max relative error {:.3e} at {}[{}]",
            report.max_rel_error, report.worst_tensor, report.worst_index
        );
        Ok(ExitCode::FAILURE)
    }
}

fn synth(docs: usize, seed: u64, imbalanced: bool, out: &Path) -> Result<ExitCode> {
    let spec = if imbalanced { SynthSpec::imbalanced() } else { SynthSpec::default() };
    let corpus = generate_synthetic_corpus(docs, seed, &spec)?;
    ensure_parent(out)?;
    save_corpus(out, &corpus)?;
    println!("{} synthetic documents -> {}", corpus.len(), out.display());
    Ok(ExitCode::SUCCESS)
}
