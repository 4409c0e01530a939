//! `billclass` command-line front end. Each subcommand is one pipeline stage;
//! stages exchange JSONL corpora, model files and report directories.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use billclass::config::RunConfig;
use billclass::pipeline::Method;
use clap::{Args, Parser, Subcommand, ValueEnum};

fn default_config_help() -> String {
    format!(
        "Exit status: 0 on success, 1 on a runtime or validation failure, 2 on a usage error.\n\n\
         Resolved defaults (a --config TOML may set any of these; command-line flags win over the file):\n\n{}",
        RunConfig::default().to_toml()
    )
}

#[derive(Parser, Debug)]
#[command(
    name = "billclass",
    version,
    about = "Parliamentary bill classification: preprocessing, PV-DBoW embeddings, Bi-LSTM classifier, evaluation and baselines",
    after_long_help = default_config_help()
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Run-configuration file plus the most common overrides.
#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// TOML run configuration (sections prep, embed, train, svm, eval). Unknown keys are rejected.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Mini-batch size [default: 256]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Classifier training epochs [default: 30]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Early-stopping patience in epochs, 0 disables [default: 5]
    #[arg(long)]
    pub patience: Option<usize>,
    /// Seed for embedding, classifier and SVM training [default: 1]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this [default: 1]
    #[arg(long)]
    pub threads: Option<usize>,
    /// Force single-threaded execution
    #[arg(long)]
    pub deterministic: bool,
    /// Embedding dimension [default: 400]
    #[arg(long)]
    pub dim: Option<usize>,
    /// PV-DBoW training epochs [default: 20]
    #[arg(long)]
    pub embed_epochs: Option<usize>,
    /// Tokens kept per document [default: 1500]
    #[arg(long)]
    pub max_tokens: Option<usize>,
    /// LSTM hidden units per direction [default: 128]
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    /// Width of the dense ReLU layer [default: 400]
    #[arg(long)]
    pub dense_dim: Option<usize>,
    /// Dropout rate for the input and dense layers [default: 0.2]
    #[arg(long)]
    pub dropout: Option<f64>,
    /// ADAM step size [default: 0.001]
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Compute in 64-bit floats instead of 32-bit
    #[arg(long)]
    pub f64: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    TfidfSvm,
    MlpDoc2vec,
    MlpWord2vecMean,
    BilstmWord2vec,
    BilstmDoc2vec,
    /// Every method, in the order above
    All,
}

impl MethodArg {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodArg::TfidfSvm => vec![Method::TfidfSvm],
            MethodArg::MlpDoc2vec => vec![Method::MlpDoc2vec],
            MethodArg::MlpWord2vecMean => vec![Method::MlpWord2vecMean],
            MethodArg::BilstmWord2vec => vec![Method::BilstmWord2vec],
            MethodArg::BilstmDoc2vec => vec![Method::BilstmDoc2vec],
            MethodArg::All => vec![
                Method::TfidfSvm,
                Method::MlpDoc2vec,
                Method::MlpWord2vecMean,
                Method::BilstmWord2vec,
                Method::BilstmDoc2vec,
            ],
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Collect documents into a corpus JSONL file
    ///
    /// INPUT is either a JSONL corpus (validated and rewritten) or a directory.
    /// In a directory every *.txt file is a document named by its file stem;
    /// with --ocr-cmd every file is passed through the command instead.
    Ingest {
        input: PathBuf,
        /// Output corpus JSONL
        #[arg(long, short)]
        out: PathBuf,
        /// JSONL label manifest of {"id", "label"} objects [default: INPUT/labels.jsonl if present]
        #[arg(long)]
        labels: Option<PathBuf>,
        /// External text extractor run once per file; `{}` is replaced by the file path
        /// (appended when absent) and stdout becomes the document text. No shell is involved.
        #[arg(long, value_name = "TEMPLATE")]
        ocr_cmd: Option<String>,
    },
    /// Stratified train/validation/test split into DIR/{train,val,test}.jsonl
    ///
    /// Sizes are document counts when all three are integers, else fractions
    /// summing to 1. Counts may leave documents unassigned.
    Split {
        corpus: PathBuf,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
        #[arg(long, default_value = "0.64")]
        train: String,
        #[arg(long, default_value = "0.16")]
        val: String,
        #[arg(long, default_value = "0.20")]
        test: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Shuffle without preserving class proportions
        #[arg(long)]
        no_stratify: bool,
    },
    /// Train PV-DBoW document and word vectors on a corpus
    TrainEmbed {
        corpus: PathBuf,
        /// Output embedding model file
        #[arg(long, short)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Train the Bi-LSTM classifier; writes the model, MODEL.toml (resolved config) and history.csv
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        val: PathBuf,
        /// Pretrained embedding; trained on --train when omitted
        #[arg(long)]
        embedding: Option<PathBuf>,
        /// Output classifier model file
        #[arg(long, short)]
        out: PathBuf,
        /// Per-epoch history CSV [default: history.csv next to the model]
        #[arg(long)]
        history: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Score a classifier on a labeled corpus; writes report.json, confusion.csv and table.txt
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Report directory [default: eval.output_dir, "report"]
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Print one JSON line {"id", "label", "probs"} per document
    Predict {
        #[arg(long)]
        model: PathBuf,
        corpus: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Train and score comparison methods on one split; writes DIR/<method>/ reports and comparison tables
    Baseline {
        /// Methods to run (comma separated)
        #[arg(long, value_enum, value_delimiter = ',', required = true)]
        method: Vec<MethodArg>,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        val: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Report directory [default: eval.output_dir, "report"]
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Finite-difference check of every classifier gradient on a tiny 64-bit model; exit 0 iff max relative error < 1e-4
    Gradcheck {
        #[arg(long, default_value_t = 5)]
        seed: u64,
        /// Central-difference step
        #[arg(long, default_value_t = 1e-4)]
        step: f64,
    },
    /// Write a synthetic 8-class corpus
    Synth {
        #[arg(long, default_value_t = 2397)]
        docs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Skewed class frequencies instead of balanced ones
        #[arg(long)]
        imbalanced: bool,
        #[arg(long, short)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
