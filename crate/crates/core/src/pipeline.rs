//! End-to-end runs: preprocess, embed, train, evaluate and report, for the
//! Bi-LSTM classifier and the baseline methods.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::corpus::Corpus;
use crate::embed::{build_vocab, infer_seed, tfidf_fit, tfidf_transform, train_pvdbow, EmbedHistory, EmbeddingModel};
use crate::error::{Error, Result};
use crate::eval::{
    confusion_matrix, per_class_prf, render_comparison, render_report, ClassMetrics, ComparisonRow,
    ConfusionMatrix, Report, RunMetadata,
};
use crate::nn::{
    fit, train_linear_svm, ClassifierInput, ClassifierModel, EpochRecord, MlpModel, Trainable,
};
use crate::scalar::Scalar;
use crate::textprep::{Preprocessor, TokenSeq};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    BilstmDoc2vec,
    BilstmWord2vec,
    MlpDoc2vec,
    MlpWord2vecMean,
    TfidfSvm,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::BilstmDoc2vec,
        Method::BilstmWord2vec,
        Method::MlpDoc2vec,
        Method::MlpWord2vecMean,
        Method::TfidfSvm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::BilstmDoc2vec => "bilstm-doc2vec",
            Method::BilstmWord2vec => "bilstm-word2vec",
            Method::MlpDoc2vec => "mlp-doc2vec",
            Method::MlpWord2vecMean => "mlp-word2vec-mean",
            Method::TfidfSvm => "tfidf-svm",
        }
    }

    /// Row label in the comparison table.
    pub fn display_name(self) -> &'static str {
        match self {
            Method::BilstmDoc2vec => "BiLSTM + Doc2Vec",
            Method::BilstmWord2vec => "BiLSTM + Word2Vec",
            Method::MlpDoc2vec => "MLP + Doc2Vec",
            Method::MlpWord2vecMean => "MLP + Word2Vec",
            Method::TfidfSvm => "SVM + TFIDF",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// A preprocessed, labeled split.
#[derive(Clone, Debug)]
pub struct SplitData {
    pub corpus: Corpus,
    pub seqs: Vec<TokenSeq>,
    pub labels: Vec<usize>,
}

pub fn prepare_split(corpus: &Corpus, prep: &Preprocessor) -> Result<SplitData> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let labels = corpus.label_indices()?;
    let seqs = prep.process_all(corpus.documents())?;
    Ok(SplitData {
        corpus: corpus.clone(),
        seqs,
        labels,
    })
}

/// Builds the vocabulary on `seqs` and trains PV-DBoW (with interleaved
/// skip-gram word training, per `config`).
pub fn train_embedding<T: Scalar>(
    seqs: &[TokenSeq],
    config: &crate::embed::EmbedTrainConfig,
) -> Result<(EmbeddingModel<T>, EmbedHistory)> {
    config.validate()?;
    let vocab = build_vocab(seqs, config.min_count)?;
    train_pvdbow(seqs, vocab, config)
}

/// Word vectors trained by skip-gram alone, for the word2vec baselines.
pub fn train_word2vec<T: Scalar>(seqs: &[TokenSeq], config: &crate::embed::EmbedTrainConfig) -> Result<EmbeddingModel<T>> {
    let cfg = crate::embed::EmbedTrainConfig {
        train_doc_vectors: false,
        interleave_word_training: true,
        ..config.clone()
    };
    Ok(train_embedding(seqs, &cfg)?.0)
}

pub fn encode_all<T: Scalar>(model: &ClassifierModel<T>, seqs: &[TokenSeq]) -> Result<Vec<ClassifierInput<T>>> {
    seqs.par_iter().map(|s| model.encode(s)).collect()
}

/// Inferred document vectors from a frozen embedding model.
pub fn infer_all<T: Scalar>(model: &EmbeddingModel<T>, seqs: &[TokenSeq]) -> Result<Vec<Vec<T>>> {
    let steps = model.config.infer_steps;
    seqs.par_iter()
        .map(|s| {
            let ids = model.vocab.encode(&s.tokens);
            model.infer_doc_vector(&ids, steps, infer_seed(model.config.seed, &ids))
        })
        .collect()
}

/// Mean of the input word vectors of the document's tokens.
pub fn mean_word_vector<T: Scalar>(model: &EmbeddingModel<T>, seq: &TokenSeq) -> Vec<T> {
    let mut out = vec![T::zero(); model.dim()];
    let ids = model.vocab.encode(&seq.tokens);
    for &id in &ids {
        for (o, v) in out.iter_mut().zip(model.word_in.row(id as usize)) {
            *o += *v;
        }
    }
    let n = T::of(ids.len().max(1) as f64);
    out.iter_mut().for_each(|v| *v /= n);
    out
}

pub fn train_classifier<T: Scalar>(
    embedding: &EmbeddingModel<T>,
    train: &SplitData,
    val: &SplitData,
    config: &RunConfig,
    doc_vector_prefix: bool,
) -> Result<(ClassifierModel<T>, Vec<EpochRecord>)> {
    let mut spec = config.train.classifier_spec(embedding.dim(), config.prep.max_tokens);
    spec.doc_vector_prefix = doc_vector_prefix;
    let model = ClassifierModel::new(spec, embedding)?;
    let xs = encode_all(&model, &train.seqs)?;
    let vx = encode_all(&model, &val.seqs)?;
    fit(model, (&xs, &train.labels), (&vx, &val.labels), &config.train.train_config())
}

pub fn predict_all<T: Scalar, M: Trainable<T>>(model: &M, inputs: &[M::Input]) -> Result<Vec<usize>> {
    inputs
        .par_iter()
        .map(|x| Ok(crate::nn::argmax(&model.probabilities(x)?)))
        .collect()
}

pub fn score(labels: &[usize], preds: &[usize], classes: usize) -> Result<(ClassMetrics, ConfusionMatrix)> {
    let cm = confusion_matrix(labels, preds, classes)?;
    Ok((per_class_prf(&cm), cm))
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,train_loss,val_loss,val_macro_f1\n");
    for r in history {
        let _ = writeln!(s, "{},{},{},{}", r.epoch, r.train_loss, r.val_loss, r.val_macro_f1);
    }
    s
}

#[derive(Clone, Debug)]
pub struct MethodOutcome {
    pub method: Method,
    pub metrics: ClassMetrics,
    pub confusion: ConfusionMatrix,
    pub predictions: Vec<usize>,
    pub history: Vec<EpochRecord>,
}

impl MethodOutcome {
    pub fn report(&self, corpus: &Corpus, config: &RunConfig) -> Report {
        Report::new(corpus.label_set(), &self.metrics, &self.confusion, &metadata(self.method, config))
    }
}

pub fn metadata(method: Method, config: &RunConfig) -> RunMetadata {
    RunMetadata {
        method: method.as_str().to_string(),
        seed: config.train.seed,
        config: config.to_json(),
    }
}

/// Embeddings shared between methods within one benchmark run.
#[derive(Default)]
pub struct EmbeddingCache<T> {
    pub pvdbow: Option<EmbeddingModel<T>>,
    pub word2vec: Option<EmbeddingModel<T>>,
}

impl<T: Scalar> EmbeddingCache<T> {
    fn pvdbow(&mut self, train: &SplitData, config: &RunConfig) -> Result<&EmbeddingModel<T>> {
        if self.pvdbow.is_none() {
            self.pvdbow = Some(train_embedding(&train.seqs, &config.embed)?.0);
        }
        Ok(self.pvdbow.as_ref().expect("just set"))
    }

    fn word2vec(&mut self, train: &SplitData, config: &RunConfig) -> Result<&EmbeddingModel<T>> {
        if self.word2vec.is_none() {
            self.word2vec = Some(train_word2vec(&train.seqs, &config.embed)?);
        }
        Ok(self.word2vec.as_ref().expect("just set"))
    }
}

fn fit_mlp<T: Scalar>(
    train: (Vec<Vec<T>>, &[usize]),
    val: (Vec<Vec<T>>, &[usize]),
    test: Vec<Vec<T>>,
    config: &RunConfig,
) -> Result<(Vec<usize>, Vec<EpochRecord>)> {
    let dim = train.0.first().map_or(0, Vec::len);
    let model = MlpModel::<T>::new(config.train.mlp_spec(dim))?;
    let (model, history) = fit(model, (&train.0, train.1), (&val.0, val.1), &config.train.train_config())?;
    Ok((predict_all(&model, &test)?, history))
}

/// Trains `method` on `train` (early stopping on `val`) and scores it on `test`.
pub fn run_method<T: Scalar>(
    method: Method,
    train: &SplitData,
    val: &SplitData,
    test: &SplitData,
    config: &RunConfig,
    cache: &mut EmbeddingCache<T>,
) -> Result<MethodOutcome> {
    let classes = train.corpus.label_set().len();
    let (predictions, history) = match method {
        Method::BilstmDoc2vec | Method::BilstmWord2vec => {
            let (emb, prefix) = if method == Method::BilstmDoc2vec {
                (cache.pvdbow(train, config)?, config.train.doc_vector_prefix)
            } else {
                (cache.word2vec(train, config)?, false)
            };
            let (model, history) = train_classifier(emb, train, val, config, prefix)?;
            let tx = encode_all(&model, &test.seqs)?;
            (predict_all(&model, &tx)?, history)
        }
        Method::MlpDoc2vec => {
            let emb = cache.pvdbow(train, config)?;
            let f = |s: &SplitData| infer_all(emb, &s.seqs);
            fit_mlp((f(train)?, &train.labels), (f(val)?, &val.labels), f(test)?, config)?
        }
        Method::MlpWord2vecMean => {
            let emb = cache.word2vec(train, config)?;
            let f = |s: &SplitData| s.seqs.iter().map(|q| mean_word_vector(emb, q)).collect::<Vec<_>>();
            fit_mlp((f(train), &train.labels), (f(val), &val.labels), f(test), config)?
        }
        Method::TfidfSvm => {
            // Validation data is unused: the SVM has no early stopping.
            let tfidf = tfidf_fit(&train.seqs)?;
            let xs: Vec<_> = train.seqs.iter().map(|s| tfidf_transform(&tfidf, s)).collect();
            let svm = train_linear_svm(&xs, &train.labels, classes, &config.svm)?;
            let preds = test.seqs.iter().map(|s| svm.predict(&tfidf_transform(&tfidf, s))).collect();
            (preds, Vec::new())
        }
    };
    let (metrics, confusion) = score(&test.labels, &predictions, classes)?;
    Ok(MethodOutcome {
        method,
        metrics,
        confusion,
        predictions,
        history,
    })
}

#[derive(Clone, Debug)]
pub struct Benchmark {
    pub outcomes: Vec<MethodOutcome>,
    pub comparison: Vec<ComparisonRow>,
}

/// Runs each method in order. With `out_dir`, writes one report directory
/// per method (plus history.csv for trained networks) and the comparison
/// table. Results do not depend on `config.train.threads`.
pub fn run_benchmark<T: Scalar>(
    splits: (&Corpus, &Corpus, &Corpus),
    config: &RunConfig,
    methods: &[Method],
    out_dir: Option<&Path>,
) -> Result<Benchmark> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.train.threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| {
        let prep = Preprocessor::new(config.prep.clone())?;
        let train = prepare_split(splits.0, &prep)?;
        let val = prepare_split(splits.1, &prep)?;
        let test = prepare_split(splits.2, &prep)?;
        let mut cache = EmbeddingCache::<T>::default();
        let mut outcomes = Vec::new();
        let mut comparison = Vec::new();
        for &m in methods {
            let outcome = run_method(m, &train, &val, &test, config, &mut cache)?;
            let report = outcome.report(&train.corpus, config);
            comparison.push(ComparisonRow::from_report(m.display_name(), &report));
            if let Some(dir) = out_dir {
                let sub = dir.join(m.as_str());
                render_report(
                    train.corpus.label_set(),
                    &outcome.metrics,
                    &outcome.confusion,
                    &metadata(m, config),
                    &sub,
                )?;
                if !outcome.history.is_empty() {
                    let p = sub.join("history.csv");
                    fs::write(&p, history_csv(&outcome.history)).map_err(|e| Error::io(&p, e))?;
                }
            }
            outcomes.push(outcome);
        }
        if let Some(dir) = out_dir {
            render_comparison(&comparison, dir)?;
        }
        Ok(Benchmark { outcomes, comparison })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("cnn-doc2vec".parse::<Method>().is_err());
    }

    #[test]
    fn history_header() {
        let h = vec![EpochRecord { epoch: 1, train_loss: 2.0, val_loss: 1.5, val_macro_f1: 0.25 }];
        assert_eq!(history_csv(&h), "epoch,train_loss,val_loss,val_macro_f1\n1,2,1.5,0.25\n");
    }
}
