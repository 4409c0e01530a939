//! PV-DBoW paragraph vectors trained by negative sampling, with optional
//! interleaved skip-gram passes that give the input word matrix meaning.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::vocab::{Vocab, PAD};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{axpy, dot, sigmoid, Scalar};
use crate::textprep::TokenSeq;

pub const DEFAULT_DIM: usize = 400;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedTrainConfig {
    pub dim: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub window: usize,
    pub min_count: usize,
    /// Train doc vectors against their words (the PV-DBoW part).
    pub train_doc_vectors: bool,
    /// Interleave skip-gram updates of the word matrices.
    pub interleave_word_training: bool,
    /// Epochs of gradient steps when inferring an unseen document.
    pub infer_steps: usize,
    pub seed: u64,
}

impl Default for EmbedTrainConfig {
    fn default() -> Self {
        EmbedTrainConfig {
            dim: DEFAULT_DIM,
            epochs: 20,
            negatives: 5,
            lr_start: 0.025,
            lr_end: 0.0001,
            window: 5,
            min_count: 1,
            train_doc_vectors: true,
            interleave_word_training: true,
            infer_steps: 50,
            seed: 1,
        }
    }
}

impl EmbedTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("embed.dim must be >= 1".into()));
        }
        if self.negatives == 0 {
            return Err(Error::Config("embed.negatives must be >= 1".into()));
        }
        if !(self.lr_start > 0.0 && self.lr_end >= 0.0) {
            return Err(Error::Config("embed learning rates must be positive".into()));
        }
        if self.interleave_word_training && self.window == 0 {
            return Err(Error::Config("embed.window must be >= 1".into()));
        }
        Ok(())
    }

    fn lr_at(&self, progress: f64) -> f64 {
        self.lr_start - (self.lr_start - self.lr_end) * progress.clamp(0.0, 1.0)
    }
}

/// Cumulative sampling table over vocabulary indices.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSampler {
    cumulative: Vec<f64>,
}

impl NoiseSampler {
    pub fn new(weights: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        NoiseSampler { cumulative }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> u32 {
        let total = *self.cumulative.last().unwrap_or(&0.0);
        let x = rng.gen::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= x);
        i.min(self.cumulative.len() - 1) as u32
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel<T> {
    pub config: EmbedTrainConfig,
    pub vocab: Vocab,
    /// Ids of the training documents, one per `doc_vectors` row.
    pub doc_ids: Vec<String>,
    pub doc_vectors: Matrix<T>,
    pub word_in: Matrix<T>,
    pub word_out: Matrix<T>,
    noise: NoiseSampler,
}

/// Mean negative-sampling loss per trained pair, by epoch.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EmbedHistory {
    pub epoch_loss: Vec<f64>,
    pub doc_loss: Vec<f64>,
    pub word_loss: Vec<f64>,
}

impl<T: Scalar> EmbeddingModel<T> {
    /// Seeded starting point: doc and input word vectors drawn from
    /// U(-0.5/d, 0.5/d), output vectors zero.
    pub fn initialize(vocab: Vocab, doc_ids: Vec<String>, config: EmbedTrainConfig) -> Result<Self> {
        config.validate()?;
        if vocab.len() <= 2 {
            return Err(Error::EmptyVocabulary);
        }
        let d = config.dim;
        let bound = 0.5 / d as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let doc_vectors = Matrix::uniform(doc_ids.len(), d, bound, &mut rng);
        let mut word_in = Matrix::uniform(vocab.len(), d, bound, &mut rng);
        word_in.row_mut(PAD as usize).fill(T::zero());
        let word_out = Matrix::zeros(vocab.len(), d);
        let noise = NoiseSampler::new(&vocab.noise_weights());
        Ok(EmbeddingModel {
            config,
            vocab,
            doc_ids,
            doc_vectors,
            word_in,
            word_out,
            noise,
        })
    }

    /// Reassemble from stored parts (used by deserialization).
    pub fn from_parts(
        config: EmbedTrainConfig,
        vocab: Vocab,
        doc_ids: Vec<String>,
        doc_vectors: Matrix<T>,
        word_in: Matrix<T>,
        word_out: Matrix<T>,
    ) -> Result<Self> {
        let (v, d) = (vocab.len(), config.dim);
        if word_in.rows() != v || word_in.cols() != d {
            return Err(Error::dim("word_in", v * d, word_in.rows() * word_in.cols()));
        }
        if word_out.rows() != v || word_out.cols() != d {
            return Err(Error::dim("word_out", v * d, word_out.rows() * word_out.cols()));
        }
        if doc_vectors.rows() != doc_ids.len() || doc_vectors.cols() != d {
            return Err(Error::dim("doc_vectors", doc_ids.len() * d, doc_vectors.as_slice().len()));
        }
        let noise = NoiseSampler::new(&vocab.noise_weights());
        Ok(EmbeddingModel {
            config,
            vocab,
            doc_ids,
            doc_vectors,
            word_in,
            word_out,
            noise,
        })
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn doc_vector(&self, id: &str) -> Option<&[T]> {
        self.doc_ids
            .iter()
            .position(|d| d == id)
            .map(|i| self.doc_vectors.row(i))
    }

    /// Copy with the document matrix dropped; what a classifier keeps.
    pub fn without_doc_vectors(&self) -> Self {
        EmbeddingModel {
            doc_ids: Vec::new(),
            doc_vectors: Matrix::zeros(0, self.config.dim),
            ..self.clone()
        }
    }

    /// Optimize a fresh vector for `tokens` against the frozen output matrix.
    pub fn infer_doc_vector(&self, tokens: &[u32], steps: usize, seed: u64) -> Result<Vec<T>> {
        if tokens.is_empty() {
            return Err(Error::EmptySequence);
        }
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = T::of(0.5 / d as f64);
        let mut v: Vec<T> = (0..d).map(|_| rng.gen_range(-bound..bound)).collect();
        let mut scratch = vec![T::zero(); d];
        let mut negs = Vec::with_capacity(self.config.negatives);
        let total = (steps * tokens.len()) as f64;
        let mut done = 0usize;
        for _ in 0..steps {
            for &w in tokens {
                let lr = T::of(self.config.lr_at(done as f64 / total));
                self.draw_negatives(w, &mut rng, &mut negs);
                ns_input_step(&mut v, &self.word_out, w, &negs, lr, &mut scratch);
                done += 1;
            }
        }
        Ok(v)
    }

    /// `(max_len x d)` matrix of input word vectors, zero rows past `valid_len`.
    pub fn embed_token_sequence(&self, tokens: &TokenSeq, max_len: usize) -> (Matrix<T>, usize) {
        let ids = self.vocab.encode(&tokens.tokens);
        let valid = ids.len().min(max_len);
        let mut m = Matrix::zeros(max_len, self.dim());
        for (t, &id) in ids.iter().take(valid).enumerate() {
            m.row_mut(t).copy_from_slice(self.word_in.row(id as usize));
        }
        (m, valid)
    }

    fn draw_negatives<R: Rng>(&self, target: u32, rng: &mut R, out: &mut Vec<u32>) {
        out.clear();
        for _ in 0..self.config.negatives {
            let n = self.noise.sample(rng);
            if n != target {
                out.push(n);
            }
        }
    }
}

/// Deterministic per-document seed: FNV-1a over the token ids, mixed with `base`.
pub fn infer_seed(base: u64, tokens: &[u32]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ base;
    for &t in tokens {
        for b in t.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// `-ln σ(x)`, stable for large |x|.
#[inline]
fn neg_log_sigmoid(x: f64) -> f64 {
    if x > 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Negative-sampling loss `-ln σ(v·u_t) - Σ ln σ(-v·u_n)` for one input vector.
pub fn ns_loss<T: Scalar>(v: &[T], out: &Matrix<T>, target: u32, negatives: &[u32]) -> f64 {
    let mut loss = neg_log_sigmoid(dot(v, out.row(target as usize)).as_f64());
    for &n in negatives {
        loss += neg_log_sigmoid(-dot(v, out.row(n as usize)).as_f64());
    }
    loss
}

/// Analytic gradient of [`ns_loss`].
#[derive(Clone, Debug, PartialEq)]
pub struct NsGradient<T> {
    pub input: Vec<T>,
    /// Gradient for each output row touched, in target-then-negatives order.
    pub outputs: Vec<(u32, Vec<T>)>,
}

pub fn ns_gradient<T: Scalar>(v: &[T], out: &Matrix<T>, target: u32, negatives: &[u32]) -> NsGradient<T> {
    let mut input = vec![T::zero(); v.len()];
    let mut outputs = Vec::with_capacity(negatives.len() + 1);
    let pairs = std::iter::once((target, T::one())).chain(negatives.iter().map(|&n| (n, T::zero())));
    for (row, label) in pairs {
        let u = out.row(row as usize);
        // dL/d(score) = σ(score) - label
        let g = sigmoid(dot(v, u)) - label;
        axpy(g, u, &mut input);
        outputs.push((row, v.iter().map(|&x| g * x).collect()));
    }
    NsGradient { input, outputs }
}

/// One SGD step on [`ns_loss`] with step size `lr`. Returns the pre-update loss.
/// Output rows are updated immediately; the input vector at the end.
pub(crate) fn ns_sgd_step<T: Scalar>(
    v: &mut [T],
    out: &mut Matrix<T>,
    target: u32,
    negatives: &[u32],
    lr: T,
    scratch: &mut [T],
) -> f64 {
    scratch.fill(T::zero());
    let mut loss = 0.0;
    let pairs = std::iter::once((target, T::one())).chain(negatives.iter().map(|&n| (n, T::zero())));
    for (row, label) in pairs {
        let u = out.row_mut(row as usize);
        let score = dot(v, u);
        let s = score.as_f64();
        loss += if label == T::one() {
            neg_log_sigmoid(s)
        } else {
            neg_log_sigmoid(-s)
        };
        let g = (label - sigmoid(score)) * lr;
        axpy(g, u, scratch);
        axpy(g, v, u);
    }
    for (x, e) in v.iter_mut().zip(scratch.iter()) {
        *x += *e;
    }
    loss
}

/// Like [`ns_sgd_step`] with the output matrix frozen.
pub(crate) fn ns_input_step<T: Scalar>(
    v: &mut [T],
    out: &Matrix<T>,
    target: u32,
    negatives: &[u32],
    lr: T,
    scratch: &mut [T],
) {
    scratch.fill(T::zero());
    let pairs = std::iter::once((target, T::one())).chain(negatives.iter().map(|&n| (n, T::zero())));
    for (row, label) in pairs {
        let u = out.row(row as usize);
        let g = (label - sigmoid(dot(v, u))) * lr;
        axpy(g, u, scratch);
    }
    for (x, e) in v.iter_mut().zip(scratch.iter()) {
        *x += *e;
    }
}

/// Train paragraph vectors (and, when interleaved, skip-gram word vectors)
/// for `seqs` over the given vocabulary. Single-threaded and deterministic
/// for a fixed `config.seed`.
pub fn train_pvdbow<T: Scalar>(
    seqs: &[TokenSeq],
    vocab: Vocab,
    config: &EmbedTrainConfig,
) -> Result<(EmbeddingModel<T>, EmbedHistory)> {
    if seqs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let doc_ids = seqs.iter().map(|s| s.doc_id.clone()).collect();
    let mut model = EmbeddingModel::<T>::initialize(vocab, doc_ids, config.clone())?;
    let encoded: Vec<Vec<u32>> = seqs.iter().map(|s| model.vocab.encode(&s.tokens)).collect();
    let total_tokens: usize = encoded.iter().map(Vec::len).sum();
    if total_tokens == 0 {
        return Err(Error::EmptySequence);
    }

    // Training draws come from a stream separate from initialization.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let d = config.dim;
    let mut scratch = vec![T::zero(); d];
    let mut negs = Vec::with_capacity(config.negatives);
    let mut history = EmbedHistory::default();
    let grand_total = (config.epochs * total_tokens) as f64;
    let mut processed = 0usize;
    let mut order: Vec<usize> = (0..encoded.len()).collect();

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let (mut doc_sum, mut doc_n, mut word_sum, mut word_n) = (0.0, 0usize, 0.0, 0usize);
        for &di in &order {
            let ids = &encoded[di];
            for (pos, &w) in ids.iter().enumerate() {
                let lr = T::of(config.lr_at(processed as f64 / grand_total));
                processed += 1;
                if config.train_doc_vectors {
                    model.draw_negatives(w, &mut rng, &mut negs);
                    let v = model.doc_vectors.row_mut(di);
                    doc_sum += ns_sgd_step(v, &mut model.word_out, w, &negs, lr, &mut scratch);
                    doc_n += 1;
                }
                if config.interleave_word_training {
                    let reach = config.window - rng.gen_range(0..config.window);
                    let lo = pos.saturating_sub(reach);
                    let hi = (pos + reach).min(ids.len() - 1);
                    for ctx in lo..=hi {
                        if ctx == pos {
                            continue;
                        }
                        model.draw_negatives(w, &mut rng, &mut negs);
                        let v = model.word_in.row_mut(ids[ctx] as usize);
                        word_sum +=
                            ns_sgd_step(v, &mut model.word_out, w, &negs, lr, &mut scratch);
                        word_n += 1;
                    }
                }
            }
        }
        let mean = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
        history.doc_loss.push(mean(doc_sum, doc_n));
        history.word_loss.push(mean(word_sum, word_n));
        history.epoch_loss.push(mean(doc_sum + word_sum, doc_n + word_n));
    }
    Ok((model, history))
}
