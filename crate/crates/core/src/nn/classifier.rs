//! Embedding lookup → Bi-LSTM → dense(ReLU) → dropout → dense(softmax).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dense::{class_nll, softmax, Activation, DenseLayer};
use super::dropout::{check_rate, sample_mask, Mode};
use super::lstm::{final_states, BiCache, BiLstmLayer};
use super::{Tensors, Trainable};
use crate::corpus::NUM_CLASSES;
use crate::embed::{infer_seed, EmbeddingModel};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::textprep::{TokenSeq, DEFAULT_MAX_TOKENS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSpec {
    /// Width of the embedding vectors fed to the first Bi-LSTM layer.
    pub input_dim: usize,
    /// Units per direction.
    pub hidden_dim: usize,
    /// Number of stacked bidirectional layers.
    pub depth: usize,
    pub dense_dim: usize,
    pub classes: usize,
    pub dropout: f64,
    pub recurrent_dropout: f64,
    pub max_len: usize,
    /// Prepend the inferred document vector as an extra first timestep.
    pub doc_vector_prefix: bool,
    /// Update the input word vectors during classifier training.
    pub fine_tune_embedding: bool,
    pub init_seed: u64,
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        ClassifierSpec {
            input_dim: 400,
            hidden_dim: 128,
            depth: 1,
            dense_dim: 400,
            classes: NUM_CLASSES,
            dropout: 0.2,
            recurrent_dropout: 0.2,
            max_len: DEFAULT_MAX_TOKENS,
            doc_vector_prefix: false,
            fine_tune_embedding: false,
            init_seed: 1,
        }
    }
}

impl ClassifierSpec {
    pub fn validate(&self) -> Result<()> {
        check_rate(self.dropout)?;
        check_rate(self.recurrent_dropout)?;
        if self.input_dim == 0 || self.hidden_dim == 0 || self.dense_dim == 0 {
            return Err(Error::Config("classifier dimensions must be >= 1".into()));
        }
        if self.depth == 0 || self.max_len == 0 || self.classes < 2 {
            return Err(Error::Config("need depth >= 1, max_len >= 1, classes >= 2".into()));
        }
        Ok(())
    }
}

/// Encoded document: vocabulary ids plus the optional document-vector timestep.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierInput<T> {
    pub ids: Vec<u32>,
    pub prefix: Option<Vec<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierModel<T> {
    pub spec: ClassifierSpec,
    /// Frozen unless `spec.fine_tune_embedding`; carries no document rows.
    pub embedding: EmbeddingModel<T>,
    pub lstm: Vec<BiLstmLayer<T>>,
    pub dense1: DenseLayer<T>,
    pub dense2: DenseLayer<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierGrads<T> {
    pub embedding: Option<Matrix<T>>,
    pub lstm: Vec<BiLstmLayer<T>>,
    pub dense1: DenseLayer<T>,
    pub dense2: DenseLayer<T>,
}

/// Intermediates kept by [`ClassifierModel::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    mode: Mode,
    ids: Vec<u32>,
    has_prefix: bool,
    layers: Vec<BiCache<T>>,
    seq_len: usize,
    lstm_out: Vec<T>,
    pre1: Vec<T>,
    mask1: Option<Vec<T>>,
    hidden: Vec<T>,
    pub probs: Vec<T>,
}

impl<T: Scalar> ClassifierModel<T> {
    pub fn new(spec: ClassifierSpec, embedding: &EmbeddingModel<T>) -> Result<Self> {
        spec.validate()?;
        if embedding.dim() != spec.input_dim {
            return Err(Error::dim("embedding dim", spec.input_dim, embedding.dim()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.init_seed);
        let mut lstm = Vec::with_capacity(spec.depth);
        let mut width = spec.input_dim;
        for _ in 0..spec.depth {
            lstm.push(BiLstmLayer::glorot(width, spec.hidden_dim, &mut rng));
            width = 2 * spec.hidden_dim;
        }
        let dense1 = DenseLayer::glorot(width, spec.dense_dim, Activation::Relu, &mut rng);
        let dense2 = DenseLayer::glorot(spec.dense_dim, spec.classes, Activation::Softmax, &mut rng);
        Ok(ClassifierModel {
            spec,
            embedding: embedding.without_doc_vectors(),
            lstm,
            dense1,
            dense2,
        })
    }

    pub fn encode(&self, seq: &TokenSeq) -> Result<ClassifierInput<T>> {
        let mut ids = self.embedding.vocab.encode(&seq.tokens);
        ids.truncate(self.spec.max_len);
        if ids.is_empty() {
            return Err(Error::EmptySequence);
        }
        let prefix = if self.spec.doc_vector_prefix {
            let cfg = &self.embedding.config;
            let seed = infer_seed(cfg.seed, &ids);
            Some(self.embedding.infer_doc_vector(&ids, cfg.infer_steps, seed)?)
        } else {
            None
        };
        Ok(ClassifierInput { ids, prefix })
    }

    fn sample_masks(&self, mode: Mode, seed: u64) -> (Vec<(Option<Vec<T>>, Option<Vec<T>>)>, Option<Vec<T>>) {
        let spec = &self.spec;
        if mode == Mode::Infer {
            return (vec![(None, None); spec.depth], None);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let recurrent = (0..spec.depth)
            .map(|_| {
                if spec.recurrent_dropout > 0.0 {
                    let f = sample_mask(spec.hidden_dim, spec.recurrent_dropout, &mut rng);
                    let b = sample_mask(spec.hidden_dim, spec.recurrent_dropout, &mut rng);
                    (Some(f), Some(b))
                } else {
                    (None, None)
                }
            })
            .collect();
        let dense = (spec.dropout > 0.0).then(|| sample_mask(spec.dense_dim, spec.dropout, &mut rng));
        (recurrent, dense)
    }

    /// Class probabilities plus the cache needed by [`Self::backward`].
    /// Train mode draws dropout masks from `seed`; infer mode is deterministic.
    pub fn forward(&self, input: &ClassifierInput<T>, mode: Mode, seed: u64) -> Result<ForwardCache<T>> {
        if input.ids.is_empty() {
            return Err(Error::EmptySequence);
        }
        let ids = &input.ids[..input.ids.len().min(self.spec.max_len)];
        let table = &self.embedding.word_in;
        let mut rows: Vec<&[T]> = Vec::with_capacity(ids.len() + 1);
        if let Some(p) = &input.prefix {
            if p.len() != self.spec.input_dim {
                return Err(Error::dim("document vector prefix", self.spec.input_dim, p.len()));
            }
            rows.push(p);
        }
        rows.extend(ids.iter().map(|&i| table.row(i as usize)));

        let (recurrent, mask1) = self.sample_masks(mode, seed);
        let mut layers = Vec::with_capacity(self.lstm.len());
        let (mut outputs, cache) = self.lstm[0].run(&rows, recurrent[0].clone());
        layers.push(cache);
        for (layer, masks) in self.lstm.iter().zip(&recurrent).skip(1) {
            let refs: Vec<&[T]> = outputs.iter().map(Vec::as_slice).collect();
            let (next, cache) = layer.run(&refs, masks.clone());
            layers.push(cache);
            outputs = next;
        }
        let lstm_out = final_states(&outputs, self.spec.hidden_dim);

        let pre1 = self.dense1.linear(&lstm_out)?;
        let mut hidden: Vec<T> = pre1.iter().map(|&v| v.max(T::zero())).collect();
        if let Some(m) = &mask1 {
            for (h, k) in hidden.iter_mut().zip(m) {
                *h *= *k;
            }
        }
        let probs = softmax(&self.dense2.linear(&hidden)?);
        Ok(ForwardCache {
            mode,
            ids: ids.to_vec(),
            has_prefix: input.prefix.is_some(),
            layers,
            seq_len: rows.len(),
            lstm_out,
            pre1,
            mask1,
            hidden,
            probs,
        })
    }

    pub fn zero_grads(&self) -> ClassifierGrads<T> {
        ClassifierGrads {
            embedding: self
                .spec
                .fine_tune_embedding
                .then(|| self.embedding.word_in.zeros_like()),
            lstm: self.lstm.iter().map(BiLstmLayer::zeros_like).collect(),
            dense1: self.dense1.zeros_like(),
            dense2: self.dense2.zeros_like(),
        }
    }

    /// Exact gradients of `-ln p[true]` for a train-mode cache.
    pub fn backward(&self, cache: &ForwardCache<T>, y_onehot: &[T]) -> Result<ClassifierGrads<T>> {
        super::dense::cross_entropy(&cache.probs, y_onehot)?;
        let class = y_onehot.iter().position(|&y| y == T::one()).ok_or(Error::NotOneHot)?;
        let mut grads = self.zero_grads();
        self.accumulate_backward(cache, class, &mut grads)?;
        Ok(grads)
    }

    pub(crate) fn accumulate_backward(
        &self,
        cache: &ForwardCache<T>,
        class: usize,
        grads: &mut ClassifierGrads<T>,
    ) -> Result<()> {
        if cache.mode != Mode::Train {
            return Err(Error::ModeMismatch);
        }
        if class >= self.spec.classes {
            return Err(Error::LabelOutOfRange {
                label: class,
                classes: self.spec.classes,
            });
        }
        // softmax + cross-entropy: dL/dlogits = p - y
        let mut d_logits = cache.probs.clone();
        d_logits[class] -= T::one();
        let mut d_hidden = self.dense2.backward_linear(&cache.hidden, &d_logits, &mut grads.dense2);
        if let Some(m) = &cache.mask1 {
            for (d, k) in d_hidden.iter_mut().zip(m) {
                *d *= *k;
            }
        }
        for (d, &z) in d_hidden.iter_mut().zip(&cache.pre1) {
            if z <= T::zero() {
                *d = T::zero();
            }
        }
        let d_lstm = self.dense1.backward_linear(&cache.lstm_out, &d_hidden, &mut grads.dense1);

        let n = self.spec.hidden_dim;
        let len = cache.seq_len;
        let mut d_outputs = vec![vec![T::zero(); 2 * n]; len];
        d_outputs[len - 1][..n].copy_from_slice(&d_lstm[..n]);
        d_outputs[0][n..].copy_from_slice(&d_lstm[n..]);
        for l in (0..self.lstm.len()).rev() {
            d_outputs = self.lstm[l].backward(&cache.layers[l], &d_outputs, &mut grads.lstm[l]);
        }

        if let Some(table) = grads.embedding.as_mut() {
            let offset = usize::from(cache.has_prefix);
            for (t, &id) in cache.ids.iter().enumerate() {
                for (g, d) in table.row_mut(id as usize).iter_mut().zip(&d_outputs[t + offset]) {
                    *g += *d;
                }
            }
        }
        Ok(())
    }

    pub fn predict_input(&self, input: &ClassifierInput<T>) -> Result<(usize, Vec<T>)> {
        let probs = self.forward(input, Mode::Infer, 0)?.probs;
        Ok((super::dense::argmax(&probs), probs))
    }

    /// Predicted class index (ties to the lowest index) and probabilities.
    pub fn predict(&self, seq: &TokenSeq) -> Result<(usize, Vec<T>)> {
        self.predict_input(&self.encode(seq)?)
    }

    /// Parameter tensor names in [`Tensors`] order.
    pub fn tensor_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        if self.spec.fine_tune_embedding {
            names.push("embedding.word_in".to_string());
        }
        for l in 0..self.lstm.len() {
            for dir in ["fwd", "bwd"] {
                for t in ["w_i", "w_f", "w_o", "w_c", "b_i", "b_f", "b_o", "b_c"] {
                    names.push(format!("lstm{l}.{dir}.{t}"));
                }
            }
        }
        for d in ["dense1", "dense2"] {
            names.push(format!("{d}.weights"));
            names.push(format!("{d}.bias"));
        }
        names
    }
}

impl<T: Scalar> Tensors<T> for ClassifierModel<T> {
    fn tensors(&self) -> Vec<&[T]> {
        let mut v: Vec<&[T]> = Vec::new();
        if self.spec.fine_tune_embedding {
            v.push(self.embedding.word_in.as_slice());
        }
        for l in &self.lstm {
            v.extend(l.forward.tensors());
            v.extend(l.backward.tensors());
        }
        v.extend(self.dense1.tensors());
        v.extend(self.dense2.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut v: Vec<&mut [T]> = Vec::new();
        if self.spec.fine_tune_embedding {
            v.push(self.embedding.word_in.as_mut_slice());
        }
        for l in &mut self.lstm {
            v.extend(l.forward.tensors_mut());
            v.extend(l.backward.tensors_mut());
        }
        v.extend(self.dense1.tensors_mut());
        v.extend(self.dense2.tensors_mut());
        v
    }
}

impl<T: Scalar> Tensors<T> for ClassifierGrads<T> {
    fn tensors(&self) -> Vec<&[T]> {
        let mut v: Vec<&[T]> = Vec::new();
        if let Some(e) = &self.embedding {
            v.push(e.as_slice());
        }
        for l in &self.lstm {
            v.extend(l.forward.tensors());
            v.extend(l.backward.tensors());
        }
        v.extend(self.dense1.tensors());
        v.extend(self.dense2.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut v: Vec<&mut [T]> = Vec::new();
        if let Some(e) = &mut self.embedding {
            v.push(e.as_mut_slice());
        }
        for l in &mut self.lstm {
            v.extend(l.forward.tensors_mut());
            v.extend(l.backward.tensors_mut());
        }
        v.extend(self.dense1.tensors_mut());
        v.extend(self.dense2.tensors_mut());
        v
    }
}

impl<T: Scalar> Trainable<T> for ClassifierModel<T> {
    type Input = ClassifierInput<T>;
    type Grads = ClassifierGrads<T>;

    fn classes(&self) -> usize {
        self.spec.classes
    }

    fn zero_grads(&self) -> Self::Grads {
        ClassifierModel::zero_grads(self)
    }

    fn accumulate(&self, input: &Self::Input, label: usize, seed: u64, grads: &mut Self::Grads) -> Result<f64> {
        let cache = self.forward(input, Mode::Train, seed)?;
        self.accumulate_backward(&cache, label, grads)?;
        Ok(class_nll(&cache.probs, label).as_f64())
    }

    fn probabilities(&self, input: &Self::Input) -> Result<Vec<T>> {
        Ok(self.forward(input, Mode::Infer, 0)?.probs)
    }
}
