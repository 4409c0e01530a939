use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::classifier::{ClassifierInput, ClassifierModel, ClassifierSpec};
use super::dense::class_nll;
use super::dropout::Mode;
use super::Tensors;
use crate::embed::{build_vocab, EmbedTrainConfig, EmbeddingModel};
use crate::error::Result;
use crate::textprep::TokenSeq;

#[derive(Clone, Debug, Serialize)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub worst_tensor: String,
    pub worst_index: usize,
}

/// Small f64 classifier (d=4, n=3, 5 tokens, 8 classes) with a fine-tuned
/// embedding and a document-vector prefix so every gradient path is live.
pub fn tiny_gradcheck_setup(seed: u64) -> Result<(ClassifierModel<f64>, ClassifierInput<f64>, usize)> {
    let words = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta"];
    let seq = TokenSeq {
        doc_id: "g".into(),
        tokens: words.iter().map(|w| w.to_string()).collect(),
        original_len: words.len(),
    };
    let vocab = build_vocab(&[seq], 1)?;
    let cfg = EmbedTrainConfig { dim: 4, seed, ..EmbedTrainConfig::default() };
    let mut embedding = EmbeddingModel::<f64>::initialize(vocab, Vec::new(), cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(17));
    for v in embedding.word_in.as_mut_slice() {
        *v = rng.gen_range(-1.0..1.0);
    }
    let spec = ClassifierSpec {
        input_dim: 4,
        hidden_dim: 3,
        dense_dim: 6,
        classes: 8,
        dropout: 0.2,
        recurrent_dropout: 0.2,
        fine_tune_embedding: true,
        init_seed: seed,
        ..ClassifierSpec::default()
    };
    let mut model = ClassifierModel::new(spec, &embedding)?;
    // Nonzero biases so no gate sits at a symmetric point.
    for t in model.tensors_mut() {
        for v in t.iter_mut() {
            if *v == 0.0 {
                *v = rng.gen_range(-0.3..0.3);
            }
        }
    }
    let ids = (0..5).map(|_| rng.gen_range(2..8u32)).collect();
    let prefix = Some((0..4).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let label = rng.gen_range(0..8);
    Ok((model, ClassifierInput { ids, prefix }, label))
}

/// Central differences against the analytic gradient for every scalar
/// parameter. Relative error is `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn finite_difference_check(
    model: &ClassifierModel<f64>,
    input: &ClassifierInput<f64>,
    label: usize,
    dropout_seed: u64,
    h: f64,
) -> Result<GradCheckReport> {
    let cache = model.forward(input, Mode::Train, dropout_seed)?;
    let mut grads = model.zero_grads();
    model.accumulate_backward(&cache, label, &mut grads)?;
    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.to_vec()).collect();
    let names = model.tensor_names();

    let loss = |m: &ClassifierModel<f64>| -> Result<f64> {
        Ok(class_nll(&m.forward(input, Mode::Train, dropout_seed)?.probs, label))
    };
    let mut probe = model.clone();
    let mut report = GradCheckReport {
        checked: 0,
        max_rel_error: 0.0,
        worst_tensor: String::new(),
        worst_index: 0,
    };
    for (ti, grad) in analytic.iter().enumerate() {
        for (i, &a) in grad.iter().enumerate() {
            let orig = probe.tensors()[ti][i];
            probe.tensors_mut()[ti][i] = orig + h;
            let up = loss(&probe)?;
            probe.tensors_mut()[ti][i] = orig - h;
            let down = loss(&probe)?;
            probe.tensors_mut()[ti][i] = orig;
            let num = (up - down) / (2.0 * h);
            let rel = (a - num).abs() / a.abs().max(num.abs()).max(1e-8);
            report.checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst_tensor = names[ti].clone();
                report.worst_index = i;
            }
        }
    }
    Ok(report)
}
