use rayon::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::dense::{argmax, class_nll};
use super::{Tensors, Trainable};
use crate::error::{Error, Result};
use crate::eval::{confusion_matrix, per_class_prf};
use crate::scalar::Scalar;

/// Per-batch gradients are summed over this many contiguous chunks, then the
/// chunk sums are added in order. The reduction tree does not depend on the
/// thread count, so results are bitwise identical for any `threads`.
const GRAD_CHUNKS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    /// Epochs without validation-loss improvement before stopping; 0 disables.
    pub patience: usize,
    pub seed: u64,
    pub threads: usize,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 256,
            epochs: 30,
            patience: 5,
            seed: 1,
            threads: 1,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("train.batch_size must be >= 1".into()));
        }
        if self.threads == 0 {
            return Err(Error::Config("train.threads must be >= 1".into()));
        }
        self.adam.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_macro_f1: f64,
}

/// splitmix64 finalizer over the combined words.
pub(crate) fn mix_seed(parts: &[u64]) -> u64 {
    let mut h = 0x9e37_79b9_7f4a_7c15u64;
    for &p in parts {
        h ^= p;
        h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h = z ^ (z >> 31);
    }
    h
}

fn check_labels(labels: &[usize], classes: usize) -> Result<()> {
    match labels.iter().find(|&&l| l >= classes) {
        Some(&label) => Err(Error::LabelOutOfRange { label, classes }),
        None => Ok(()),
    }
}

fn add_into<T: Scalar, G: Tensors<T>>(acc: &mut G, other: &G) {
    for (a, b) in acc.tensors_mut().into_iter().zip(other.tensors()) {
        for (x, y) in a.iter_mut().zip(b) {
            *x += *y;
        }
    }
}

/// Mean loss and macro-F1 of `model` on a labeled set, infer mode.
pub fn evaluate<T: Scalar, M: Trainable<T>>(
    model: &M,
    inputs: &[M::Input],
    labels: &[usize],
) -> Result<(f64, f64, Vec<usize>)> {
    let probs: Vec<Vec<T>> = inputs
        .par_iter()
        .map(|x| model.probabilities(x))
        .collect::<Result<_>>()?;
    let loss = probs
        .iter()
        .zip(labels)
        .map(|(p, &l)| class_nll(p, l).as_f64())
        .sum::<f64>()
        / labels.len().max(1) as f64;
    let preds: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
    let cm = confusion_matrix(labels, &preds, model.classes())?;
    Ok((loss, per_class_prf(&cm).macro_avg.f1, preds))
}

/// Mini-batch ADAM on mean cross-entropy with per-epoch seeded shuffling and
/// early stopping on validation loss. Returns the parameters from the epoch
/// with the lowest validation loss.
pub fn fit<T: Scalar, M: Trainable<T>>(
    model: M,
    train: (&[M::Input], &[usize]),
    val: (&[M::Input], &[usize]),
    config: &TrainConfig,
) -> Result<(M, Vec<EpochRecord>)> {
    config.validate()?;
    let (xs, ys) = train;
    let (vx, vy) = val;
    if xs.is_empty() || vx.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if xs.len() != ys.len() {
        return Err(Error::dim("training labels", xs.len(), ys.len()));
    }
    if vx.len() != vy.len() {
        return Err(Error::dim("validation labels", vx.len(), vy.len()));
    }
    check_labels(ys, model.classes())?;
    check_labels(vy, model.classes())?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| fit_inner(model, (xs, ys), (vx, vy), config))
}

fn fit_inner<T: Scalar, M: Trainable<T>>(
    mut model: M,
    (xs, ys): (&[M::Input], &[usize]),
    (vx, vy): (&[M::Input], &[usize]),
    config: &TrainConfig,
) -> Result<(M, Vec<EpochRecord>)> {
    let mut adam = AdamState::<T>::for_tensors(config.adam, &model.tensors());
    let mut history = Vec::new();
    let mut best: Option<(f64, M)> = None;
    let mut stale = 0usize;
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let chunk = batch.len().div_ceil(GRAD_CHUNKS);
            let parts: Vec<(M::Grads, f64)> = batch
                .par_chunks(chunk)
                .map(|part| {
                    let mut g = model.zero_grads();
                    let mut loss = 0.0;
                    for &i in part {
                        let seed = mix_seed(&[config.seed, epoch as u64, i as u64]);
                        loss += model.accumulate(&xs[i], ys[i], seed, &mut g)?;
                    }
                    Ok((g, loss))
                })
                .collect::<Result<_>>()?;
            let mut parts = parts.into_iter();
            let (mut grads, first_loss) = parts.next().expect("non-empty batch");
            loss_sum += first_loss;
            for (g, l) in parts {
                add_into(&mut grads, &g);
                loss_sum += l;
            }
            let scale = T::one() / T::of(batch.len() as f64);
            for t in grads.tensors_mut() {
                for v in t.iter_mut() {
                    *v *= scale;
                }
            }
            let g = grads.tensors();
            adam.step(&mut model.tensors_mut(), &g)?;
        }

        let (val_loss, val_f1, _) = evaluate(&model, vx, vy)?;
        history.push(EpochRecord {
            epoch: epoch + 1,
            train_loss: loss_sum / xs.len() as f64,
            val_loss,
            val_macro_f1: val_f1,
        });

        if best.as_ref().is_none_or(|(b, _)| val_loss < *b) {
            best = Some((val_loss, model.clone()));
            stale = 0;
        } else {
            stale += 1;
            if config.patience > 0 && stale >= config.patience {
                break;
            }
        }
    }
    Ok((best.map(|(_, m)| m).unwrap_or(model), history))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixing_separates_nearby_inputs() {
        assert_ne!(mix_seed(&[1, 0, 0]), mix_seed(&[1, 0, 1]));
        assert_ne!(mix_seed(&[1, 1, 0]), mix_seed(&[1, 0, 1]));
        assert_eq!(mix_seed(&[7, 3]), mix_seed(&[7, 3]));
    }

    #[test]
    fn batch_size_zero_is_rejected() {
        let cfg = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert_eq!(TrainConfig::default().batch_size, 256);
    }
}
