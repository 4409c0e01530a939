//! Neural components: dense layers, dropout, the peephole Bi-LSTM, ADAM, the
//! sequence classifier, baselines and the training loop.

pub mod adam;
pub mod classifier;
pub mod dense;
pub mod dropout;
pub mod gradcheck;
pub mod lstm;
pub mod mlp;
pub mod svm;
pub mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use classifier::{ClassifierGrads, ClassifierInput, ClassifierModel, ClassifierSpec, ForwardCache};
pub use dense::{argmax, cross_entropy, dense_forward, one_hot, relu, softmax, Activation, DenseLayer};
pub use dropout::{apply_dropout, make_recurrent_dropout_mask, Mode};
pub use gradcheck::{finite_difference_check, tiny_gradcheck_setup, GradCheckReport};
pub use lstm::{bilstm_forward, lstm_cell_forward, BiLstmLayer, LstmParams};
pub use mlp::{MlpGrads, MlpModel, MlpSpec};
pub use svm::{hinge_subgradient, train_linear_svm, LinearSvm, SvmConfig};
pub use train::{evaluate, fit, EpochRecord, TrainConfig};

use crate::error::Result;
use crate::scalar::Scalar;

/// Flat views of every parameter tensor, in a fixed order.
pub trait Tensors<T> {
    fn tensors(&self) -> Vec<&[T]>;
    fn tensors_mut(&mut self) -> Vec<&mut [T]>;
}

/// A model the generic mini-batch trainer can fit.
pub trait Trainable<T: Scalar>: Tensors<T> + Clone + Send + Sync {
    type Input: Sync;
    type Grads: Tensors<T> + Send;

    fn classes(&self) -> usize;
    fn zero_grads(&self) -> Self::Grads;
    /// Adds the per-example cross-entropy gradient into `grads` and returns the
    /// loss. `seed` drives any dropout masks.
    fn accumulate(&self, input: &Self::Input, label: usize, seed: u64, grads: &mut Self::Grads) -> Result<f64>;
    fn probabilities(&self, input: &Self::Input) -> Result<Vec<T>>;
}
