use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dense::{class_nll, relu, softmax, Activation, DenseLayer};
use super::dropout::{check_rate, sample_mask, Mode};
use super::{Tensors, Trainable};
use crate::corpus::NUM_CLASSES;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense(ReLU) -> dropout -> dense(softmax) over a fixed-length feature vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub classes: usize,
    pub dropout: f64,
    pub init_seed: u64,
}

impl Default for MlpSpec {
    fn default() -> Self {
        MlpSpec {
            input_dim: 400,
            hidden_dim: 400,
            classes: NUM_CLASSES,
            dropout: 0.2,
            init_seed: 1,
        }
    }
}

impl MlpSpec {
    pub fn validate(&self) -> Result<()> {
        check_rate(self.dropout)?;
        if self.input_dim == 0 || self.hidden_dim == 0 || self.classes < 2 {
            return Err(Error::Config("mlp needs input_dim, hidden_dim >= 1 and classes >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel<T> {
    pub spec: MlpSpec,
    pub dense1: DenseLayer<T>,
    pub dense2: DenseLayer<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads<T> {
    pub dense1: DenseLayer<T>,
    pub dense2: DenseLayer<T>,
}

impl<T: Scalar> MlpModel<T> {
    pub fn new(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.init_seed);
        let dense1 = DenseLayer::glorot(spec.input_dim, spec.hidden_dim, Activation::Relu, &mut rng);
        let dense2 = DenseLayer::glorot(spec.hidden_dim, spec.classes, Activation::Softmax, &mut rng);
        Ok(MlpModel { spec, dense1, dense2 })
    }

    fn forward(&self, x: &[T], mode: Mode, seed: u64) -> Result<(Vec<T>, Option<Vec<T>>, Vec<T>, Vec<T>)> {
        let pre = self.dense1.linear(x)?;
        let mut hidden = relu(&pre);
        let mask = if mode == Mode::Train && self.spec.dropout > 0.0 {
            let m: Vec<T> = sample_mask(hidden.len(), self.spec.dropout, &mut ChaCha8Rng::seed_from_u64(seed));
            for (h, k) in hidden.iter_mut().zip(&m) {
                *h *= *k;
            }
            Some(m)
        } else {
            None
        };
        let probs = softmax(&self.dense2.linear(&hidden)?);
        Ok((pre, mask, hidden, probs))
    }

    pub fn predict(&self, x: &[T]) -> Result<(usize, Vec<T>)> {
        let p = self.probabilities(&x.to_vec())?;
        Ok((super::dense::argmax(&p), p))
    }
}

impl<T: Scalar> Tensors<T> for MlpModel<T> {
    fn tensors(&self) -> Vec<&[T]> {
        let mut v = self.dense1.tensors().to_vec();
        v.extend(self.dense2.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut v: Vec<&mut [T]> = self.dense1.tensors_mut().into_iter().collect();
        v.extend(self.dense2.tensors_mut());
        v
    }
}

impl<T: Scalar> Tensors<T> for MlpGrads<T> {
    fn tensors(&self) -> Vec<&[T]> {
        let mut v = self.dense1.tensors().to_vec();
        v.extend(self.dense2.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut v: Vec<&mut [T]> = self.dense1.tensors_mut().into_iter().collect();
        v.extend(self.dense2.tensors_mut());
        v
    }
}

impl<T: Scalar> Trainable<T> for MlpModel<T> {
    type Input = Vec<T>;
    type Grads = MlpGrads<T>;

    fn classes(&self) -> usize {
        self.spec.classes
    }

    fn zero_grads(&self) -> MlpGrads<T> {
        MlpGrads {
            dense1: self.dense1.zeros_like(),
            dense2: self.dense2.zeros_like(),
        }
    }

    fn accumulate(&self, x: &Vec<T>, label: usize, seed: u64, grads: &mut MlpGrads<T>) -> Result<f64> {
        if label >= self.spec.classes {
            return Err(Error::LabelOutOfRange { label, classes: self.spec.classes });
        }
        let (pre, mask, hidden, probs) = self.forward(x, Mode::Train, seed)?;
        let mut d_logits = probs.clone();
        d_logits[label] -= T::one();
        let mut d_hidden = self.dense2.backward_linear(&hidden, &d_logits, &mut grads.dense2);
        if let Some(m) = &mask {
            for (d, k) in d_hidden.iter_mut().zip(m) {
                *d *= *k;
            }
        }
        for (d, z) in d_hidden.iter_mut().zip(&pre) {
            if *z <= T::zero() {
                *d = T::zero();
            }
        }
        self.dense1.backward_linear(x, &d_hidden, &mut grads.dense1);
        Ok(class_nll(&probs, label).as_f64())
    }

    fn probabilities(&self, x: &Vec<T>) -> Result<Vec<T>> {
        Ok(self.forward(x, Mode::Infer, 0)?.3)
    }
}
