use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Softmax,
    Identity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer<T> {
    /// `out x in`
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Scalar> DenseLayer<T> {
    pub fn glorot<R: Rng>(input: usize, output: usize, activation: Activation, rng: &mut R) -> Self {
        DenseLayer {
            weights: Matrix::glorot(output, input, rng),
            bias: vec![T::zero(); output],
            activation,
        }
    }

    pub fn zeros_like(&self) -> Self {
        DenseLayer {
            weights: self.weights.zeros_like(),
            bias: vec![T::zero(); self.bias.len()],
            activation: self.activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    /// Affine part only.
    pub fn linear(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.input_dim() {
            return Err(Error::dim("dense input", self.input_dim(), x.len()));
        }
        let mut out = self.bias.clone();
        self.weights.matvec_add(x, &mut out);
        Ok(out)
    }

    /// Backward through the affine part: accumulates into `grad`, returns dL/dx.
    pub(crate) fn backward_linear(&self, x: &[T], d_out: &[T], grad: &mut DenseLayer<T>) -> Vec<T> {
        grad.weights.add_outer(d_out, x);
        for (b, d) in grad.bias.iter_mut().zip(d_out) {
            *b += *d;
        }
        let mut dx = vec![T::zero(); x.len()];
        self.weights.tmatvec_add(d_out, &mut dx);
        dx
    }

    pub(crate) fn tensors(&self) -> [&[T]; 2] {
        [self.weights.as_slice(), &self.bias]
    }

    pub(crate) fn tensors_mut(&mut self) -> [&mut [T]; 2] {
        [self.weights.as_mut_slice(), &mut self.bias]
    }
}

pub fn dense_forward<T: Scalar>(x: &[T], layer: &DenseLayer<T>) -> Result<Vec<T>> {
    let z = layer.linear(x)?;
    Ok(match layer.activation {
        Activation::Relu => relu(&z),
        Activation::Softmax => softmax(&z),
        Activation::Identity => z,
    })
}

pub fn relu<T: Scalar>(x: &[T]) -> Vec<T> {
    x.iter().map(|&v| v.max(T::zero())).collect()
}

/// Max-shifted softmax.
pub fn softmax<T: Scalar>(z: &[T]) -> Vec<T> {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-ln p[true]` for a one-hot target.
pub fn cross_entropy<T: Scalar>(p: &[T], y_onehot: &[T]) -> Result<T> {
    if p.len() != y_onehot.len() {
        return Err(Error::dim("cross-entropy target", p.len(), y_onehot.len()));
    }
    let mut hot = None;
    for (i, &y) in y_onehot.iter().enumerate() {
        if y == T::one() && hot.is_none() {
            hot = Some(i);
        } else if y != T::zero() {
            return Err(Error::NotOneHot);
        }
    }
    let i = hot.ok_or(Error::NotOneHot)?;
    Ok(class_nll(p, i))
}

#[inline]
pub(crate) fn class_nll<T: Scalar>(p: &[T], class: usize) -> T {
    -p[class].max(T::min_positive_value()).ln()
}

pub fn one_hot<T: Scalar>(class: usize, classes: usize) -> Vec<T> {
    let mut v = vec![T::zero(); classes];
    v[class] = T::one();
    v
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}
