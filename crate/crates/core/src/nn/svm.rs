use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::SparseVec;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    /// L2 regularization strength.
    pub lambda: f64,
    pub epochs: usize,
    /// Initial step; decays as `lr / (1 + lr * lambda * t)`.
    pub lr: f64,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            lambda: 1e-4,
            epochs: 20,
            lr: 0.5,
            seed: 1,
        }
    }
}

/// One-vs-rest linear SVM; prediction is the class with the largest margin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub dim: usize,
    /// One weight row per class.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl LinearSvm {
    pub fn classes(&self) -> usize {
        self.weights.len()
    }

    pub fn decision(&self, x: &SparseVec) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| x.entries.iter().filter(|e| (e.0 as usize) < w.len()).map(|&(i, v)| v * w[i as usize]).sum::<f64>() + b)
            .collect()
    }

    pub fn predict(&self, x: &SparseVec) -> usize {
        let d = self.decision(x);
        let mut best = 0;
        for (k, v) in d.iter().enumerate() {
            if *v > d[best] {
                best = k;
            }
        }
        best
    }
}

/// Subgradient of `lambda/2 |w|^2 + max(0, 1 - y (w.x + b))` for `y` in {-1, +1}.
pub fn hinge_subgradient(w: &[f64], b: f64, x: &[f64], y: f64, lambda: f64) -> (Vec<f64>, f64) {
    let margin = y * (w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>() + b);
    let active = margin < 1.0;
    let gw = w
        .iter()
        .zip(x)
        .map(|(wi, xi)| lambda * wi - if active { y * xi } else { 0.0 })
        .collect();
    (gw, if active { -y } else { 0.0 })
}

pub fn train_linear_svm(xs: &[SparseVec], labels: &[usize], classes: usize, config: &SvmConfig) -> Result<LinearSvm> {
    if xs.is_empty() {
        return Err(Error::EmptyFeatures);
    }
    if xs.len() != labels.len() {
        return Err(Error::dim("svm labels", xs.len(), labels.len()));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::LabelOutOfRange { label, classes });
    }
    if !(config.lambda > 0.0 && config.lr > 0.0) {
        return Err(Error::Config("svm lambda and lr must be positive".into()));
    }
    let dim = xs.iter().map(|x| x.dim).max().unwrap_or(0);
    let mut weights = Vec::with_capacity(classes);
    let mut bias = Vec::with_capacity(classes);
    for class in 0..classes {
        let (w, b) = train_binary(xs, labels, class, dim, config);
        weights.push(w);
        bias.push(b);
    }
    Ok(LinearSvm { dim, weights, bias })
}

/// SGD with `w = scale * v` so the L2 shrink is O(1) per step.
fn train_binary(xs: &[SparseVec], labels: &[usize], class: usize, dim: usize, config: &SvmConfig) -> (Vec<f64>, f64) {
    let mut v = vec![0.0; dim];
    let mut scale = 1.0f64;
    let mut b = 0.0;
    let mut t = 0u64;
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (class as u64).wrapping_mul(0x9e37_79b9));
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let eta = config.lr / (1.0 + config.lr * config.lambda * t as f64);
            t += 1;
            let x = &xs[i];
            let y = if labels[i] == class { 1.0 } else { -1.0 };
            let margin = y * (scale * x.dot_dense(&v) + b);
            let shrink = 1.0 - eta * config.lambda;
            if shrink <= 1e-12 {
                v.iter_mut().for_each(|a| *a = 0.0);
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                let step = eta * y / scale;
                for &(j, xv) in &x.entries {
                    v[j as usize] += step * xv;
                }
                b += eta * y;
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|a| *a *= scale);
                scale = 1.0;
            }
        }
    }
    v.iter_mut().for_each(|a| *a *= scale);
    (v, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(dim: usize, e: &[(u32, f64)]) -> SparseVec {
        SparseVec { dim, entries: e.to_vec() }
    }

    #[test]
    fn separable_toy_set_is_fit() {
        let xs = vec![
            sv(3, &[(0, 1.0)]),
            sv(3, &[(0, 0.9), (2, 0.1)]),
            sv(3, &[(1, 1.0)]),
            sv(3, &[(1, 0.8), (2, 0.2)]),
            sv(3, &[(2, 1.0)]),
            sv(3, &[(2, 0.9), (0, 0.1)]),
        ];
        let ys = vec![0, 0, 1, 1, 2, 2];
        let svm = train_linear_svm(&xs, &ys, 3, &SvmConfig::default()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(svm.predict(x), *y);
        }
    }

    #[test]
    fn huge_lambda_shrinks_weights() {
        let xs = vec![sv(2, &[(0, 1.0)]), sv(2, &[(1, 1.0)])];
        let cfg = SvmConfig { lambda: 1e6, ..SvmConfig::default() };
        let svm = train_linear_svm(&xs, &[0, 1], 2, &cfg).unwrap();
        for w in &svm.weights {
            assert!(w.iter().all(|v| v.abs() < 1e-3), "{w:?}");
        }
    }

    #[test]
    fn satisfied_margin_leaves_only_regularizer() {
        let w = [2.0, -1.0];
        let (gw, gb) = hinge_subgradient(&w, 0.0, &[1.0, 0.0], 1.0, 0.1);
        assert_eq!(gw, vec![0.2, -0.1]);
        assert_eq!(gb, 0.0);
        let (gw, gb) = hinge_subgradient(&w, 0.0, &[0.1, 0.0], 1.0, 0.1);
        assert!((gw[0] - 0.1).abs() < 1e-12 && gb == -1.0);
    }
}
