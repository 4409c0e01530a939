use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config("adam: need lr > 0, betas in [0, 1), epsilon > 0".into()))
        }
    }
}

/// First/second moment estimates for every parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub t: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig, shapes: &[usize]) -> Self {
        AdamState {
            config,
            t: 0,
            m: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
            v: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }

    pub fn for_tensors(config: AdamConfig, tensors: &[&[T]]) -> Self {
        let shapes: Vec<usize> = tensors.iter().map(|t| t.len()).collect();
        Self::new(config, &shapes)
    }

    fn corrections(&self) -> (T, T) {
        let t = self.t as i32;
        (
            T::of(1.0 - self.config.beta1.powi(t)),
            T::of(1.0 - self.config.beta2.powi(t)),
        )
    }

    /// Bias-corrected moments `(m̂, v̂)` of one element after the latest step.
    pub fn corrected(&self, tensor: usize, index: usize) -> (T, T) {
        let (c1, c2) = self.corrections();
        (self.m[tensor][index] / c1, self.v[tensor][index] / c2)
    }

    pub fn step(&mut self, params: &mut [&mut [T]], grads: &[&[T]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::dim("adam tensor count", self.m.len(), params.len().min(grads.len())));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.m) {
            if p.len() != m.len() || g.len() != m.len() {
                return Err(Error::dim("adam tensor", m.len(), p.len().min(g.len())));
            }
        }
        self.t += 1;
        let (c1, c2) = self.corrections();
        let b1 = T::of(self.config.beta1);
        let b2 = T::of(self.config.beta2);
        let (one_b1, one_b2) = (T::of(1.0 - self.config.beta1), T::of(1.0 - self.config.beta2));
        let lr = T::of(self.config.learning_rate);
        let eps = T::of(self.config.epsilon);
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for j in 0..p.len() {
                let gj = g[j];
                m[j] = b1 * m[j] + one_b1 * gj;
                v[j] = b2 * v[j] + one_b2 * (gj * gj);
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                p[j] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Convenience wrapper matching the functional form `adam_step(params, grads, state)`.
pub fn adam_step<T: Scalar>(params: &mut [&mut [T]], grads: &[&[T]], state: &mut AdamState<T>) -> Result<()> {
    state.step(params, grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn standard_hyperparameters_are_the_defaults() {
        let c = AdamConfig::default();
        assert_eq!((c.learning_rate, c.beta1, c.beta2, c.epsilon), (0.001, 0.9, 0.999, 1e-8));
    }

    #[test]
    fn first_step_moves_each_element_by_about_alpha() {
        let mut p = vec![0.0f64, 1.0, -2.0, 5.0];
        let g = vec![0.3, -4.0, 1e-3, -1e-2];
        let mut st = AdamState::new(AdamConfig::default(), &[4]);
        let before = p.clone();
        st.step(&mut [&mut p], &[&g]).unwrap();
        for j in 0..4 {
            let delta = (p[j] - before[j]).abs();
            let expect = 0.001 * g[j].abs() / (g[j].abs() + 1e-8);
            assert!((delta - expect).abs() < 1e-15);
            assert!((0.000999..=0.001).contains(&delta));
            assert_eq!((p[j] - before[j]).signum(), -g[j].signum());
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = vec![0.25f32, -3.0];
        let mut st = AdamState::new(AdamConfig::default(), &[2]);
        st.step(&mut [&mut p], &[&[0.0, 0.0]]).unwrap();
        assert_eq!(p, vec![0.25, -3.0]);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = vec![0.0f64; 3];
        let mut st = AdamState::new(AdamConfig::default(), &[3]);
        assert!(st.step(&mut [&mut p], &[&[1.0, 2.0]]).is_err());
        assert!(st.step(&mut [], &[]).is_err());
        assert_eq!(st.t, 0);
    }

    #[test]
    fn matches_hand_rolled_two_steps() {
        let mut p = vec![1.0f64];
        let mut st = AdamState::new(AdamConfig::default(), &[1]);
        st.step(&mut [&mut p], &[&[0.5]]).unwrap();
        st.step(&mut [&mut p], &[&[-0.25]]).unwrap();
        let (b1, b2, lr, eps) = (0.9f64, 0.999f64, 0.001, 1e-8);
        let mut theta = 1.0;
        let (mut m, mut v) = (0.0, 0.0);
        for (t, g) in [(1, 0.5f64), (2, -0.25)] {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            theta -= lr * mh / (vh.sqrt() + eps);
        }
        assert!((p[0] - theta).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn bias_correction_recovers_first_gradient(g in -100.0f64..100.0) {
            let mut p = vec![0.0f64];
            let mut st = AdamState::new(AdamConfig::default(), &[1]);
            st.step(&mut [&mut p], &[&[g]]).unwrap();
            let (m_hat, v_hat) = st.corrected(0, 0);
            // Exact up to the rounding of `(1 - beta) * g / (1 - beta)`: one ulp.
            prop_assert!((m_hat - g).abs() <= f64::EPSILON * g.abs());
            prop_assert!((v_hat - g * g).abs() <= f64::EPSILON * g * g);
        }
    }
}
