use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Infer,
}

pub(crate) fn check_rate(rate: f64) -> Result<()> {
    if (0.0..1.0).contains(&rate) {
        Ok(())
    } else {
        Err(Error::InvalidRate(rate))
    }
}

/// Inverted-dropout mask: 0 with probability `rate`, else `1/(1-rate)`.
pub(crate) fn sample_mask<T: Scalar, R: Rng>(n: usize, rate: f64, rng: &mut R) -> Vec<T> {
    let keep = T::of(1.0 / (1.0 - rate));
    (0..n)
        .map(|_| if rng.gen::<f64>() < rate { T::zero() } else { keep })
        .collect()
}

pub fn apply_dropout<T: Scalar>(x: &[T], rate: f64, seed: u64, mode: Mode) -> Result<Vec<T>> {
    check_rate(rate)?;
    if mode == Mode::Infer || rate == 0.0 {
        return Ok(x.to_vec());
    }
    let mask: Vec<T> = sample_mask(x.len(), rate, &mut ChaCha8Rng::seed_from_u64(seed));
    Ok(x.iter().zip(&mask).map(|(&a, &m)| a * m).collect())
}

/// Per-sequence mask applied to the previous hidden state at every timestep.
pub fn make_recurrent_dropout_mask<T: Scalar>(n: usize, rate: f64, seed: u64) -> Result<Vec<T>> {
    check_rate(rate)?;
    Ok(sample_mask(n, rate, &mut ChaCha8Rng::seed_from_u64(seed)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_cases() {
        let x = vec![1.0f64, -2.0, 3.0];
        assert_eq!(apply_dropout(&x, 0.0, 1, Mode::Train).unwrap(), x);
        assert_eq!(apply_dropout(&x, 0.2, 1, Mode::Infer).unwrap(), x);
    }

    #[test]
    fn rate_bounds() {
        assert!(matches!(apply_dropout(&[1.0f64], 1.0, 0, Mode::Train), Err(Error::InvalidRate(_))));
        assert!(matches!(apply_dropout(&[1.0f64], -0.1, 0, Mode::Infer), Err(Error::InvalidRate(_))));
        assert!(make_recurrent_dropout_mask::<f32>(4, 1.5, 0).is_err());
    }

    #[test]
    fn empirical_zero_fraction_matches_rate() {
        let x = vec![1.0f64; 100_000];
        let y = apply_dropout(&x, 0.2, 1234, Mode::Train).unwrap();
        let zeros = y.iter().filter(|&&v| v == 0.0).count() as f64 / x.len() as f64;
        assert!((zeros - 0.2).abs() < 0.01, "{zeros}");
        assert!(y.iter().all(|&v| v == 0.0 || (v - 1.25).abs() < 1e-12));

        let m: Vec<f64> = make_recurrent_dropout_mask(100_000, 0.2, 5).unwrap();
        let zeros = m.iter().filter(|&&v| v == 0.0).count() as f64 / m.len() as f64;
        assert!((zeros - 0.2).abs() < 0.01);
    }

    #[test]
    fn masks_are_seed_deterministic() {
        let a: Vec<f32> = make_recurrent_dropout_mask(64, 0.2, 9).unwrap();
        let b: Vec<f32> = make_recurrent_dropout_mask(64, 0.2, 9).unwrap();
        assert_eq!(a, b);
    }
}
