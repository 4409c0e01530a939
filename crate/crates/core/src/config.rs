//! Run configuration: a TOML file with `[prep]`, `[embed]`, `[train]`,
//! `[svm]` and `[eval]` tables. Every key is optional; unknown keys are
//! rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embed::EmbedTrainConfig;
use crate::error::{Error, Result};
use crate::nn::{AdamConfig, ClassifierSpec, MlpSpec, SvmConfig, TrainConfig};
use crate::textprep::PrepConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub batch_size: usize,
    pub epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Worker threads for per-batch gradients. Results do not depend on it.
    pub threads: usize,
    pub hidden_dim: usize,
    pub dense_dim: usize,
    pub depth: usize,
    pub dropout: f64,
    pub recurrent_dropout: f64,
    /// Feed the inferred document vector as the first timestep.
    pub doc_vector_prefix: bool,
    pub fine_tune_embedding: bool,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let adam = AdamConfig::default();
        let spec = ClassifierSpec::default();
        let train = TrainConfig::default();
        TrainSection {
            batch_size: train.batch_size,
            epochs: train.epochs,
            patience: train.patience,
            seed: train.seed,
            threads: train.threads,
            hidden_dim: spec.hidden_dim,
            dense_dim: spec.dense_dim,
            depth: spec.depth,
            dropout: spec.dropout,
            recurrent_dropout: spec.recurrent_dropout,
            doc_vector_prefix: spec.doc_vector_prefix,
            fine_tune_embedding: spec.fine_tune_embedding,
            learning_rate: adam.learning_rate,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
        }
    }
}

impl TrainSection {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            epochs: self.epochs,
            patience: self.patience,
            seed: self.seed,
            threads: self.threads,
            adam: AdamConfig {
                learning_rate: self.learning_rate,
                beta1: self.beta1,
                beta2: self.beta2,
                epsilon: self.epsilon,
            },
        }
    }

    pub fn classifier_spec(&self, input_dim: usize, max_len: usize) -> ClassifierSpec {
        ClassifierSpec {
            input_dim,
            hidden_dim: self.hidden_dim,
            depth: self.depth,
            dense_dim: self.dense_dim,
            dropout: self.dropout,
            recurrent_dropout: self.recurrent_dropout,
            max_len,
            doc_vector_prefix: self.doc_vector_prefix,
            fine_tune_embedding: self.fine_tune_embedding,
            init_seed: self.seed,
            ..ClassifierSpec::default()
        }
    }

    pub fn mlp_spec(&self, input_dim: usize) -> MlpSpec {
        MlpSpec {
            input_dim,
            hidden_dim: self.dense_dim,
            dropout: self.dropout,
            init_seed: self.seed,
            ..MlpSpec::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub output_dir: PathBuf,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            output_dir: PathBuf::from("report"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub prep: PrepConfig,
    pub embed: EmbedTrainConfig,
    pub train: TrainSection,
    pub svm: SvmConfig,
    pub eval: EvalSection,
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => Self::from_toml_str(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.prep.validate()?;
        self.embed.validate()?;
        self.train.train_config().validate()?;
        self.train.classifier_spec(self.embed.dim, self.prep.max_tokens).validate()?;
        if !(self.svm.lambda > 0.0 && self.svm.lr > 0.0) {
            return Err(Error::Config("svm.lambda and svm.lr must be positive".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml_str("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.prep.max_tokens, 1500);
        assert_eq!(c.embed.dim, 400);
        assert_eq!(c.train.hidden_dim, 128);
        assert_eq!(c.train.batch_size, 256);
        assert_eq!(c.train.dropout, 0.2);
        assert_eq!(c.train.learning_rate, 0.001);
        assert_eq!((c.train.beta1, c.train.beta2, c.train.epsilon), (0.9, 0.999, 1e-8));
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(matches!(RunConfig::from_toml_str("[train]\nbatchsize = 3\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml_str("[bogus]\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml_str("[train]\nbatch_size = \"x\"\n"), Err(Error::Config(_))));
        assert!(RunConfig::from_toml_str("[train]\nbatch_size = 0\n").is_err());
        assert!(RunConfig::from_toml_str("[train]\ndropout = 1.5\n").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let mut c = RunConfig::default();
        c.train.batch_size = 64;
        c.embed.dim = 32;
        assert_eq!(RunConfig::from_toml_str(&c.to_toml()).unwrap(), c);
    }
}
