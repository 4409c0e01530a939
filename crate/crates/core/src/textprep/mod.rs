//! Text normalization, tokenization, lemmatization and truncation.

mod lemma;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};

pub use lemma::{lemmatize_token, Lemmatizer};

pub const DEFAULT_MAX_TOKENS: usize = 1500;

fn ascii_punctuation() -> String {
    (0u8..128)
        .map(char::from)
        .filter(char::is_ascii_punctuation)
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeepTokens {
    /// Keep the first `max_tokens` tokens.
    #[default]
    Head,
    /// Keep the last `max_tokens` tokens.
    Tail,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepConfig {
    pub max_tokens: usize,
    /// Characters replaced by a space during normalization.
    pub punctuation: String,
    pub lemmatize: bool,
    /// Tokens with fewer characters are dropped.
    pub min_token_len: usize,
    pub keep: KeepTokens,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            max_tokens: DEFAULT_MAX_TOKENS,
            punctuation: ascii_punctuation(),
            lemmatize: true,
            min_token_len: 1,
            keep: KeepTokens::Head,
        }
    }
}

impl PrepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_tokens == 0 {
            return Err(Error::Config("prep.max_tokens must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSeq {
    pub doc_id: String,
    pub tokens: Vec<String>,
    /// Token count before truncation.
    pub original_len: usize,
}

/// Lowercase and replace ASCII punctuation with spaces.
pub fn normalize_text(text: &str) -> String {
    normalize_with(text, &ascii_punctuation())
}

pub fn normalize_with(text: &str, punctuation: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        if punctuation.contains(ch) {
            out.push(' ');
        } else {
            for lower in ch.to_lowercase() {
                if punctuation.contains(lower) {
                    out.push(' ');
                } else {
                    out.push(lower);
                }
            }
        }
    }
    out
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

/// Reusable pipeline holding the configuration and lemmatizer.
#[derive(Clone, Debug)]
pub struct Preprocessor {
    config: PrepConfig,
    lemmatizer: Lemmatizer,
}

impl Preprocessor {
    pub fn new(config: PrepConfig) -> Result<Self> {
        Self::with_lemmatizer(config, Lemmatizer::shipped().clone())
    }

    pub fn with_lemmatizer(config: PrepConfig, lemmatizer: Lemmatizer) -> Result<Self> {
        config.validate()?;
        Ok(Preprocessor { config, lemmatizer })
    }

    pub fn config(&self) -> &PrepConfig {
        &self.config
    }

    pub fn process(&self, doc: &Document) -> Result<TokenSeq> {
        let normalized = normalize_with(&doc.text, &self.config.punctuation);
        let mut tokens: Vec<String> = normalized
            .split_whitespace()
            .map(|t| {
                if self.config.lemmatize {
                    self.lemmatizer.lemmatize(t)
                } else {
                    t.to_string()
                }
            })
            .filter(|t| t.chars().count() >= self.config.min_token_len.max(1))
            .collect();
        if tokens.is_empty() {
            return Err(Error::EmptyDocument(doc.id.clone()));
        }
        let original_len = tokens.len();
        if original_len > self.config.max_tokens {
            match self.config.keep {
                KeepTokens::Head => tokens.truncate(self.config.max_tokens),
                KeepTokens::Tail => {
                    tokens.drain(..original_len - self.config.max_tokens);
                }
            }
        }
        Ok(TokenSeq {
            doc_id: doc.id.clone(),
            tokens,
            original_len,
        })
    }

    pub fn process_all(&self, docs: &[Document]) -> Result<Vec<TokenSeq>> {
        docs.iter().map(|d| self.process(d)).collect()
    }
}

pub fn preprocess_document(doc: &Document, config: &PrepConfig) -> Result<TokenSeq> {
    Preprocessor::new(config.clone())?.process(doc)
}
