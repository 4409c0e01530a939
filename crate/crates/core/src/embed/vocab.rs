use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::TokenSeq;

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Exponent applied to counts when building the negative-sampling distribution.
pub const NOISE_EXPONENT: f64 = 0.75;

/// Dense token index. `PAD` is 0 and `UNK` is 1; kept tokens follow in
/// descending frequency, ties broken lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabRepr", into = "VocabRepr")]
pub struct Vocab {
    tokens: Vec<String>,
    counts: Vec<u64>,
    min_count: usize,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    min_count: usize,
    tokens: Vec<String>,
    counts: Vec<u64>,
}

impl From<VocabRepr> for Vocab {
    fn from(r: VocabRepr) -> Self {
        Vocab::from_parts(r.tokens, r.counts, r.min_count)
    }
}

impl From<Vocab> for VocabRepr {
    fn from(v: Vocab) -> Self {
        VocabRepr {
            min_count: v.min_count,
            tokens: v.tokens,
            counts: v.counts,
        }
    }
}

impl Vocab {
    fn from_parts(tokens: Vec<String>, counts: Vec<u64>, min_count: usize) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocab {
            tokens,
            counts,
            min_count,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    /// Index of a token; out-of-vocabulary tokens map to `UNK`.
    pub fn lookup(&self, token: &str) -> u32 {
        self.get(token).unwrap_or(UNK)
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        match self.index.get(token) {
            Some(&i) if i != PAD && i != UNK => Some(i),
            _ => None,
        }
    }

    pub fn token(&self, index: u32) -> &str {
        &self.tokens[index as usize]
    }

    pub fn count(&self, index: u32) -> u64 {
        self.counts[index as usize]
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().map(|t| self.lookup(t)).collect()
    }

    /// Sampling weight of every index, `count^0.75`; `PAD` gets zero.
    pub fn noise_weights(&self) -> Vec<f64> {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                if i as u32 == PAD {
                    0.0
                } else {
                    (c as f64).powf(NOISE_EXPONENT)
                }
            })
            .collect()
    }
}

pub fn build_vocab(seqs: &[TokenSeq], min_count: usize) -> Result<Vocab> {
    if seqs.iter().all(|s| s.tokens.is_empty()) {
        return Err(Error::EmptySequence);
    }
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for tok in seqs.iter().flat_map(|s| &s.tokens) {
        *freq.entry(tok.as_str()).or_default() += 1;
    }
    let mut kept: Vec<(&str, u64)> = Vec::new();
    let mut unk = 0u64;
    for (tok, c) in freq {
        if c >= min_count as u64 {
            kept.push((tok, c));
        } else {
            unk += c;
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));

    let mut tokens = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
    let mut counts = vec![0, unk];
    for (t, c) in kept {
        tokens.push(t.to_string());
        counts.push(c);
    }
    Ok(Vocab::from_parts(tokens, counts, min_count))
}
