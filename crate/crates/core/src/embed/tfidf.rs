use serde::{Deserialize, Serialize};

use super::vocab::{build_vocab, Vocab};
use crate::error::{Error, Result};
use crate::textprep::TokenSeq;

/// Sparse feature row, indices strictly increasing.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVec {
    pub dim: usize,
    pub entries: Vec<(u32, f64)>,
}

impl SparseVec {
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn dot_dense(&self, w: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * w[i as usize]).sum()
    }

    pub fn get(&self, index: u32) -> f64 {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .map(|p| self.entries[p].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i as usize] = v;
        }
        out
    }
}

/// Raw term counts weighted by smoothed idf `ln((1+N)/(1+df)) + 1`, rows L2-normalized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    pub vocab: Vocab,
    pub idf: Vec<f64>,
    pub n_docs: usize,
}

#[derive(Clone, Debug, Default)]
pub struct TfidfVectorizer {
    model: Option<TfidfModel>,
}

impl TfidfVectorizer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fit(&mut self, seqs: &[TokenSeq]) -> Result<&TfidfModel> {
        Ok(self.model.insert(tfidf_fit(seqs)?))
    }

    pub fn transform(&self, seq: &TokenSeq) -> Result<SparseVec> {
        let model = self.model.as_ref().ok_or(Error::NotFitted)?;
        Ok(tfidf_transform(model, seq))
    }

    pub fn model(&self) -> Option<&TfidfModel> {
        self.model.as_ref()
    }
}

pub fn tfidf_fit(seqs: &[TokenSeq]) -> Result<TfidfModel> {
    if seqs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let vocab = build_vocab(seqs, 1)?;
    let mut df = vec![0usize; vocab.len()];
    let mut seen = vec![usize::MAX; vocab.len()];
    for (d, s) in seqs.iter().enumerate() {
        for t in &s.tokens {
            let i = vocab.lookup(t) as usize;
            if seen[i] != d {
                seen[i] = d;
                df[i] += 1;
            }
        }
    }
    let n = seqs.len() as f64;
    let idf = df
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            if vocab.get(vocab.token(i as u32)).is_none() {
                0.0
            } else {
                ((1.0 + n) / (1.0 + f as f64)).ln() + 1.0
            }
        })
        .collect();
    Ok(TfidfModel {
        vocab,
        idf,
        n_docs: seqs.len(),
    })
}

/// Out-of-vocabulary tokens are dropped; a row with none left is all zero.
pub fn tfidf_transform(model: &TfidfModel, seq: &TokenSeq) -> SparseVec {
    let mut ids: Vec<u32> = seq.tokens.iter().filter_map(|t| model.vocab.get(t)).collect();
    ids.sort_unstable();
    let mut entries: Vec<(u32, f64)> = Vec::new();
    for id in ids {
        match entries.last_mut() {
            Some((last, c)) if *last == id => *c += 1.0,
            _ => entries.push((id, 1.0)),
        }
    }
    for (i, v) in entries.iter_mut() {
        *v *= model.idf[*i as usize];
    }
    let mut row = SparseVec {
        dim: model.vocab.len(),
        entries,
    };
    let norm = row.norm();
    if norm > 0.0 {
        for (_, v) in row.entries.iter_mut() {
            *v /= norm;
        }
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(tokens: &[&str]) -> TokenSeq {
        TokenSeq {
            doc_id: "d".into(),
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            original_len: tokens.len(),
        }
    }

    #[test]
    fn two_document_hand_computation() {
        let docs = [seq(&["a", "b"]), seq(&["a", "c"])];
        let m = tfidf_fit(&docs).unwrap();
        let a = m.vocab.lookup("a");
        let b = m.vocab.lookup("b");
        assert!((m.idf[a as usize] - 1.0).abs() < 1e-12);
        assert!((m.idf[b as usize] - (1.5f64.ln() + 1.0)).abs() < 1e-12);
        assert!((m.idf[b as usize] - 1.4055).abs() < 1e-4);
        let row = tfidf_transform(&m, &docs[0]);
        assert!((row.get(a) - 0.5797).abs() < 1e-4);
        assert!((row.get(b) - 0.8148).abs() < 1e-4);
        assert_eq!(row.get(m.vocab.lookup("c")), 0.0);
    }

    #[test]
    fn oov_only_document_is_zero_and_single_token_is_unit() {
        let m = tfidf_fit(&[seq(&["z"])]).unwrap();
        assert!(tfidf_transform(&m, &seq(&["q", "r"])).entries.is_empty());
        let row = tfidf_transform(&m, &seq(&["z"]));
        assert_eq!(row.entries, vec![(m.vocab.lookup("z"), 1.0)]);
    }

    #[test]
    fn transform_before_fit_fails() {
        let v = TfidfVectorizer::new();
        assert!(matches!(v.transform(&seq(&["a"])), Err(Error::NotFitted)));
        let mut v = TfidfVectorizer::new();
        v.fit(&[seq(&["a"])]).unwrap();
        assert!(v.transform(&seq(&["a"])).is_ok());
    }

    proptest! {
        #[test]
        fn rows_have_unit_or_zero_norm(
            docs in prop::collection::vec(prop::collection::vec("[a-f]", 1..12), 1..8),
            probe in prop::collection::vec("[a-h]", 0..12),
        ) {
            let seqs: Vec<TokenSeq> = docs.iter().map(|d| TokenSeq {
                doc_id: "x".into(), tokens: d.clone(), original_len: d.len() }).collect();
            let m = tfidf_fit(&seqs).unwrap();
            let probe = TokenSeq { doc_id: "p".into(), original_len: probe.len(), tokens: probe };
            let norm = tfidf_transform(&m, &probe).norm();
            prop_assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-9);
            prop_assert!(m.idf.iter().all(|&w| w >= 0.0));
        }
    }
}
