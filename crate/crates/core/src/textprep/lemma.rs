use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const DEFAULT_RULES: &str = include_str!("../../data/lemma_rules.tsv");
const DEFAULT_IRREGULAR: &str = include_str!("../../data/irregular.tsv");
const DEFAULT_MIN_STEM: usize = 2;
const MAX_PASSES: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
struct SuffixRule {
    suffix: String,
    replacement: String,
    min_stem: usize,
}

/// Rule-table lemmatizer: irregular lookup, then ordered suffix rewriting,
/// repeated until nothing changes. The result is therefore always a fixed
/// point of the same lemmatizer.
#[derive(Clone, Debug)]
pub struct Lemmatizer {
    rules: Vec<SuffixRule>,
    irregular: HashMap<String, String>,
}

impl Lemmatizer {
    pub fn from_tables(rules: &str, irregular: &str) -> Result<Self> {
        let mut parsed = Vec::new();
        for (i, line) in data_lines(rules) {
            let mut cols = line.split('\t');
            let suffix = cols.next().unwrap_or_default();
            let replacement = cols.next().ok_or_else(|| Error::MalformedLine {
                line: i,
                message: "rule needs suffix<TAB>replacement".into(),
            })?;
            let min_stem = match cols.next() {
                Some(s) => s.trim().parse().map_err(|_| Error::MalformedLine {
                    line: i,
                    message: format!("bad min_stem `{s}`"),
                })?,
                None => DEFAULT_MIN_STEM,
            };
            if suffix.is_empty() {
                return Err(Error::MalformedLine {
                    line: i,
                    message: "empty suffix".into(),
                });
            }
            parsed.push(SuffixRule {
                suffix: suffix.to_string(),
                replacement: replacement.to_string(),
                min_stem,
            });
        }
        let mut irr = HashMap::new();
        for (i, line) in data_lines(irregular) {
            let (word, lemma) = line.split_once('\t').ok_or_else(|| Error::MalformedLine {
                line: i,
                message: "irregular entry needs word<TAB>lemma".into(),
            })?;
            irr.insert(word.to_string(), lemma.trim_end().to_string());
        }
        Ok(Lemmatizer {
            rules: parsed,
            irregular: irr,
        })
    }

    pub fn from_files(rules: &Path, irregular: &Path) -> Result<Self> {
        let r = std::fs::read_to_string(rules).map_err(|e| Error::io(rules, e))?;
        let i = std::fs::read_to_string(irregular).map_err(|e| Error::io(irregular, e))?;
        Self::from_tables(&r, &i)
    }

    /// The tables shipped in `data/`.
    pub fn shipped() -> &'static Lemmatizer {
        static SHIPPED: OnceLock<Lemmatizer> = OnceLock::new();
        SHIPPED.get_or_init(|| {
            Lemmatizer::from_tables(DEFAULT_RULES, DEFAULT_IRREGULAR).expect("shipped tables parse")
        })
    }

    pub fn lemmatize(&self, token: &str) -> String {
        let mut word = token.to_string();
        for _ in 0..MAX_PASSES {
            if let Some(lemma) = self.irregular.get(&word) {
                if *lemma == word {
                    break;
                }
                word = lemma.clone();
                continue;
            }
            match self.rewrite(&word) {
                Some(next) if next != word => word = next,
                _ => break,
            }
        }
        word
    }

    fn rewrite(&self, word: &str) -> Option<String> {
        let rule = self.rules.iter().find(|r| {
            word.strip_suffix(r.suffix.as_str())
                .is_some_and(|stem| stem.chars().count() >= r.min_stem)
        })?;
        let mut stem = word[..word.len() - rule.suffix.len()].to_string();
        let vowel_initial = rule.suffix.starts_with(['a', 'e', 'i', 'o', 'u']);
        if rule.replacement.is_empty() && vowel_initial {
            undouble(&mut stem);
        }
        stem.push_str(&rule.replacement);
        Some(stem)
    }
}

fn undouble(stem: &mut String) {
    let mut tail = stem.chars().rev();
    if let (Some(a), Some(b)) = (tail.next(), tail.next()) {
        let consonant = a.is_ascii_alphabetic() && !"aeiou".contains(a);
        if a == b && consonant && !"lszf".contains(a) {
            stem.pop();
        }
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

/// Lemmatize with the shipped tables.
pub fn lemmatize_token(token: &str) -> String {
    Lemmatizer::shipped().lemmatize(token)
}
