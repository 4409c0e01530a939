use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, Document, LabelSet, NUM_CLASSES};
use crate::error::{Error, Result};

const KEYWORDS: [&[&str]; NUM_CLASSES] = [
    &[
        "school", "teacher", "university", "student", "education", "research", "science",
        "technology", "curriculum", "scholarship", "polytechnic", "college", "literacy",
        "laboratory", "innovation", "academic", "lecturer", "examination", "library", "digital",
        "computer", "internet", "pupil", "tuition",
    ],
    &[
        "energy", "petroleum", "oil", "electricity", "power", "solar", "mineral", "pollution",
        "environment", "forest", "water", "erosion", "flood", "climate", "emission", "refinery",
        "pipeline", "crude", "conservation", "wildlife", "coal", "dam", "desert", "reserve",
    ],
    &[
        "government", "ministry", "treaty", "embassy", "diplomat", "foreign", "commission",
        "senate", "election", "census", "constitution", "agency", "audit", "consulate",
        "protocol", "sovereign", "ambassador", "cabinet", "referendum", "secretariat",
        "bureaucracy", "official", "procurement", "mandate",
    ],
    &[
        "health", "hospital", "doctor", "nurse", "disease", "vaccine", "cancer", "tumor",
        "clinic", "medicine", "patient", "malaria", "farm", "farmer", "crop", "livestock",
        "fertilizer", "harvest", "agriculture", "irrigation", "cattle", "poultry", "cassava",
        "maize",
    ],
    &[
        "labour", "worker", "wage", "pension", "employment", "union", "sport", "stadium",
        "athlete", "football", "welfare", "disability", "orphan", "widow", "youth", "poverty",
        "retirement", "gratuity", "strike", "overtime", "coach", "olympic", "charity",
        "volunteer",
    ],
    &[
        "court", "judge", "crime", "police", "prison", "justice", "penalty", "offence",
        "evidence", "right", "liberty", "firearm", "terrorism", "security", "safety", "bail",
        "custody", "prosecution", "lawyer", "defence", "army", "bullet", "protest", "citizen",
    ],
    &[
        "land", "house", "road", "railway", "transport", "highway", "bridge", "airport", "port",
        "vehicle", "traffic", "aviation", "estate", "mortgage", "tenant", "landlord", "rent",
        "survey", "urban", "rural", "ferry", "terminal", "driver", "pavement",
    ],
    &[
        "trade", "commerce", "tariff", "export", "import", "tax", "bank", "currency",
        "inflation", "market", "investment", "company", "business", "insurance", "credit",
        "loan", "debt", "revenue", "budget", "fiscal", "monetary", "price", "exchange", "naira",
    ],
];

const FILLER: &[&str] = &[
    "bill", "act", "federal", "republic", "nigeria", "national", "assembly", "enact", "provide",
    "section", "purpose", "establish", "amend", "member", "shall", "other", "matter",
    "therefore", "commence", "the", "of", "and", "to", "for", "be", "by", "this", "any", "such",
    "person", "may", "under",
];

/// Recipe for a synthetic bill collection whose class signal lives in
/// disjoint keyword sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub keywords: Vec<Vec<String>>,
    pub filler: Vec<String>,
    /// Inclusive bounds on words per document, drawn uniformly.
    pub min_len: usize,
    pub max_len: usize,
    /// Probability that a word is not drawn from the document's own class.
    pub filler_fraction: f64,
    /// Share of off-class words taken from other classes' keywords rather
    /// than the shared filler.
    pub cross_class_share: f64,
    /// Relative class frequencies; `None` means balanced.
    pub class_weights: Option<Vec<f64>>,
    pub sentence_len: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            keywords: KEYWORDS
                .iter()
                .map(|ks| ks.iter().map(|s| s.to_string()).collect())
                .collect(),
            filler: FILLER.iter().map(|s| s.to_string()).collect(),
            min_len: 30,
            max_len: 90,
            filler_fraction: 0.4,
            cross_class_share: 0.25,
            class_weights: None,
            sentence_len: 12,
        }
    }
}

impl SynthSpec {
    /// Class frequencies shaped like the bill collection: heavy on
    /// government operations and law, light on labour and land.
    pub fn imbalanced() -> Self {
        SynthSpec {
            class_weights: Some(vec![0.12, 0.10, 0.22, 0.12, 0.06, 0.20, 0.07, 0.11]),
            ..Self::default()
        }
    }

    /// Exact per-class document counts for `n` documents (largest remainder).
    pub fn class_counts(&self, n: usize) -> Vec<usize> {
        let k = self.keywords.len();
        let weights = self.class_weights.clone().unwrap_or_else(|| vec![1.0; k]);
        let total: f64 = weights.iter().sum();
        let exact: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
        let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
        let mut left = n - counts.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            let fa = exact[a] - exact[a].floor();
            let fb = exact[b] - exact[b].floor();
            fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
        });
        for &c in order.iter().cycle() {
            if left == 0 {
                break;
            }
            counts[c] += 1;
            left -= 1;
        }
        counts
    }

    fn validate(&self) -> Result<()> {
        if self.keywords.len() != NUM_CLASSES {
            return Err(Error::Config(format!(
                "expected {NUM_CLASSES} keyword sets, got {}",
                self.keywords.len()
            )));
        }
        if let Some(c) = self.keywords.iter().position(Vec::is_empty) {
            return Err(Error::EmptyKeywordSet(c));
        }
        let mut seen = std::collections::HashSet::new();
        for w in self.keywords.iter().flatten() {
            if !seen.insert(w.as_str()) {
                return Err(Error::Config(format!("keyword `{w}` appears in two classes")));
            }
        }
        if self.filler_fraction > 0.0 && self.filler.is_empty() {
            return Err(Error::Config("filler vocabulary is empty".into()));
        }
        if !(0.0..=1.0).contains(&self.filler_fraction)
            || !(0.0..=1.0).contains(&self.cross_class_share)
        {
            return Err(Error::Config("fractions must lie in [0, 1]".into()));
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(Error::Config("need 1 <= min_len <= max_len".into()));
        }
        if let Some(w) = &self.class_weights {
            if w.len() != NUM_CLASSES || w.iter().any(|x| x.is_nan() || *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
                return Err(Error::Config("class weights must be 8 non-negative values".into()));
            }
        }
        Ok(())
    }
}

pub fn generate_synthetic_corpus(n_docs: usize, seed: u64, spec: &SynthSpec) -> Result<Corpus> {
    if n_docs == 0 {
        return Err(Error::EmptyCorpus);
    }
    spec.validate()?;
    let set = LabelSet::nass();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut classes: Vec<usize> = spec
        .class_counts(n_docs)
        .into_iter()
        .enumerate()
        .flat_map(|(c, n)| std::iter::repeat_n(c, n))
        .collect();
    classes.shuffle(&mut rng);

    let width = n_docs.to_string().len().max(5);
    let docs = classes
        .into_iter()
        .enumerate()
        .map(|(i, class)| {
            let len = rng.gen_range(spec.min_len..=spec.max_len);
            let mut text = String::new();
            for t in 0..len {
                let word = pick_word(spec, class, &mut rng);
                let sentence_start = t % spec.sentence_len.max(1) == 0;
                if t > 0 {
                    text.push_str(if sentence_start { ". " } else { " " });
                }
                if sentence_start {
                    let mut cs = word.chars();
                    if let Some(first) = cs.next() {
                        text.extend(first.to_uppercase());
                        text.push_str(cs.as_str());
                    }
                } else {
                    text.push_str(word);
                }
            }
            text.push('.');
            Document::new(format!("synth-{i:0width$}"), text, Some(set.id(class)))
        })
        .collect();
    Corpus::new(docs, set)
}

fn pick_word<'a, R: Rng>(spec: &'a SynthSpec, class: usize, rng: &mut R) -> &'a str {
    if rng.gen::<f64>() < spec.filler_fraction {
        if rng.gen::<f64>() < spec.cross_class_share {
            let mut other = rng.gen_range(0..spec.keywords.len() - 1);
            if other >= class {
                other += 1;
            }
            return spec.keywords[other].choose(rng).unwrap();
        }
        return spec.filler.choose(rng).unwrap();
    }
    spec.keywords[class].choose(rng).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::class_distribution;
    use crate::textprep::{lemmatize_token, normalize_text, tokenize};
    use std::collections::HashSet;

    #[test]
    fn balanced_800_gives_100_per_class() {
        let c = generate_synthetic_corpus(800, 3, &SynthSpec::default()).unwrap();
        let dist = class_distribution(&c).unwrap();
        assert!(dist.iter().all(|s| s.count == 100));
    }

    #[test]
    fn imbalanced_counts_match_bookkeeping() {
        let spec = SynthSpec::imbalanced();
        let c = generate_synthetic_corpus(2397, 11, &spec).unwrap();
        let expected = spec.class_counts(2397);
        assert_eq!(expected.iter().sum::<usize>(), 2397);
        let got: Vec<usize> = class_distribution(&c).unwrap().iter().map(|s| s.count).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = generate_synthetic_corpus(50, 9, &SynthSpec::default()).unwrap();
        let b = generate_synthetic_corpus(50, 9, &SynthSpec::default()).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic_corpus(50, 10, &SynthSpec::default()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_filler_keeps_every_token_in_class_vocabulary() {
        let spec = SynthSpec {
            filler_fraction: 0.0,
            ..SynthSpec::default()
        };
        let c = generate_synthetic_corpus(80, 5, &spec).unwrap();
        let labels = c.label_indices().unwrap();
        for (doc, class) in c.documents().iter().zip(labels) {
            let vocab: HashSet<&str> = spec.keywords[class].iter().map(String::as_str).collect();
            for tok in tokenize(&normalize_text(&doc.text)) {
                assert!(vocab.contains(tok.as_str()), "{tok} not in class {class}");
            }
        }
    }

    #[test]
    fn default_words_are_lemma_fixed_points() {
        let spec = SynthSpec::default();
        for w in spec.keywords.iter().flatten().chain(&spec.filler) {
            assert_eq!(&lemmatize_token(w), w);
        }
    }

    #[test]
    fn rejects_empty_keyword_set() {
        let mut spec = SynthSpec::default();
        spec.keywords[4].clear();
        assert!(matches!(
            generate_synthetic_corpus(10, 0, &spec),
            Err(Error::EmptyKeywordSet(4))
        ));
        assert!(matches!(
            generate_synthetic_corpus(0, 0, &SynthSpec::default()),
            Err(Error::EmptyCorpus)
        ));
    }
}
