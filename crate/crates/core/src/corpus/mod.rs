//! Labeled document collections: loading, splitting, class statistics and
//! the synthetic stand-in corpus.

mod labels;
mod split;
mod synth;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use labels::{Label, LabelSet, NUM_CLASSES};
pub use split::{split_corpus, SplitSizes, SplitSpec};
pub use synth::{generate_synthetic_corpus, SynthSpec};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Option<&str>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            label: label.map(str::to_string),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
    label_set: LabelSet,
}

impl Corpus {
    /// Validates id uniqueness and label membership. An empty document list is
    /// allowed here; training paths reject it separately.
    pub fn new(documents: Vec<Document>, label_set: LabelSet) -> Result<Self> {
        let mut seen = HashSet::with_capacity(documents.len());
        for doc in &documents {
            if doc.id.is_empty() {
                return Err(Error::EmptyId);
            }
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
            if let Some(label) = &doc.label {
                if label_set.index_of(label).is_none() {
                    return Err(Error::UnknownLabel {
                        id: doc.id.clone(),
                        label: label.clone(),
                    });
                }
            }
        }
        Ok(Corpus {
            documents,
            label_set,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn label_set(&self) -> &LabelSet {
        &self.label_set
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.documents.iter().map(|d| d.id.as_str()).collect()
    }

    /// Class index of every document; fails on the first unlabeled one.
    pub fn label_indices(&self) -> Result<Vec<usize>> {
        self.documents
            .iter()
            .map(|d| {
                d.label
                    .as_deref()
                    .and_then(|l| self.label_set.index_of(l))
                    .ok_or_else(|| Error::UnlabeledDocument(d.id.clone()))
            })
            .collect()
    }

    /// Sub-corpus of the given positions, in the order given.
    pub fn subset(&self, positions: &[usize]) -> Corpus {
        Corpus {
            documents: positions.iter().map(|&i| self.documents[i].clone()).collect(),
            label_set: self.label_set.clone(),
        }
    }

    /// Fails with `EmptyCorpus` or `UnlabeledDocument`; the precondition for training.
    pub fn require_labeled(&self) -> Result<Vec<usize>> {
        if self.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        self.label_indices()
    }
}

/// Per-class share of a labeled corpus.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassShare {
    pub id: String,
    pub name: String,
    pub count: usize,
    pub ratio: f64,
}

pub fn class_distribution(corpus: &Corpus) -> Result<Vec<ClassShare>> {
    let labels = corpus.require_labeled()?;
    let mut counts = vec![0usize; corpus.label_set().len()];
    for l in labels {
        counts[l] += 1;
    }
    let total = corpus.len() as f64;
    Ok(corpus
        .label_set()
        .iter()
        .zip(counts)
        .map(|(label, count)| ClassShare {
            id: label.id.clone(),
            name: label.name.clone(),
            count,
            ratio: count as f64 / total,
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One JSON object per line: `{"id", "text", "label"?}`.
    Jsonl,
    /// Each `*.txt` file is a document (id = file stem). Labels come from an
    /// optional sidecar JSONL manifest of `{"id", "label"}` objects; when no
    /// path is given, `labels.jsonl` inside the directory is used if present.
    TextDir { manifest: Option<PathBuf> },
}

pub fn load_corpus(path: &Path, format: &CorpusFormat) -> Result<Corpus> {
    match format {
        CorpusFormat::Jsonl => load_jsonl(path),
        CorpusFormat::TextDir { manifest } => load_text_dir_with(path, manifest.as_deref(), |p| {
            if p.extension().is_some_and(|e| e == "txt") {
                fs::read_to_string(p).map(Some).map_err(|e| Error::io(p, e))
            } else {
                Ok(None)
            }
        }),
    }
}

fn load_jsonl(path: &Path) -> Result<Corpus> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: i + 1,
            message: e.to_string(),
        })?;
        docs.push(doc);
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Corpus::new(docs, LabelSet::nass())
}

#[derive(Deserialize)]
struct ManifestEntry {
    id: String,
    #[serde(default)]
    label: Option<String>,
}

/// Directory ingestion with a caller-supplied extractor. The extractor returns
/// `None` for files it does not handle; files are visited in name order.
pub fn load_text_dir_with<F>(dir: &Path, manifest: Option<&Path>, mut extract: F) -> Result<Corpus>
where
    F: FnMut(&Path) -> Result<Option<String>>,
{
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    entries.sort();

    let default_manifest = dir.join("labels.jsonl");
    let manifest = match manifest {
        Some(m) => Some(m.to_path_buf()),
        None if default_manifest.is_file() => Some(default_manifest.clone()),
        None => None,
    };
    let labels = match &manifest {
        Some(m) => read_label_manifest(m)?,
        None => HashMap::new(),
    };

    let mut docs = Vec::new();
    for path in entries {
        if manifest.as_deref() == Some(path.as_path()) {
            continue;
        }
        let Some(text) = extract(&path)? else {
            continue;
        };
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let label = labels.get(&id).cloned().flatten();
        docs.push(Document { id, text, label });
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Corpus::new(docs, LabelSet::nass())
}

fn read_label_manifest(path: &Path) -> Result<HashMap<String, Option<String>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry = serde_json::from_str(line).map_err(|e| Error::MalformedLine {
            line: i + 1,
            message: e.to_string(),
        })?;
        if out.insert(entry.id.clone(), entry.label).is_some() {
            return Err(Error::DuplicateId(entry.id));
        }
    }
    Ok(out)
}

pub fn save_corpus(path: &Path, corpus: &Corpus) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for doc in corpus.documents() {
        serde_json::to_writer(&mut w, doc)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_well_formed_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "c.jsonl",
            concat!(
                r#"{"id": "a", "text": "a bill", "label": "NASS-1"}"#,
                "\n",
                r#"{"id": "b", "text": "another bill"}"#,
                "\n",
                r#"{"id": "c", "text": "third", "label": "NASS-8"}"#,
                "\n"
            ),
        );
        let c = load_corpus(&p, &CorpusFormat::Jsonl).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.documents()[1].label, None);
        assert!(matches!(c.label_indices(), Err(Error::UnlabeledDocument(id)) if id == "b"));
    }

    #[test]
    fn unknown_label_names_the_document() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "c.jsonl",
            "{\"id\": \"x1\", \"text\": \"t\", \"label\": \"NASS-9\"}\n",
        );
        match load_corpus(&p, &CorpusFormat::Jsonl) {
            Err(Error::UnknownLabel { id, label }) => {
                assert_eq!(id, "x1");
                assert_eq!(label, "NASS-9");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_and_malformed_files() {
        let dir = tempfile::tempdir().unwrap();
        let empty = write(dir.path(), "e.jsonl", "");
        assert!(matches!(load_corpus(&empty, &CorpusFormat::Jsonl), Err(Error::EmptyCorpus)));

        let bad = write(dir.path(), "b.jsonl", "{\"id\":\"a\",\"text\":\"t\"}\n{oops\n");
        assert!(matches!(
            load_corpus(&bad, &CorpusFormat::Jsonl),
            Err(Error::MalformedLine { line: 2, .. })
        ));

        let dup = write(
            dir.path(),
            "d.jsonl",
            "{\"id\":\"a\",\"text\":\"t\"}\n{\"id\":\"a\",\"text\":\"u\"}\n",
        );
        assert!(matches!(load_corpus(&dup, &CorpusFormat::Jsonl), Err(Error::DuplicateId(_))));

        let missing = dir.path().join("nope.jsonl");
        assert!(matches!(load_corpus(&missing, &CorpusFormat::Jsonl), Err(Error::Io { .. })));
    }

    #[test]
    fn text_dir_with_sidecar_labels() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "b2.txt", "second bill");
        write(dir.path(), "b1.txt", "first bill");
        write(dir.path(), "notes.md", "ignored");
        write(dir.path(), "labels.jsonl", "{\"id\":\"b1\",\"label\":\"NASS-4\"}\n");
        let c = load_corpus(dir.path(), &CorpusFormat::TextDir { manifest: None }).unwrap();
        assert_eq!(c.ids(), vec!["b1", "b2"]);
        assert_eq!(c.documents()[0].label.as_deref(), Some("NASS-4"));
        assert_eq!(c.documents()[1].label, None);
    }

    #[test]
    fn save_then_load_preserves_documents() {
        let dir = tempfile::tempdir().unwrap();
        let c = Corpus::new(
            vec![
                Document::new("a", "x \"quoted\"\nline", Some("NASS-2")),
                Document::new("b", "y", None),
            ],
            LabelSet::nass(),
        )
        .unwrap();
        let p = dir.path().join("out.jsonl");
        save_corpus(&p, &c).unwrap();
        assert_eq!(load_corpus(&p, &CorpusFormat::Jsonl).unwrap(), c);
        let raw = fs::read_to_string(&p).unwrap();
        assert!(!raw.lines().nth(1).unwrap().contains("label"));
    }

    #[test]
    fn distribution_one_per_class_and_single_class() {
        let set = LabelSet::nass();
        let docs = (0..8)
            .map(|i| Document::new(format!("d{i}"), "t", Some(set.id(i))))
            .collect();
        let dist = class_distribution(&Corpus::new(docs, set.clone()).unwrap()).unwrap();
        assert!(dist.iter().all(|s| s.count == 1 && s.ratio == 0.125));

        let docs = (0..5)
            .map(|i| Document::new(format!("d{i}"), "t", Some("NASS-6")))
            .collect();
        let dist = class_distribution(&Corpus::new(docs, set.clone()).unwrap()).unwrap();
        assert_eq!(dist[5].ratio, 1.0);
        assert_eq!(dist.iter().map(|s| s.count).sum::<usize>(), 5);
        assert!(dist.iter().enumerate().all(|(i, s)| i == 5 || s.ratio == 0.0));

        let c = Corpus::new(vec![Document::new("u", "t", None)], set).unwrap();
        assert!(matches!(class_distribution(&c), Err(Error::UnlabeledDocument(_))));
    }
}
