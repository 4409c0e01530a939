//! Binary model files.
//!
//! Layout: 8-byte magic, little-endian `u32` manifest length, a JSON manifest
//! (format version, model kind, dtype, ordered array table, vocabulary and
//! architecture), then each array's raw little-endian values in manifest
//! order with no padding.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embed::{EmbedTrainConfig, EmbeddingModel, Vocab};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{ClassifierModel, ClassifierSpec, LstmParams};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 8] = b"BILLCLS\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub kind: String,
    pub dtype: String,
    pub arrays: Vec<ArrayEntry>,
    pub vocab: Vocab,
    #[serde(default)]
    pub doc_ids: Vec<String>,
    pub arch: serde_json::Value,
}

/// A model with a stable on-disk form.
pub trait Persist: Sized {
    const KIND: &'static str;
    fn to_bytes(&self) -> Result<Vec<u8>>;
    fn from_bytes(bytes: &[u8]) -> Result<Self>;
}

pub fn save_model<M: Persist>(model: &M, path: &Path) -> Result<()> {
    let bytes = model.to_bytes()?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_model<M: Persist>(path: &Path) -> Result<M> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    M::from_bytes(&bytes)
}

/// Reads only the manifest, e.g. to dispatch on `kind` or `dtype`.
pub fn read_manifest(bytes: &[u8]) -> Result<(Manifest, usize)> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::BadMagic);
    }
    let rest = &bytes[MAGIC.len()..];
    if rest.len() < 4 {
        return Err(Error::CorruptManifest("missing manifest length".into()));
    }
    let len = u32::from_le_bytes(rest[..4].try_into().expect("4 bytes")) as usize;
    let body = rest
        .get(4..4 + len)
        .ok_or_else(|| Error::CorruptManifest(format!("manifest needs {len} bytes, file has {}", rest.len() - 4)))?;
    let value: serde_json::Value =
        serde_json::from_slice(body).map_err(|e| Error::CorruptManifest(e.to_string()))?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::CorruptManifest("missing format_version".into()))?;
    if version != u64::from(FORMAT_VERSION) {
        return Err(Error::UnsupportedVersion {
            found: version.min(u64::from(u32::MAX)) as u32,
            supported: FORMAT_VERSION,
        });
    }
    let manifest: Manifest = serde_json::from_value(value).map_err(|e| Error::CorruptManifest(e.to_string()))?;
    Ok((manifest, MAGIC.len() + 4 + len))
}

fn encode<T: Scalar>(manifest: &Manifest, arrays: &[&[T]]) -> Result<Vec<u8>> {
    let json = serde_json::to_vec(manifest)?;
    let total: usize = arrays.iter().map(|a| a.len()).sum();
    let mut out = Vec::with_capacity(MAGIC.len() + 4 + json.len() + total * T::BYTES);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for a in arrays {
        for &v in *a {
            v.write_le(&mut out);
        }
    }
    Ok(out)
}

fn decode<T: Scalar>(bytes: &[u8], kind: &str) -> Result<(Manifest, Vec<Vec<T>>)> {
    let (manifest, mut offset) = read_manifest(bytes)?;
    if manifest.kind != kind {
        return Err(Error::WrongKind {
            expected: kind.to_string(),
            found: manifest.kind,
        });
    }
    if manifest.dtype != T::DTYPE {
        return Err(Error::WrongKind {
            expected: format!("{kind}/{}", T::DTYPE),
            found: format!("{}/{}", manifest.kind, manifest.dtype),
        });
    }
    let mut arrays = Vec::with_capacity(manifest.arrays.len());
    for entry in &manifest.arrays {
        if entry.shape.iter().product::<usize>() != entry.len {
            return Err(Error::CorruptManifest(format!("array `{}` shape does not match len", entry.name)));
        }
        let need = entry.len * T::BYTES;
        let found = bytes.len() - offset;
        if found < need {
            return Err(Error::Truncated {
                array: entry.name.clone(),
                expected: need,
                found,
            });
        }
        arrays.push(bytes[offset..offset + need].chunks_exact(T::BYTES).map(T::read_le).collect());
        offset += need;
    }
    if offset != bytes.len() {
        return Err(Error::TrailingBytes(bytes.len() - offset));
    }
    Ok((manifest, arrays))
}

fn entry(name: &str, shape: Vec<usize>) -> ArrayEntry {
    ArrayEntry {
        name: name.to_string(),
        len: shape.iter().product(),
        shape,
    }
}

fn matrix_entry<T: Scalar>(name: &str, m: &Matrix<T>) -> ArrayEntry {
    entry(name, vec![m.rows(), m.cols()])
}

fn take_matrix<T: Scalar>(e: &ArrayEntry, data: Vec<T>) -> Result<Matrix<T>> {
    match e.shape[..] {
        [r, c] => Ok(Matrix::from_vec(r, c, data)),
        _ => Err(Error::CorruptManifest(format!("array `{}` is not two-dimensional", e.name))),
    }
}

impl<T: Scalar> Persist for EmbeddingModel<T> {
    const KIND: &'static str = "pvdbow-embedding";

    fn to_bytes(&self) -> Result<Vec<u8>> {
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            kind: Self::KIND.into(),
            dtype: T::DTYPE.into(),
            arrays: vec![
                matrix_entry("doc_vectors", &self.doc_vectors),
                matrix_entry("word_in", &self.word_in),
                matrix_entry("word_out", &self.word_out),
            ],
            vocab: self.vocab.clone(),
            doc_ids: self.doc_ids.clone(),
            arch: serde_json::to_value(&self.config)?,
        };
        encode(
            &manifest,
            &[self.doc_vectors.as_slice(), self.word_in.as_slice(), self.word_out.as_slice()],
        )
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (m, arrays) = decode::<T>(bytes, Self::KIND)?;
        let names: Vec<&str> = m.arrays.iter().map(|a| a.name.as_str()).collect();
        if names != ["doc_vectors", "word_in", "word_out"] {
            return Err(Error::CorruptManifest(format!("unexpected array table {names:?}")));
        }
        let config: EmbedTrainConfig =
            serde_json::from_value(m.arch.clone()).map_err(|e| Error::CorruptManifest(e.to_string()))?;
        let mut it = arrays.into_iter().zip(&m.arrays);
        let mut next = || {
            let (data, e) = it.next().expect("three arrays");
            take_matrix(e, data)
        };
        let (docs, win, wout) = (next()?, next()?, next()?);
        EmbeddingModel::from_parts(config, m.vocab, m.doc_ids, docs, win, wout)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifierArch {
    spec: ClassifierSpec,
    embedding: EmbedTrainConfig,
}

const LSTM_TENSORS: [&str; 8] = ["w_i", "w_f", "w_o", "w_c", "b_i", "b_f", "b_o", "b_c"];

fn lstm_shapes<T: Scalar>(p: &LstmParams<T>) -> [Vec<usize>; 8] {
    let gate = vec![p.w_i.rows(), p.w_i.cols()];
    let n = vec![p.hidden_dim];
    [
        gate.clone(),
        gate.clone(),
        gate,
        vec![p.w_c.rows(), p.w_c.cols()],
        n.clone(),
        n.clone(),
        n.clone(),
        n,
    ]
}

fn classifier_table<T: Scalar>(m: &ClassifierModel<T>) -> (Vec<ArrayEntry>, Vec<&[T]>) {
    let mut entries = vec![
        matrix_entry("embedding.word_in", &m.embedding.word_in),
        matrix_entry("embedding.word_out", &m.embedding.word_out),
    ];
    let mut data = vec![m.embedding.word_in.as_slice(), m.embedding.word_out.as_slice()];
    for (l, layer) in m.lstm.iter().enumerate() {
        for (dir, p) in [("fwd", &layer.forward), ("bwd", &layer.backward)] {
            for ((t, shape), slice) in LSTM_TENSORS.iter().zip(lstm_shapes(p)).zip(p.tensors()) {
                entries.push(entry(&format!("lstm{l}.{dir}.{t}"), shape));
                data.push(slice);
            }
        }
    }
    for (name, d) in [("dense1", &m.dense1), ("dense2", &m.dense2)] {
        entries.push(matrix_entry(&format!("{name}.weights"), &d.weights));
        entries.push(entry(&format!("{name}.bias"), vec![d.bias.len()]));
        data.push(d.weights.as_slice());
        data.push(&d.bias);
    }
    (entries, data)
}

fn classifier_slots<T: Scalar>(m: &mut ClassifierModel<T>) -> Vec<&mut [T]> {
    let mut v: Vec<&mut [T]> = vec![m.embedding.word_in.as_mut_slice(), m.embedding.word_out.as_mut_slice()];
    for layer in &mut m.lstm {
        v.extend(layer.forward.tensors_mut());
        v.extend(layer.backward.tensors_mut());
    }
    v.extend(m.dense1.tensors_mut());
    v.extend(m.dense2.tensors_mut());
    v
}

impl<T: Scalar> Persist for ClassifierModel<T> {
    const KIND: &'static str = "bilstm-classifier";

    fn to_bytes(&self) -> Result<Vec<u8>> {
        let (arrays, data) = classifier_table(self);
        let arch = ClassifierArch {
            spec: self.spec.clone(),
            embedding: self.embedding.config.clone(),
        };
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            kind: Self::KIND.into(),
            dtype: T::DTYPE.into(),
            arrays,
            vocab: self.embedding.vocab.clone(),
            doc_ids: Vec::new(),
            arch: serde_json::to_value(&arch)?,
        };
        encode(&manifest, &data)
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (m, arrays) = decode::<T>(bytes, Self::KIND)?;
        let arch: ClassifierArch =
            serde_json::from_value(m.arch.clone()).map_err(|e| Error::CorruptManifest(e.to_string()))?;
        let d = arch.embedding.dim;
        let v = m.vocab.len();
        let placeholder = EmbeddingModel::from_parts(
            arch.embedding,
            m.vocab.clone(),
            Vec::new(),
            Matrix::zeros(0, d),
            Matrix::zeros(v, d),
            Matrix::zeros(v, d),
        )?;
        let mut model = ClassifierModel::new(arch.spec, &placeholder)?;
        let (expected, _) = classifier_table(&model);
        if expected != m.arrays {
            return Err(Error::CorruptManifest("array table does not match the architecture".into()));
        }
        for (slot, data) in classifier_slots(&mut model).into_iter().zip(arrays) {
            slot.copy_from_slice(&data);
        }
        Ok(model)
    }
}
