//! Document and word embeddings, plus TF-IDF features for the linear baseline.

mod pvdbow;
mod tfidf;
mod vocab;

pub use pvdbow::{
    infer_seed, ns_gradient, ns_loss, train_pvdbow, EmbedHistory, EmbedTrainConfig, EmbeddingModel,
    NoiseSampler, NsGradient, DEFAULT_DIM,
};
pub use tfidf::{tfidf_fit, tfidf_transform, SparseVec, TfidfModel, TfidfVectorizer};
pub use vocab::{build_vocab, Vocab, NOISE_EXPONENT, PAD, PAD_TOKEN, UNK, UNK_TOKEN};
