//! Parliamentary bill classification toolkit.
//!
//! Pipeline: [`textprep`] normalizes and lemmatizes raw bill text,
//! [`embed`] learns PV-DBoW document vectors jointly with skip-gram word
//! vectors, [`nn`] trains a peephole Bi-LSTM softmax classifier with ADAM,
//! and [`eval`] scores predictions per class.

pub mod config;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod nn;
pub mod persist;
pub mod pipeline;
pub mod scalar;
pub mod textprep;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type EmbeddingModelF32 = embed::EmbeddingModel<f32>;
pub type EmbeddingModelF64 = embed::EmbeddingModel<f64>;
pub type ClassifierF32 = nn::ClassifierModel<f32>;
pub type ClassifierF64 = nn::ClassifierModel<f64>;
pub type MlpF32 = nn::MlpModel<f32>;
pub type MatrixF32 = linalg::Matrix<f32>;
pub type MatrixF64 = linalg::Matrix<f64>;
