//! Malware family embedding pipeline.
//!
//! The crate turns hex-dump corpora into 2-D family maps: byte n-grams are
//! hashed into a 22-bit feature space, rare grams are pruned, a χ² selector
//! keeps the most class-dependent features, an optional PCA stage compresses
//! further, and t-SNE (exact or Barnes-Hut) embeds the result in two
//! dimensions. RBF-SVM classifiers with one-vs-one voting and Platt-calibrated
//! probabilities evaluate both the high-dimensional and the embedded space;
//! the `eval` module houses the cross-validation and transductive harnesses.
//!
//! Stages hand data to each other through files (SVMLight vectors, CSV
//! embeddings, text models), so the `malviz` binary can run them separately
//! or chained via `malviz pipeline`.

pub mod config;
pub mod corpus;
pub mod dense;
pub mod error;
pub mod eval;
pub mod features;
pub mod plot;
pub mod reduce;
pub mod rng;
pub mod select;
pub mod svm;
pub mod tsne;

pub use dense::DenseMatrix;
pub use error::{Error, Result};
