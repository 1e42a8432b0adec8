//! Multi-modal hashing with context-gated fusion.
//!
//! Per-modality embeddings (typically 512-D image and text vectors) are
//! concatenated, reweighted by a learned sigmoid gate, and projected by a
//! tanh hash layer to `k` bits. Codes are stored bit-packed and searched
//! exactly by Hamming distance; retrieval quality is scored with mAP.
//!
//! Data-parallel loops go through [`par::Execution`]; with the default
//! `parallel` feature they run on rayon, otherwise sequentially. Output is
//! bitwise identical either way.

mod binio;
pub mod data;
pub mod error;
pub mod eval;
pub mod index;
pub mod net;
pub mod par;
pub mod pipeline;
pub mod train;

pub use error::{Error, FormatError, Result};
pub use par::Execution;
