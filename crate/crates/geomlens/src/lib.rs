//! geomlens: apply geometry-obfuscating transformations to pretrained word
//! embeddings (affine family, cosine distance encoding, nearest neighbor
//! encoding, random encoding) and measure the effect on intrinsic and
//! extrinsic evaluation tasks.

pub mod affine;
pub mod cde;
pub mod embio;
pub mod error;
pub mod evalkit;
pub mod linalg;
pub mod nne;
pub mod par;
pub mod pipeline;
pub mod randenc;

pub use embio::{load_embeddings, save_embeddings, EmbeddingSet, Format};
pub use error::{Error, Result};
