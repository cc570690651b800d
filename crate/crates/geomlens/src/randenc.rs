//! Random encoding baseline: replace every vector with seeded uniform noise,
//! keeping only the vocabulary and shape of the input.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::embio::EmbeddingSet;
use crate::error::{Error, Result};
use crate::par::{map_indexed, parallel_enabled};

#[derive(Debug, Clone)]
pub struct RandomSpec {
    pub seed: u64,
    /// Components are i.i.d. uniform on [-scale, scale]. None picks the
    /// word2vec initialization convention 0.5/d.
    pub scale: Option<f64>,
}

fn row_rng(seed: u64, row: usize) -> ChaCha8Rng {
    let mut z = seed
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add(row as u64)
        .wrapping_add(0xd1b54a32d192ed03);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// Deterministic in (|V|, d, seed, scale); ignores the input matrix values.
pub fn random_encode(set: &EmbeddingSet, spec: &RandomSpec) -> Result<EmbeddingSet> {
    let d = set.dim();
    let scale = spec.scale.unwrap_or(0.5 / d as f64);
    if scale <= 0.0 {
        return Err(Error::InvalidArg("scale must be positive".into()));
    }
    let rows = map_indexed(set.len(), parallel_enabled(), |i| {
        let mut rng = row_rng(spec.seed, i);
        (0..d).map(|_| rng.random_range(-scale..scale)).collect::<Vec<f64>>()
    });
    set.with_matrix(
        format!("{}-random", set.name),
        rows.into_iter().flatten().collect(),
    )
}
