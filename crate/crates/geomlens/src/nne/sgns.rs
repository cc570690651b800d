//! Skip-gram with negative sampling over walk corpora, treating walks as
//! sentences of node ids. Single-threaded and deterministic for a fixed seed.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nne::walks::WalkCorpus;

pub const DEFAULT_WINDOW: usize = 10;
pub const DEFAULT_NEGATIVES: usize = 5;
const NEG_POWER: f64 = 0.75;
const INITIAL_LR: f32 = 0.025;
const MIN_LR: f32 = 1e-4;

#[derive(Debug, Clone)]
pub struct SgnsParams {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl SgnsParams {
    pub fn new(dim: usize, seed: u64) -> Self {
        SgnsParams {
            dim,
            window: DEFAULT_WINDOW,
            negatives: DEFAULT_NEGATIVES,
            epochs: 1,
            seed,
        }
    }
}

fn sigmoid(x: f32) -> f32 {
    if x > 8.0 {
        1.0
    } else if x < -8.0 {
        0.0
    } else {
        1.0 / (1.0 + (-x).exp())
    }
}

/// Train node embeddings over the corpus. Returns an n x dim row-major
/// matrix (input vectors). Negative sampling is proportional to corpus
/// frequency ^ 0.75; the context window is shrunk uniformly per center
/// position, as in the reference word2vec trainer.
pub fn train_sgns(corpus: &WalkCorpus, n: usize, params: &SgnsParams) -> Result<Vec<f64>> {
    if corpus.walks.is_empty() || corpus.walks.iter().all(|w| w.len() < 2) {
        return Err(Error::InvalidArg("empty walk corpus".into()));
    }
    if params.dim == 0 || params.window == 0 {
        return Err(Error::InvalidArg("dim and window must be positive".into()));
    }
    let dim = params.dim;
    let mut freq = vec![0u64; n];
    let mut positions = 0u64;
    for walk in &corpus.walks {
        for &node in walk {
            freq[node as usize] += 1;
            positions += 1;
        }
    }
    // cumulative freq^0.75 table for negative draws
    let mut neg_cum = Vec::with_capacity(n);
    let mut acc = 0.0f64;
    for &f in &freq {
        acc += (f as f64).powf(NEG_POWER);
        neg_cum.push(acc);
    }
    if acc == 0.0 {
        return Err(Error::InvalidArg("corpus covers no nodes".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut input: Vec<f32> = (0..n * dim)
        .map(|_| rng.random_range(-0.5..0.5) / dim as f32)
        .collect();
    let mut output = vec![0.0f32; n * dim];

    let total_pairs_budget = positions * params.epochs as u64;
    let mut processed = 0u64;
    let mut hidden_grad = vec![0.0f32; dim];
    for _epoch in 0..params.epochs {
        for walk in &corpus.walks {
            for (center_pos, &center) in walk.iter().enumerate() {
                let lr = {
                    let progress = processed as f32 / total_pairs_budget.max(1) as f32;
                    (INITIAL_LR * (1.0 - progress)).max(MIN_LR)
                };
                processed += 1;
                let reduced = rng.random_range(1..=params.window);
                let lo = center_pos.saturating_sub(reduced);
                let hi = (center_pos + reduced).min(walk.len() - 1);
                for ctx_pos in lo..=hi {
                    if ctx_pos == center_pos {
                        continue;
                    }
                    let context = walk[ctx_pos] as usize;
                    let c = center as usize;
                    hidden_grad.iter_mut().for_each(|g| *g = 0.0);
                    let v_in = c * dim;
                    // positive pair plus `negatives` sampled targets
                    for neg in 0..=params.negatives {
                        let (target, label) = if neg == 0 {
                            (context, 1.0f32)
                        } else {
                            let x = rng.random_range(0.0..acc);
                            let mut t = neg_cum.partition_point(|&cv| cv <= x);
                            if t >= n {
                                t = n - 1;
                            }
                            if t == context {
                                continue;
                            }
                            (t, 0.0f32)
                        };
                        let v_out = target * dim;
                        let mut dot = 0.0f32;
                        for k in 0..dim {
                            dot += input[v_in + k] * output[v_out + k];
                        }
                        let g = (label - sigmoid(dot)) * lr;
                        for k in 0..dim {
                            hidden_grad[k] += g * output[v_out + k];
                            output[v_out + k] += g * input[v_in + k];
                        }
                    }
                    for k in 0..dim {
                        input[v_in + k] += hidden_grad[k];
                    }
                }
            }
        }
    }
    if input.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            epoch: params.epochs,
            lr: INITIAL_LR as f64,
        });
    }
    Ok(input.into_iter().map(|v| v as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cosine_similarity;
    use crate::nne::graph::{GraphMode, NeighborGraph};
    use crate::nne::walks::{generate_walks, WalkParams};

    /// Two disconnected triangles: 0-1-2 and 3-4-5.
    pub fn two_cliques() -> NeighborGraph {
        let clique = |members: [u32; 3], skip: u32| -> Vec<(u32, f64)> {
            members.iter().filter(|&&m| m != skip).map(|&m| (m, 1.0)).collect()
        };
        let edges = (0..6u32)
            .map(|i| {
                if i < 3 {
                    clique([0, 1, 2], i)
                } else {
                    clique([3, 4, 5], i)
                }
            })
            .collect();
        NeighborGraph::from_edge_lists(GraphMode::Weighted, 2, None, edges).unwrap()
    }

    pub fn clique_separation(embeddings: &[f64], dim: usize) -> (f64, f64) {
        let row = |i: usize| &embeddings[i * dim..(i + 1) * dim];
        let mut intra = Vec::new();
        let mut inter = Vec::new();
        for i in 0..6 {
            for j in (i + 1)..6 {
                let sim = cosine_similarity(row(i), row(j));
                if (i < 3) == (j < 3) {
                    intra.push(sim);
                } else {
                    inter.push(sim);
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        (mean(&intra), mean(&inter))
    }

    #[test]
    fn separates_two_cliques() {
        let g = two_cliques();
        let corpus = generate_walks(&g, &WalkParams {
            walk_length: 40,
            walks_per_node: 10,
            seed: 1,
            ..Default::default()
        })
        .unwrap();
        let emb = train_sgns(&corpus, 6, &SgnsParams::new(8, 1)).unwrap();
        let (intra, inter) = clique_separation(&emb, 8);
        assert!(intra > inter, "intra {intra} <= inter {inter}");
    }

    #[test]
    fn empty_corpus_rejected() {
        let corpus = WalkCorpus {
            walks: vec![],
            walk_length: 10,
            walks_per_node: 1,
        };
        assert!(train_sgns(&corpus, 5, &SgnsParams::new(4, 0)).is_err());
    }

    #[test]
    fn deterministic_for_seed() {
        let g = two_cliques();
        let corpus = generate_walks(&g, &WalkParams {
            walk_length: 20,
            walks_per_node: 4,
            seed: 2,
            ..Default::default()
        })
        .unwrap();
        let a = train_sgns(&corpus, 6, &SgnsParams::new(8, 7)).unwrap();
        let b = train_sgns(&corpus, 6, &SgnsParams::new(8, 7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn outputs_finite() {
        let g = two_cliques();
        let corpus = generate_walks(&g, &WalkParams {
            walk_length: 30,
            walks_per_node: 5,
            seed: 3,
            ..Default::default()
        })
        .unwrap();
        let emb = train_sgns(&corpus, 6, &SgnsParams::new(16, 5)).unwrap();
        assert_eq!(emb.len(), 6 * 16);
        assert!(emb.iter().all(|v| v.is_finite()));
    }
}
