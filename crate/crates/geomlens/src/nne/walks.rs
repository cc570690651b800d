//! Second-order biased random walks over the neighbor graph, following the
//! return parameter p / in-out parameter q sampling scheme.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nne::graph::NeighborGraph;
use crate::par::{map_indexed, parallel_enabled};

pub const DEFAULT_WALK_LENGTH: usize = 80;
pub const DEFAULT_WALKS_PER_NODE: usize = 10;

#[derive(Debug, Clone)]
pub struct WalkParams {
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub p: f64,
    pub q: f64,
    pub seed: u64,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams {
            walk_length: DEFAULT_WALK_LENGTH,
            walks_per_node: DEFAULT_WALKS_PER_NODE,
            p: 1.0,
            q: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<u32>>,
    pub walk_length: usize,
    pub walks_per_node: usize,
}

fn walk_rng(seed: u64, node: usize, round: usize) -> ChaCha8Rng {
    // splitmix-style mix of (seed, node, round) into one 64-bit state
    let mut z = seed
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add((node as u64) << 32 | round as u64)
        .wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

fn sample_weighted(rng: &mut ChaCha8Rng, cumulative: &[f64]) -> usize {
    let total = *cumulative.last().unwrap();
    let x = rng.random_range(0.0..total);
    cumulative.partition_point(|&c| c <= x).min(cumulative.len() - 1)
}

/// Generate `walks_per_node` walks starting from every node. Deterministic
/// for a fixed seed, including under parallel generation: each walk derives
/// its own RNG from (seed, start node, round).
pub fn generate_walks(graph: &NeighborGraph, params: &WalkParams) -> Result<WalkCorpus> {
    if params.walk_length == 0 || params.walks_per_node == 0 {
        return Err(Error::InvalidArg("walk length and walks per node must be positive".into()));
    }
    if params.p <= 0.0 || params.q <= 0.0 {
        return Err(Error::InvalidArg("p and q must be positive".into()));
    }
    for node in 0..graph.n {
        if graph.out_degree(node) == 0 {
            return Err(Error::Data(format!("node {node} has out-degree 0")));
        }
    }
    // per-node cumulative weights for first-order steps
    let cumulative: Vec<Vec<f64>> = (0..graph.n)
        .map(|v| {
            let mut acc = 0.0;
            graph
                .edges(v)
                .iter()
                .map(|&(_, w)| {
                    acc += w;
                    acc
                })
                .collect()
        })
        .collect();
    let first_order = params.p == 1.0 && params.q == 1.0;
    let n = graph.n;
    let total = n * params.walks_per_node;
    let walks = map_indexed(total, parallel_enabled(), |idx| {
        let round = idx / n;
        let start = idx % n;
        let mut rng = walk_rng(params.seed, start, round);
        let mut walk = Vec::with_capacity(params.walk_length);
        walk.push(start as u32);
        let mut current = start;
        let mut previous: Option<usize> = None;
        for _ in 1..params.walk_length {
            let edges = graph.edges(current);
            let next = if first_order || previous.is_none() {
                edges[sample_weighted(&mut rng, &cumulative[current])].0 as usize
            } else {
                let prev = previous.unwrap();
                let mut cum = Vec::with_capacity(edges.len());
                let mut acc = 0.0;
                for &(x, w) in edges {
                    let bias = if x as usize == prev {
                        1.0 / params.p
                    } else if graph.has_edge(prev, x) {
                        1.0
                    } else {
                        1.0 / params.q
                    };
                    acc += w * bias;
                    cum.push(acc);
                }
                edges[sample_weighted(&mut rng, &cum)].0 as usize
            };
            walk.push(next as u32);
            previous = Some(current);
            current = next;
        }
        walk
    });
    Ok(WalkCorpus {
        walks,
        walk_length: params.walk_length,
        walks_per_node: params.walks_per_node,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embio::EmbeddingSet;
    use crate::nne::graph::{GraphMode, NeighborGraph};

    fn graph_from_edges(_n: usize, edges: Vec<Vec<(u32, f64)>>, k: usize) -> NeighborGraph {
        NeighborGraph::from_edge_lists(GraphMode::Weighted, k, None, edges).unwrap()
    }

    #[test]
    fn single_edge_cycle_is_deterministic() {
        let n = 5;
        let edges = (0..n).map(|i| vec![(((i + 1) % n) as u32, 1.0)]).collect();
        let g = graph_from_edges(n, edges, 1);
        let corpus = generate_walks(&g, &WalkParams {
            walk_length: 12,
            walks_per_node: 1,
            ..Default::default()
        })
        .unwrap();
        for walk in &corpus.walks {
            let start = walk[0];
            for (step, &node) in walk.iter().enumerate() {
                assert_eq!(node, (start + step as u32) % n as u32);
            }
        }
    }

    #[test]
    fn walk_counts_and_starts() {
        let set = random_set(10, 4, 5);
        let g = crate::nne::graph::knn_graph(&set, GraphMode::Weighted, 3, None).unwrap();
        let corpus = generate_walks(&g, &WalkParams {
            walk_length: 20,
            walks_per_node: 2,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(corpus.walks.len(), 20);
        // round-major order: each round visits every start node once
        for round in 0..2 {
            for node in 0..10 {
                assert_eq!(corpus.walks[round * 10 + node][0], node as u32);
            }
        }
        for w in &corpus.walks {
            assert!(w.len() <= 20);
        }
    }

    #[test]
    fn consecutive_pairs_are_edges() {
        let set = random_set(30, 5, 6);
        let g = crate::nne::graph::knn_graph(&set, GraphMode::Weighted, 4, None).unwrap();
        for (p, q) in [(1.0, 1.0), (0.5, 2.0)] {
            let corpus = generate_walks(&g, &WalkParams {
                walk_length: 15,
                walks_per_node: 2,
                p,
                q,
                seed: 3,
            })
            .unwrap();
            for walk in &corpus.walks {
                for pair in walk.windows(2) {
                    assert!(g.has_edge(pair[0] as usize, pair[1]));
                }
            }
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let set = random_set(20, 4, 7);
        let g = crate::nne::graph::knn_graph(&set, GraphMode::Weighted, 3, None).unwrap();
        let params = WalkParams {
            seed: 42,
            ..Default::default()
        };
        let a = generate_walks(&g, &params).unwrap();
        let b = generate_walks(&g, &params).unwrap();
        assert_eq!(a.walks, b.walks);
    }

    #[test]
    fn first_order_frequencies_match_weights() {
        // 3-node weighted star: node 0 -> 1 (weight 3), 0 -> 2 (weight 1);
        // nodes 1 and 2 return to 0
        let g = graph_from_edges(
            3,
            vec![
                vec![(1, 3.0), (2, 1.0)],
                vec![(0, 1.0)],
                vec![(0, 1.0)],
            ],
            1,
        );
        let corpus = generate_walks(&g, &WalkParams {
            walk_length: 20_001,
            walks_per_node: 4,
            seed: 11,
            ..Default::default()
        })
        .unwrap();
        let mut from0 = [0usize; 3];
        let mut steps = 0usize;
        for walk in &corpus.walks {
            for pair in walk.windows(2) {
                if pair[0] == 0 {
                    from0[pair[1] as usize] += 1;
                    steps += 1;
                }
            }
        }
        assert!(steps > 100_000, "only {steps} transitions from node 0");
        let p1 = from0[1] as f64 / steps as f64;
        let p2 = from0[2] as f64 / steps as f64;
        assert!((p1 - 0.75).abs() < 0.01, "p1={p1}");
        assert!((p2 - 0.25).abs() < 0.01, "p2={p2}");
    }

    #[test]
    fn return_bias_respected() {
        // triangle graph; with tiny p the walk should revisit the previous
        // node far more often than the uniform 1/2
        let g = graph_from_edges(
            3,
            vec![
                vec![(1, 1.0), (2, 1.0)],
                vec![(0, 1.0), (2, 1.0)],
                vec![(0, 1.0), (1, 1.0)],
            ],
            2,
        );
        let corpus = generate_walks(&g, &WalkParams {
            walk_length: 5000,
            walks_per_node: 2,
            p: 0.05,
            q: 1.0,
            seed: 5,
        })
        .unwrap();
        let mut returns = 0usize;
        let mut steps = 0usize;
        for walk in &corpus.walks {
            for w in walk.windows(3) {
                steps += 1;
                if w[0] == w[2] {
                    returns += 1;
                }
            }
        }
        let rate = returns as f64 / steps as f64;
        assert!(rate > 0.85, "return rate {rate}");
    }

    fn random_set(n: usize, d: usize, seed: u64) -> EmbeddingSet {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let words = (0..n).map(|i| format!("w{i}")).collect();
        let matrix = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        EmbeddingSet::new("rand", words, matrix, d).unwrap()
    }
}
