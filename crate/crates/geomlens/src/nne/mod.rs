//! Nearest-neighbor encoding: build a directed k-NN graph over the
//! vocabulary and re-embed it into d dimensions via biased random walks
//! plus skip-gram with negative sampling.

pub mod graph;
pub mod sgns;
pub mod walks;

pub use graph::{knn_graph, GraphMode, NeighborGraph, DEFAULT_K, DEFAULT_T};
pub use sgns::{train_sgns, SgnsParams};
pub use walks::{generate_walks, WalkCorpus, WalkParams};

use crate::embio::EmbeddingSet;
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct NneParams {
    pub mode: GraphMode,
    pub k: usize,
    pub t: f64,
    pub walks: WalkParams,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
}

impl NneParams {
    pub fn new(mode: GraphMode, seed: u64) -> Self {
        NneParams {
            mode,
            k: DEFAULT_K,
            t: DEFAULT_T,
            walks: WalkParams {
                seed,
                ..Default::default()
            },
            window: sgns::DEFAULT_WINDOW,
            negatives: sgns::DEFAULT_NEGATIVES,
            epochs: 1,
        }
    }
}

/// Summary of the thresholded out-degree distribution, mirroring the
/// forced-top-k analysis reported alongside the graphs.
#[derive(Debug, Clone)]
pub struct DegreeReport {
    pub k: usize,
    pub nodes: usize,
    /// nodes whose out-degree exceeds k because of the threshold rule
    pub increased: usize,
    pub max_out_degree: usize,
    pub histogram: Vec<(usize, usize)>,
}

pub fn degree_report(graph: &NeighborGraph) -> DegreeReport {
    let histogram = graph.out_degree_histogram();
    DegreeReport {
        k: graph.k,
        nodes: graph.n,
        increased: histogram.iter().filter(|&&(d, _)| d > graph.k).map(|&(_, c)| c).sum(),
        max_out_degree: histogram.last().map_or(0, |&(d, _)| d),
        histogram,
    }
}

/// Full NNE transform: graph -> walks -> SGNS. The output keeps the source
/// vocabulary and dimensionality.
pub fn nne_encode(set: &EmbeddingSet, params: &NneParams) -> Result<EmbeddingSet> {
    let graph = knn_graph(
        set,
        params.mode,
        params.k,
        (params.mode == GraphMode::Thresholded).then_some(params.t),
    )?;
    nne_encode_from_graph(set, &graph, params)
}

pub fn nne_encode_from_graph(set: &EmbeddingSet, graph: &NeighborGraph, params: &NneParams) -> Result<EmbeddingSet> {
    let corpus = generate_walks(graph, &params.walks)?;
    let sgns_params = SgnsParams {
        dim: set.dim(),
        window: params.window,
        negatives: params.negatives,
        epochs: params.epochs,
        seed: params.walks.seed,
    };
    let matrix = train_sgns(&corpus, graph.n, &sgns_params)?;
    set.with_matrix(format!("{}-nne-{}", set.name, params.mode), matrix)
}
