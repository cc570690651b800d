//! Exact directed k-nearest-neighbor graphs over the vocabulary, in the
//! thresholded, weighted and unweighted variants.

use std::io::Write;
use std::path::Path;

use crate::embio::EmbeddingSet;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::par::{map_indexed, parallel_enabled};

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_T: f64 = 0.05;

// edge weights must stay positive for the walk sampler
const MIN_WEIGHT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphMode {
    Thresholded,
    Weighted,
    Unweighted,
}

impl std::str::FromStr for GraphMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "thresholded" => Ok(GraphMode::Thresholded),
            "weighted" => Ok(GraphMode::Weighted),
            "unweighted" => Ok(GraphMode::Unweighted),
            other => Err(Error::InvalidArg(format!("unknown graph mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for GraphMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GraphMode::Thresholded => "thresholded",
            GraphMode::Weighted => "weighted",
            GraphMode::Unweighted => "unweighted",
        })
    }
}

/// Sparse directed graph over vocabulary indices. Per-node edge lists are
/// sorted by target index.
#[derive(Debug, Clone)]
pub struct NeighborGraph {
    pub n: usize,
    pub mode: GraphMode,
    pub k: usize,
    pub t: Option<f64>,
    edges: Vec<Vec<(u32, f64)>>,
}

impl NeighborGraph {
    /// Build a graph from explicit per-node edge lists. Lists are sorted by
    /// target; self-loops and duplicate targets are rejected.
    pub fn from_edge_lists(mode: GraphMode, k: usize, t: Option<f64>, edges: Vec<Vec<(u32, f64)>>) -> Result<Self> {
        let n = edges.len();
        let mut sorted = edges;
        for (i, e) in sorted.iter_mut().enumerate() {
            e.sort_by_key(|&(tgt, _)| tgt);
            if e.iter().any(|&(tgt, _)| tgt as usize == i) {
                return Err(Error::InvalidArg(format!("self-loop at node {i}")));
            }
            if e.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidArg(format!("duplicate edge at node {i}")));
            }
            if e.iter().any(|&(tgt, w)| tgt as usize >= n || w <= 0.0) {
                return Err(Error::InvalidArg(format!("invalid edge at node {i}")));
            }
        }
        Ok(NeighborGraph {
            n,
            mode,
            k,
            t,
            edges: sorted,
        })
    }

    pub fn edges(&self, node: usize) -> &[(u32, f64)] {
        &self.edges[node]
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.edges[node].len()
    }

    pub fn has_edge(&self, source: usize, target: u32) -> bool {
        self.edges[source].binary_search_by_key(&target, |e| e.0).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// Counts of nodes per out-degree, ascending by degree.
    pub fn out_degree_histogram(&self) -> Vec<(usize, usize)> {
        let mut counts = std::collections::BTreeMap::new();
        for e in &self.edges {
            *counts.entry(e.len()).or_insert(0usize) += 1;
        }
        counts.into_iter().collect()
    }

    /// One "source_word target_word weight" line per edge.
    pub fn dump(&self, set: &EmbeddingSet, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        for (src, edges) in self.edges.iter().enumerate() {
            for &(tgt, weight) in edges {
                writeln!(w, "{} {} {:.6}", set.word(src), set.word(tgt as usize), weight)
                    .map_err(|e| Error::io(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Exact k-NN graph by cosine similarity. Ties broken toward the lower
/// vocabulary index; self-edges excluded.
pub fn knn_graph(set: &EmbeddingSet, mode: GraphMode, k: usize, t: Option<f64>) -> Result<NeighborGraph> {
    knn_graph_with(set, mode, k, t, parallel_enabled())
}

#[doc(hidden)]
pub fn knn_graph_with(
    set: &EmbeddingSet,
    mode: GraphMode,
    k: usize,
    t: Option<f64>,
    parallel: bool,
) -> Result<NeighborGraph> {
    let n = set.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidArg(format!("k={k} must satisfy 1 <= k < |V|={n}")));
    }
    if mode == GraphMode::Thresholded && t.is_none() {
        return Err(Error::InvalidArg("thresholded mode requires a threshold t".into()));
    }
    let d = set.dim();
    let mut unit = vec![0.0; n * d];
    for (i, row) in set.rows().enumerate() {
        let nm = norm(row);
        if nm == 0.0 {
            return Err(Error::Data(format!("zero-norm vector for word '{}'", set.word(i))));
        }
        for (o, v) in unit[i * d..(i + 1) * d].iter_mut().zip(row) {
            *o = v / nm;
        }
    }
    let unit = &unit;
    let edges = map_indexed(n, parallel, |i| {
        let q = &unit[i * d..(i + 1) * d];
        let mut sims = vec![0.0f64; n];
        for (j, s) in sims.iter_mut().enumerate() {
            *s = dot(q, &unit[j * d..(j + 1) * d]);
        }
        // top-k by similarity, ties to the lower index; skip self
        let mut order: Vec<u32> = (0..n as u32).filter(|&j| j as usize != i).collect();
        order.sort_by(|&a, &b| {
            sims[b as usize]
                .partial_cmp(&sims[a as usize])
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut targets: Vec<u32> = order[..k].to_vec();
        if mode == GraphMode::Thresholded {
            let thresh = t.unwrap();
            for &j in &order[k..] {
                if sims[j as usize] >= thresh {
                    targets.push(j);
                } else {
                    break; // order is descending by similarity
                }
            }
        }
        targets.sort_unstable();
        targets
            .into_iter()
            .map(|j| {
                let w = match mode {
                    GraphMode::Unweighted => 1.0,
                    _ => sims[j as usize].clamp(MIN_WEIGHT, 2.0),
                };
                (j, w)
            })
            .collect::<Vec<_>>()
    });
    Ok(NeighborGraph {
        n,
        mode,
        k,
        t: if mode == GraphMode::Thresholded { t } else { None },
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cosine_similarity;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_set(n: usize, d: usize, seed: u64) -> EmbeddingSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let words = (0..n).map(|i| format!("w{i}")).collect();
        let matrix = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        EmbeddingSet::new("rand", words, matrix, d).unwrap()
    }

    fn circle_set() -> EmbeddingSet {
        let angles = [0.0f64, 1.0, 90.0, 180.0];
        let matrix = angles
            .iter()
            .flat_map(|a| {
                let r = a.to_radians();
                [r.cos(), r.sin()]
            })
            .collect();
        let words = (0..4).map(|i| format!("p{i}")).collect();
        EmbeddingSet::new("circle", words, matrix, 2).unwrap()
    }

    /// Brute-force oracle: full sort of all cosine similarities per node.
    pub fn naive_top_k(set: &EmbeddingSet, k: usize) -> Vec<Vec<u32>> {
        (0..set.len())
            .map(|i| {
                let mut scored: Vec<(u32, f64)> = (0..set.len())
                    .filter(|&j| j != i)
                    .map(|j| (j as u32, cosine_similarity(set.row(i), set.row(j))))
                    .collect();
                scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
                let mut t: Vec<u32> = scored[..k].iter().map(|e| e.0).collect();
                t.sort_unstable();
                t
            })
            .collect()
    }

    #[test]
    fn circle_nearest_by_angle() {
        let set = circle_set();
        let g = knn_graph(&set, GraphMode::Weighted, 1, None).unwrap();
        assert_eq!(g.edges(0).len(), 1);
        assert_eq!(g.edges(0)[0].0, 1);
        let un = knn_graph(&set, GraphMode::Unweighted, 1, None).unwrap();
        assert_eq!(un.edges(0)[0].0, 1);
        assert_eq!(un.edges(0)[0].1, 1.0);
    }

    #[test]
    fn matches_naive_oracle() {
        let set = random_set(100, 8, 42);
        let g = knn_graph(&set, GraphMode::Weighted, 5, None).unwrap();
        let oracle = naive_top_k(&set, 5);
        for i in 0..set.len() {
            let targets: Vec<u32> = g.edges(i).iter().map(|e| e.0).collect();
            assert_eq!(targets, oracle[i], "node {i}");
        }
    }

    #[test]
    fn degree_contracts_per_mode() {
        let set = random_set(200, 10, 7);
        for mode in [GraphMode::Weighted, GraphMode::Unweighted] {
            let g = knn_graph(&set, mode, 5, None).unwrap();
            assert!((0..g.n).all(|i| g.out_degree(i) == 5));
        }
        let g = knn_graph(&set, GraphMode::Thresholded, 5, Some(0.05)).unwrap();
        assert!((0..g.n).all(|i| g.out_degree(i) >= 5));
    }

    #[test]
    fn no_self_loops_or_duplicates() {
        let set = random_set(80, 6, 9);
        let g = knn_graph(&set, GraphMode::Thresholded, 5, Some(0.0)).unwrap();
        for i in 0..g.n {
            let e = g.edges(i);
            assert!(e.iter().all(|&(t, _)| t as usize != i));
            assert!(e.windows(2).all(|w| w[0].0 < w[1].0));
        }
    }

    #[test]
    fn thresholded_degree_monotone_in_t() {
        let set = random_set(100, 8, 11);
        let mut prev: Option<usize> = None;
        for t in [0.01, 0.05, 0.075, 0.2] {
            let g = knn_graph(&set, GraphMode::Thresholded, 5, Some(t)).unwrap();
            let total = g.edge_count();
            if let Some(p) = prev {
                assert!(total <= p, "t={t}: {total} > {p}");
            }
            prev = Some(total);
        }
    }

    #[test]
    fn isometries_leave_graph_unchanged() {
        use crate::affine::{apply_preset, Preset};
        let set = random_set(60, 10, 13);
        let base = knn_graph(&set, GraphMode::Weighted, 5, None).unwrap();
        for preset in [Preset::Rotation2d, Preset::Reflection, Preset::Dilation] {
            let out = apply_preset(&set, preset).unwrap();
            let g = knn_graph(&out, GraphMode::Weighted, 5, None).unwrap();
            for i in 0..g.n {
                let a: Vec<u32> = base.edges(i).iter().map(|e| e.0).collect();
                let b: Vec<u32> = g.edges(i).iter().map(|e| e.0).collect();
                assert_eq!(a, b, "{preset:?} node {i}");
                for (x, y) in base.edges(i).iter().zip(g.edges(i)) {
                    assert!((x.1 - y.1).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn parallel_equals_sequential() {
        let set = random_set(150, 8, 17);
        let a = knn_graph_with(&set, GraphMode::Thresholded, 5, Some(0.05), true).unwrap();
        let b = knn_graph_with(&set, GraphMode::Thresholded, 5, Some(0.05), false).unwrap();
        for i in 0..a.n {
            assert_eq!(a.edges(i), b.edges(i));
        }
    }

    #[test]
    fn k_out_of_range_rejected() {
        let set = random_set(10, 4, 19);
        assert!(knn_graph(&set, GraphMode::Weighted, 10, None).is_err());
        assert!(knn_graph(&set, GraphMode::Weighted, 0, None).is_err());
        assert!(knn_graph(&set, GraphMode::Thresholded, 3, None).is_err());
    }

    #[test]
    fn dump_format_and_histogram() {
        let set = circle_set();
        let g = knn_graph(&set, GraphMode::Weighted, 2, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.txt");
        g.dump(&set, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let first = text.lines().next().unwrap();
        let parts: Vec<&str> = first.split(' ').collect();
        assert_eq!(parts.len(), 3);
        assert!(parts[2].contains('.') && parts[2].split('.').nth(1).unwrap().len() == 6);
        let hist = g.out_degree_histogram();
        assert_eq!(hist, vec![(2, 4)]);
    }
}
