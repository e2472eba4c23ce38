//! Edge similarity index, ε-threshold sparsification, and the per-node
//! sparsification score.
//!
//! For every edge {i, j} the raw similarity is the attribute dot product
//! x_i·x_j, then each node's incident values are min-max normalized into
//! [0, 1]. An edge survives sparsification only if its normalized value
//! exceeds ε from both endpoints' perspectives; the score of a node is the
//! Frobenius norm of the change to its adjacency row, i.e. √(removed edges).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Adjacency, AttributedGraph, NodeId};
use crate::mat::dot;

/// Which entries participate in each node's min-max normalization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormalizationScope {
    /// Min/max over the node's incident edges only (O(m·f) total).
    #[default]
    Edges,
    /// Min/max over the node's similarity to every other node (O(n²·f)).
    FullRow,
}

/// Raw and normalized attribute similarities for every directed edge
/// orientation, aligned with the adjacency's neighbor lists.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityIndex {
    targets: Vec<Vec<NodeId>>,
    raw: Vec<Vec<f64>>,
    norm: Vec<Vec<f64>>,
    row_min: Vec<f64>,
    row_max: Vec<f64>,
}

impl SimilarityIndex {
    pub fn n(&self) -> usize {
        self.targets.len()
    }

    /// Neighbor ids for node i, in the adjacency's sorted order.
    pub fn neighbors(&self, i: NodeId) -> &[NodeId] {
        &self.targets[i]
    }

    pub fn raw_row(&self, i: NodeId) -> &[f64] {
        &self.raw[i]
    }

    pub fn norm_row(&self, i: NodeId) -> &[f64] {
        &self.norm[i]
    }

    pub fn row_min(&self, i: NodeId) -> f64 {
        self.row_min[i]
    }

    pub fn row_max(&self, i: NodeId) -> f64 {
        self.row_max[i]
    }

    /// Normalized similarity of edge i→j, if present.
    pub fn normalized(&self, i: NodeId, j: NodeId) -> Option<f64> {
        let pos = self.targets[i].binary_search(&j).ok()?;
        Some(self.norm[i][pos])
    }

    /// Mean normalized similarity of node i to its neighbors; None for
    /// isolated nodes.
    pub fn mean_neighbor_similarity(&self, i: NodeId) -> Option<f64> {
        let row = &self.norm[i];
        if row.is_empty() {
            None
        } else {
            Some(row.iter().sum::<f64>() / row.len() as f64)
        }
    }
}

/// Spar-view topology: the input adjacency with low-similarity edges
/// deleted, plus per-node removal counts.
#[derive(Clone, Debug, PartialEq)]
pub struct SparsifiedView {
    adjacency: Adjacency,
    removed_count: Vec<usize>,
    epsilon: f64,
}

impl SparsifiedView {
    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn removed_count(&self, i: NodeId) -> usize {
        self.removed_count[i]
    }

    pub fn removed_counts(&self) -> &[usize] {
        &self.removed_count
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Compute raw and row-normalized similarities for every edge.
pub fn edge_similarities(g: &AttributedGraph) -> SimilarityIndex {
    edge_similarities_scoped(g, NormalizationScope::Edges)
}

pub fn edge_similarities_scoped(g: &AttributedGraph, scope: NormalizationScope) -> SimilarityIndex {
    let n = g.n();
    let mut targets = Vec::with_capacity(n);
    let mut raw = Vec::with_capacity(n);
    for i in 0..n {
        let nbrs = g.neighbors(i).to_vec();
        let sims: Vec<f64> = nbrs
            .iter()
            .map(|&j| dot(g.attr_row(i), g.attr_row(j)))
            .collect();
        targets.push(nbrs);
        raw.push(sims);
    }

    let mut row_min = vec![f64::INFINITY; n];
    let mut row_max = vec![f64::NEG_INFINITY; n];
    match scope {
        NormalizationScope::Edges => {
            for i in 0..n {
                for &v in &raw[i] {
                    row_min[i] = row_min[i].min(v);
                    row_max[i] = row_max[i].max(v);
                }
            }
        }
        NormalizationScope::FullRow => {
            for i in 0..n {
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let v = dot(g.attr_row(i), g.attr_row(j));
                    row_min[i] = row_min[i].min(v);
                    row_max[i] = row_max[i].max(v);
                }
            }
        }
    }

    let norm = raw
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let (lo, hi) = (row_min[i], row_max[i]);
            let span = hi - lo;
            row.iter()
                .map(|&v| {
                    // degenerate row (max = min): define every entry as 1.0 so
                    // single-neighbor nodes are not penalized by normalization
                    if span > 0.0 {
                        (v - lo) / span
                    } else {
                        1.0
                    }
                })
                .collect()
        })
        .collect();

    SimilarityIndex {
        targets,
        raw,
        norm,
        row_min,
        row_max,
    }
}

/// Keep edge {i, j} iff S_{i,j} > ε and S_{j,i} > ε: an edge suspicious
/// from either endpoint is removed.
pub fn sparsify(
    g: &AttributedGraph,
    sim: &SimilarityIndex,
    epsilon: f64,
) -> Result<SparsifiedView> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Config(format!(
            "epsilon must be in [0, 1], got {epsilon}"
        )));
    }
    if sim.n() != g.n() {
        return Err(Error::Internal(format!(
            "similarity index covers {} nodes, graph has {}",
            sim.n(),
            g.n()
        )));
    }
    let n = g.n();
    let mut adjacency = Adjacency::new(n);
    for (i, j) in g.adjacency().edges() {
        let forward = sim.normalized(i, j).expect("edge present in index");
        let backward = sim.normalized(j, i).expect("edge present in index");
        if forward > epsilon && backward > epsilon {
            adjacency.add_edge(i, j);
        }
    }
    let removed_count = (0..n).map(|i| g.degree(i) - adjacency.degree(i)).collect();
    Ok(SparsifiedView {
        adjacency,
        removed_count,
        epsilon,
    })
}

/// score^spar(v_i) = ‖a_i − a_i^spar‖ = √(removed incident edges).
pub fn spar_scores(view: &SparsifiedView) -> Vec<f64> {
    view.removed_count
        .iter()
        .map(|&c| (c as f64).sqrt())
        .collect()
}

/// One `i,j,raw,normalized` line per directed edge orientation.
pub fn similarity_dump_csv(sim: &SimilarityIndex) -> String {
    let mut out = String::from("i,j,raw,normalized\n");
    for i in 0..sim.n() {
        for ((j, r), s) in sim
            .neighbors(i)
            .iter()
            .zip(sim.raw_row(i))
            .zip(sim.norm_row(i))
        {
            out.push_str(&format!("{i},{j},{r},{s}\n"));
        }
    }
    out
}
