//! Deterministic benchmark graph generation: community-structured
//! topology with bag-of-words attributes whose word pools follow the
//! communities, so connected nodes tend to be similar. Used by the test
//! suites and by the `generate` command to provision datasets.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Adjacency, AttributedGraph};
use crate::mat::Mat;
use crate::rng::{lane_rng, stage};

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct SynthConfig {
    pub nodes: usize,
    /// Exact undirected edge count to generate.
    pub edges: usize,
    pub attr_dim: usize,
    pub communities: usize,
    /// Distinct word draws per node's binary attribute row.
    pub words_per_node: usize,
    /// Probability an edge stays within its anchor's community.
    pub intra_prob: f64,
    pub seed: u64,
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.nodes < 2 || self.communities < 1 || self.attr_dim < self.communities {
            return Err(Error::Config(
                "need ≥ 2 nodes, ≥ 1 community, attr_dim ≥ communities".into(),
            ));
        }
        let max_edges = self.nodes * (self.nodes - 1) / 2;
        if self.edges > max_edges {
            return Err(Error::Config(format!(
                "{} edges exceed the {} possible on {} nodes",
                self.edges, max_edges, self.nodes
            )));
        }
        if !(0.0..=1.0).contains(&self.intra_prob) {
            return Err(Error::Config("intra_prob must be in [0, 1]".into()));
        }
        if self.words_per_node < 1 {
            return Err(Error::Config("words_per_node must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Node u belongs to community u mod c; each community owns a contiguous
/// window of the word space plus a shared tail for noise.
pub fn community_graph(cfg: &SynthConfig) -> Result<AttributedGraph> {
    cfg.validate()?;
    let n = cfg.nodes;
    let c = cfg.communities;
    let f = cfg.attr_dim;
    let window = f / c;

    let mut rng = lane_rng(cfg.seed, stage::SYNTH, 0, 0);

    // word popularity is skewed: most draws land in the community's
    // "head" words, so same-community rows actually overlap
    let head = (window / 8).max(3).min(window.max(1));
    let mut attrs = Mat::zeros(n, f);
    for u in 0..n {
        let base = (u % c) * window;
        let row = attrs.row_mut(u);
        for _ in 0..cfg.words_per_node {
            let draw = rng.random::<f64>();
            let word = if draw < 0.1 || window == 0 {
                rng.random_range(0..f)
            } else if draw < 0.75 {
                base + rng.random_range(0..head)
            } else {
                base + rng.random_range(0..window)
            };
            row[word] = 1.0;
        }
    }

    let mut adjacency = Adjacency::new(n);
    let mut attempts = 0usize;
    let budget = 200 * cfg.edges.max(16);
    while adjacency.m() < cfg.edges {
        attempts += 1;
        if attempts > budget {
            return Err(Error::Config(format!(
                "could not place {} edges after {attempts} attempts",
                cfg.edges
            )));
        }
        let u = rng.random_range(0..n);
        let v = if rng.random::<f64>() < cfg.intra_prob {
            // partner from u's community
            let comm = u % c;
            let members = (n - comm).div_ceil(c);
            if members < 2 {
                continue;
            }
            let pick = comm + c * rng.random_range(0..members);
            if pick >= n {
                continue;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        if u != v {
            adjacency.add_edge(u, v);
        }
    }

    AttributedGraph::new(adjacency, attrs)
}

/// Citation-network-scale preset: 2708 nodes, 5429 edges, 1433 binary
/// attributes across 7 communities.
pub fn citation_scale(seed: u64) -> SynthConfig {
    SynthConfig {
        nodes: 2708,
        edges: 5429,
        attr_dim: 1433,
        communities: 7,
        words_per_node: 18,
        intra_prob: 0.85,
        seed,
    }
}

/// Small end-to-end benchmark preset: 500 nodes, 1500 edges, 64
/// attributes across 5 communities.
pub fn small_benchmark(seed: u64) -> SynthConfig {
    SynthConfig {
        nodes: 500,
        edges: 1500,
        attr_dim: 64,
        communities: 5,
        words_per_node: 6,
        intra_prob: 0.85,
        seed,
    }
}

/// Toy preset for fast smoke runs: 50 nodes, 3 communities.
pub fn toy_benchmark(seed: u64) -> SynthConfig {
    SynthConfig {
        nodes: 50,
        edges: 120,
        attr_dim: 32,
        communities: 3,
        words_per_node: 6,
        intra_prob: 0.9,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hits_exact_node_and_edge_counts() {
        let g = community_graph(&small_benchmark(3)).unwrap();
        assert_eq!(g.n(), 500);
        assert_eq!(g.m(), 1500);
        assert_eq!(g.f(), 64);
        assert!(g.adjacency().is_symmetric());
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = community_graph(&small_benchmark(9)).unwrap();
        let b = community_graph(&small_benchmark(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn intra_community_similarity_dominates() {
        let g = community_graph(&small_benchmark(1)).unwrap();
        let c = 5;
        let mut intra = (0.0, 0usize);
        let mut cross = (0.0, 0usize);
        for (u, v) in g.adjacency().edges() {
            let sim = crate::mat::dot(g.attr_row(u), g.attr_row(v));
            if u % c == v % c {
                intra.0 += sim;
                intra.1 += 1;
            } else {
                cross.0 += sim;
                cross.1 += 1;
            }
        }
        assert!(intra.1 > cross.1, "intra edges should dominate");
        let intra_mean = intra.0 / intra.1 as f64;
        let cross_mean = cross.0 / cross.1.max(1) as f64;
        assert!(
            intra_mean > cross_mean,
            "intra mean {intra_mean} vs cross {cross_mean}"
        );
    }

    #[test]
    fn rejects_impossible_edge_targets() {
        let mut cfg = small_benchmark(1);
        cfg.nodes = 4;
        cfg.edges = 10;
        assert!(community_graph(&cfg).is_err());
    }
}
