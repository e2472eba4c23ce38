//! Shared test oracles, kept independent of the library's own code paths:
//! everything here works on dense matrices and explicit loops.

// each test binary uses a different subset of these helpers
#![allow(dead_code)]
#![allow(clippy::needless_range_loop)]

use rand::Rng;
use sparcon::graph::{Adjacency, AttributedGraph};
use sparcon::mat::Mat;
use sparcon::rng::lane_rng;

/// Arbitrary random graph with uniform attributes, deterministic by seed.
pub fn random_graph(n: usize, target_edges: usize, f: usize, seed: u64) -> AttributedGraph {
    let mut rng = lane_rng(seed, 0xFEED, 0, 0);
    let attrs = Mat::from_vec(
        n,
        f,
        (0..n * f).map(|_| rng.random_range(-1.0..1.0)).collect(),
    );
    let mut adj = Adjacency::new(n);
    let max_edges = n * (n - 1) / 2;
    let want = target_edges.min(max_edges);
    let mut guard = 0;
    while adj.m() < want && guard < 100 * want.max(8) {
        guard += 1;
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            adj.add_edge(u, v);
        }
    }
    AttributedGraph::new(adj, attrs).unwrap()
}

/// Dense reference of the whole sparsification chain. Returns, per
/// directed edge orientation (i, j): the normalized similarity; plus the
/// surviving dense adjacency and per-node scores from the dense row
/// difference.
pub struct DenseSparsifier {
    pub normalized: Vec<Vec<f64>>,
    pub kept: Vec<Vec<bool>>,
    pub scores: Vec<f64>,
}

pub fn dense_sparsifier_reference(g: &AttributedGraph, epsilon: f64) -> DenseSparsifier {
    let n = g.n();
    let f = g.f();

    let mut dense_adj = vec![vec![false; n]; n];
    for (u, v) in g.adjacency().edges() {
        dense_adj[u][v] = true;
        dense_adj[v][u] = true;
    }

    // raw similarities over all pairs, explicit loops
    let mut raw = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..f {
                s += g.attributes().get(i, k) * g.attributes().get(j, k);
            }
            raw[i][j] = s;
        }
    }

    // per-row min/max restricted to existing edges
    let mut normalized = vec![vec![f64::NAN; n]; n];
    for i in 0..n {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..n {
            if dense_adj[i][j] {
                lo = lo.min(raw[i][j]);
                hi = hi.max(raw[i][j]);
            }
        }
        for j in 0..n {
            if dense_adj[i][j] {
                normalized[i][j] = if hi - lo > 0.0 {
                    (raw[i][j] - lo) / (hi - lo)
                } else {
                    1.0
                };
            }
        }
    }

    let mut kept = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            if dense_adj[i][j] && normalized[i][j] > epsilon && normalized[j][i] > epsilon {
                kept[i][j] = true;
            }
        }
    }

    // ‖a_i − a_i^spar‖ over dense 0/1 rows
    let scores = (0..n)
        .map(|i| {
            let mut diff = 0.0f64;
            for j in 0..n {
                let a = if dense_adj[i][j] { 1.0 } else { 0.0 };
                let b = if kept[i][j] { 1.0 } else { 0.0 };
                diff += (a - b) * (a - b);
            }
            diff.sqrt()
        })
        .collect();

    DenseSparsifier {
        normalized,
        kept,
        scores,
    }
}

/// O(n²) pairwise AUC: fraction of (positive, negative) pairs ranked
/// correctly, ties counted ½.
pub fn auc_pairwise(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0f64;
    let mut pairs = 0.0f64;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}
