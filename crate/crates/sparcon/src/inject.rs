//! Benchmark anomaly injection: planted cliques for structural anomalies
//! and max-distance attribute swaps for attribute anomalies.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AnomalyLabels, AttributedGraph, NodeId, NodeLabel};
use crate::rng::{lane_rng, stage};

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct InjectionConfig {
    /// Clique size q.
    pub clique_size: usize,
    /// Number of planted cliques t.
    pub clique_count: usize,
    /// Number of attribute-swap victims.
    pub attribute_anomaly_count: usize,
    /// Candidate pool size k for each attribute swap.
    pub candidate_pool_size: usize,
    #[serde(default)]
    pub rng_seed: u64,
}

impl InjectionConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.clique_size < 2 {
            return Err(Error::Config(format!(
                "clique_size must be ≥ 2, got {}",
                self.clique_size
            )));
        }
        if self.candidate_pool_size < 1 {
            return Err(Error::Config("candidate_pool_size must be ≥ 1".into()));
        }
        let total = self.clique_size * self.clique_count + self.attribute_anomaly_count;
        if total > n {
            return Err(Error::Config(format!(
                "q·t + attribute count = {total} exceeds n = {n}"
            )));
        }
        Ok(())
    }

    pub fn total_anomalies(&self) -> usize {
        self.clique_size * self.clique_count + self.attribute_anomaly_count
    }
}

/// Plant `clique_count` disjoint cliques of `clique_size` nodes each,
/// drawn uniformly without replacement, and label the members.
pub fn inject_structural(
    g: &AttributedGraph,
    cfg: &InjectionConfig,
) -> Result<(AttributedGraph, AnomalyLabels)> {
    cfg.validate(g.n())?;
    let picked = cfg.clique_size * cfg.clique_count;
    if picked > g.n() {
        return Err(Error::Config(format!(
            "need {picked} distinct nodes for cliques, graph has {}",
            g.n()
        )));
    }

    let mut rng = lane_rng(cfg.rng_seed, stage::STRUCTURAL_INJECT, 0, 0);
    let mut pool: Vec<NodeId> = (0..g.n()).collect();
    pool.shuffle(&mut rng);
    pool.truncate(picked);

    let mut out = g.clone();
    let mut labels = AnomalyLabels::normal(g.n());
    let (adj, _) = out.parts_mut();
    for clique in pool.chunks(cfg.clique_size) {
        for (i, &u) in clique.iter().enumerate() {
            labels.set(u, NodeLabel::Structural);
            for &v in &clique[i + 1..] {
                adj.add_edge(u, v);
            }
        }
    }
    debug_assert!(out.adjacency().is_symmetric());
    Ok((out, labels))
}

/// For each victim (uniform among nodes not already labeled in `exclude`):
/// sample `candidate_pool_size` distinct other nodes and copy in the
/// candidate row with the largest Euclidean distance to the victim's row.
/// Adjacency is untouched; returned labels merge `exclude` with the new
/// attribute marks.
pub fn inject_attribute(
    g: &AttributedGraph,
    cfg: &InjectionConfig,
    exclude: &AnomalyLabels,
) -> Result<(AttributedGraph, AnomalyLabels)> {
    cfg.validate(g.n())?;
    if exclude.len() != g.n() {
        return Err(Error::Config(format!(
            "exclude labels cover {} nodes, graph has {}",
            exclude.len(),
            g.n()
        )));
    }
    let unlabeled: Vec<NodeId> = (0..g.n()).filter(|&u| !exclude.is_anomaly(u)).collect();
    if unlabeled.len() < cfg.attribute_anomaly_count {
        return Err(Error::Config(format!(
            "requested {} attribute anomalies but only {} unlabeled nodes remain",
            cfg.attribute_anomaly_count,
            unlabeled.len()
        )));
    }

    let mut rng = lane_rng(cfg.rng_seed, stage::ATTRIBUTE_INJECT, 0, 0);
    let mut victims = unlabeled;
    victims.shuffle(&mut rng);
    victims.truncate(cfg.attribute_anomaly_count);

    let mut out = g.clone();
    let mut labels = exclude.clone();
    for &victim in &victims {
        let candidates = sample_candidates(g.n(), victim, cfg.candidate_pool_size, &mut rng);
        let mut best: Option<(NodeId, f64)> = None;
        for &c in &candidates {
            let d = sq_dist(out.attr_row(victim), g.attr_row(c));
            // strict > keeps the first of tied candidates, in sampled order
            if best.map(|(_, bd)| d > bd).unwrap_or(true) {
                best = Some((c, d));
            }
        }
        let (chosen, _) = best.expect("candidate pool is non-empty");
        let row: Vec<f64> = g.attr_row(chosen).to_vec();
        let (_, attrs) = out.parts_mut();
        attrs.row_mut(victim).copy_from_slice(&row);
        labels.set(victim, NodeLabel::Attribute);
    }
    Ok((out, labels))
}

/// Structural then attribute injection with the shared config.
pub fn inject(
    g: &AttributedGraph,
    cfg: &InjectionConfig,
) -> Result<(AttributedGraph, AnomalyLabels)> {
    let (g1, labels) = inject_structural(g, cfg)?;
    inject_attribute(&g1, cfg, &labels)
}

/// `k` distinct nodes ≠ victim, uniform without replacement. Falls back to
/// every other node when k ≥ n − 1.
fn sample_candidates(n: usize, victim: NodeId, k: usize, rng: &mut impl Rng) -> Vec<NodeId> {
    let others = n - 1;
    if k >= others {
        return (0..n).filter(|&u| u != victim).collect();
    }
    let mut pool: Vec<NodeId> = (0..n).filter(|&u| u != victim).collect();
    // partial Fisher-Yates: only the first k positions are needed
    for i in 0..k {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Adjacency;
    use crate::mat::Mat;

    fn empty_graph(n: usize, f: usize) -> AttributedGraph {
        let attrs = Mat::from_vec(n, f, (0..n * f).map(|i| i as f64).collect());
        AttributedGraph::new(Adjacency::new(n), attrs).unwrap()
    }

    fn cfg(q: usize, t: usize, count: usize, k: usize, seed: u64) -> InjectionConfig {
        InjectionConfig {
            clique_size: q,
            clique_count: t,
            attribute_anomaly_count: count,
            candidate_pool_size: k,
            rng_seed: seed,
        }
    }

    #[test]
    fn single_clique_on_empty_graph_adds_triangle() {
        let g = empty_graph(5, 2);
        let (out, labels) = inject_structural(&g, &cfg(3, 1, 0, 1, 11)).unwrap();
        assert_eq!(out.m(), 3);
        assert_eq!(labels.anomaly_count(), 3);
        let members: Vec<NodeId> = (0..5).filter(|&u| labels.is_anomaly(u)).collect();
        for (i, &u) in members.iter().enumerate() {
            for &v in &members[i + 1..] {
                assert!(out.adjacency().has_edge(u, v));
            }
        }
        assert_eq!(out.attributes(), g.attributes());
    }

    #[test]
    fn zero_cliques_is_identity() {
        let g = empty_graph(4, 2);
        let (out, labels) = inject_structural(&g, &cfg(3, 0, 0, 1, 1)).unwrap();
        assert_eq!(out, g);
        assert_eq!(labels.anomaly_count(), 0);
    }

    #[test]
    fn labeled_count_is_q_times_t() {
        let g = empty_graph(200, 3);
        let (out, labels) = inject_structural(&g, &cfg(15, 5, 0, 1, 3)).unwrap();
        assert_eq!(labels.anomaly_count(), 75);
        assert!(out.adjacency().is_symmetric());
        // disjoint cliques on an empty graph contribute exactly t·C(q,2) edges
        assert_eq!(out.m(), 5 * (15 * 14) / 2);
    }

    #[test]
    fn attribute_swap_with_single_candidate_copies_that_row() {
        let g = empty_graph(4, 2);
        let c = cfg(2, 0, 1, 1, 5);
        let (out, labels) = inject_attribute(&g, &c, &AnomalyLabels::normal(4)).unwrap();
        let victim = (0..4).find(|&u| labels.is_anomaly(u)).unwrap();
        assert_eq!(labels.get(victim), NodeLabel::Attribute);
        // the new row must be some other node's original row
        let row = out.attr_row(victim);
        assert!((0..4).any(|u| u != victim && g.attr_row(u) == row));
        assert_eq!(out.adjacency(), g.adjacency());
    }

    #[test]
    fn identical_rows_leave_values_unchanged_but_label_set() {
        let attrs = Mat::from_vec(3, 2, vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let g = AttributedGraph::new(Adjacency::new(3), attrs).unwrap();
        let c = cfg(2, 0, 1, 2, 9);
        let (out, labels) = inject_attribute(&g, &c, &AnomalyLabels::normal(3)).unwrap();
        assert_eq!(out.attributes(), g.attributes());
        assert_eq!(labels.anomaly_count(), 1);
    }

    #[test]
    fn combined_injection_hits_configured_total() {
        let g = empty_graph(300, 4);
        let c = cfg(15, 5, 75, 50, 21);
        let (out, labels) = inject(&g, &c).unwrap();
        assert_eq!(labels.anomaly_count(), c.total_anomalies());
        assert_eq!(
            labels
                .iter()
                .filter(|&l| l == NodeLabel::Structural)
                .count(),
            75
        );
        assert_eq!(
            labels.iter().filter(|&l| l == NodeLabel::Attribute).count(),
            75
        );
        assert!(out.adjacency().is_symmetric());
    }

    #[test]
    fn same_seed_reproduces_bit_for_bit() {
        let g = empty_graph(60, 3);
        let c = cfg(4, 3, 10, 5, 77);
        let a = inject(&g, &c).unwrap();
        let b = inject(&g, &c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn insufficient_nodes_is_config_error() {
        let g = empty_graph(5, 2);
        assert!(matches!(
            inject_structural(&g, &cfg(3, 2, 0, 1, 1)),
            Err(Error::Config(_))
        ));
        // exclusions from elsewhere can starve the victim pool even when the
        // config itself fits the graph
        let mut all_taken = AnomalyLabels::normal(5);
        for u in 0..4 {
            all_taken.set(u, NodeLabel::Structural);
        }
        assert!(matches!(
            inject_attribute(&g, &cfg(2, 0, 2, 1, 1), &all_taken),
            Err(Error::Config(_))
        ));
    }
}
