//! Random-walk-with-restart subgraph sampling and contrastive pair
//! construction.
//!
//! A pair holds the sampled node ids (target first), the gathered
//! attribute rows with the target's copy zeroed out, the normalized
//! induced adjacency D̃^{-1/2}(A+I)D̃^{-1/2}, and the similarity vector
//! between the consuming target and each sampled node.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Adjacency, AttributedGraph, NodeId};
use crate::mat::{dot, Mat};
use crate::rng::{lane_rng, stage};

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct SamplerConfig {
    /// Subgraph size P.
    pub subgraph_size: usize,
    /// Probability of jumping back to the target at each step.
    pub restart_prob: f64,
    /// Walk-step budget before padding kicks in.
    pub max_steps: usize,
    #[serde(default)]
    pub rng_seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            subgraph_size: 4,
            restart_prob: 0.3,
            max_steps: 128,
            rng_seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subgraph_size < 1 {
            return Err(Error::Config("subgraph_size must be ≥ 1".into()));
        }
        if !(self.restart_prob > 0.0 && self.restart_prob < 1.0) {
            return Err(Error::Config(format!(
                "restart_prob must be in (0, 1), got {}",
                self.restart_prob
            )));
        }
        if self.max_steps < self.subgraph_size {
            return Err(Error::Config(format!(
                "max_steps {} is smaller than subgraph_size {}",
                self.max_steps, self.subgraph_size
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViewTag {
    Dense,
    Spar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

/// A sampled subgraph ready for the contrastive model.
#[derive(Clone, Debug, PartialEq)]
pub struct SubgraphPair {
    /// Sampled global ids, subgraph's own target first; padded positions
    /// repeat the target id.
    pub node_ids: Vec<NodeId>,
    /// First `distinct_count` positions are distinct sampled nodes; the
    /// tail is padding.
    pub distinct_count: usize,
    /// P×f attribute rows. Row 0 is zeroed (anonymized); padded positions
    /// are zeroed too, so they stay neutral in the readout instead of
    /// smuggling the target's own attributes back in.
    pub attrs: Mat,
    /// P×P normalized adjacency with self-loops.
    pub adj_norm: Mat,
    /// Similarity of the consuming target to each sampled node, min-max
    /// normalized within the vector.
    pub sim_vector: Vec<f64>,
    pub view_tag: ViewTag,
    pub polarity: Polarity,
}

impl SubgraphPair {
    pub fn is_padded(&self, k: usize) -> bool {
        k >= self.distinct_count
    }
}

/// The four pairs a target contributes to a training batch.
#[derive(Clone, Debug)]
pub struct TargetPairs {
    pub target: NodeId,
    pub pos_dense: SubgraphPair,
    pub neg_dense: SubgraphPair,
    pub pos_spar: SubgraphPair,
    pub neg_spar: SubgraphPair,
}

/// RWR node collection: walk from `target`, restarting with
/// `restart_prob`, until P distinct nodes are seen or the step budget is
/// spent; shortfalls are padded by repeating the target.
pub fn rwr_sample(
    adj: &Adjacency,
    target: NodeId,
    cfg: &SamplerConfig,
    rng: &mut impl Rng,
) -> Vec<NodeId> {
    let p = cfg.subgraph_size;
    let mut collected = Vec::with_capacity(p);
    collected.push(target);
    let mut current = target;
    let mut steps = 0;
    while collected.len() < p && steps < cfg.max_steps {
        steps += 1;
        if rng.random::<f64>() < cfg.restart_prob {
            current = target;
            continue;
        }
        let nbrs = adj.neighbors(current);
        if nbrs.is_empty() {
            // dead end (possible in the spar view): forced restart
            current = target;
            continue;
        }
        current = nbrs[rng.random_range(0..nbrs.len())];
        if !collected.contains(&current) {
            collected.push(current);
        }
    }
    while collected.len() < p {
        collected.push(target);
    }
    collected
}

/// Assemble a pair from sampled ids. `adj` must be the adjacency the ids
/// were sampled on; `contrast_target` is the node the pair will be scored
/// against (equals `node_ids[0]` for positive pairs).
pub fn build_pair(
    adj: &Adjacency,
    g: &AttributedGraph,
    node_ids: &[NodeId],
    contrast_target: NodeId,
    view_tag: ViewTag,
    polarity: Polarity,
) -> Result<SubgraphPair> {
    let p = node_ids.len();
    if p == 0 {
        return Err(Error::Internal("empty subgraph sample".into()));
    }
    let f = g.f();
    let distinct_count = distinct_prefix_len(node_ids);

    // gather distinct rows, then anonymize the subgraph's own target copy;
    // padded tail positions stay zero
    let mut attrs = Mat::zeros(p, f);
    for (k, &id) in node_ids.iter().enumerate().take(distinct_count).skip(1) {
        attrs.row_mut(k).copy_from_slice(g.attr_row(id));
    }

    let adj_norm = normalized_subgraph_adjacency(adj, node_ids);

    // similarity vector against the consuming target's original attributes
    let target_row = g.attr_row(contrast_target);
    let raw: Vec<f64> = node_ids
        .iter()
        .map(|&id| dot(target_row, g.attr_row(id)))
        .collect();
    let sim_vector = min_max_normalize(&raw);

    Ok(SubgraphPair {
        node_ids: node_ids.to_vec(),
        distinct_count,
        attrs,
        adj_norm,
        sim_vector,
        view_tag,
        polarity,
    })
}

/// rwr_sample collects distinct ids then pads by repeating the target, so
/// the distinct prefix ends at the first repeat.
fn distinct_prefix_len(node_ids: &[NodeId]) -> usize {
    let mut seen = Vec::with_capacity(node_ids.len());
    for (k, id) in node_ids.iter().enumerate() {
        if seen.contains(id) {
            return k;
        }
        seen.push(*id);
    }
    node_ids.len()
}

/// Sample a positive pair for `target` on the given view.
pub fn sample_positive(
    adj: &Adjacency,
    g: &AttributedGraph,
    target: NodeId,
    cfg: &SamplerConfig,
    view_tag: ViewTag,
    rng: &mut impl Rng,
) -> Result<SubgraphPair> {
    let ids = rwr_sample(adj, target, cfg, rng);
    build_pair(adj, g, &ids, target, view_tag, Polarity::Positive)
}

/// D̃^{-1/2}(A_sub + I)D̃^{-1/2} over the sampled ids. Padded duplicate
/// positions carry only their self-loop, acting as neutral mass.
fn normalized_subgraph_adjacency(adj: &Adjacency, node_ids: &[NodeId]) -> Mat {
    let p = node_ids.len();
    let mut seen = Vec::with_capacity(p);
    let mut padded = vec![false; p];
    for (k, &id) in node_ids.iter().enumerate() {
        if seen.contains(&id) {
            padded[k] = true;
        } else {
            seen.push(id);
        }
    }

    let mut tilde = Mat::zeros(p, p);
    for u in 0..p {
        tilde.set(u, u, 1.0);
        if padded[u] {
            continue;
        }
        for v in (u + 1)..p {
            if padded[v] || node_ids[u] == node_ids[v] {
                continue;
            }
            if adj.has_edge(node_ids[u], node_ids[v]) {
                tilde.set(u, v, 1.0);
                tilde.set(v, u, 1.0);
            }
        }
    }

    let inv_sqrt_deg: Vec<f64> = (0..p)
        .map(|u| {
            let deg: f64 = tilde.row(u).iter().sum();
            1.0 / deg.sqrt()
        })
        .collect();
    let mut norm = Mat::zeros(p, p);
    for u in 0..p {
        for v in 0..p {
            let a = tilde.get(u, v);
            if a != 0.0 {
                norm.set(u, v, inv_sqrt_deg[u] * a * inv_sqrt_deg[v]);
            }
        }
    }
    norm
}

fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if span > 0.0 {
        values.iter().map(|&v| (v - lo) / span).collect()
    } else {
        vec![1.0; values.len()]
    }
}

/// Sample the four training pairs for every target in the batch. The
/// negative pair of target i reuses the positive subgraph sampled for the
/// target at position (i+1) mod B, re-scored against target i.
pub fn make_batch_pairs(
    g: &AttributedGraph,
    spar_adj: &Adjacency,
    batch: &[NodeId],
    cfg: &SamplerConfig,
    round: u64,
) -> Result<Vec<TargetPairs>> {
    cfg.validate()?;
    if batch.len() < 2 {
        return Err(Error::Config(format!(
            "contrastive batches need ≥ 2 targets, got {}",
            batch.len()
        )));
    }

    let positives: Vec<(SubgraphPair, SubgraphPair)> = batch
        .iter()
        .map(|&t| {
            let mut rng_d = lane_rng(cfg.rng_seed, stage::TRAIN_SAMPLE, round, (t as u64) << 1);
            let mut rng_s = lane_rng(
                cfg.rng_seed,
                stage::TRAIN_SAMPLE,
                round,
                ((t as u64) << 1) | 1,
            );
            let pos_dense = sample_positive(g.adjacency(), g, t, cfg, ViewTag::Dense, &mut rng_d)?;
            let pos_spar = sample_positive(spar_adj, g, t, cfg, ViewTag::Spar, &mut rng_s)?;
            Ok((pos_dense, pos_spar))
        })
        .collect::<Result<_>>()?;

    let b = batch.len();
    batch
        .iter()
        .enumerate()
        .map(|(i, &target)| {
            let donor = (i + 1) % b;
            let neg_dense = rescore_as_negative(g, &positives[donor].0, target);
            let neg_spar = rescore_as_negative(g, &positives[donor].1, target);
            Ok(TargetPairs {
                target,
                pos_dense: positives[i].0.clone(),
                neg_dense,
                pos_spar: positives[i].1.clone(),
                neg_spar,
            })
        })
        .collect()
}

/// Reuse another target's positive subgraph as a negative pair: same ids,
/// attrs, and topology; only the similarity vector is recomputed against
/// the contrasting target.
pub fn rescore_as_negative(
    g: &AttributedGraph,
    donor: &SubgraphPair,
    contrast_target: NodeId,
) -> SubgraphPair {
    let target_row = g.attr_row(contrast_target);
    let raw: Vec<f64> = donor
        .node_ids
        .iter()
        .map(|&id| dot(target_row, g.attr_row(id)))
        .collect();
    SubgraphPair {
        node_ids: donor.node_ids.clone(),
        distinct_count: donor.distinct_count,
        attrs: donor.attrs.clone(),
        adj_norm: donor.adj_norm.clone(),
        sim_vector: min_max_normalize(&raw),
        view_tag: donor.view_tag,
        polarity: Polarity::Negative,
    }
}
