//! End-to-end orchestration: the epoch/batch training loop and the
//! multi-round inference phase that produces fused anomaly scores.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AnomalyLabels, AttributedGraph, NodeId};
use crate::model::{batch_loss, ContrastModel, ModelConfig, SparTargetMode, TargetScores};
use crate::nn::{adam_step, AdamConfig, ParamGroup};
use crate::rng::{lane_rng, stage};
use crate::sample::{
    build_pair, make_batch_pairs, rwr_sample, Polarity, SamplerConfig, TargetPairs, ViewTag,
};
use crate::sparsify::{
    edge_similarities_scoped, spar_scores, sparsify, NormalizationScope, SparsifiedView,
};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TrainConfig {
    /// Training epochs T.
    pub epochs: usize,
    /// Batch size B.
    pub batch_size: usize,
    pub learning_rate: f64,
    /// View balance γ in the loss and the inference fusion.
    pub gamma: f64,
    /// Score fusion trade-off λ.
    pub lambda: f64,
    /// Sparsification threshold ε.
    pub epsilon: f64,
    /// Inference sampling rounds R.
    pub rounds: usize,
    /// Embedding dimension d.
    pub embed_dim: usize,
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub spar_target: SparTargetMode,
    /// Scope of the per-node min-max in the similarity index.
    #[serde(default)]
    pub normalization: NormalizationScope,
    #[serde(default)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 300,
            learning_rate: 1e-3,
            gamma: 0.9,
            lambda: 0.2,
            epsilon: 0.1,
            rounds: 256,
            embed_dim: 64,
            sampler: SamplerConfig::default(),
            spar_target: SparTargetMode::default(),
            normalization: NormalizationScope::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma", self.gamma), ("lambda", self.lambda)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!(
                "epsilon must be in [0, 1], got {}",
                self.epsilon
            )));
        }
        if self.batch_size < 2 {
            return Err(Error::Config("batch_size must be ≥ 2".into()));
        }
        if self.rounds < 1 || self.embed_dim < 1 {
            return Err(Error::Config("rounds and embed_dim must be ≥ 1".into()));
        }
        self.sampler.validate()?;
        AdamConfig::with_lr(self.learning_rate).validate()
    }

    /// Sampler with the run's seed; the nested rng_seed field is
    /// superseded so one seed governs the whole run.
    fn effective_sampler(&self) -> SamplerConfig {
        SamplerConfig {
            rng_seed: self.seed,
            ..self.sampler
        }
    }
}

/// Final score book-keeping for one node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub node_id: usize,
    pub score_spar_raw: f64,
    pub score_spar_norm: f64,
    pub score_con: f64,
    pub score_final: f64,
    pub label: u8,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
}

impl ScoreTable {
    pub fn final_scores(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.score_final).collect()
    }

    pub fn contrast_scores(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.score_con).collect()
    }

    pub fn binary_labels(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.label != 0).collect()
    }

    pub fn csv(&self) -> String {
        let mut out =
            String::from("node_id,score_spar_raw,score_spar_norm,score_con,score_final,label\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.node_id, r.score_spar_raw, r.score_spar_norm, r.score_con, r.score_final, r.label
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("node_id") {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 6 {
                return Err(Error::MalformedInput(format!(
                    "score table line {}: expected 6 cells, got {}",
                    lineno + 1,
                    cells.len()
                )));
            }
            let parse = |i: usize| -> Result<f64> {
                cells[i].parse().map_err(|_| {
                    Error::MalformedInput(format!(
                        "score table line {}: bad number {:?}",
                        lineno + 1,
                        cells[i]
                    ))
                })
            };
            rows.push(ScoreRow {
                node_id: parse(0)? as usize,
                score_spar_raw: parse(1)?,
                score_spar_norm: parse(2)?,
                score_con: parse(3)?,
                score_final: parse(4)?,
                label: parse(5)? as u8,
            });
        }
        Ok(ScoreTable { rows })
    }
}

/// Shuffle node ids into batches; a trailing singleton is folded into the
/// previous batch so every node trains each epoch.
fn epoch_batches(n: usize, batch_size: usize, seed: u64, epoch: u64) -> Vec<Vec<NodeId>> {
    let mut nodes: Vec<NodeId> = (0..n).collect();
    nodes.shuffle(&mut lane_rng(seed, stage::EPOCH_SHUFFLE, epoch, 0));
    let mut batches: Vec<Vec<NodeId>> = nodes.chunks(batch_size).map(|c| c.to_vec()).collect();
    if batches.len() > 1 && batches.last().map(|b| b.len() == 1).unwrap_or(false) {
        let orphan = batches.pop().unwrap();
        batches.last_mut().unwrap().extend(orphan);
    }
    batches
}

/// Train the contrastive model over both views. Returns the model and the
/// per-epoch mean loss trace.
pub fn train(
    g: &AttributedGraph,
    spar: &SparsifiedView,
    cfg: &TrainConfig,
) -> Result<(ContrastModel, Vec<f64>)> {
    cfg.validate()?;
    if g.n() < 2 {
        return Err(Error::Config("training needs at least 2 nodes".into()));
    }
    let sampler = cfg.effective_sampler();
    let mut model = ContrastModel::new(ModelConfig {
        attr_dim: g.f(),
        embed_dim: cfg.embed_dim,
        subgraph_size: sampler.subgraph_size,
        spar_target: cfg.spar_target,
        init_seed: cfg.seed,
    });

    let adam = AdamConfig::with_lr(cfg.learning_rate);
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut epoch_loss = 0.0f64;
        let mut seen = 0usize;
        for (batch_idx, batch) in epoch_batches(g.n(), cfg.batch_size, cfg.seed, epoch as u64)
            .into_iter()
            .enumerate()
        {
            let pairs = make_batch_pairs(g, spar.adjacency(), &batch, &sampler, epoch as u64)?;
            let inv_b = 1.0 / pairs.len() as f64;
            let mut scores = Vec::with_capacity(pairs.len());
            model.zero_grads();
            for tp in &pairs {
                let x = g.attr_row(tp.target);
                let (s, cache) = model.forward_target(x, tp);
                model.backward_target(x, tp, &cache, cfg.gamma, inv_b);
                scores.push(s);
            }
            let loss = batch_loss(&scores, cfg.gamma)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite {
                    what: "batch loss".into(),
                    context: format!("epoch {epoch}, batch {batch_idx}"),
                });
            }
            epoch_loss += loss * pairs.len() as f64;
            seen += pairs.len();
            let mut params = model.params_mut();
            adam_step(&mut params, &adam)?;
        }
        trace.push(epoch_loss / seen as f64);
    }
    Ok((model, trace))
}

/// Sample the four inference pairs of one (node, round) lane. The
/// negative donor is a uniformly drawn other node.
fn sample_inference_pairs(
    g: &AttributedGraph,
    spar: &SparsifiedView,
    node: NodeId,
    sampler: &SamplerConfig,
    rng: &mut impl Rng,
) -> Result<TargetPairs> {
    let pos_dense_ids = rwr_sample(g.adjacency(), node, sampler, rng);
    let pos_spar_ids = rwr_sample(spar.adjacency(), node, sampler, rng);
    let donor = {
        let d = rng.random_range(0..g.n() - 1);
        if d >= node {
            d + 1
        } else {
            d
        }
    };
    let neg_dense_ids = rwr_sample(g.adjacency(), donor, sampler, rng);
    let neg_spar_ids = rwr_sample(spar.adjacency(), donor, sampler, rng);
    Ok(TargetPairs {
        target: node,
        pos_dense: build_pair(
            g.adjacency(),
            g,
            &pos_dense_ids,
            node,
            ViewTag::Dense,
            Polarity::Positive,
        )?,
        neg_dense: build_pair(
            g.adjacency(),
            g,
            &neg_dense_ids,
            node,
            ViewTag::Dense,
            Polarity::Negative,
        )?,
        pos_spar: build_pair(
            spar.adjacency(),
            g,
            &pos_spar_ids,
            node,
            ViewTag::Spar,
            Polarity::Positive,
        )?,
        neg_spar: build_pair(
            spar.adjacency(),
            g,
            &neg_spar_ids,
            node,
            ViewTag::Spar,
            Polarity::Negative,
        )?,
    })
}

fn round_score(s: &TargetScores, gamma: f64) -> f64 {
    let dense = s.dense.neg - s.dense.pos;
    let spar = s.spar.neg - s.spar.pos;
    (1.0 - gamma) * dense + gamma * spar
}

/// R-round contrastive anomaly score per node: the γ-fused gap between
/// negative- and positive-pair discriminative scores, averaged over
/// rounds. Each (node, round) lane derives its own RNG stream, so the
/// result is independent of scheduling. Scores live in [−1, 1].
pub fn infer_contrast_scores(
    g: &AttributedGraph,
    spar: &SparsifiedView,
    model: &ContrastModel,
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if g.n() < 2 {
        return Err(Error::Config("inference needs at least 2 nodes".into()));
    }
    let sampler = cfg.effective_sampler();
    (0..g.n())
        .into_par_iter()
        .map(|node| {
            let mut total = 0.0;
            for round in 0..cfg.rounds {
                let mut rng = lane_rng(cfg.seed, stage::INFER_SAMPLE, node as u64, round as u64);
                let pairs = sample_inference_pairs(g, spar, node, &sampler, &mut rng)?;
                let scores = model.target_scores(g.attr_row(node), &pairs);
                total += round_score(&scores, cfg.gamma);
            }
            Ok(total / cfg.rounds as f64)
        })
        .collect()
}

/// Fuse the contrastive score with the min-max-normalized sparsification
/// score: score = (1−λ)·score_con + λ·score_spar_norm.
pub fn fuse_scores(
    score_con: &[f64],
    score_spar_raw: &[f64],
    labels: &AnomalyLabels,
    lambda: f64,
) -> Result<ScoreTable> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Config(format!(
            "lambda must be in [0, 1], got {lambda}"
        )));
    }
    if score_con.len() != score_spar_raw.len() || score_con.len() != labels.len() {
        return Err(Error::Internal(format!(
            "score vectors disagree: {} con, {} spar, {} labels",
            score_con.len(),
            score_spar_raw.len(),
            labels.len()
        )));
    }
    let lo = score_spar_raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = score_spar_raw
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let rows = score_con
        .iter()
        .enumerate()
        .map(|(i, &con)| {
            let raw = score_spar_raw[i];
            // all-equal raw scores normalize to 0: no node stands out
            let norm = if span > 0.0 { (raw - lo) / span } else { 0.0 };
            ScoreRow {
                node_id: i,
                score_spar_raw: raw,
                score_spar_norm: norm,
                score_con: con,
                score_final: (1.0 - lambda) * con + lambda * norm,
                label: labels.get(i).code(),
            }
        })
        .collect();
    Ok(ScoreTable { rows })
}

/// Everything the full pipeline produces.
#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub model: ContrastModel,
    pub loss_trace: Vec<f64>,
    pub table: ScoreTable,
    pub spar_view: SparsifiedView,
}

/// sparsify → train → infer → fuse on an already-injected graph.
pub fn run_pipeline(
    g: &AttributedGraph,
    labels: &AnomalyLabels,
    cfg: &TrainConfig,
) -> Result<PipelineOutput> {
    cfg.validate()?;
    let sim = edge_similarities_scoped(g, cfg.normalization);
    let spar_view = sparsify(g, &sim, cfg.epsilon)?;
    let (model, loss_trace) = train(g, &spar_view, cfg)?;
    let score_con = infer_contrast_scores(g, &spar_view, &model, cfg)?;
    let spar_raw = spar_scores(&spar_view);
    let table = fuse_scores(&score_con, &spar_raw, labels, cfg.lambda)?;
    Ok(PipelineOutput {
        model,
        loss_trace,
        table,
        spar_view,
    })
}

pub fn loss_trace_csv(trace: &[f64]) -> String {
    let mut out = String::from("epoch,mean_loss\n");
    for (i, l) in trace.iter().enumerate() {
        out.push_str(&format!("{i},{l}\n"));
    }
    out
}
