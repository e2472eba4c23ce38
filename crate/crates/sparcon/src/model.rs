//! The dual-view contrastive network: one-layer GCN and weight-tied MLP
//! encoders per view, average readout on the dense view, similarity-gated
//! attention readout on the spar view, a bilinear discriminator shared by
//! both views, and the γ-weighted BCE loss.
//!
//! All gradients are hand-rolled; `nn::grad_check` verifies them against
//! central finite differences.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::{dot, mat_vec, vec_mat, Mat};
use crate::nn::{
    clamp_prob, prelu, prelu_backward, sigmoid, xavier_init, ParamGroup, Parameter, PROB_CLAMP,
};
use crate::rng::{lane_rng, stage};
use crate::sample::{SubgraphPair, TargetPairs, ViewTag};

/// Which target embedding the spar-view discriminator consumes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SparTargetMode {
    /// ĥ from the spar-view encoder, so that encoder trains through the
    /// target path as well.
    #[default]
    SparEncoder,
    /// The dense-view h, as written in the spar-view discriminator
    /// equations.
    DenseEncoder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub attr_dim: usize,
    pub embed_dim: usize,
    pub subgraph_size: usize,
    #[serde(default)]
    pub spar_target: SparTargetMode,
    pub init_seed: u64,
}

/// Positive/negative discriminative scores for one view.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewScores {
    pub pos: f64,
    pub neg: f64,
}

/// Scores of one target across both views.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetScores {
    pub dense: ViewScores,
    pub spar: ViewScores,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContrastModel {
    pub cfg: ModelConfig,
    /// f×d encoder weight tied between the dense-view GCN and MLP.
    pub w_dense: Parameter,
    /// f×d encoder weight tied between the spar-view GCN and MLP.
    pub w_spar: Parameter,
    /// d×d bilinear discriminator weight shared by both views.
    pub w_disc: Parameter,
    /// P×P attention weight for the spar-view readout.
    pub w_attn: Parameter,
    /// 1×P attention bias.
    pub b_attn: Parameter,
    pub slope_gcn_dense: Parameter,
    pub slope_mlp_dense: Parameter,
    pub slope_gcn_spar: Parameter,
    pub slope_mlp_spar: Parameter,
}

impl ParamGroup for ContrastModel {
    fn params(&self) -> Vec<&Parameter> {
        vec![
            &self.w_dense,
            &self.w_spar,
            &self.w_disc,
            &self.w_attn,
            &self.b_attn,
            &self.slope_gcn_dense,
            &self.slope_mlp_dense,
            &self.slope_gcn_spar,
            &self.slope_mlp_spar,
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        vec![
            &mut self.w_dense,
            &mut self.w_spar,
            &mut self.w_disc,
            &mut self.w_attn,
            &mut self.b_attn,
            &mut self.slope_gcn_dense,
            &mut self.slope_mlp_dense,
            &mut self.slope_gcn_spar,
            &mut self.slope_mlp_spar,
        ]
    }
}

const INIT_SLOPE: f64 = 0.25;
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    model: ContrastModel,
}

impl ContrastModel {
    pub fn new(cfg: ModelConfig) -> Self {
        let mut rng = lane_rng(cfg.init_seed, stage::MODEL_INIT, 0, 0);
        let f = cfg.attr_dim;
        let d = cfg.embed_dim;
        let p = cfg.subgraph_size;
        ContrastModel {
            w_dense: Parameter::new("w_dense", xavier_init(f, d, &mut rng)),
            w_spar: Parameter::new("w_spar", xavier_init(f, d, &mut rng)),
            w_disc: Parameter::new("w_disc", xavier_init(d, d, &mut rng)),
            w_attn: Parameter::new("w_attn", xavier_init(p, p, &mut rng)),
            b_attn: Parameter::new("b_attn", Mat::zeros(1, p)),
            slope_gcn_dense: Parameter::scalar("slope_gcn_dense", INIT_SLOPE),
            slope_mlp_dense: Parameter::scalar("slope_mlp_dense", INIT_SLOPE),
            slope_gcn_spar: Parameter::scalar("slope_gcn_spar", INIT_SLOPE),
            slope_mlp_spar: Parameter::scalar("slope_mlp_spar", INIT_SLOPE),
            cfg,
        }
    }

    pub fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn view_weight(&self, view: ViewTag) -> (&Parameter, f64) {
        match view {
            ViewTag::Dense => (&self.w_dense, self.slope_gcn_dense.as_scalar()),
            ViewTag::Spar => (&self.w_spar, self.slope_gcn_spar.as_scalar()),
        }
    }

    /// Target MLP embedding for a view, with its pre-activation.
    fn target_embed_cached(&self, x: &[f64], view: ViewTag) -> (Vec<f64>, Vec<f64>) {
        let (w, slope) = match view {
            ViewTag::Dense => (&self.w_dense, self.slope_mlp_dense.as_scalar()),
            ViewTag::Spar => (&self.w_spar, self.slope_mlp_spar.as_scalar()),
        };
        let z = vec_mat(x, &w.value);
        let h = z
            .iter()
            .map(|&v| if v > 0.0 { v } else { slope * v })
            .collect();
        (z, h)
    }

    fn pair_forward(&self, pair: &SubgraphPair) -> PairCache {
        let (w, slope) = self.view_weight(pair.view_tag);
        let y = pair.attrs.matmul(&w.value);
        let z_pre = pair.adj_norm.matmul(&y);
        let h_post = prelu(&z_pre, slope);
        let (e, gate) = match pair.view_tag {
            ViewTag::Dense => (readout_avg(&h_post), None),
            ViewTag::Spar => {
                let (e, gate) = attn_readout_cached(
                    &h_post,
                    &pair.sim_vector,
                    &self.w_attn.value,
                    self.b_attn.value.row(0),
                );
                (e, Some(gate))
            }
        };
        PairCache {
            z_pre,
            h_post,
            e,
            gate,
        }
    }

    /// Forward pass of one target through its four pairs.
    pub fn forward_target(
        &self,
        x_target: &[f64],
        pairs: &TargetPairs,
    ) -> (TargetScores, TargetCache) {
        debug_assert_eq!(x_target.len(), self.cfg.attr_dim);
        let dense_t = self.target_embed_cached(x_target, ViewTag::Dense);
        let spar_t = self.target_embed_cached(x_target, ViewTag::Spar);

        let pos_dense = self.pair_forward(&pairs.pos_dense);
        let neg_dense = self.pair_forward(&pairs.neg_dense);
        let pos_spar = self.pair_forward(&pairs.pos_spar);
        let neg_spar = self.pair_forward(&pairs.neg_spar);

        let h_dense = &dense_t.1;
        let h_for_spar = match self.cfg.spar_target {
            SparTargetMode::SparEncoder => &spar_t.1,
            SparTargetMode::DenseEncoder => h_dense,
        };

        let scores = TargetScores {
            dense: ViewScores {
                pos: discriminate(h_dense, &pos_dense.e, &self.w_disc.value),
                neg: discriminate(h_dense, &neg_dense.e, &self.w_disc.value),
            },
            spar: ViewScores {
                pos: discriminate(h_for_spar, &pos_spar.e, &self.w_disc.value),
                neg: discriminate(h_for_spar, &neg_spar.e, &self.w_disc.value),
            },
        };

        (
            scores,
            TargetCache {
                dense_t,
                spar_t,
                pos_dense,
                neg_dense,
                pos_spar,
                neg_spar,
                scores,
            },
        )
    }

    /// Scores only; used at inference where no gradients are needed.
    pub fn target_scores(&self, x_target: &[f64], pairs: &TargetPairs) -> TargetScores {
        self.forward_target(x_target, pairs).0
    }

    /// Accumulate gradients of the batch-mean loss for one target.
    /// `inv_batch` is 1/B so that calling this for every batch member sums
    /// to the gradient of `batch_loss`.
    pub fn backward_target(
        &mut self,
        x_target: &[f64],
        pairs: &TargetPairs,
        cache: &TargetCache,
        gamma: f64,
        inv_batch: f64,
    ) {
        let s = &cache.scores;
        // d(batch loss)/d(pre-sigmoid score); clamped scores sit on a flat
        // region of the loss, so their gradient is zero
        let dz = |score: f64, positive: bool, weight: f64| -> f64 {
            if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&score) {
                return 0.0;
            }
            let dl_ds = if positive {
                -0.5 / score
            } else {
                0.5 / (1.0 - score)
            };
            weight * inv_batch * dl_ds * score * (1.0 - score)
        };
        let dz_pd = dz(s.dense.pos, true, 1.0 - gamma);
        let dz_nd = dz(s.dense.neg, false, 1.0 - gamma);
        let dz_ps = dz(s.spar.pos, true, gamma);
        let dz_ns = dz(s.spar.neg, false, gamma);

        let mut dh_dense = vec![0.0; self.cfg.embed_dim];
        let mut dh_spar = vec![0.0; self.cfg.embed_dim];

        let h_dense = cache.dense_t.1.clone();
        let h_for_spar = match self.cfg.spar_target {
            SparTargetMode::SparEncoder => cache.spar_t.1.clone(),
            SparTargetMode::DenseEncoder => h_dense.clone(),
        };

        // discriminator backward for each scored pair
        let de_pd = self.disc_backward(&h_dense, &cache.pos_dense.e, dz_pd, &mut dh_dense);
        let de_nd = self.disc_backward(&h_dense, &cache.neg_dense.e, dz_nd, &mut dh_dense);
        {
            let dh_spar_sink = match self.cfg.spar_target {
                SparTargetMode::SparEncoder => &mut dh_spar,
                SparTargetMode::DenseEncoder => &mut dh_dense,
            };
            let de_ps = self.disc_backward(&h_for_spar, &cache.pos_spar.e, dz_ps, dh_spar_sink);
            let de_ns = self.disc_backward(&h_for_spar, &cache.neg_spar.e, dz_ns, dh_spar_sink);
            self.pair_backward(&pairs.pos_spar, &cache.pos_spar, &de_ps);
            self.pair_backward(&pairs.neg_spar, &cache.neg_spar, &de_ns);
        }
        self.pair_backward(&pairs.pos_dense, &cache.pos_dense, &de_pd);
        self.pair_backward(&pairs.neg_dense, &cache.neg_dense, &de_nd);

        // target MLP backward per view
        self.target_backward(x_target, &cache.dense_t.0, &dh_dense, ViewTag::Dense);
        if self.cfg.spar_target == SparTargetMode::SparEncoder {
            self.target_backward(x_target, &cache.spar_t.0, &dh_spar, ViewTag::Spar);
        }
    }

    /// dz through σ(h W e): accumulates W_d and h gradients, returns de.
    fn disc_backward(&mut self, h: &[f64], e: &[f64], dz: f64, dh: &mut [f64]) -> Vec<f64> {
        if dz == 0.0 {
            return vec![0.0; e.len()];
        }
        self.w_disc.grad.add_scaled_outer(dz, h, e);
        let w_e = mat_vec(&self.w_disc.value, e);
        for (a, we) in dh.iter_mut().zip(w_e) {
            *a += dz * we;
        }
        let mut de = vec_mat(h, &self.w_disc.value);
        for v in de.iter_mut() {
            *v *= dz;
        }
        de
    }

    /// Readout and GCN backward for one pair, given de = dL/d(readout).
    fn pair_backward(&mut self, pair: &SubgraphPair, cache: &PairCache, de: &[f64]) {
        let p = pair.adj_norm.rows();
        let d = de.len();
        let mut dh = Mat::zeros(p, d);
        match pair.view_tag {
            ViewTag::Dense => {
                let inv_p = 1.0 / p as f64;
                for k in 0..p {
                    for (o, &g) in dh.row_mut(k).iter_mut().zip(de) {
                        *o = g * inv_p;
                    }
                }
            }
            ViewTag::Spar => {
                let gate = cache.gate.as_ref().expect("spar pair carries its gate");
                let mut du = vec![0.0; p];
                for k in 0..p {
                    for (o, &g) in dh.row_mut(k).iter_mut().zip(de) {
                        *o = gate[k] * g;
                    }
                    let ds_gate = dot(cache.h_post.row(k), de);
                    du[k] = ds_gate * gate[k] * (1.0 - gate[k]);
                }
                self.w_attn
                    .grad
                    .add_scaled_outer(1.0, &pair.sim_vector, &du);
                for (b, &g) in self.b_attn.grad.row_mut(0).iter_mut().zip(&du) {
                    *b += g;
                }
            }
        }

        let (slope, slope_grad_param, w_grad_param) = match pair.view_tag {
            ViewTag::Dense => (
                self.slope_gcn_dense.as_scalar(),
                &mut self.slope_gcn_dense,
                &mut self.w_dense,
            ),
            ViewTag::Spar => (
                self.slope_gcn_spar.as_scalar(),
                &mut self.slope_gcn_spar,
                &mut self.w_spar,
            ),
        };
        let mut slope_grad = 0.0;
        let dz = prelu_backward(&cache.z_pre, slope, &dh, &mut slope_grad);
        slope_grad_param.grad.data_mut()[0] += slope_grad;
        // adj_norm is symmetric, so dY = adj_normᵀ·dZ = adj_norm·dZ
        let dy = pair.adj_norm.matmul(&dz);
        w_grad_param.grad.add_transpose_mul(&pair.attrs, &dy);
    }

    fn target_backward(&mut self, x: &[f64], z_pre: &[f64], dh: &[f64], view: ViewTag) {
        let (slope, slope_param, w_param) = match view {
            ViewTag::Dense => (
                self.slope_mlp_dense.as_scalar(),
                &mut self.slope_mlp_dense,
                &mut self.w_dense,
            ),
            ViewTag::Spar => (
                self.slope_mlp_spar.as_scalar(),
                &mut self.slope_mlp_spar,
                &mut self.w_spar,
            ),
        };
        let mut dz = vec![0.0; dh.len()];
        let mut slope_grad = 0.0;
        for ((o, &g), &z) in dz.iter_mut().zip(dh).zip(z_pre) {
            if z > 0.0 {
                *o = g;
            } else {
                slope_grad += z * g;
                *o = slope * g;
            }
        }
        slope_param.grad.data_mut()[0] += slope_grad;
        w_param.grad.add_scaled_outer(1.0, x, &dz);
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let ckpt = Checkpoint {
            version: CHECKPOINT_VERSION,
            model: self.clone(),
        };
        let text = serde_json::to_string(&ckpt)
            .map_err(|e| Error::Internal(format!("checkpoint serialization failed: {e}")))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint = serde_json::from_str(&text).map_err(|e| {
            Error::MalformedInput(format!("{}: invalid checkpoint: {e}", path.display()))
        })?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::MalformedInput(format!(
                "{}: checkpoint version {} unsupported (expected {})",
                path.display(),
                ckpt.version,
                CHECKPOINT_VERSION
            )));
        }
        let m = ckpt.model;
        let (f, d, p) = (m.cfg.attr_dim, m.cfg.embed_dim, m.cfg.subgraph_size);
        let shape_ok = m.w_dense.value.rows() == f
            && m.w_dense.value.cols() == d
            && m.w_spar.value.rows() == f
            && m.w_disc.value.rows() == d
            && m.w_disc.value.cols() == d
            && m.w_attn.value.rows() == p
            && m.w_attn.value.cols() == p
            && m.b_attn.value.cols() == p;
        if !shape_ok {
            return Err(Error::MalformedInput(format!(
                "{}: checkpoint shapes disagree with its config",
                path.display()
            )));
        }
        Ok(m)
    }
}

/// Per-pair forward cache used by the backward pass.
#[derive(Clone, Debug)]
pub struct PairCache {
    z_pre: Mat,
    h_post: Mat,
    pub e: Vec<f64>,
    gate: Option<Vec<f64>>,
}

/// Per-target forward cache.
#[derive(Clone, Debug)]
pub struct TargetCache {
    dense_t: (Vec<f64>, Vec<f64>),
    spar_t: (Vec<f64>, Vec<f64>),
    pos_dense: PairCache,
    neg_dense: PairCache,
    pos_spar: PairCache,
    neg_spar: PairCache,
    pub scores: TargetScores,
}

/// One-layer GCN over a pair: PReLU(adj_norm · attrs · W).
pub fn embed_subgraph(pair: &SubgraphPair, weight: &Mat, slope: f64) -> Mat {
    let y = pair.attrs.matmul(weight);
    prelu(&pair.adj_norm.matmul(&y), slope)
}

/// Weight-tied MLP on the target's original attribute row.
pub fn embed_target(x: &[f64], weight: &Mat, slope: f64) -> Vec<f64> {
    vec_mat(x, weight)
        .into_iter()
        .map(|v| if v > 0.0 { v } else { slope * v })
        .collect()
}

/// Average readout: column mean of H.
pub fn readout_avg(h: &Mat) -> Vec<f64> {
    let p = h.rows() as f64;
    let mut e = vec![0.0; h.cols()];
    for k in 0..h.rows() {
        for (o, &v) in e.iter_mut().zip(h.row(k)) {
            *o += v;
        }
    }
    e.iter_mut().for_each(|v| *v /= p);
    e
}

/// Similarity-gated attention readout: σ(s W_s + b) · H. The gate is a
/// sigmoid, not a softmax, so the weights do not sum to one.
pub fn readout_attn(h: &Mat, sim_vector: &[f64], w_attn: &Mat, b_attn: &[f64]) -> Vec<f64> {
    attn_readout_cached(h, sim_vector, w_attn, b_attn).0
}

fn attn_readout_cached(
    h: &Mat,
    sim_vector: &[f64],
    w_attn: &Mat,
    b_attn: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let mut u = vec_mat(sim_vector, w_attn);
    for (v, &b) in u.iter_mut().zip(b_attn) {
        *v += b;
    }
    let gate: Vec<f64> = u.into_iter().map(sigmoid).collect();
    (vec_mat(&gate, h), gate)
}

/// Bilinear discriminator σ(h W e ᵀ).
pub fn discriminate(h: &[f64], e: &[f64], w_disc: &Mat) -> f64 {
    sigmoid(dot(&vec_mat(h, w_disc), e))
}

/// Combined loss over the batch: (1−γ)·mean L^dense + γ·mean L^spar with
/// each view's loss the paired BCE of its positive and negative scores.
pub fn batch_loss(scores: &[TargetScores], gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Config(format!(
            "gamma must be in [0, 1], got {gamma}"
        )));
    }
    if scores.is_empty() {
        return Err(Error::Config("batch_loss needs at least one target".into()));
    }
    let b = scores.len() as f64;
    let mut dense = 0.0;
    let mut spar = 0.0;
    for s in scores {
        dense += pair_bce(s.dense.pos, s.dense.neg);
        spar += pair_bce(s.spar.pos, s.spar.neg);
    }
    Ok((1.0 - gamma) * dense / b + gamma * spar / b)
}

fn pair_bce(pos: f64, neg: f64) -> f64 {
    -0.5 * (clamp_prob(pos).ln() + (1.0 - clamp_prob(neg)).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::AttributedGraph;
    use crate::nn::{grad_check, GRAD_CHECK_STEP};
    use crate::sample::{make_batch_pairs, Polarity, SamplerConfig};

    fn toy_graph(seed: u64) -> AttributedGraph {
        crate::synth::community_graph(&crate::synth::SynthConfig {
            nodes: 10,
            edges: 18,
            attr_dim: 6,
            communities: 2,
            words_per_node: 3,
            intra_prob: 0.8,
            seed,
        })
        .unwrap()
    }

    fn model(f: usize, d: usize, p: usize, mode: SparTargetMode) -> ContrastModel {
        ContrastModel::new(ModelConfig {
            attr_dim: f,
            embed_dim: d,
            subgraph_size: p,
            spar_target: mode,
            init_seed: 42,
        })
    }

    fn toy_batch(g: &AttributedGraph, p: usize) -> Vec<TargetPairs> {
        let cfg = SamplerConfig {
            subgraph_size: p,
            restart_prob: 0.3,
            max_steps: 64,
            rng_seed: 5,
        };
        make_batch_pairs(g, g.adjacency(), &[0, 3, 7, 9], &cfg, 0).unwrap()
    }

    #[test]
    fn zero_attrs_embed_to_zero() {
        let g = toy_graph(1);
        let m = model(g.f(), 8, 4, SparTargetMode::SparEncoder);
        let batch = toy_batch(&g, 4);
        let mut pair = batch[0].pos_dense.clone();
        pair.attrs.fill(0.0);
        let h = embed_subgraph(&pair, &m.w_dense.value, 0.25);
        assert!(h.iter().all(|v| v == 0.0));
        assert_eq!(
            embed_target(&vec![0.0; g.f()], &m.w_dense.value, 0.25),
            vec![0.0; 8]
        );
    }

    #[test]
    fn singleton_gcn_reduces_to_mlp() {
        let g = toy_graph(2);
        let m = model(g.f(), 8, 1, SparTargetMode::SparEncoder);
        let pair = crate::sample::build_pair(
            g.adjacency(),
            &g,
            &[4],
            4,
            ViewTag::Dense,
            Polarity::Positive,
        )
        .unwrap();
        // with anonymization row 0 is zero, so compare against the raw row
        let mut raw_pair = pair.clone();
        raw_pair.attrs.row_mut(0).copy_from_slice(g.attr_row(4));
        let h = embed_subgraph(&raw_pair, &m.w_dense.value, 0.25);
        let t = embed_target(g.attr_row(4), &m.w_dense.value, 0.25);
        for (a, b) in h.row(0).iter().zip(&t) {
            assert!((a - b).abs() < 1e-15);
        }
        // the anonymized pair differs unless the row is zero
        let h_anon = embed_subgraph(&pair, &m.w_dense.value, 0.25);
        assert!(h_anon
            .row(0)
            .iter()
            .zip(&t)
            .any(|(a, b)| (a - b).abs() > 1e-12));
    }

    #[test]
    fn identical_attribute_rows_embed_identically() {
        let g = toy_graph(9);
        let m = model(g.f(), 8, 4, SparTargetMode::SparEncoder);
        let x: Vec<f64> = g.attr_row(3).to_vec();
        let a = embed_target(&x, &m.w_dense.value, 0.25);
        let b = embed_target(&x, &m.w_dense.value, 0.25);
        assert_eq!(a, b);
    }

    #[test]
    fn readout_avg_fixed_points() {
        let r = vec![1.0, -2.0, 3.0];
        let h = Mat::from_vec(2, 3, [r.clone(), r.clone()].concat());
        assert_eq!(readout_avg(&h), r);
        let h2 = Mat::from_vec(2, 3, [r.clone(), r.iter().map(|v| -v).collect()].concat());
        assert_eq!(readout_avg(&h2), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn readout_attn_constant_gate_halves_the_sum() {
        let h = Mat::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let w = Mat::zeros(2, 2);
        let e = readout_attn(&h, &[0.3, 0.9], &w, &[0.0, 0.0]);
        assert_eq!(e, vec![0.5 * 4.0, 0.5 * 6.0]);
    }

    #[test]
    fn readout_attn_selection_limit() {
        let mut h = Mat::zeros(3, 2);
        h.set(1, 0, 5.0);
        h.set(1, 1, -1.0);
        // huge positive bias on row 1, huge negative on others
        let w = Mat::zeros(3, 3);
        let e = readout_attn(&h, &[0.0, 1.0, 0.0], &w, &[-50.0, 50.0, -50.0]);
        assert!((e[0] - 5.0).abs() < 1e-9);
        assert!((e[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn discriminator_closed_forms() {
        let w = {
            let mut m = Mat::zeros(3, 3);
            for i in 0..3 {
                m.set(i, i, 1.0);
            }
            m
        };
        assert_eq!(discriminate(&[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0], &w), 0.5);
        let h = [1.0, 1.0, 1.0];
        let s = discriminate(&h, &h, &w);
        assert!((s - sigmoid(3.0)).abs() < 1e-15);
        assert!((s - 0.9526).abs() < 1e-4);
    }

    #[test]
    fn batch_loss_limits() {
        let flat = TargetScores {
            dense: ViewScores { pos: 0.5, neg: 0.5 },
            spar: ViewScores { pos: 0.5, neg: 0.5 },
        };
        for gamma in [0.0, 0.3, 1.0] {
            let l = batch_loss(&[flat, flat], gamma).unwrap();
            assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
        }
        assert!(batch_loss(&[flat], 1.5).is_err());

        // γ = 0 ignores the spar branch entirely
        let skewed = TargetScores {
            dense: ViewScores { pos: 0.9, neg: 0.2 },
            spar: ViewScores {
                pos: 0.1,
                neg: 0.99,
            },
        };
        let dense_only = -0.5 * (0.9f64.ln() + 0.8f64.ln());
        assert!((batch_loss(&[skewed], 0.0).unwrap() - dense_only).abs() < 1e-12);
    }

    #[test]
    fn weight_tying_is_structural() {
        let g = toy_graph(3);
        let mut m = model(g.f(), 8, 4, SparTargetMode::SparEncoder);
        let x = g.attr_row(2);
        let before = embed_target(x, &m.w_dense.value, m.slope_mlp_dense.as_scalar());
        // nudge W through "the GCN's" handle; the MLP sees the same storage
        m.w_dense.value.data_mut()[0] += 0.5;
        let after = embed_target(x, &m.w_dense.value, m.slope_mlp_dense.as_scalar());
        if x[0] != 0.0 {
            assert_ne!(before[0], after[0]);
        }
        let batch = toy_batch(&g, 4);
        let h = embed_subgraph(&batch[0].pos_dense, &m.w_dense.value, 0.25);
        assert!(h.all_finite());
    }

    #[test]
    fn permuting_non_target_rows_preserves_readouts() {
        let g = toy_graph(4);
        let batch = toy_batch(&g, 4);
        let pair = &batch[1].pos_spar;
        let m = model(g.f(), 8, 4, SparTargetMode::SparEncoder);

        // permutation of positions 1..P applied to attrs, adj_norm, sim
        let perm = [0usize, 3, 1, 2];
        let mut attrs = Mat::zeros(4, g.f());
        let mut adj = Mat::zeros(4, 4);
        let mut sim = vec![0.0; 4];
        for (new, &old) in perm.iter().enumerate() {
            attrs.row_mut(new).copy_from_slice(pair.attrs.row(old));
            sim[new] = pair.sim_vector[old];
            for (new2, &old2) in perm.iter().enumerate() {
                adj.set(new, new2, pair.adj_norm.get(old, old2));
            }
        }
        let mut permuted = pair.clone();
        permuted.attrs = attrs;
        permuted.adj_norm = adj;
        permuted.sim_vector = sim;

        let h_orig = embed_subgraph(pair, &m.w_spar.value, 0.25);
        let h_perm = embed_subgraph(&permuted, &m.w_spar.value, 0.25);
        let e_orig = readout_avg(&h_orig);
        let e_perm = readout_avg(&h_perm);
        for (a, b) in e_orig.iter().zip(&e_perm) {
            assert!((a - b).abs() < 1e-12);
        }

        // attention half with W_s = 0 (permutation-invariant gate)
        let w0 = Mat::zeros(4, 4);
        let b0 = vec![0.0; 4];
        let ea = readout_attn(&h_orig, &pair.sim_vector, &w0, &b0);
        let eb = readout_attn(&h_perm, &permuted.sim_vector, &w0, &b0);
        for (a, b) in ea.iter().zip(&eb) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn scores_live_strictly_inside_unit_interval() {
        let g = toy_graph(5);
        let m = model(g.f(), 8, 4, SparTargetMode::SparEncoder);
        for tp in toy_batch(&g, 4) {
            let s = m.target_scores(g.attr_row(tp.target), &tp);
            for v in [s.dense.pos, s.dense.neg, s.spar.pos, s.spar.neg] {
                assert!(v > 0.0 && v < 1.0, "score {v}");
            }
        }
    }

    fn full_loss(m: &ContrastModel, g: &AttributedGraph, batch: &[TargetPairs], gamma: f64) -> f64 {
        let scores: Vec<TargetScores> = batch
            .iter()
            .map(|tp| m.target_scores(g.attr_row(tp.target), tp))
            .collect();
        batch_loss(&scores, gamma).unwrap()
    }

    fn run_grad_check(mode: SparTargetMode, gamma: f64) -> f64 {
        let g = toy_graph(6);
        let batch = toy_batch(&g, 4);
        let mut m = model(g.f(), 8, 4, mode);
        m.zero_grads();
        let inv_b = 1.0 / batch.len() as f64;
        for tp in &batch {
            let (_, cache) = m.forward_target(g.attr_row(tp.target), tp);
            m.backward_target(g.attr_row(tp.target), tp, &cache, gamma, inv_b);
        }
        let report = grad_check(
            &mut m,
            |mm: &ContrastModel| full_loss(mm, &g, &batch, gamma),
            64,
            GRAD_CHECK_STEP,
            &mut lane_rng(9, 0, 0, 0),
        );
        report.max_rel_err
    }

    #[test]
    fn full_backward_matches_finite_differences() {
        let err = run_grad_check(SparTargetMode::SparEncoder, 0.7);
        assert!(err < 1e-4, "max rel err {err}");
    }

    #[test]
    fn full_backward_matches_in_literal_mode() {
        let err = run_grad_check(SparTargetMode::DenseEncoder, 0.4);
        assert!(err < 1e-4, "max rel err {err}");
    }

    #[test]
    fn gamma_extremes_gate_each_view() {
        for (gamma, dead_param_is_spar) in [(0.0, true), (1.0, false)] {
            let g = toy_graph(7);
            let batch = toy_batch(&g, 4);
            let mut m = model(g.f(), 8, 4, SparTargetMode::SparEncoder);
            m.zero_grads();
            let inv_b = 1.0 / batch.len() as f64;
            for tp in &batch {
                let (_, cache) = m.forward_target(g.attr_row(tp.target), tp);
                m.backward_target(g.attr_row(tp.target), tp, &cache, gamma, inv_b);
            }
            let dead = if dead_param_is_spar {
                &m.w_spar
            } else {
                &m.w_dense
            };
            let live = if dead_param_is_spar {
                &m.w_dense
            } else {
                &m.w_spar
            };
            assert!(dead.grad.iter().all(|v| v == 0.0));
            assert!(live.grad.iter().any(|v| v != 0.0));
        }
    }

    #[test]
    fn checkpoint_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let g = toy_graph(8);
        let mut m = model(g.f(), 8, 4, SparTargetMode::SparEncoder);
        // give the moments non-trivial state
        let batch = toy_batch(&g, 4);
        let inv_b = 1.0 / batch.len() as f64;
        for tp in &batch {
            let (_, cache) = m.forward_target(g.attr_row(tp.target), tp);
            m.backward_target(g.attr_row(tp.target), tp, &cache, 0.5, inv_b);
        }
        let mut refs = m.params_mut();
        crate::nn::adam_step(&mut refs, &crate::nn::AdamConfig::default()).unwrap();
        drop(refs);
        m.save(&path).unwrap();
        let loaded = ContrastModel::load(&path).unwrap();
        assert_eq!(
            serde_json::to_string(&m).unwrap(),
            serde_json::to_string(&loaded).unwrap()
        );
        assert_eq!(m.w_dense.value, loaded.w_dense.value);
        assert_eq!(m.w_attn.value, loaded.w_attn.value);
    }
}
