//! Brute-force oracle comparisons for the numeric pipeline pieces.

// the oracles are deliberately written as plain index loops
#![allow(clippy::needless_range_loop)]

mod common;

use common::{auc_pairwise, dense_sparsifier_reference, random_graph};
use rand::Rng;
use sparcon::eval::auc;
use sparcon::mat::Mat;
use sparcon::model::{discriminate, embed_subgraph, readout_attn, readout_avg};
use sparcon::nn::{sigmoid, xavier_init};
use sparcon::rng::lane_rng;
use sparcon::sample::{build_pair, Polarity, ViewTag};
use sparcon::sparsify::{edge_similarities, spar_scores, sparsify};

#[test]
fn sparsifier_matches_dense_reference_on_random_graph() {
    let g = random_graph(20, 40, 8, 77);
    let sim = edge_similarities(&g);
    let reference = dense_sparsifier_reference(&g, 0.4);
    for i in 0..g.n() {
        for (&j, &norm) in sim.neighbors(i).iter().zip(sim.norm_row(i)) {
            assert!(
                (norm - reference.normalized[i][j]).abs() < 1e-12,
                "({i},{j}): {norm} vs {}",
                reference.normalized[i][j]
            );
        }
    }
    let view = sparsify(&g, &sim, 0.4).unwrap();
    for i in 0..g.n() {
        for j in 0..g.n() {
            assert_eq!(view.adjacency().has_edge(i, j), reference.kept[i][j]);
        }
    }
    let scores = spar_scores(&view);
    for (a, b) in scores.iter().zip(&reference.scores) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn spar_score_equals_dense_row_norm_for_random_epsilon() {
    for seed in 0..10u64 {
        let mut rng = lane_rng(seed, 1, 0, 0);
        let g = random_graph(15 + (seed as usize % 10), 30, 5, seed);
        let eps = rng.random_range(0.0..1.0);
        let sim = edge_similarities(&g);
        let view = sparsify(&g, &sim, eps).unwrap();
        let reference = dense_sparsifier_reference(&g, eps);
        for (a, b) in spar_scores(&view).iter().zip(&reference.scores) {
            assert!((a - b).abs() < 1e-12, "eps {eps}: {a} vs {b}");
        }
    }
}

#[test]
fn rank_auc_matches_pairwise_oracle_with_ties() {
    let mut rng = lane_rng(5, 2, 0, 0);
    let n = 200;
    // coarse grid of scores forces plenty of ties
    let scores: Vec<f64> = (0..n)
        .map(|_| rng.random_range(0..32) as f64 / 32.0)
        .collect();
    let mut labels: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.3).collect();
    labels[0] = true;
    labels[1] = false;
    let fast = auc(&scores, &labels).unwrap();
    let slow = auc_pairwise(&scores, &labels);
    assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
}

#[test]
fn subgraph_embedding_matches_naive_matmul() {
    let g = random_graph(12, 20, 6, 31);
    let ids = vec![3usize, 0, 7, 9];
    let pair = build_pair(
        g.adjacency(),
        &g,
        &ids,
        3,
        ViewTag::Dense,
        Polarity::Positive,
    )
    .unwrap();
    let w = xavier_init(6, 5, &mut lane_rng(8, 3, 0, 0));
    let slope = 0.25;
    let h = embed_subgraph(&pair, &w, slope);

    // naive triple loop: prelu(A (X W))
    let p = 4;
    let mut xw = vec![vec![0.0f64; 5]; p];
    for k in 0..p {
        for c in 0..5 {
            for r in 0..6 {
                xw[k][c] += pair.attrs.get(k, r) * w.get(r, c);
            }
        }
    }
    for k in 0..p {
        for c in 0..5 {
            let mut z = 0.0;
            for l in 0..p {
                z += pair.adj_norm.get(k, l) * xw[l][c];
            }
            let want = if z > 0.0 { z } else { slope * z };
            assert!((h.get(k, c) - want).abs() < 1e-12);
        }
    }
}

#[test]
fn readouts_match_naive_loops() {
    let mut rng = lane_rng(21, 4, 0, 0);
    let h = Mat::from_vec(4, 6, (0..24).map(|_| rng.random_range(-2.0..2.0)).collect());
    let avg = readout_avg(&h);
    for c in 0..6 {
        let want: f64 = (0..4).map(|k| h.get(k, c)).sum::<f64>() / 4.0;
        assert!((avg[c] - want).abs() < 1e-12);
    }

    let sim: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
    let w_attn = xavier_init(4, 4, &mut rng);
    let b: Vec<f64> = (0..4).map(|_| rng.random_range(-0.5..0.5)).collect();
    let e = readout_attn(&h, &sim, &w_attn, &b);
    for c in 0..6 {
        let mut want = 0.0;
        for k in 0..4 {
            let mut u = b[k];
            for p in 0..4 {
                u += sim[p] * w_attn.get(p, k);
            }
            want += sigmoid(u) * h.get(k, c);
        }
        assert!((e[c] - want).abs() < 1e-12);
    }
}

#[test]
fn discriminator_matches_scalar_triple_product() {
    let mut rng = lane_rng(13, 5, 0, 0);
    let d = 7;
    let h: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let e: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let w = xavier_init(d, d, &mut rng);
    let got = discriminate(&h, &e, &w);
    let mut z = 0.0;
    for a in 0..d {
        for b in 0..d {
            z += h[a] * w.get(a, b) * e[b];
        }
    }
    assert!((got - sigmoid(z)).abs() < 1e-12);
}
