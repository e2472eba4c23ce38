//! ROC/AUC evaluation and the neighbor-similarity homophily diagnostic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::AnomalyLabels;
use crate::sparsify::SimilarityIndex;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricsReport {
    pub auc: f64,
    pub roc_points: Vec<RocPoint>,
    pub n_pos: usize,
    pub n_neg: usize,
}

fn class_counts(labels: &[bool]) -> Result<(usize, usize)> {
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "AUC needs both classes, got {n_pos} positives and {n_neg} negatives"
        )));
    }
    Ok((n_pos, n_neg))
}

/// Rank-based AUC (Mann-Whitney) with tied scores counted ½. Equals the
/// trapezoidal area under the ROC curve.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    assert_eq!(scores.len(), labels.len());
    let (n_pos, n_neg) = class_counts(labels)?;

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // average 1-based ranks over tie groups, summed where the label is set
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j + 1) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }

    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// ROC points at every distinct score, thresholds descending, with the
/// (0,0) endpoint prepended; the final point is always (1,1).
pub fn roc_points(scores: &[f64], labels: &[bool]) -> Result<Vec<RocPoint>> {
    assert_eq!(scores.len(), labels.len());
    let (n_pos, n_neg) = class_counts(labels)?;

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        let mut j = i;
        while j < order.len() && scores[order[j]] == threshold {
            if labels[order[j]] {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
            threshold,
        });
        i = j;
    }
    Ok(points)
}

/// Trapezoidal area under a point list; consistency oracle for `auc`.
pub fn trapezoid_area(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum()
}

pub fn metrics_report(scores: &[f64], labels: &[bool]) -> Result<MetricsReport> {
    let (n_pos, n_neg) = class_counts(labels)?;
    Ok(MetricsReport {
        auc: auc(scores, labels)?,
        roc_points: roc_points(scores, labels)?,
        n_pos,
        n_neg,
    })
}

pub fn roc_csv(points: &[RocPoint]) -> String {
    let mut out = String::from("fpr,tpr,threshold\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.fpr, p.tpr, p.threshold));
    }
    out
}

/// One histogram bin of mean neighbor similarity, width 0.1 over [0, 1].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HomophilyBin {
    pub lo: f64,
    pub hi: f64,
    pub pct_normal: f64,
    pub pct_anomalous: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HomophilyStats {
    pub bins: Vec<HomophilyBin>,
    /// Mean of per-node mean neighbor similarity per class; None when the
    /// class has no non-isolated members.
    pub normal_mean: Option<f64>,
    pub anomalous_mean: Option<f64>,
    pub isolated_normal: usize,
    pub isolated_anomalous: usize,
}

const BIN_COUNT: usize = 10;

/// Percentage distribution of per-node mean normalized neighbor
/// similarity, split by anomaly class. Isolated nodes are excluded from
/// the histogram and counted separately.
pub fn homophily_stats(sim: &SimilarityIndex, labels: &AnomalyLabels) -> HomophilyStats {
    assert_eq!(sim.n(), labels.len());
    let mut counts = [[0usize; BIN_COUNT]; 2];
    let mut totals = [0usize; 2];
    let mut sums = [0.0f64; 2];
    let mut isolated = [0usize; 2];

    for u in 0..sim.n() {
        let class = usize::from(labels.is_anomaly(u));
        match sim.mean_neighbor_similarity(u) {
            None => isolated[class] += 1,
            Some(mean) => {
                let bin = ((mean * BIN_COUNT as f64) as usize).min(BIN_COUNT - 1);
                counts[class][bin] += 1;
                totals[class] += 1;
                sums[class] += mean;
            }
        }
    }

    let pct = |class: usize, bin: usize| -> f64 {
        if totals[class] == 0 {
            0.0
        } else {
            100.0 * counts[class][bin] as f64 / totals[class] as f64
        }
    };
    let bins = (0..BIN_COUNT)
        .map(|b| HomophilyBin {
            lo: b as f64 / BIN_COUNT as f64,
            hi: (b + 1) as f64 / BIN_COUNT as f64,
            pct_normal: pct(0, b),
            pct_anomalous: pct(1, b),
        })
        .collect();

    let mean = |class: usize| -> Option<f64> {
        (totals[class] > 0).then(|| sums[class] / totals[class] as f64)
    };
    HomophilyStats {
        bins,
        normal_mean: mean(0),
        anomalous_mean: mean(1),
        isolated_normal: isolated[0],
        isolated_anomalous: isolated[1],
    }
}

pub fn homophily_csv(stats: &HomophilyStats) -> String {
    let mut out = String::from("bin_lo,bin_hi,pct_normal,pct_anomalous\n");
    for b in &stats.bins {
        out.push_str(&format!(
            "{},{},{},{}\n",
            b.lo, b.hi, b.pct_normal, b.pct_anomalous
        ));
    }
    out
}
