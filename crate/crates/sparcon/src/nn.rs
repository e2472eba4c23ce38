//! Minimal dense numeric layer: parameters with Adam state, activations,
//! BCE loss, and finite-difference gradient verification. Everything is
//! 64-bit; the model is small enough that determinism and grad-check
//! fidelity matter more than speed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::Mat;

/// Probability clamp keeping BCE away from log(0).
pub const PROB_CLAMP: f64 = 1e-7;

/// A named tensor with its gradient accumulator and Adam moments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub value: Mat,
    pub grad: Mat,
    adam_m: Mat,
    adam_v: Mat,
    step_count: u64,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Mat) -> Self {
        let (r, c) = (value.rows(), value.cols());
        Parameter {
            name: name.into(),
            value,
            grad: Mat::zeros(r, c),
            adam_m: Mat::zeros(r, c),
            adam_v: Mat::zeros(r, c),
            step_count: 0,
        }
    }

    pub fn scalar(name: impl Into<String>, v: f64) -> Self {
        Parameter::new(name, Mat::from_vec(1, 1, vec![v]))
    }

    pub fn as_scalar(&self) -> f64 {
        debug_assert_eq!(self.value.len(), 1);
        self.value.data()[0]
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_stability: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps_stability: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        AdamConfig {
            learning_rate,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::Config(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0 < b && b < 1.0) {
                return Err(Error::Config(format!("{name} must be in (0, 1), got {b}")));
            }
        }
        Ok(())
    }
}

/// Xavier-uniform init: entries in ±√(6/(rows+cols)).
pub fn xavier_init(rows: usize, cols: usize, rng: &mut impl Rng) -> Mat {
    assert!(rows >= 1 && cols >= 1);
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    Mat::from_vec(rows, cols, data)
}

/// PReLU forward: x where x > 0, slope·x otherwise (slope branch at 0).
pub fn prelu(x: &Mat, slope: f64) -> Mat {
    let mut out = x.clone();
    for v in out.data_mut() {
        if *v <= 0.0 {
            *v *= slope;
        }
    }
    out
}

/// d(prelu)/dx factor for a pre-activation value.
#[inline]
pub fn prelu_grad_factor(pre: f64, slope: f64) -> f64 {
    if pre > 0.0 {
        1.0
    } else {
        slope
    }
}

/// Backward through PReLU: returns grad w.r.t. x and accumulates the
/// slope gradient Σ_{x≤0} x·∂L/∂out.
pub fn prelu_backward(pre: &Mat, slope: f64, upstream: &Mat, slope_grad: &mut f64) -> Mat {
    assert!(pre.same_shape(upstream));
    let mut dx = upstream.clone();
    for (g, &z) in dx.data_mut().iter_mut().zip(pre.data()) {
        if z <= 0.0 {
            *slope_grad += z * *g;
            *g *= slope;
        }
    }
    dx
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// BCE over paired discriminative scores, averaged over the batch:
/// mean of −½(log s⁺ + log(1 − s⁻)). Inputs are clamped into
/// [PROB_CLAMP, 1 − PROB_CLAMP] first.
pub fn bce(pos_scores: &[f64], neg_scores: &[f64]) -> f64 {
    assert_eq!(pos_scores.len(), neg_scores.len());
    assert!(!pos_scores.is_empty());
    let total: f64 = pos_scores
        .iter()
        .zip(neg_scores)
        .map(|(&sp, &sn)| -0.5 * (clamp_prob(sp).ln() + (1.0 - clamp_prob(sn)).ln()))
        .sum();
    total / pos_scores.len() as f64
}

/// Gradients of `bce` w.r.t. each raw score; zero where the clamp is
/// active so the analytic gradient matches the (flat) loss surface.
pub fn bce_backward(pos_scores: &[f64], neg_scores: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let b = pos_scores.len() as f64;
    let d_pos = pos_scores
        .iter()
        .map(|&s| {
            if (PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&s) {
                -0.5 / (s * b)
            } else {
                0.0
            }
        })
        .collect();
    let d_neg = neg_scores
        .iter()
        .map(|&s| {
            if (PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&s) {
                0.5 / ((1.0 - s) * b)
            } else {
                0.0
            }
        })
        .collect();
    (d_pos, d_neg)
}

/// One bias-corrected Adam update per parameter; gradients are zeroed
/// afterwards. A non-finite gradient aborts, naming the parameter.
pub fn adam_step(params: &mut [&mut Parameter], cfg: &AdamConfig) -> Result<()> {
    cfg.validate()?;
    for p in params.iter_mut() {
        if !p.grad.all_finite() {
            return Err(Error::NonFinite {
                what: format!("gradient of {}", p.name),
                context: format!("adam step {}", p.step_count + 1),
            });
        }
        p.step_count += 1;
        let t = p.step_count as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for i in 0..p.value.len() {
            let g = p.grad.data()[i];
            let m = cfg.beta1 * p.adam_m.data()[i] + (1.0 - cfg.beta1) * g;
            let v = cfg.beta2 * p.adam_v.data()[i] + (1.0 - cfg.beta2) * g * g;
            p.adam_m.data_mut()[i] = m;
            p.adam_v.data_mut()[i] = v;
            let update = cfg.learning_rate * (m / bc1) / ((v / bc2).sqrt() + cfg.eps_stability);
            p.value.data_mut()[i] -= update;
        }
        if !p.value.all_finite() {
            return Err(Error::NonFinite {
                what: format!("value of {}", p.name),
                context: format!("adam step {}", p.step_count),
            });
        }
        p.zero_grad();
    }
    Ok(())
}

/// A set of named parameters a loss closure can be differentiated against.
pub trait ParamGroup {
    fn params(&self) -> Vec<&Parameter>;
    fn params_mut(&mut self) -> Vec<&mut Parameter>;
}

#[derive(Clone, Debug)]
pub struct ParamCheck {
    pub name: String,
    pub coord: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// Worst probe per parameter.
    pub per_param: Vec<ParamCheck>,
    pub max_rel_err: f64,
}

/// Compare the analytic gradients already stored in `group` (the caller
/// runs its backward pass first) against central finite differences of
/// `loss` at step size `h`. Probes up to `probes_per_param` random
/// coordinates of each parameter (all coordinates when the parameter is
/// small enough).
pub fn grad_check<P, F>(
    group: &mut P,
    loss: F,
    probes_per_param: usize,
    h: f64,
    rng: &mut impl Rng,
) -> GradCheckReport
where
    P: ParamGroup,
    F: Fn(&P) -> f64,
{
    let n_params = group.params().len();
    let mut per_param = Vec::with_capacity(n_params);
    let mut max_rel_err: f64 = 0.0;

    for pi in 0..n_params {
        let len = group.params()[pi].value.len();
        let coords: Vec<usize> = if len <= probes_per_param {
            (0..len).collect()
        } else {
            (0..probes_per_param)
                .map(|_| rng.random_range(0..len))
                .collect()
        };

        let mut worst: Option<ParamCheck> = None;
        for k in coords {
            let orig = group.params()[pi].value.data()[k];
            group.params_mut()[pi].value.data_mut()[k] = orig + h;
            let loss_plus = loss(group);
            group.params_mut()[pi].value.data_mut()[k] = orig - h;
            let loss_minus = loss(group);
            group.params_mut()[pi].value.data_mut()[k] = orig;

            let numeric = (loss_plus - loss_minus) / (2.0 * h);
            let analytic = group.params()[pi].grad.data()[k];
            let rel_err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            if worst.as_ref().map(|w| rel_err > w.rel_err).unwrap_or(true) {
                worst = Some(ParamCheck {
                    name: group.params()[pi].name.clone(),
                    coord: k,
                    analytic,
                    numeric,
                    rel_err,
                });
            }
        }
        if let Some(w) = worst {
            max_rel_err = max_rel_err.max(w.rel_err);
            per_param.push(w);
        }
    }

    GradCheckReport {
        per_param,
        max_rel_err,
    }
}

/// Default finite-difference step for 64-bit gradient checks.
pub const GRAD_CHECK_STEP: f64 = 1e-4;
