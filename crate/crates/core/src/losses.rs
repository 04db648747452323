//! Task losses with analytic gradients.
//!
//! Each loss comes in two layers: a `*_value` function computing the raw
//! differentiable scalar (used by finite-difference checks, which must be
//! free to step off constraint surfaces like the probability simplex), and
//! a `*_loss` function that validates its inputs and returns the value
//! together with the gradient with respect to the predictions.

use crate::error::{Error, Result};
use crate::metrics::mean_var;

/// Probabilities are clipped into `[PROB_CLIP, 1 - PROB_CLIP]` before any
/// log or division so a saturated prediction cannot produce an infinity.
pub const PROB_CLIP: f64 = 1e-7;

/// Allowed deviation of a probability vector's sum from 1.
pub const SIMPLEX_TOL: f64 = 1e-6;

/// Regularizer added to the concordance denominator during training so a
/// constant series stays differentiable.
pub const CCC_EPS: f64 = 1e-8;

/// How per-class weights are derived from the training label counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightPolicy {
    Uniform,
    InverseFrequency,
}

/// Per-class loss weights. Weights are strictly positive and average to 1,
/// so they rebalance classes without rescaling the loss magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights(Vec<f64>);

impl ClassWeights {
    pub fn uniform(n_classes: usize) -> ClassWeights {
        ClassWeights(vec![1.0; n_classes])
    }

    /// Inverse-frequency weights with add-one smoothing: `w_c` is
    /// proportional to `1 / (count_c + 1)`, normalized to mean 1. The
    /// smoothing keeps absent classes from dominating.
    pub fn inverse_frequency(counts: &[usize]) -> ClassWeights {
        let raw: Vec<f64> = counts.iter().map(|&c| 1.0 / (c as f64 + 1.0)).collect();
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        ClassWeights(raw.into_iter().map(|w| w / mean).collect())
    }

    pub fn from_counts(policy: WeightPolicy, counts: &[usize]) -> ClassWeights {
        match policy {
            WeightPolicy::Uniform => ClassWeights::uniform(counts.len()),
            WeightPolicy::InverseFrequency => ClassWeights::inverse_frequency(counts),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A valence/arousal sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VAPair {
    pub valence: f64,
    pub arousal: f64,
}

impl VAPair {
    pub fn new(valence: f64, arousal: f64) -> VAPair {
        VAPair { valence, arousal }
    }
}

/// A loss evaluation: the scalar and its gradient with respect to the
/// prediction vector that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grad: Vec<f64>,
}

fn clip_prob(p: f64) -> f64 {
    p.clamp(PROB_CLIP, 1.0 - PROB_CLIP)
}

fn check_finite(xs: &[f64], what: &str) -> Result<()> {
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{what} contains a non-finite value")));
    }
    Ok(())
}

/// Mean over channels of weighted binary cross-entropy:
/// `(1/C) * sum_j w_j * -(y_j ln p_j + (1 - y_j) ln(1 - p_j))`.
pub fn au_bce_value(probs: &[f64], labels: &[i8], weights: &ClassWeights) -> Result<f64> {
    check_au_inputs(probs, labels, weights)?;
    let c = probs.len() as f64;
    let mut total = 0.0;
    for ((&p, &y), &w) in probs.iter().zip(labels).zip(weights.as_slice()) {
        let p = clip_prob(p);
        let y = y as f64;
        total += w * -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
    }
    Ok(total / c)
}

/// Weighted binary cross-entropy over the action unit channels, with its
/// gradient `(1/C) * w_j * (p_j - y_j) / (p_j (1 - p_j))`.
pub fn au_bce_loss(probs: &[f64], labels: &[i8], weights: &ClassWeights) -> Result<LossValue> {
    let value = au_bce_value(probs, labels, weights)?;
    let c = probs.len() as f64;
    let grad = probs
        .iter()
        .zip(labels)
        .zip(weights.as_slice())
        .map(|((&p, &y), &w)| {
            let p = clip_prob(p);
            w * (p - y as f64) / (p * (1.0 - p)) / c
        })
        .collect();
    Ok(LossValue { value, grad })
}

fn check_au_inputs(probs: &[f64], labels: &[i8], weights: &ClassWeights) -> Result<()> {
    if probs.len() != weights.len() {
        return Err(Error::shape("bce probabilities", weights.len(), probs.len()));
    }
    if labels.len() != probs.len() {
        return Err(Error::shape("bce labels", probs.len(), labels.len()));
    }
    check_finite(probs, "bce probabilities")?;
    if labels.iter().any(|&y| y != 0 && y != 1) {
        return Err(Error::InvalidInput(
            "bce labels must be 0 or 1 (mask invalid frames before the loss)".into(),
        ));
    }
    Ok(())
}

/// Weighted cross-entropy scalar `(1/C) * w_c * -ln(p_c)`. Does not demand
/// that `probs` lie on the simplex, only that every entry is finite and
/// positive after clipping.
pub fn expr_ce_value(probs: &[f64], class: usize, weights: &ClassWeights) -> Result<f64> {
    check_ce_inputs(probs, class, weights)?;
    let c = probs.len() as f64;
    Ok(weights.as_slice()[class] * -clip_prob(probs[class]).ln() / c)
}

/// Weighted cross-entropy over a probability vector that must sum to 1
/// within `SIMPLEX_TOL`. Gradient is `-(1/C) * w_c / p_c` at the true
/// class and zero elsewhere.
pub fn expr_ce_loss(probs: &[f64], class: usize, weights: &ClassWeights) -> Result<LossValue> {
    check_ce_inputs(probs, class, weights)?;
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidInput(format!(
            "cross-entropy probabilities sum to {sum}, expected 1 within {SIMPLEX_TOL}"
        )));
    }
    if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::InvalidInput(
            "cross-entropy probabilities must lie in [0, 1]".into(),
        ));
    }
    let value = expr_ce_value(probs, class, weights)?;
    let c = probs.len() as f64;
    let mut grad = vec![0.0; probs.len()];
    grad[class] = -weights.as_slice()[class] / clip_prob(probs[class]) / c;
    Ok(LossValue { value, grad })
}

fn check_ce_inputs(probs: &[f64], class: usize, weights: &ClassWeights) -> Result<()> {
    if probs.len() != weights.len() {
        return Err(Error::shape(
            "cross-entropy probabilities",
            weights.len(),
            probs.len(),
        ));
    }
    if class >= probs.len() {
        return Err(Error::InvalidInput(format!(
            "class index {class} out of range for {} classes",
            probs.len()
        )));
    }
    check_finite(probs, "cross-entropy probabilities")
}

struct CccGrad {
    value: f64,
    /// d value / d pred, one entry per frame.
    grad: Vec<f64>,
}

/// Concordance with the `CCC_EPS`-regularized denominator, plus its
/// gradient with respect to the prediction series.
fn ccc_with_grad(truth: &[f64], pred: &[f64]) -> CccGrad {
    let n = truth.len() as f64;
    let (mt, vt) = mean_var(truth);
    let (mp, vp) = mean_var(pred);
    let gap = mt - mp;
    let d = vt + vp + gap * gap + CCC_EPS;
    let cov = truth
        .iter()
        .zip(pred)
        .map(|(&t, &p)| (t - mt) * (p - mp))
        .sum::<f64>()
        / n;
    let value = 2.0 * cov / d;
    let scale = 2.0 / (n * d * d);
    let grad = truth
        .iter()
        .zip(pred)
        .map(|(&t, &p)| scale * ((t - mt) * d - 2.0 * cov * ((p - mp) - gap)))
        .collect();
    CccGrad { value, grad }
}

fn split_pairs(pairs: &[VAPair]) -> (Vec<f64>, Vec<f64>) {
    (
        pairs.iter().map(|p| p.valence).collect(),
        pairs.iter().map(|p| p.arousal).collect(),
    )
}

fn check_va_inputs(pred: &[VAPair], truth: &[VAPair]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::shape("concordance series lengths", truth.len(), pred.len()));
    }
    if pred.is_empty() {
        return Err(Error::InvalidInput("concordance loss of an empty series".into()));
    }
    for (what, pairs) in [("predictions", pred), ("labels", truth)] {
        if pairs
            .iter()
            .any(|p| !p.valence.is_finite() || !p.arousal.is_finite())
        {
            return Err(Error::NonFinite(format!(
                "concordance {what} contain a non-finite value"
            )));
        }
    }
    Ok(())
}

/// `(1 - CCC(valence)) + (1 - CCC(arousal))` over a clip, using the
/// regularized concordance.
pub fn va_ccc_value(pred: &[VAPair], truth: &[VAPair]) -> Result<f64> {
    check_va_inputs(pred, truth)?;
    let (pv, pa) = split_pairs(pred);
    let (tv, ta) = split_pairs(truth);
    let v = ccc_with_grad(&tv, &pv).value;
    let a = ccc_with_grad(&ta, &pa).value;
    Ok((1.0 - v) + (1.0 - a))
}

/// Concordance loss over a clip with its gradient, laid out per frame as
/// `(valence_0, arousal_0, valence_1, arousal_1, ...)`.
pub fn va_ccc_loss(pred: &[VAPair], truth: &[VAPair]) -> Result<LossValue> {
    check_va_inputs(pred, truth)?;
    let (pv, pa) = split_pairs(pred);
    let (tv, ta) = split_pairs(truth);
    let v = ccc_with_grad(&tv, &pv);
    let a = ccc_with_grad(&ta, &pa);
    let value = (1.0 - v.value) + (1.0 - a.value);
    let mut grad = Vec::with_capacity(2 * pred.len());
    for (dv, da) in v.grad.iter().zip(&a.grad) {
        grad.push(-dv);
        grad.push(-da);
    }
    Ok(LossValue { value, grad })
}
