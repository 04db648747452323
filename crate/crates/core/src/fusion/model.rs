//! Forward and backward passes of the fusion transformer.
//!
//! Blocks are pre-norm: `x + drop(attn(ln(x)))` then `x + drop(ffn(ln(x)))`,
//! with no norm after the last block, so a model whose weights are all zero
//! passes tokens through unchanged and the head sees the raw inputs.
//! Padding tokens are excluded from attention as keys; their outputs carry
//! no loss gradient, so they never influence training.

use ndarray::{s, Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::clip::ClipTensor;
use super::params::{FusionParams, LayerParams};
use crate::error::{Error, Result};
use crate::losses::{au_bce_loss, expr_ce_loss, va_ccc_loss, ClassWeights, VAPair};
use crate::track::Track;

const LN_EPS: f64 = 1e-5;

/// Per-frame targets for one clip, already sliced to its valid frames.
#[derive(Debug, Clone, PartialEq)]
pub enum ClipTarget {
    /// `valid_frames x 12` in {0, 1, -1}.
    Au(Array2<i8>),
    /// `valid_frames` class ids in {0..7} or -1.
    Expr(Vec<i8>),
    /// `valid_frames x 2`, -5 marking invalid frames.
    Va(Array2<f64>),
    /// The clip's compound-expression class.
    Ce(i8),
    /// The clip's six emotional-mimicry intensities.
    Emi(Vec<f64>),
}

struct LnCache {
    xhat: Array2<f64>,
    inv_sigma: Array1<f64>,
}

struct LayerCache {
    ln1: LnCache,
    h1: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    /// Softmaxed attention per head, queries in rows.
    attn: Vec<Array2<f64>>,
    concat: Array2<f64>,
    attn_drop: Option<Array2<f64>>,
    ln2: LnCache,
    h2: Array2<f64>,
    pre: Array2<f64>,
    act: Array2<f64>,
    ff_drop: Option<Array2<f64>>,
}

/// Everything the backward pass needs from one forward evaluation.
pub struct ForwardCache {
    layers: Vec<LayerCache>,
    /// Token representations entering the head, `n_tokens x d`.
    final_x: Array2<f64>,
}

fn layer_norm(x: &Array2<f64>, gamma: &Array1<f64>, beta: &Array1<f64>) -> (Array2<f64>, LnCache) {
    let (t, d) = x.dim();
    let mut xhat = Array2::zeros((t, d));
    let mut inv_sigma = Array1::zeros(t);
    let mut y = Array2::zeros((t, d));
    for i in 0..t {
        let row = x.row(i);
        let mu = row.mean().expect("non-empty row");
        let var = row.iter().map(|&v| (v - mu) * (v - mu)).sum::<f64>() / d as f64;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        inv_sigma[i] = inv;
        for j in 0..d {
            let h = (x[(i, j)] - mu) * inv;
            xhat[(i, j)] = h;
            y[(i, j)] = h * gamma[j] + beta[j];
        }
    }
    (y, LnCache { xhat, inv_sigma })
}

fn layer_norm_backward(
    dy: &Array2<f64>,
    cache: &LnCache,
    gamma: &Array1<f64>,
    dgamma: &mut Array1<f64>,
    dbeta: &mut Array1<f64>,
) -> Array2<f64> {
    let (t, d) = dy.dim();
    let mut dx = Array2::zeros((t, d));
    for i in 0..t {
        let mut mean_dxhat = 0.0;
        let mut mean_dxhat_xhat = 0.0;
        for j in 0..d {
            let dxhat = dy[(i, j)] * gamma[j];
            dgamma[j] += dy[(i, j)] * cache.xhat[(i, j)];
            dbeta[j] += dy[(i, j)];
            mean_dxhat += dxhat;
            mean_dxhat_xhat += dxhat * cache.xhat[(i, j)];
        }
        mean_dxhat /= d as f64;
        mean_dxhat_xhat /= d as f64;
        let inv = cache.inv_sigma[i];
        for j in 0..d {
            let dxhat = dy[(i, j)] * gamma[j];
            dx[(i, j)] = inv * (dxhat - mean_dxhat - cache.xhat[(i, j)] * mean_dxhat_xhat);
        }
    }
    dx
}

const GELU_C: f64 = 0.7978845608028654; // sqrt(2/pi)
const GELU_A: f64 = 0.044715;

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

fn gelu_prime(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_A * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

/// Softmax over each row with masked-out key columns; rows are shifted by
/// their max for stability.
fn masked_softmax_rows(scores: &mut Array2<f64>, mask: &[bool]) {
    let (t, n) = scores.dim();
    for i in 0..t {
        let mut max = f64::NEG_INFINITY;
        for j in 0..n {
            if mask[j] && scores[(i, j)] > max {
                max = scores[(i, j)];
            }
        }
        let mut total = 0.0;
        for j in 0..n {
            let e = if mask[j] {
                (scores[(i, j)] - max).exp()
            } else {
                0.0
            };
            scores[(i, j)] = e;
            total += e;
        }
        for j in 0..n {
            scores[(i, j)] /= total;
        }
    }
}

fn dropout_mask(shape: (usize, usize), rate: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let keep = 1.0 - rate;
    Array2::from_shape_fn(shape, |_| {
        if rng.random::<f64>() < keep {
            1.0 / keep
        } else {
            0.0
        }
    })
}

fn check_clip(params: &FusionParams, clip: &ClipTensor) -> Result<()> {
    let cfg = &params.config;
    let want = (cfg.n_tokens(), cfg.model_dim);
    if clip.tokens.dim() != want {
        return Err(Error::shape(
            "clip token matrix",
            format!("{}x{}", want.0, want.1),
            format!("{}x{}", clip.tokens.dim().0, clip.tokens.dim().1),
        ));
    }
    if clip.mask.len() != cfg.n_tokens() {
        return Err(Error::shape("clip mask length", cfg.n_tokens(), clip.mask.len()));
    }
    if clip.valid_frames == 0 || clip.valid_frames > cfg.clip_len {
        return Err(Error::InvalidInput(format!(
            "clip claims {} valid frames of {}",
            clip.valid_frames, cfg.clip_len
        )));
    }
    Ok(())
}

/// Run the encoder over one clip. Returns the head outputs for the visual
/// tokens (`clip_len x head_out`) and the cache for [`backward`]. Passing
/// a dropout RNG enables training-mode dropout; `None` runs deterministic
/// inference.
pub fn forward(
    params: &FusionParams,
    clip: &ClipTensor,
    mut dropout_rng: Option<&mut ChaCha8Rng>,
) -> Result<(Array2<f64>, ForwardCache)> {
    check_clip(params, clip)?;
    let cfg = &params.config;
    let (t, d) = clip.tokens.dim();
    let k = cfg.clip_len;

    let mut x = clip.tokens.clone();
    for j in 0..d {
        x[(k, j)] += params.audio_type[j];
    }
    if let Some(text_type) = &params.text_type {
        for j in 0..d {
            x[(k + 1, j)] += text_type[j];
        }
    }

    let mut layers = Vec::with_capacity(cfg.n_layers);
    for layer in &params.layers {
        let (h1, ln1) = layer_norm(&x, &layer.ln1_gamma, &layer.ln1_beta);
        let (attn_out, q, kk, v, attn, concat) = attention(cfg, layer, &h1, &clip.mask);
        let attn_drop = dropout_rng
            .as_deref_mut()
            .map(|rng| dropout_mask((t, d), cfg.dropout, rng));
        match &attn_drop {
            Some(m) => x = &x + &(&attn_out * m),
            None => x = &x + &attn_out,
        }

        let (h2, ln2) = layer_norm(&x, &layer.ln2_gamma, &layer.ln2_beta);
        let mut pre = h2.dot(&layer.w1);
        for mut row in pre.rows_mut() {
            row += &layer.b1;
        }
        let act = pre.mapv(gelu);
        let mut ff_out = act.dot(&layer.w2);
        for mut row in ff_out.rows_mut() {
            row += &layer.b2;
        }
        let ff_drop = dropout_rng
            .as_deref_mut()
            .map(|rng| dropout_mask((t, d), cfg.dropout, rng));
        match &ff_drop {
            Some(m) => x = &x + &(&ff_out * m),
            None => x = &x + &ff_out,
        }

        layers.push(LayerCache {
            ln1,
            h1,
            q,
            k: kk,
            v,
            attn,
            concat,
            attn_drop,
            ln2,
            h2,
            pre,
            act,
            ff_drop,
        });
    }

    let mut out = x.slice(s![..k, ..]).dot(&params.head_w);
    for mut row in out.rows_mut() {
        row += &params.head_b;
    }
    Ok((out, ForwardCache { layers, final_x: x }))
}

type AttentionOut = (
    Array2<f64>,
    Array2<f64>,
    Array2<f64>,
    Array2<f64>,
    Vec<Array2<f64>>,
    Array2<f64>,
);

fn attention(
    cfg: &super::FusionConfig,
    layer: &LayerParams,
    h1: &Array2<f64>,
    mask: &[bool],
) -> AttentionOut {
    let t = h1.nrows();
    let dh = cfg.head_dim();
    let scale = 1.0 / (dh as f64).sqrt();
    let q = h1.dot(&layer.wq);
    let k = h1.dot(&layer.wk);
    let v = h1.dot(&layer.wv);
    let mut attn = Vec::with_capacity(cfg.n_heads);
    let mut concat = Array2::zeros((t, cfg.model_dim));
    for h in 0..cfg.n_heads {
        let cols = s![.., h * dh..(h + 1) * dh];
        let qh = q.slice(cols);
        let kh = k.slice(cols);
        let vh = v.slice(cols);
        let mut scores = qh.dot(&kh.t());
        scores *= scale;
        masked_softmax_rows(&mut scores, mask);
        let head_out = scores.dot(&vh);
        concat.slice_mut(cols).assign(&head_out);
        attn.push(scores);
    }
    let out = concat.dot(&layer.wo);
    (out, q, k, v, attn, concat)
}

/// Accumulate gradients for one clip into `grads`, given the gradient of
/// the loss with respect to the head outputs (`clip_len x head_out`, rows
/// past the valid frames zero). `grads` must share `params`'s shape; use
/// [`FusionParams::zeros_like`].
pub fn backward(
    params: &FusionParams,
    cache: &ForwardCache,
    d_out: &Array2<f64>,
    grads: &mut FusionParams,
) -> Result<()> {
    let cfg = &params.config;
    let k = cfg.clip_len;
    let d = cfg.model_dim;
    let t = cfg.n_tokens();
    if d_out.dim() != (k, cfg.head_out()) {
        return Err(Error::shape(
            "head output gradient",
            format!("{}x{}", k, cfg.head_out()),
            format!("{}x{}", d_out.dim().0, d_out.dim().1),
        ));
    }
    if grads.config != params.config {
        return Err(Error::InvalidInput(
            "gradient accumulator was built for a different configuration".into(),
        ));
    }

    let visual = cache.final_x.slice(s![..k, ..]);
    grads.head_w += &visual.t().dot(d_out);
    for row in d_out.rows() {
        grads.head_b += &row;
    }
    let mut dx = Array2::zeros((t, d));
    dx.slice_mut(s![..k, ..]).assign(&d_out.dot(&params.head_w.t()));

    let dh = cfg.head_dim();
    let scale = 1.0 / (dh as f64).sqrt();
    for l in (0..params.layers.len()).rev() {
        let layer = &params.layers[l];
        let lc = &cache.layers[l];
        let gl = &mut grads.layers[l];

        // Feed-forward sublayer.
        let dff_out = match &lc.ff_drop {
            Some(m) => &dx * m,
            None => dx.clone(),
        };
        gl.w2 += &lc.act.t().dot(&dff_out);
        for row in dff_out.rows() {
            gl.b2 += &row;
        }
        let dact = dff_out.dot(&layer.w2.t());
        let dpre = &dact * &lc.pre.mapv(gelu_prime);
        gl.w1 += &lc.h2.t().dot(&dpre);
        for row in dpre.rows() {
            gl.b1 += &row;
        }
        let dh2 = dpre.dot(&layer.w1.t());
        let dln2 = layer_norm_backward(
            &dh2,
            &lc.ln2,
            &layer.ln2_gamma,
            &mut gl.ln2_gamma,
            &mut gl.ln2_beta,
        );
        dx += &dln2;

        // Attention sublayer.
        let dattn_out = match &lc.attn_drop {
            Some(m) => &dx * m,
            None => dx.clone(),
        };
        gl.wo += &lc.concat.t().dot(&dattn_out);
        let dconcat = dattn_out.dot(&layer.wo.t());
        let mut dq = Array2::zeros((t, d));
        let mut dk = Array2::zeros((t, d));
        let mut dv = Array2::zeros((t, d));
        for h in 0..cfg.n_heads {
            let cols = s![.., h * dh..(h + 1) * dh];
            let a = &lc.attn[h];
            let d_head = dconcat.slice(cols);
            let vh = lc.v.slice(cols);
            let qh = lc.q.slice(cols);
            let kh = lc.k.slice(cols);
            let da = d_head.dot(&vh.t());
            dv.slice_mut(cols).assign(&a.t().dot(&d_head));
            // Softmax backward, row-wise.
            let mut ds = Array2::zeros((t, t));
            for i in 0..t {
                let mut dot = 0.0;
                for j in 0..t {
                    dot += da[(i, j)] * a[(i, j)];
                }
                for j in 0..t {
                    ds[(i, j)] = a[(i, j)] * (da[(i, j)] - dot);
                }
            }
            ds *= scale;
            dq.slice_mut(cols).assign(&ds.dot(&kh));
            dk.slice_mut(cols).assign(&ds.t().dot(&qh));
        }
        gl.wq += &lc.h1.t().dot(&dq);
        gl.wk += &lc.h1.t().dot(&dk);
        gl.wv += &lc.h1.t().dot(&dv);
        let dh1 = dq.dot(&layer.wq.t()) + dk.dot(&layer.wk.t()) + dv.dot(&layer.wv.t());
        let dln1 = layer_norm_backward(
            &dh1,
            &lc.ln1,
            &layer.ln1_gamma,
            &mut gl.ln1_gamma,
            &mut gl.ln1_beta,
        );
        dx += &dln1;
    }

    grads.audio_type += &dx.row(k);
    if let Some(text_grad) = &mut grads.text_type {
        *text_grad += &dx.row(k + 1);
    }
    Ok(())
}

fn softmax_row(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Chain a loss gradient on softmax outputs back to the logits.
fn softmax_chain(p: &[f64], g: &[f64]) -> Vec<f64> {
    let dot: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
    p.iter().zip(g).map(|(&pi, &gi)| pi * (gi - dot)).collect()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Evaluate one clip's task loss; with `grads` supplied, also run the
/// backward pass and accumulate. Passing a dropout RNG trains with
/// dropout; `None` evaluates deterministically (as finite differences
/// require). Clips with no usable frames contribute zero.
pub fn loss_and_grad(
    params: &FusionParams,
    clip: &ClipTensor,
    target: &ClipTarget,
    weights: &ClassWeights,
    dropout_rng: Option<&mut ChaCha8Rng>,
    grads: Option<&mut FusionParams>,
) -> Result<f64> {
    let cfg = &params.config;
    check_target(cfg.track, target, clip.valid_frames)?;
    let (out, cache) = forward(params, clip, dropout_rng)?;
    let k = cfg.clip_len;
    let n_out = cfg.head_out();
    let valid = clip.valid_frames;
    let mut d_out = Array2::zeros((k, n_out));
    let mut loss = 0.0;

    match target {
        ClipTarget::Au(labels) => {
            let usable: Vec<usize> = (0..valid)
                .filter(|&f| (0..12).all(|j| labels[(f, j)] != -1))
                .collect();
            if usable.is_empty() {
                return Ok(0.0);
            }
            let n = usable.len() as f64;
            for &f in &usable {
                let probs: Vec<f64> = (0..12).map(|j| sigmoid(out[(f, j)])).collect();
                let row: Vec<i8> = (0..12).map(|j| labels[(f, j)]).collect();
                let lv = au_bce_loss(&probs, &row, weights)?;
                loss += lv.value / n;
                for j in 0..12 {
                    // Exact BCE-through-sigmoid gradient.
                    d_out[(f, j)] =
                        weights.as_slice()[j] * (probs[j] - row[j] as f64) / 12.0 / n;
                }
            }
        }
        ClipTarget::Expr(labels) => {
            let usable: Vec<usize> = (0..valid).filter(|&f| labels[f] != -1).collect();
            if usable.is_empty() {
                return Ok(0.0);
            }
            let n = usable.len() as f64;
            for &f in &usable {
                let logits: Vec<f64> = (0..8).map(|j| out[(f, j)]).collect();
                let p = softmax_row(&logits);
                let lv = expr_ce_loss(&p, labels[f] as usize, weights)?;
                loss += lv.value / n;
                let dlogit = softmax_chain(&p, &lv.grad);
                for j in 0..8 {
                    d_out[(f, j)] = dlogit[j] / n;
                }
            }
        }
        ClipTarget::Va(labels) => {
            let usable: Vec<usize> = (0..valid)
                .filter(|&f| labels[(f, 0)] != crate::data::VA_INVALID
                    && labels[(f, 1)] != crate::data::VA_INVALID)
                .collect();
            if usable.is_empty() {
                return Ok(0.0);
            }
            let pred: Vec<VAPair> = usable
                .iter()
                .map(|&f| VAPair::new(out[(f, 0)], out[(f, 1)]))
                .collect();
            let truth: Vec<VAPair> = usable
                .iter()
                .map(|&f| VAPair::new(labels[(f, 0)], labels[(f, 1)]))
                .collect();
            let lv = va_ccc_loss(&pred, &truth)?;
            loss = lv.value;
            for (slot, &f) in usable.iter().enumerate() {
                d_out[(f, 0)] = lv.grad[2 * slot];
                d_out[(f, 1)] = lv.grad[2 * slot + 1];
            }
        }
        ClipTarget::Ce(class) => {
            let n = valid as f64;
            let pooled: Vec<f64> = (0..7)
                .map(|j| (0..valid).map(|f| out[(f, j)]).sum::<f64>() / n)
                .collect();
            let p = softmax_row(&pooled);
            let lv = expr_ce_loss(&p, *class as usize, weights)?;
            loss = lv.value;
            let dpool = softmax_chain(&p, &lv.grad);
            for f in 0..valid {
                for j in 0..7 {
                    d_out[(f, j)] = dpool[j] / n;
                }
            }
        }
        ClipTarget::Emi(intensities) => {
            let n = valid as f64;
            let pooled: Vec<f64> = (0..6)
                .map(|j| (0..valid).map(|f| out[(f, j)]).sum::<f64>() / n)
                .collect();
            for j in 0..6 {
                let diff = pooled[j] - intensities[j];
                loss += diff * diff / 6.0;
                let dpool = 2.0 * diff / 6.0;
                for f in 0..valid {
                    d_out[(f, j)] = dpool / n;
                }
            }
        }
    }

    if let Some(grads) = grads {
        backward(params, &cache, &d_out, grads)?;
    }
    Ok(loss)
}

fn check_target(track: Track, target: &ClipTarget, valid_frames: usize) -> Result<()> {
    let ok = match (track, target) {
        (Track::Au, ClipTarget::Au(m)) => m.dim() == (valid_frames, 12),
        (Track::Expr, ClipTarget::Expr(v)) => v.len() == valid_frames,
        (Track::Va, ClipTarget::Va(m)) => m.dim() == (valid_frames, 2),
        (Track::Ce, ClipTarget::Ce(c)) => (0..7).contains(c),
        (Track::Emi, ClipTarget::Emi(v)) => v.len() == 6,
        _ => {
            return Err(Error::WrongTrack {
                track,
                message: "clip target belongs to a different track".into(),
            })
        }
    };
    if !ok {
        return Err(Error::InvalidInput(format!(
            "clip target shape does not cover the clip's {valid_frames} valid frames"
        )));
    }
    Ok(())
}
