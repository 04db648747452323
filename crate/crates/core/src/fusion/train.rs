//! Optimization loop and inference for the fusion model.

use ndarray::{s, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::clip::{build_clip_tokens, ClipTensor};
use super::model::{forward, loss_and_grad, ClipTarget};
use super::params::FusionParams;
use super::FusionConfig;
use crate::data::{FeatureBundle, LabelData, LabelTrack, PredictionTrack};
use crate::error::{Error, Result};
use crate::losses::{ClassWeights, WeightPolicy};
use crate::track::Track;

/// Optimizer and schedule settings for [`train`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Decoupled weight decay, applied to weight matrices only.
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub weight_policy: WeightPolicy,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            epochs: 10,
            batch_size: 8,
            learning_rate: 1e-4,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            weight_policy: WeightPolicy::InverseFrequency,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidInput(
                "epochs and batch size must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "learning rate {} must be positive and finite",
                self.learning_rate
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "weight decay {} must be non-negative",
                self.weight_decay
            )));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::InvalidInput(format!("{name} {b} outside [0, 1)")));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidInput(format!(
                "epsilon {} must be positive",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Adam with decoupled weight decay over the flattened trainable vector.
/// The decay mask restricts decay to weight matrices; norm scales, biases,
/// and type embeddings are never decayed.
pub struct AdamW {
    lr: f64,
    weight_decay: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    decay: Vec<bool>,
    t: u64,
}

impl AdamW {
    pub fn new(cfg: &TrainConfig, params: &FusionParams) -> AdamW {
        let n = params.n_trainable();
        AdamW {
            lr: cfg.learning_rate,
            weight_decay: cfg.weight_decay,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.epsilon,
            m: vec![0.0; n],
            v: vec![0.0; n],
            decay: params.decay_mask(),
            t: 0,
        }
    }

    /// Apply one update in place to the flattened parameters.
    pub fn step(&mut self, flat: &mut [f64], grad: &[f64]) -> Result<()> {
        if flat.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::shape(
                "optimizer state length",
                self.m.len(),
                flat.len().max(grad.len()),
            ));
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..flat.len() {
            if self.decay[i] {
                flat[i] -= self.lr * self.weight_decay * flat[i];
            }
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            flat[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

fn expected_label_rows(config: &FusionConfig, bundle: &FeatureBundle) -> usize {
    match config.track {
        Track::Au | Track::Expr | Track::Va => bundle.manifest.frame_count,
        Track::Ce | Track::Emi => bundle.manifest.n_clips(),
    }
}

/// Slice one clip's targets out of a full-video label track.
fn clip_target(labels: &LabelTrack, clip: &ClipTensor, clip_len: usize) -> ClipTarget {
    let lo = clip.clip_index * clip_len;
    let hi = lo + clip.valid_frames;
    match &labels.data {
        LabelData::Au(m) => ClipTarget::Au(m.slice(s![lo..hi, ..]).to_owned()),
        LabelData::Expr(v) => ClipTarget::Expr(v[lo..hi].to_vec()),
        LabelData::Va(m) => ClipTarget::Va(m.slice(s![lo..hi, ..]).to_owned()),
        LabelData::Ce(v) => ClipTarget::Ce(v[clip.clip_index]),
        LabelData::Emi(m) => ClipTarget::Emi(m.row(clip.clip_index).to_vec()),
    }
}

/// Occurrences per class across all usable labels, for weight policies.
fn class_counts(track: Track, data: &[(FeatureBundle, LabelTrack)]) -> Vec<usize> {
    let mut counts = vec![0usize; track.class_count()];
    for (_, labels) in data {
        match &labels.data {
            LabelData::Au(m) => {
                for row in m.rows() {
                    if row.iter().all(|&v| v != crate::data::CLASS_INVALID) {
                        for (j, &v) in row.iter().enumerate() {
                            if v == 1 {
                                counts[j] += 1;
                            }
                        }
                    }
                }
            }
            LabelData::Expr(v) => {
                for &c in v {
                    if c != crate::data::CLASS_INVALID {
                        counts[c as usize] += 1;
                    }
                }
            }
            LabelData::Ce(v) => {
                for &c in v {
                    counts[c as usize] += 1;
                }
            }
            // Regression tracks take no class weighting.
            LabelData::Va(_) | LabelData::Emi(_) => {}
        }
    }
    counts
}

/// Train a fusion model on feature bundles with aligned labels. Clips are
/// shuffled each epoch with a seeded generator; each batch takes one
/// optimizer step on the summed clip gradients.
pub fn train(
    config: &FusionConfig,
    train_cfg: &TrainConfig,
    data: &[(FeatureBundle, LabelTrack)],
) -> Result<FusionParams> {
    config.validate()?;
    train_cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidInput("no training videos supplied".into()));
    }
    for (bundle, labels) in data {
        if labels.track() != config.track {
            return Err(Error::WrongTrack {
                track: config.track,
                message: format!(
                    "labels for {} carry track {}",
                    bundle.manifest.video_id,
                    labels.track()
                ),
            });
        }
        labels.validate()?;
        let want = expected_label_rows(config, bundle);
        if labels.len() != want {
            return Err(Error::shape(
                format!("label rows for {}", bundle.manifest.video_id),
                want,
                labels.len(),
            ));
        }
    }

    let weights = ClassWeights::from_counts(train_cfg.weight_policy, &class_counts(config.track, data));

    let mut clips: Vec<(ClipTensor, ClipTarget)> = Vec::new();
    for (bundle, labels) in data {
        for clip in build_clip_tokens(bundle, config)? {
            let target = clip_target(labels, &clip, config.clip_len);
            clips.push((clip, target));
        }
    }

    let mut params = FusionParams::init(config, train_cfg.seed)?;
    let mut opt = AdamW::new(train_cfg, &params);
    let mut rng = ChaCha8Rng::seed_from_u64(train_cfg.seed);
    let mut order: Vec<usize> = (0..clips.len()).collect();

    for _ in 0..train_cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(train_cfg.batch_size) {
            let mut grads = params.zeros_like();
            for &i in batch {
                let (clip, target) = &clips[i];
                let drop_rng = (config.dropout > 0.0).then_some(&mut rng);
                loss_and_grad(&params, clip, target, &weights, drop_rng, Some(&mut grads))?;
            }
            let mut flat = params.flatten_trainable();
            opt.step(&mut flat, &grads.flatten_trainable())?;
            params.set_from_flat(&flat)?;
        }
    }
    Ok(params)
}

/// Mean training loss over all clips without dropout, for monitoring.
pub fn mean_loss(
    params: &FusionParams,
    data: &[(FeatureBundle, LabelTrack)],
    weights: &ClassWeights,
) -> Result<f64> {
    let mut total = 0.0;
    let mut n = 0usize;
    for (bundle, labels) in data {
        for clip in build_clip_tokens(bundle, &params.config)? {
            let target = clip_target(labels, &clip, params.config.clip_len);
            total += loss_and_grad(params, &clip, &target, weights, None, None)?;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::InvalidInput("no clips to evaluate".into()));
    }
    Ok(total / n as f64)
}

/// Run inference over a whole video and assemble the prediction track.
/// Frame-wise tracks emit one row per frame; clip-level tracks pool each
/// clip's valid frames by mean before the task head nonlinearity.
pub fn predict(params: &FusionParams, bundle: &FeatureBundle) -> Result<PredictionTrack> {
    let config = &params.config;
    let clips = build_clip_tokens(bundle, config)?;
    let n_frames = bundle.manifest.frame_count;
    let n_clips = clips.len();
    let n_out = config.head_out();

    match config.track {
        Track::Au | Track::Expr | Track::Va => {
            let mut rows = Array2::zeros((n_frames, n_out));
            for clip in &clips {
                let (out, _) = forward(params, clip, None)?;
                let base = clip.clip_index * config.clip_len;
                for f in 0..clip.valid_frames {
                    for j in 0..n_out {
                        rows[(base + f, j)] = out[(f, j)];
                    }
                }
            }
            match config.track {
                Track::Au => PredictionTrack::au_from_probs(rows.mapv(sigmoid)),
                Track::Expr => {
                    let probs = softmax_rows(&rows);
                    PredictionTrack::expr_from_probs(probs)
                }
                Track::Va => PredictionTrack::va_from_values(rows),
                _ => unreachable!(),
            }
        }
        Track::Ce | Track::Emi => {
            let mut pooled = Array2::zeros((n_clips, n_out));
            for clip in &clips {
                let (out, _) = forward(params, clip, None)?;
                let n = clip.valid_frames as f64;
                for j in 0..n_out {
                    pooled[(clip.clip_index, j)] =
                        (0..clip.valid_frames).map(|f| out[(f, j)]).sum::<f64>() / n;
                }
            }
            match config.track {
                Track::Ce => PredictionTrack::ce_from_probs(softmax_rows(&pooled)),
                Track::Emi => PredictionTrack::emi_from_values(pooled),
                _ => unreachable!(),
            }
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}
