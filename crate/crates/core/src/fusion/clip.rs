//! Clip assembly: slicing a video's per-frame visual features into
//! fixed-length token sequences, attaching the clip's audio and text
//! tokens, and stamping sinusoidal positions onto the visual tokens.

use ndarray::Array2;

use super::FusionConfig;
use crate::data::FeatureBundle;
use crate::error::{Error, Result};

/// One clip's token sequence. Rows `0..clip_len` are visual tokens (real
/// frames first, zero padding after), followed by the audio token and,
/// when present, the text token.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipTensor {
    /// `n_tokens x d`.
    pub tokens: Array2<f64>,
    /// Index of this clip within its video.
    pub clip_index: usize,
    /// How many visual tokens correspond to real frames.
    pub valid_frames: usize,
    /// Per-token validity; padding tokens are masked out of attention.
    pub mask: Vec<bool>,
}

/// Sinusoidal position table: row `pos` holds
/// `sin(pos / 10000^(2i/d))` and `cos(pos / 10000^(2i/d))` interleaved
/// across the feature axis.
pub fn sinusoidal_table(len: usize, dim: usize) -> Array2<f64> {
    Array2::from_shape_fn((len, dim), |(pos, j)| {
        let i = (j / 2) as f64;
        let angle = pos as f64 / 10000f64.powf(2.0 * i / dim as f64);
        if j % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    })
}

/// Cut a bundle into clips of `cfg.clip_len` frames. Visual tokens get
/// the sinusoidal position added; the trailing clip is zero-padded and its
/// padding masked. Audio and text tokens are taken per clip as-is (their
/// type embeddings are trainable and added inside the model).
pub fn build_clip_tokens(bundle: &FeatureBundle, cfg: &FusionConfig) -> Result<Vec<ClipTensor>> {
    cfg.validate()?;
    bundle.validate()?;
    let m = &bundle.manifest;
    if m.feature_dim != cfg.model_dim {
        return Err(Error::shape(
            format!("bundle {} feature dimension", m.video_id),
            cfg.model_dim,
            m.feature_dim,
        ));
    }
    if m.clip_len != cfg.clip_len {
        return Err(Error::shape(
            format!("bundle {} clip length", m.video_id),
            cfg.clip_len,
            m.clip_len,
        ));
    }
    if m.has_text != cfg.has_text {
        return Err(Error::InvalidInput(format!(
            "bundle {} has_text={} but the fusion model expects has_text={}",
            m.video_id, m.has_text, cfg.has_text
        )));
    }

    let k = cfg.clip_len;
    let d = cfg.model_dim;
    let n_tokens = cfg.n_tokens();
    let pos = sinusoidal_table(k, d);
    let mut clips = Vec::with_capacity(m.n_clips());
    for c in 0..m.n_clips() {
        let start = c * k;
        let valid = (m.frame_count - start).min(k);
        let mut tokens = Array2::zeros((n_tokens, d));
        for t in 0..valid {
            for j in 0..d {
                tokens[(t, j)] = bundle.visual[(start + t, j)] + pos[(t, j)];
            }
        }
        for j in 0..d {
            tokens[(k, j)] = bundle.audio[(c, j)];
        }
        if let Some(text) = &bundle.text {
            for j in 0..d {
                tokens[(k + 1, j)] = text[(c, j)];
            }
        }
        let mut mask = vec![true; n_tokens];
        for t in valid..k {
            mask[t] = false;
        }
        clips.push(ClipTensor {
            tokens,
            clip_index: c,
            valid_frames: valid,
            mask,
        });
    }
    Ok(clips)
}
