//! Multi-modal clip fusion: a pre-norm transformer encoder over one clip's
//! visual tokens plus single audio and text tokens, with a linear head per
//! track. Forward, backward, and the optimizer are hand-written in f64 so
//! gradients can be validated against finite differences.

mod clip;
mod model;
mod params;
mod train;

pub use clip::{build_clip_tokens, sinusoidal_table, ClipTensor};
pub use model::{backward, forward, loss_and_grad, ClipTarget, ForwardCache};
pub use params::FusionParams;
pub use train::{mean_loss, predict, train, AdamW, TrainConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::track::Track;

/// Architecture of the fusion model. The model dimension is the feature
/// dimension of the incoming bundles; only the transformer and the head
/// carry trainable weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    /// Token width `d`, equal to the bundle feature dimension.
    pub model_dim: usize,
    /// Visual tokens per clip `K`.
    pub clip_len: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    /// Hidden width of the position-wise feed-forward blocks.
    pub ff_dim: usize,
    /// Dropout rate on each sublayer output during training.
    pub dropout: f64,
    pub track: Track,
    /// Whether clips carry a text token in addition to the audio token.
    pub has_text: bool,
}

impl FusionConfig {
    /// Standard shape: 4 layers, 4 heads, 4x feed-forward expansion,
    /// dropout 0.3.
    pub fn new(track: Track, model_dim: usize, clip_len: usize, has_text: bool) -> FusionConfig {
        FusionConfig {
            model_dim,
            clip_len,
            n_layers: 4,
            n_heads: 4,
            ff_dim: 4 * model_dim,
            dropout: 0.3,
            track,
            has_text,
        }
    }

    /// Tokens per clip: `K` visual plus audio plus optional text.
    pub fn n_tokens(&self) -> usize {
        self.clip_len + 1 + usize::from(self.has_text)
    }

    /// Width of each attention head.
    pub fn head_dim(&self) -> usize {
        self.model_dim / self.n_heads
    }

    /// Output width of the linear head for this track.
    pub fn head_out(&self) -> usize {
        self.track.class_count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.model_dim == 0 || self.clip_len == 0 || self.n_layers == 0 || self.ff_dim == 0 {
            return Err(Error::InvalidInput(
                "fusion dimensions must all be positive".into(),
            ));
        }
        if self.n_heads == 0 || self.model_dim % self.n_heads != 0 {
            return Err(Error::InvalidInput(format!(
                "model dimension {} is not divisible into {} heads",
                self.model_dim, self.n_heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidInput(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }
}
