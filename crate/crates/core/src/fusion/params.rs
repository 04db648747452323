//! Model parameters: per-layer norm scales, attention and feed-forward
//! weights, modality type embeddings, and the linear head. One visitor
//! defines the canonical tensor order; flattening, gradient layout,
//! weight-decay masking, and checkpoint naming all derive from it.

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::clip::sinusoidal_table;
use super::FusionConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LayerParams {
    pub ln1_gamma: Array1<f64>,
    pub ln1_beta: Array1<f64>,
    pub wq: Array2<f64>,
    pub wk: Array2<f64>,
    pub wv: Array2<f64>,
    pub wo: Array2<f64>,
    pub ln2_gamma: Array1<f64>,
    pub ln2_beta: Array1<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

/// All model state. `pos_table` is derived from the configuration and
/// kept here only so checkpoints are self-describing; it never trains.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionParams {
    pub config: FusionConfig,
    pub(crate) layers: Vec<LayerParams>,
    /// Added to the audio token before the first layer.
    pub(crate) audio_type: Array1<f64>,
    /// Added to the text token before the first layer.
    pub(crate) text_type: Option<Array1<f64>>,
    /// `d x head_out`.
    pub(crate) head_w: Array2<f64>,
    pub(crate) head_b: Array1<f64>,
    /// `clip_len x d`, fixed sinusoidal values.
    pub(crate) pos_table: Array2<f64>,
}

/// One tensor's role in the canonical ordering.
pub(crate) enum TensorRef<'a> {
    M(&'a Array2<f64>),
    V(&'a Array1<f64>),
}

pub(crate) enum TensorMut<'a> {
    M(&'a mut Array2<f64>),
    V(&'a mut Array1<f64>),
}

impl FusionParams {
    /// Glorot-uniform weight matrices, unit norm scales, zero biases and
    /// type embeddings. The same seed always produces the same model.
    pub fn init(config: &FusionConfig, seed: u64) -> Result<FusionParams> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.model_dim;
        let ff = config.ff_dim;
        let out = config.head_out();
        let mut glorot = |rows: usize, cols: usize| {
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            Array2::from_shape_fn((rows, cols), |_| rng.random_range(-limit..limit))
        };
        let layers = (0..config.n_layers)
            .map(|_| LayerParams {
                ln1_gamma: Array1::ones(d),
                ln1_beta: Array1::zeros(d),
                wq: glorot(d, d),
                wk: glorot(d, d),
                wv: glorot(d, d),
                wo: glorot(d, d),
                ln2_gamma: Array1::ones(d),
                ln2_beta: Array1::zeros(d),
                w1: glorot(d, ff),
                b1: Array1::zeros(ff),
                w2: glorot(ff, d),
                b2: Array1::zeros(d),
            })
            .collect();
        let head_w = glorot(d, out);
        Ok(FusionParams {
            layers,
            audio_type: Array1::zeros(d),
            text_type: config.has_text.then(|| Array1::zeros(d)),
            head_w,
            head_b: Array1::zeros(out),
            pos_table: sinusoidal_table(config.clip_len, d),
            config: config.clone(),
        })
    }

    /// Same shapes as `self` with every trainable tensor zeroed; used as a
    /// gradient accumulator so gradients share the canonical layout.
    pub fn zeros_like(&self) -> FusionParams {
        let mut z = self.clone();
        z.visit_mut(|_, t, _| match t {
            TensorMut::M(m) => m.fill(0.0),
            TensorMut::V(v) => v.fill(0.0),
        });
        z
    }

    /// Canonical tensor walk. `decay` marks the weight matrices that
    /// weight decay applies to; norm scales, biases, and type embeddings
    /// are exempt.
    pub(crate) fn visit<'a>(&'a self, mut f: impl FnMut(String, TensorRef<'a>, bool)) {
        for (i, l) in self.layers.iter().enumerate() {
            f(format!("layers.{i}.ln1_gamma"), TensorRef::V(&l.ln1_gamma), false);
            f(format!("layers.{i}.ln1_beta"), TensorRef::V(&l.ln1_beta), false);
            f(format!("layers.{i}.wq"), TensorRef::M(&l.wq), true);
            f(format!("layers.{i}.wk"), TensorRef::M(&l.wk), true);
            f(format!("layers.{i}.wv"), TensorRef::M(&l.wv), true);
            f(format!("layers.{i}.wo"), TensorRef::M(&l.wo), true);
            f(format!("layers.{i}.ln2_gamma"), TensorRef::V(&l.ln2_gamma), false);
            f(format!("layers.{i}.ln2_beta"), TensorRef::V(&l.ln2_beta), false);
            f(format!("layers.{i}.w1"), TensorRef::M(&l.w1), true);
            f(format!("layers.{i}.b1"), TensorRef::V(&l.b1), false);
            f(format!("layers.{i}.w2"), TensorRef::M(&l.w2), true);
            f(format!("layers.{i}.b2"), TensorRef::V(&l.b2), false);
        }
        f("audio_type".into(), TensorRef::V(&self.audio_type), false);
        if let Some(t) = &self.text_type {
            f("text_type".into(), TensorRef::V(t), false);
        }
        f("head.w".into(), TensorRef::M(&self.head_w), true);
        f("head.b".into(), TensorRef::V(&self.head_b), false);
    }

    pub(crate) fn visit_mut(&mut self, mut f: impl FnMut(String, TensorMut<'_>, bool)) {
        for (i, l) in self.layers.iter_mut().enumerate() {
            f(format!("layers.{i}.ln1_gamma"), TensorMut::V(&mut l.ln1_gamma), false);
            f(format!("layers.{i}.ln1_beta"), TensorMut::V(&mut l.ln1_beta), false);
            f(format!("layers.{i}.wq"), TensorMut::M(&mut l.wq), true);
            f(format!("layers.{i}.wk"), TensorMut::M(&mut l.wk), true);
            f(format!("layers.{i}.wv"), TensorMut::M(&mut l.wv), true);
            f(format!("layers.{i}.wo"), TensorMut::M(&mut l.wo), true);
            f(format!("layers.{i}.ln2_gamma"), TensorMut::V(&mut l.ln2_gamma), false);
            f(format!("layers.{i}.ln2_beta"), TensorMut::V(&mut l.ln2_beta), false);
            f(format!("layers.{i}.w1"), TensorMut::M(&mut l.w1), true);
            f(format!("layers.{i}.b1"), TensorMut::V(&mut l.b1), false);
            f(format!("layers.{i}.w2"), TensorMut::M(&mut l.w2), true);
            f(format!("layers.{i}.b2"), TensorMut::V(&mut l.b2), false);
        }
        f("audio_type".into(), TensorMut::V(&mut self.audio_type), false);
        if let Some(t) = &mut self.text_type {
            f("text_type".into(), TensorMut::V(t), false);
        }
        f("head.w".into(), TensorMut::M(&mut self.head_w), true);
        f("head.b".into(), TensorMut::V(&mut self.head_b), false);
    }

    pub fn n_trainable(&self) -> usize {
        let mut n = 0;
        self.visit(|_, t, _| {
            n += match t {
                TensorRef::M(m) => m.len(),
                TensorRef::V(v) => v.len(),
            }
        });
        n
    }

    /// All trainable values in canonical order, matrices row-major.
    pub fn flatten_trainable(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.n_trainable());
        self.visit(|_, t, _| match t {
            TensorRef::M(m) => flat.extend(m.iter()),
            TensorRef::V(v) => flat.extend(v.iter()),
        });
        flat
    }

    /// Overwrite every trainable value from a flat slice in canonical
    /// order; the exact inverse of [`flatten_trainable`].
    ///
    /// [`flatten_trainable`]: FusionParams::flatten_trainable
    pub fn set_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_trainable() {
            return Err(Error::shape(
                "flattened parameter count",
                self.n_trainable(),
                flat.len(),
            ));
        }
        let mut pos = 0;
        self.visit_mut(|_, t, _| match t {
            TensorMut::M(m) => {
                for v in m.iter_mut() {
                    *v = flat[pos];
                    pos += 1;
                }
            }
            TensorMut::V(vec) => {
                for v in vec.iter_mut() {
                    *v = flat[pos];
                    pos += 1;
                }
            }
        });
        Ok(())
    }

    /// True at coordinates weight decay applies to, aligned with
    /// [`flatten_trainable`].
    ///
    /// [`flatten_trainable`]: FusionParams::flatten_trainable
    pub fn decay_mask(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.n_trainable());
        self.visit(|_, t, decay| {
            let len = match t {
                TensorRef::M(m) => m.len(),
                TensorRef::V(v) => v.len(),
            };
            mask.extend(std::iter::repeat_n(decay, len));
        });
        mask
    }

    /// Every tensor as `(name, rows x cols matrix)` for checkpointing,
    /// vectors as single-row matrices, plus the fixed position table.
    pub fn named_tensors(&self) -> Vec<(String, Array2<f64>)> {
        let mut out = Vec::new();
        self.visit(|name, t, _| {
            let m = match t {
                TensorRef::M(m) => m.clone(),
                TensorRef::V(v) => v
                    .clone()
                    .into_shape_with_order((1, v.len()))
                    .expect("vector reshapes to single row"),
            };
            out.push((name, m));
        });
        out.push(("pos_table".into(), self.pos_table.clone()));
        out
    }

    /// Rebuild a model from a configuration and its checkpoint tensors.
    pub fn from_named_tensors(
        config: &FusionConfig,
        tensors: &[(String, Array2<f64>)],
    ) -> Result<FusionParams> {
        let mut params = FusionParams::init(config, 0)?;
        let expected: Vec<(String, (usize, usize))> = params
            .named_tensors()
            .iter()
            .map(|(n, m)| (n.clone(), m.dim()))
            .collect();
        if tensors.len() != expected.len() {
            return Err(Error::shape("checkpoint tensor count", expected.len(), tensors.len()));
        }
        for ((name, matrix), (want_name, want_dim)) in tensors.iter().zip(&expected) {
            if name != want_name {
                return Err(Error::InvalidInput(format!(
                    "checkpoint tensor {name:?} where {want_name:?} was expected"
                )));
            }
            if matrix.dim() != *want_dim {
                return Err(Error::shape(
                    format!("checkpoint tensor {name}"),
                    format!("{}x{}", want_dim.0, want_dim.1),
                    format!("{}x{}", matrix.dim().0, matrix.dim().1),
                ));
            }
        }
        let mut flat = Vec::with_capacity(params.n_trainable());
        for (name, matrix) in tensors {
            if name != "pos_table" {
                flat.extend(matrix.iter());
            }
        }
        params.set_from_flat(&flat)?;
        params.pos_table = tensors
            .last()
            .map(|(_, m)| m.clone())
            .expect("tensor list is non-empty");
        Ok(params)
    }
}
