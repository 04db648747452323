//! In-memory data model: feature bundles, label tracks, prediction tracks.
//!
//! Labels keep their sentinel values exactly as annotated (`-1` for AU/EXPR,
//! `-5` for VA); validity is derived, never patched over. Predictions carry
//! per-class scores plus the derived class decisions, since ensemble voting
//! may pick a decision that differs from the arg-max of the fused scores.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::track::Track;

/// Sentinel marking an invalid VA annotation.
pub const VA_INVALID: f64 = -5.0;
/// Sentinel marking an invalid AU or EXPR annotation.
pub const CLASS_INVALID: i8 = -1;

/// Per-frame face-present flags for one video.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaceFlags(pub Vec<bool>);

impl FaceFlags {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn all_present(n: usize) -> Self {
        FaceFlags(vec![true; n])
    }
}

/// Per-video vector summarizing background characteristics.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundDescriptor(pub Vec<f64>);

impl BackgroundDescriptor {
    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Descriptive header of a feature bundle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub video_id: String,
    pub frame_count: usize,
    /// Feature dimension shared by all modalities.
    pub feature_dim: usize,
    /// Clip length the per-clip modalities were extracted at.
    pub clip_len: usize,
    pub has_text: bool,
}

impl BundleManifest {
    /// Number of clips the video divides into at `clip_len`.
    pub fn n_clips(&self) -> usize {
        self.frame_count.div_ceil(self.clip_len)
    }
}

/// Externally supplied per-video features: per-frame visual embeddings,
/// per-clip audio (and optional text) embeddings, face flags, and the
/// background descriptor used for dataset partitioning.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundle {
    pub manifest: BundleManifest,
    /// `frame_count x d`.
    pub visual: Array2<f64>,
    /// `n_clips x d`.
    pub audio: Array2<f64>,
    /// `n_clips x d`, present only when the manifest says so.
    pub text: Option<Array2<f64>>,
    pub face_flags: FaceFlags,
    pub background: BackgroundDescriptor,
}

impl FeatureBundle {
    /// Check every manifest invariant; error messages name the video.
    pub fn validate(&self) -> Result<()> {
        let m = &self.manifest;
        if m.frame_count == 0 {
            return Err(Error::InvalidInput(format!(
                "bundle {}: frame_count must be positive",
                m.video_id
            )));
        }
        if m.clip_len == 0 {
            return Err(Error::InvalidInput(format!(
                "bundle {}: clip_len must be positive",
                m.video_id
            )));
        }
        let check = |name: &str, rows: usize, cols: usize, want_rows: usize| -> Result<()> {
            if rows != want_rows || cols != m.feature_dim {
                return Err(Error::shape(
                    format!("bundle {} {} matrix", m.video_id, name),
                    format!("{}x{}", want_rows, m.feature_dim),
                    format!("{}x{}", rows, cols),
                ));
            }
            Ok(())
        };
        check("visual", self.visual.nrows(), self.visual.ncols(), m.frame_count)?;
        check("audio", self.audio.nrows(), self.audio.ncols(), m.n_clips())?;
        match (&self.text, m.has_text) {
            (Some(t), true) => check("text", t.nrows(), t.ncols(), m.n_clips())?,
            (None, false) => {}
            (Some(_), false) => {
                return Err(Error::InvalidInput(format!(
                    "bundle {}: text matrix present but manifest says has_text=false",
                    m.video_id
                )))
            }
            (None, true) => {
                return Err(Error::InvalidInput(format!(
                    "bundle {}: manifest says has_text=true but text matrix missing",
                    m.video_id
                )))
            }
        }
        if self.face_flags.len() != m.frame_count {
            return Err(Error::shape(
                format!("bundle {} face flags", m.video_id),
                m.frame_count,
                self.face_flags.len(),
            ));
        }
        if self.background.dim() == 0 {
            return Err(Error::InvalidInput(format!(
                "bundle {}: background descriptor is empty",
                m.video_id
            )));
        }
        for (name, mat) in [("visual", Some(&self.visual)), ("audio", Some(&self.audio)), ("text", self.text.as_ref())] {
            if let Some(mat) = mat {
                if mat.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("bundle {} {} matrix", m.video_id, name)));
                }
            }
        }
        if self.background.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("bundle {} background descriptor", m.video_id)));
        }
        Ok(())
    }
}

/// Ground-truth annotations for one video on one track.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelData {
    /// `frames x 12` in {0, 1, -1}.
    Au(Array2<i8>),
    /// Per-frame class id in {0..7} or -1.
    Expr(Vec<i8>),
    /// `frames x 2` valence/arousal in [-1, 1], -5 when invalid.
    Va(Array2<f64>),
    /// Per-clip class id in {0..6}.
    Ce(Vec<i8>),
    /// `clips x 6` intensities in [0, 1].
    Emi(Array2<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelTrack {
    pub data: LabelData,
}

impl LabelTrack {
    pub fn track(&self) -> Track {
        match self.data {
            LabelData::Au(_) => Track::Au,
            LabelData::Expr(_) => Track::Expr,
            LabelData::Va(_) => Track::Va,
            LabelData::Ce(_) => Track::Ce,
            LabelData::Emi(_) => Track::Emi,
        }
    }

    /// Number of annotated rows (frames or clips).
    pub fn len(&self) -> usize {
        match &self.data {
            LabelData::Au(m) => m.nrows(),
            LabelData::Expr(v) => v.len(),
            LabelData::Va(m) => m.nrows(),
            LabelData::Ce(v) => v.len(),
            LabelData::Emi(m) => m.nrows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True for rows that carry a usable annotation. A row holding any
    /// sentinel value counts as invalid in full.
    pub fn valid_mask(&self) -> Vec<bool> {
        match &self.data {
            LabelData::Au(m) => m
                .rows()
                .into_iter()
                .map(|r| r.iter().all(|&v| v != CLASS_INVALID))
                .collect(),
            LabelData::Expr(v) => v.iter().map(|&c| c != CLASS_INVALID).collect(),
            LabelData::Va(m) => m
                .rows()
                .into_iter()
                .map(|r| r.iter().all(|&v| v != VA_INVALID))
                .collect(),
            LabelData::Ce(v) => vec![true; v.len()],
            LabelData::Emi(m) => vec![true; m.nrows()],
        }
    }

    /// Reject out-of-range values; sentinels are allowed where documented.
    pub fn validate(&self) -> Result<()> {
        match &self.data {
            LabelData::Au(m) => {
                if m.ncols() != 12 {
                    return Err(Error::shape("AU label columns", 12, m.ncols()));
                }
                for &v in m.iter() {
                    if !matches!(v, 0 | 1 | CLASS_INVALID) {
                        return Err(Error::InvalidInput(format!(
                            "AU label value {v} outside {{0, 1, -1}}"
                        )));
                    }
                }
            }
            LabelData::Expr(v) => {
                for &c in v {
                    if !(0..8).contains(&c) && c != CLASS_INVALID {
                        return Err(Error::InvalidInput(format!(
                            "EXPR label value {c} outside {{0..7, -1}}"
                        )));
                    }
                }
            }
            LabelData::Va(m) => {
                if m.ncols() != 2 {
                    return Err(Error::shape("VA label columns", 2, m.ncols()));
                }
                for &v in m.iter() {
                    let in_range = (-1.0..=1.0).contains(&v);
                    if !in_range && v != VA_INVALID {
                        return Err(Error::InvalidInput(format!(
                            "VA label value {v} outside [-1, 1] and not the -5 sentinel"
                        )));
                    }
                }
            }
            LabelData::Ce(v) => {
                for &c in v {
                    if !(0..7).contains(&c) {
                        return Err(Error::InvalidInput(format!(
                            "CE label value {c} outside {{0..6}}"
                        )));
                    }
                }
            }
            LabelData::Emi(m) => {
                if m.ncols() != 6 {
                    return Err(Error::shape("EMI label columns", 6, m.ncols()));
                }
                for &v in m.iter() {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::InvalidInput(format!(
                            "EMI label value {v} outside [0, 1]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Model outputs for one video on one track: per-class scores plus the
/// class decisions derived from them (or from ensemble voting).
#[derive(Debug, Clone, PartialEq)]
pub enum PredictionData {
    /// Probabilities `frames x 12` and binary decisions `frames x 12`.
    Au {
        probs: Array2<f64>,
        decisions: Array2<u8>,
    },
    /// Probabilities `frames x 8` and per-frame class decisions.
    Expr {
        probs: Array2<f64>,
        decisions: Vec<u8>,
    },
    /// `frames x 2` valence/arousal values.
    Va(Array2<f64>),
    /// Probabilities `clips x 7` and per-clip class decisions.
    Ce {
        probs: Array2<f64>,
        decisions: Vec<u8>,
    },
    /// `clips x 6` intensity estimates.
    Emi(Array2<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTrack {
    pub data: PredictionData,
}

/// Threshold used to turn an AU probability into a binary decision.
pub const AU_DECISION_THRESHOLD: f64 = 0.5;

/// Index of the largest entry; ties resolve to the lowest index.
pub(crate) fn argmax(row: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

impl PredictionTrack {
    pub fn track(&self) -> Track {
        match self.data {
            PredictionData::Au { .. } => Track::Au,
            PredictionData::Expr { .. } => Track::Expr,
            PredictionData::Va(_) => Track::Va,
            PredictionData::Ce { .. } => Track::Ce,
            PredictionData::Emi(_) => Track::Emi,
        }
    }

    pub fn len(&self) -> usize {
        match &self.data {
            PredictionData::Au { probs, .. } => probs.nrows(),
            PredictionData::Expr { probs, .. } => probs.nrows(),
            PredictionData::Va(m) => m.nrows(),
            PredictionData::Ce { probs, .. } => probs.nrows(),
            PredictionData::Emi(m) => m.nrows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Build an AU track from probabilities, thresholding decisions at 0.5.
    pub fn au_from_probs(probs: Array2<f64>) -> Result<Self> {
        if probs.ncols() != 12 {
            return Err(Error::shape("AU probability columns", 12, probs.ncols()));
        }
        let decisions = probs.mapv(|p| u8::from(p >= AU_DECISION_THRESHOLD));
        Ok(PredictionTrack {
            data: PredictionData::Au { probs, decisions },
        })
    }

    /// Build an EXPR track from probabilities, deciding by arg-max.
    pub fn expr_from_probs(probs: Array2<f64>) -> Result<Self> {
        if probs.ncols() != 8 {
            return Err(Error::shape("EXPR probability columns", 8, probs.ncols()));
        }
        let decisions = probs.rows().into_iter().map(|r| argmax(r) as u8).collect();
        Ok(PredictionTrack {
            data: PredictionData::Expr { probs, decisions },
        })
    }

    pub fn va_from_values(values: Array2<f64>) -> Result<Self> {
        if values.ncols() != 2 {
            return Err(Error::shape("VA value columns", 2, values.ncols()));
        }
        Ok(PredictionTrack {
            data: PredictionData::Va(values),
        })
    }

    /// Build a CE track from probabilities, deciding by arg-max.
    pub fn ce_from_probs(probs: Array2<f64>) -> Result<Self> {
        if probs.ncols() != 7 {
            return Err(Error::shape("CE probability columns", 7, probs.ncols()));
        }
        let decisions = probs.rows().into_iter().map(|r| argmax(r) as u8).collect();
        Ok(PredictionTrack {
            data: PredictionData::Ce { probs, decisions },
        })
    }

    pub fn emi_from_values(values: Array2<f64>) -> Result<Self> {
        if values.ncols() != 6 {
            return Err(Error::shape("EMI value columns", 6, values.ncols()));
        }
        Ok(PredictionTrack {
            data: PredictionData::Emi(values),
        })
    }

    /// A prediction that reproduces the labels exactly. Rows whose labels
    /// are invalid get neutral placeholder scores; evaluation masks them.
    pub fn from_labels(labels: &LabelTrack) -> Self {
        match &labels.data {
            LabelData::Au(m) => {
                let probs = m.mapv(|v| if v == 1 { 1.0 } else { 0.0 });
                let decisions = m.mapv(|v| u8::from(v == 1));
                PredictionTrack {
                    data: PredictionData::Au { probs, decisions },
                }
            }
            LabelData::Expr(v) => {
                let mut probs = Array2::zeros((v.len(), 8));
                let mut decisions = vec![0u8; v.len()];
                for (i, &c) in v.iter().enumerate() {
                    let c = if c == CLASS_INVALID { 0 } else { c as usize };
                    probs[(i, c)] = 1.0;
                    decisions[i] = c as u8;
                }
                PredictionTrack {
                    data: PredictionData::Expr { probs, decisions },
                }
            }
            LabelData::Va(m) => {
                let values = m.mapv(|v| if v == VA_INVALID { 0.0 } else { v });
                PredictionTrack {
                    data: PredictionData::Va(values),
                }
            }
            LabelData::Ce(v) => {
                let mut probs = Array2::zeros((v.len(), 7));
                let mut decisions = vec![0u8; v.len()];
                for (i, &c) in v.iter().enumerate() {
                    probs[(i, c as usize)] = 1.0;
                    decisions[i] = c as u8;
                }
                PredictionTrack {
                    data: PredictionData::Ce { probs, decisions },
                }
            }
            LabelData::Emi(m) => PredictionTrack {
                data: PredictionData::Emi(m.clone()),
            },
        }
    }
}
