//! Temporal cleanup of frame-wise predictions: filling frames without a
//! detected face from their nearest detected neighbor, then Gaussian
//! smoothing along time.

use ndarray::Array2;

use crate::data::{FaceFlags, PredictionData, PredictionTrack};
use crate::error::{Error, Result};
use crate::track::Track;

/// Below this sigma the kernel collapses to a single tap, so smoothing is
/// treated as the identity.
pub const SIGMA_IDENTITY_THRESHOLD: f64 = 1e-6;

/// Gaussian smoothing parameters for one track.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SmoothingConfig {
    pub sigma: f64,
    /// Kernel half-width in frames. `None` means `ceil(3 * sigma)`.
    pub radius: Option<usize>,
}

impl SmoothingConfig {
    pub fn new(sigma: f64) -> SmoothingConfig {
        SmoothingConfig { sigma, radius: None }
    }

    pub fn with_radius(sigma: f64, radius: usize) -> SmoothingConfig {
        SmoothingConfig {
            sigma,
            radius: Some(radius),
        }
    }

    /// Default per-track smoothing. Slowly drifting valence/arousal takes a
    /// wider kernel than categorical tracks; clip-level tracks have no
    /// temporal axis to smooth and get `None`.
    pub fn default_for(track: Track) -> Option<SmoothingConfig> {
        match track {
            Track::Va => Some(SmoothingConfig::new(4.0)),
            Track::Expr | Track::Au => Some(SmoothingConfig::new(2.0)),
            Track::Ce | Track::Emi => None,
        }
    }

    pub fn effective_radius(&self) -> usize {
        self.radius
            .unwrap_or_else(|| (3.0 * self.sigma).ceil() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "smoothing sigma must be positive and finite, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    /// Unnormalized taps for offsets `-radius ..= radius`.
    fn kernel(&self) -> Vec<f64> {
        let r = self.effective_radius() as isize;
        (-r..=r)
            .map(|s| (-((s * s) as f64) / (2.0 * self.sigma * self.sigma)).exp())
            .collect()
    }
}

/// Convolve a series with a sampled Gaussian, renormalizing the kernel
/// over the taps that fall inside the series. Every output is a convex
/// combination of inputs, so the result stays within the input's range.
pub fn gaussian_smooth(series: &[f64], cfg: &SmoothingConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("smoothing input contains a non-finite value".into()));
    }
    if cfg.sigma < SIGMA_IDENTITY_THRESHOLD {
        return Ok(series.to_vec());
    }
    let kernel = cfg.kernel();
    let r = cfg.effective_radius() as isize;
    let n = series.len() as isize;
    let mut out = Vec::with_capacity(series.len());
    for i in 0..n {
        let lo = (-r).max(-i);
        let hi = r.min(n - 1 - i);
        let mut acc = 0.0;
        let mut weight = 0.0;
        for s in lo..=hi {
            let w = kernel[(s + r) as usize];
            acc += w * series[(i + s) as usize];
            weight += w;
        }
        out.push(acc / weight);
    }
    Ok(out)
}

/// Smooth every channel of a frame-wise prediction track and re-derive
/// the categorical decisions from the smoothed scores. Clip-level tracks
/// have no frame axis and are rejected.
pub fn smooth_track(preds: &PredictionTrack, cfg: &SmoothingConfig) -> Result<PredictionTrack> {
    cfg.validate()?;
    match &preds.data {
        PredictionData::Va(values) => {
            PredictionTrack::va_from_values(smooth_columns(values, cfg)?)
        }
        PredictionData::Expr { probs, .. } => {
            PredictionTrack::expr_from_probs(smooth_columns(probs, cfg)?)
        }
        PredictionData::Au { probs, .. } => {
            PredictionTrack::au_from_probs(smooth_columns(probs, cfg)?)
        }
        PredictionData::Ce { .. } | PredictionData::Emi(_) => Err(Error::WrongTrack {
            track: preds.track(),
            message: "clip-level predictions have no temporal axis to smooth".into(),
        }),
    }
}

fn smooth_columns(values: &Array2<f64>, cfg: &SmoothingConfig) -> Result<Array2<f64>> {
    let mut out = values.clone();
    for (j, col) in values.columns().into_iter().enumerate() {
        let series: Vec<f64> = col.to_vec();
        let smoothed = gaussian_smooth(&series, cfg)?;
        for (i, v) in smoothed.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

/// Overwrite predictions at frames without a detected face with the
/// prediction of the nearest frame that has one; ties prefer the earlier
/// frame. Errors when no frame has a face, since there is nothing to copy.
pub fn replace_missing_faces(
    preds: &PredictionTrack,
    flags: &FaceFlags,
) -> Result<PredictionTrack> {
    if matches!(
        preds.data,
        PredictionData::Ce { .. } | PredictionData::Emi(_)
    ) {
        return Err(Error::WrongTrack {
            track: preds.track(),
            message: "clip-level predictions are not aligned to face flags".into(),
        });
    }
    let n = preds.len();
    if flags.0.len() != n {
        return Err(Error::shape("face flag count", n, flags.0.len()));
    }
    if flags.0.iter().all(|&p| p) {
        return Ok(preds.clone());
    }
    if !flags.0.iter().any(|&p| p) {
        return Err(Error::Degenerate(
            "no frame has a detected face to copy predictions from".into(),
        ));
    }
    let source: Vec<usize> = (0..n).map(|i| nearest_present(&flags.0, i)).collect();

    let data = match &preds.data {
        PredictionData::Va(values) => PredictionData::Va(copy_rows(values, &source)),
        PredictionData::Expr { probs, decisions } => PredictionData::Expr {
            probs: copy_rows(probs, &source),
            decisions: source.iter().map(|&j| decisions[j]).collect(),
        },
        PredictionData::Au { probs, decisions } => PredictionData::Au {
            probs: copy_rows(probs, &source),
            decisions: copy_rows(decisions, &source),
        },
        PredictionData::Ce { .. } | PredictionData::Emi(_) => unreachable!("rejected above"),
    };
    Ok(PredictionTrack { data })
}

fn nearest_present(flags: &[bool], i: usize) -> usize {
    if flags[i] {
        return i;
    }
    let n = flags.len();
    for d in 1..n {
        if i >= d && flags[i - d] {
            return i - d;
        }
        if i + d < n && flags[i + d] {
            return i + d;
        }
    }
    unreachable!("caller guarantees at least one present flag");
}

fn copy_rows<T: Clone>(values: &Array2<T>, source: &[usize]) -> Array2<T> {
    let mut out = values.clone();
    for (i, &j) in source.iter().enumerate() {
        if i != j {
            for c in 0..values.ncols() {
                out[(i, c)] = values[(j, c)].clone();
            }
        }
    }
    out
}
