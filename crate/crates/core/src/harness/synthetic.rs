//! Deterministic synthetic corpora with class-conditional feature
//! clusters, so the whole pipeline can be exercised and scored without
//! any external dataset.

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{BackgroundDescriptor, BundleManifest, FaceFlags, FeatureBundle, LabelData, LabelTrack};
use crate::error::{Error, Result};
use crate::track::Track;

/// Shape and difficulty of a generated corpus. Class signal is written
/// along one feature axis per class with magnitude `separation`, on top of
/// Gaussian noise with deviation `noise`; separation well above noise
/// makes the task linearly separable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub track: Track,
    pub n_videos: usize,
    pub frames_per_video: usize,
    /// Video `i` gets `frames_per_video + (i mod (frame_jitter + 1))`
    /// frames, so some videos end in a partial clip.
    pub frame_jitter: usize,
    pub feature_dim: usize,
    pub clip_len: usize,
    pub has_text: bool,
    /// How many distinct background clusters the videos are drawn from.
    pub n_backgrounds: usize,
    pub background_dim: usize,
    pub separation: f64,
    pub noise: f64,
    /// Probability that a frame's face is marked missing.
    pub face_drop_rate: f64,
}

impl SyntheticSpec {
    pub fn new(
        track: Track,
        n_videos: usize,
        frames_per_video: usize,
        feature_dim: usize,
        clip_len: usize,
    ) -> SyntheticSpec {
        SyntheticSpec {
            track,
            n_videos,
            frames_per_video,
            frame_jitter: 3,
            feature_dim,
            clip_len,
            has_text: false,
            n_backgrounds: 3,
            background_dim: 4,
            separation: 2.0,
            noise: 0.3,
            face_drop_rate: 0.02,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_videos == 0 || self.frames_per_video == 0 {
            return Err(Error::InvalidInput(
                "corpus needs at least one video and one frame".into(),
            ));
        }
        if self.clip_len == 0 {
            return Err(Error::InvalidInput("clip length must be positive".into()));
        }
        if self.feature_dim < self.track.class_count() {
            return Err(Error::InvalidInput(format!(
                "feature dim {} cannot encode {} {} classes",
                self.feature_dim,
                self.track.class_count(),
                self.track
            )));
        }
        if self.n_backgrounds == 0 {
            return Err(Error::InvalidInput("need at least one background cluster".into()));
        }
        if self.background_dim < self.n_backgrounds {
            return Err(Error::InvalidInput(format!(
                "background dim {} cannot separate {} clusters",
                self.background_dim, self.n_backgrounds
            )));
        }
        for (name, v) in [("separation", self.separation), ("noise", self.noise)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} {v} must be finite and non-negative"
                )));
            }
        }
        if !(0.0..1.0).contains(&self.face_drop_rate) {
            return Err(Error::InvalidInput(format!(
                "face drop rate {} outside [0, 1)",
                self.face_drop_rate
            )));
        }
        Ok(())
    }
}

/// Period, in frames, of the valence/arousal sinusoid.
const VA_PERIOD: f64 = 50.0;
/// Keeps generated VA labels strictly inside the legal range.
const VA_AMPLITUDE: f64 = 0.9;
const BACKGROUND_CENTER_SCALE: f64 = 10.0;
const BACKGROUND_JITTER: f64 = 0.3;

/// Generate `n_videos` feature bundles and aligned labels. The same spec
/// and seed always produce bitwise-identical output.
pub fn make_synthetic_corpus(
    spec: &SyntheticSpec,
    seed: u64,
) -> Result<Vec<(FeatureBundle, LabelTrack)>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = spec.feature_dim;
    let mut corpus = Vec::with_capacity(spec.n_videos);

    for i in 0..spec.n_videos {
        let frames = spec.frames_per_video + (i % (spec.frame_jitter + 1));
        let n_clips = frames.div_ceil(spec.clip_len);
        let mut visual =
            Array2::from_shape_fn((frames, d), |_| spec.noise * normal(&mut rng));

        let labels = match spec.track {
            Track::Expr => {
                let mut classes = Vec::with_capacity(frames);
                for f in 0..frames {
                    let c = rng.random_range(0..8usize);
                    visual[(f, c)] += spec.separation;
                    classes.push(c as i8);
                }
                LabelData::Expr(classes)
            }
            Track::Au => {
                let mut bits = Array2::zeros((frames, 12));
                for f in 0..frames {
                    for j in 0..12 {
                        let p = 0.25 + 0.5 * j as f64 / 11.0;
                        if rng.random::<f64>() < p {
                            bits[(f, j)] = 1i8;
                            visual[(f, j)] += spec.separation;
                        }
                    }
                }
                LabelData::Au(bits)
            }
            Track::Va => {
                let phase = i as f64 * 0.7;
                let mut values = Array2::zeros((frames, 2));
                for f in 0..frames {
                    let angle = std::f64::consts::TAU * (f as f64 + phase) / VA_PERIOD;
                    let v = VA_AMPLITUDE * angle.sin();
                    let a = VA_AMPLITUDE * angle.cos();
                    values[(f, 0)] = v;
                    values[(f, 1)] = a;
                    visual[(f, 0)] += spec.separation * v;
                    visual[(f, 1)] += spec.separation * a;
                }
                LabelData::Va(values)
            }
            Track::Ce => {
                let mut classes = Vec::with_capacity(n_clips);
                for c in 0..n_clips {
                    let class = rng.random_range(0..7usize);
                    classes.push(class as i8);
                    let lo = c * spec.clip_len;
                    let hi = (lo + spec.clip_len).min(frames);
                    for f in lo..hi {
                        visual[(f, class)] += spec.separation;
                    }
                }
                LabelData::Ce(classes)
            }
            Track::Emi => {
                let mut intensities = Array2::zeros((n_clips, 6));
                for c in 0..n_clips {
                    let lo = c * spec.clip_len;
                    let hi = (lo + spec.clip_len).min(frames);
                    for j in 0..6 {
                        let y: f64 = rng.random();
                        intensities[(c, j)] = y;
                        for f in lo..hi {
                            visual[(f, j)] += spec.separation * y;
                        }
                    }
                }
                LabelData::Emi(intensities)
            }
        };

        // Clip-level modalities summarize the clip's visual content.
        let clip_mean = |c: usize, j: usize| {
            let lo = c * spec.clip_len;
            let hi = (lo + spec.clip_len).min(frames);
            (lo..hi).map(|f| visual[(f, j)]).sum::<f64>() / (hi - lo) as f64
        };
        let audio = Array2::from_shape_fn((n_clips, d), |(c, j)| clip_mean(c, j));
        let text = spec
            .has_text
            .then(|| Array2::from_shape_fn((n_clips, d), |(c, j)| clip_mean(c, j)));

        let mut present: Vec<bool> = (0..frames)
            .map(|_| rng.random::<f64>() >= spec.face_drop_rate)
            .collect();
        if present.iter().all(|&p| !p) {
            present[0] = true;
        }

        let cluster = i % spec.n_backgrounds;
        let descriptor: Vec<f64> = (0..spec.background_dim)
            .map(|j| {
                let center = if j == cluster { BACKGROUND_CENTER_SCALE } else { 0.0 };
                center + BACKGROUND_JITTER * normal(&mut rng)
            })
            .collect();

        let bundle = FeatureBundle {
            manifest: BundleManifest {
                video_id: format!("vid_{i:03}"),
                frame_count: frames,
                feature_dim: d,
                clip_len: spec.clip_len,
                has_text: spec.has_text,
            },
            visual,
            audio,
            text,
            face_flags: FaceFlags(present),
            background: BackgroundDescriptor(descriptor),
        };
        bundle.validate()?;
        let labels = LabelTrack { data: labels };
        labels.validate()?;
        corpus.push((bundle, labels));
    }
    Ok(corpus)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}
