//! Cross-validation experiments: fold splitting, per-fold training of
//! background-partitioned ensembles, post-processing, evaluation, and
//! report rendering.

mod report;
mod synthetic;

pub use report::{render_csv_report, render_text_report};
pub use synthetic::{make_synthetic_corpus, SyntheticSpec};

use std::collections::{HashMap, HashSet};

use ndarray::{concatenate, Axis};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    BackgroundDescriptor, FeatureBundle, LabelData, LabelTrack, PredictionData, PredictionTrack,
};
use crate::ensemble::{combine_predictions, partition_backgrounds};
use crate::error::{Error, Result};
use crate::fusion::{predict, train, FusionConfig, TrainConfig};
use crate::metrics::{evaluate_track, MetricReport};
use crate::postprocess::{replace_missing_faces, smooth_track, SmoothingConfig};
use crate::track::Track;

/// One cross-validation fold: which videos train and which validate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSplit {
    /// 1-based fold number; 0 is reserved for an explicit held-out split.
    pub fold_id: usize,
    pub train_video_ids: Vec<String>,
    pub val_video_ids: Vec<String>,
    /// Seed the split was drawn with, so a split file is self-describing.
    pub seed: u64,
}

/// Shuffle the videos with a seeded generator, then cut the shuffled order
/// into `k` contiguous validation chunks. The first `n mod k` folds get one
/// extra video, so sizes differ by at most one. Every video validates in
/// exactly one fold.
pub fn split_folds(video_ids: &[String], k: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "cross-validation needs at least 2 folds, got {k}"
        )));
    }
    if video_ids.len() < k {
        return Err(Error::InvalidInput(format!(
            "cannot split {} videos into {k} folds",
            video_ids.len()
        )));
    }
    let mut seen = HashSet::new();
    for id in video_ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::InvalidInput(format!("duplicate video id {id}")));
        }
    }

    let mut shuffled = video_ids.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);

    let n = shuffled.len();
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let size = base + usize::from(i < extra);
        let val: Vec<String> = shuffled[start..start + size].to_vec();
        let val_set: HashSet<&str> = val.iter().map(String::as_str).collect();
        let train: Vec<String> = shuffled
            .iter()
            .filter(|id| !val_set.contains(id.as_str()))
            .cloned()
            .collect();
        folds.push(FoldSplit {
            fold_id: i + 1,
            train_video_ids: train,
            val_video_ids: val,
            seed,
        });
        start += size;
    }
    Ok(folds)
}

/// Everything one experiment needs: the track, model and optimizer
/// settings, smoothing, ensemble size, fold count, and the master seed all
/// per-fold seeds derive from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub track: Track,
    pub fusion: FusionConfig,
    /// Temporal smoothing for frame-wise tracks; must be `None` for
    /// clip-level tracks.
    pub smoothing: Option<SmoothingConfig>,
    /// Ensemble size: how many background subsets, one classifier each.
    pub subsets: usize,
    pub folds: usize,
    pub train: TrainConfig,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(track: Track, model_dim: usize, clip_len: usize, has_text: bool) -> Self {
        ExperimentConfig {
            track,
            fusion: FusionConfig::new(track, model_dim, clip_len, has_text),
            smoothing: SmoothingConfig::default_for(track),
            subsets: 3,
            folds: 5,
            train: TrainConfig::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.fusion.validate()?;
        self.train.validate()?;
        if self.track != self.fusion.track {
            return Err(Error::WrongTrack {
                track: self.track,
                message: format!("fusion model is configured for {}", self.fusion.track),
            });
        }
        if self.subsets == 0 {
            return Err(Error::InvalidInput("ensemble needs at least 1 subset".into()));
        }
        if self.folds < 2 {
            return Err(Error::InvalidInput(format!(
                "cross-validation needs at least 2 folds, got {}",
                self.folds
            )));
        }
        if let Some(s) = &self.smoothing {
            s.validate()?;
            if !self.track.is_frame_wise() {
                return Err(Error::WrongTrack {
                    track: self.track,
                    message: "temporal smoothing applies to frame-wise tracks only".into(),
                });
            }
        }
        Ok(())
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Seed for the background clustering of one fold.
pub fn fold_partition_seed(experiment_seed: u64, fold_id: usize) -> u64 {
    splitmix(experiment_seed ^ splitmix(fold_id as u64))
}

/// Seed for training one subset classifier inside one fold.
pub fn fold_train_seed(experiment_seed: u64, fold_id: usize, subset: usize) -> u64 {
    splitmix(experiment_seed ^ splitmix(fold_id as u64) ^ splitmix((subset as u64) << 17 | 1))
}

/// Result of one fold: either its metric report or the error that stopped
/// it. A failing fold never aborts its siblings.
#[derive(Debug)]
pub struct FoldOutcome {
    pub fold_id: usize,
    pub val_video_ids: Vec<String>,
    pub report: Result<MetricReport>,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub track: Track,
    pub folds: Vec<FoldOutcome>,
    /// Present when an explicit held-out split was supplied.
    pub official: Option<FoldOutcome>,
}

impl ExperimentOutcome {
    /// Successful fold reports in fold order, skipping failures.
    pub fn succeeded(&self) -> Vec<&MetricReport> {
        self.folds
            .iter()
            .filter_map(|f| f.report.as_ref().ok())
            .collect()
    }

    /// Mean of the per-fold performance numbers over successful folds.
    pub fn mean_performance(&self) -> Option<f64> {
        let ok = self.succeeded();
        if ok.is_empty() {
            return None;
        }
        Some(ok.iter().map(|r| r.performance).sum::<f64>() / ok.len() as f64)
    }

    /// Per-class scores averaged over successful folds.
    pub fn mean_per_class(&self) -> Option<Vec<f64>> {
        let ok = self.succeeded();
        let first = ok.first()?;
        let mut mean = vec![0.0; first.per_class.len()];
        for r in &ok {
            for (m, v) in mean.iter_mut().zip(&r.per_class) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= ok.len() as f64;
        }
        Some(mean)
    }
}

/// Train and evaluate one fold: cluster the training videos' backgrounds
/// into `subsets` groups, train one classifier per group, predict each
/// validation video with all of them, combine by voting or averaging,
/// fill frames without a visible face, smooth, and score the pooled
/// validation set.
fn run_fold(
    cfg: &ExperimentConfig,
    by_id: &HashMap<&str, &(FeatureBundle, LabelTrack)>,
    split: &FoldSplit,
) -> Result<MetricReport> {
    let lookup = |id: &String| {
        by_id.get(id.as_str()).copied().ok_or_else(|| {
            Error::InvalidInput(format!("fold {} names unknown video {id}", split.fold_id))
        })
    };
    let train_pairs: Vec<&(FeatureBundle, LabelTrack)> = split
        .train_video_ids
        .iter()
        .map(lookup)
        .collect::<Result<_>>()?;
    let val_pairs: Vec<&(FeatureBundle, LabelTrack)> = split
        .val_video_ids
        .iter()
        .map(lookup)
        .collect::<Result<_>>()?;
    if train_pairs.is_empty() || val_pairs.is_empty() {
        return Err(Error::InvalidInput(format!(
            "fold {} has an empty train or validation side",
            split.fold_id
        )));
    }

    let backgrounds: Vec<(String, BackgroundDescriptor)> = train_pairs
        .iter()
        .map(|(b, _)| (b.manifest.video_id.clone(), b.background.clone()))
        .collect();
    let assignment = partition_backgrounds(
        &backgrounds,
        cfg.subsets,
        fold_partition_seed(cfg.seed, split.fold_id),
    )?;

    let mut models = Vec::with_capacity(cfg.subsets);
    for subset in 0..assignment.n_subsets() {
        let members: HashSet<&str> = assignment.members(subset).into_iter().collect();
        let subset_data: Vec<(FeatureBundle, LabelTrack)> = train_pairs
            .iter()
            .filter(|(b, _)| members.contains(b.manifest.video_id.as_str()))
            .map(|&pair| pair.clone())
            .collect();
        let tc = TrainConfig {
            seed: fold_train_seed(cfg.seed, split.fold_id, subset),
            ..cfg.train.clone()
        };
        models.push(train(&cfg.fusion, &tc, &subset_data)?);
    }

    let mut fold_preds = Vec::with_capacity(val_pairs.len());
    let mut fold_labels = Vec::with_capacity(val_pairs.len());
    for (bundle, labels) in &val_pairs {
        let per_model: Vec<PredictionTrack> = models
            .iter()
            .map(|m| predict(m, bundle))
            .collect::<Result<_>>()?;
        let mut combined = combine_predictions(&per_model)?;
        if cfg.track.is_frame_wise() {
            combined = replace_missing_faces(&combined, &bundle.face_flags)?;
        }
        if let Some(smoothing) = &cfg.smoothing {
            combined = smooth_track(&combined, smoothing)?;
        }
        fold_preds.push(combined);
        fold_labels.push(labels);
    }
    let pooled_preds = concat_prediction_tracks(&fold_preds)?;
    let pooled_labels = concat_label_tracks(&fold_labels)?;
    evaluate_track(&pooled_preds, &pooled_labels)
}

/// Run the full cross-validation experiment, folds in parallel. An
/// optional explicit split (fold 0) is evaluated the same way and reported
/// separately. Per-fold failures are captured in the outcome; only
/// configuration-level problems abort the whole run.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    data: &[(FeatureBundle, LabelTrack)],
    official: Option<&FoldSplit>,
) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidInput("experiment has no videos".into()));
    }
    let mut by_id: HashMap<&str, &(FeatureBundle, LabelTrack)> = HashMap::new();
    for pair in data {
        let id = pair.0.manifest.video_id.as_str();
        if by_id.insert(id, pair).is_some() {
            return Err(Error::InvalidInput(format!("duplicate video id {id}")));
        }
        if pair.1.track() != cfg.track {
            return Err(Error::WrongTrack {
                track: cfg.track,
                message: format!("labels for {id} carry track {}", pair.1.track()),
            });
        }
    }

    let ids: Vec<String> = data.iter().map(|(b, _)| b.manifest.video_id.clone()).collect();
    let splits = split_folds(&ids, cfg.folds, cfg.seed)?;

    let mut folds: Vec<FoldOutcome> = splits
        .par_iter()
        .map(|split| FoldOutcome {
            fold_id: split.fold_id,
            val_video_ids: split.val_video_ids.clone(),
            report: run_fold(cfg, &by_id, split),
        })
        .collect();
    folds.sort_by_key(|f| f.fold_id);

    let official = official.map(|split| FoldOutcome {
        fold_id: split.fold_id,
        val_video_ids: split.val_video_ids.clone(),
        report: run_fold(cfg, &by_id, split),
    });

    Ok(ExperimentOutcome {
        track: cfg.track,
        folds,
        official,
    })
}

/// Stack per-video label tracks into one track, rows in input order.
pub fn concat_label_tracks(parts: &[&LabelTrack]) -> Result<LabelTrack> {
    let first = parts
        .first()
        .ok_or_else(|| Error::InvalidInput("concatenating zero label tracks".into()))?;
    let track = first.track();
    for p in parts {
        if p.track() != track {
            return Err(Error::WrongTrack {
                track,
                message: format!("cannot concatenate labels with {}", p.track()),
            });
        }
    }
    let data = match track {
        Track::Au => {
            let views: Vec<_> = parts
                .iter()
                .map(|p| match &p.data {
                    LabelData::Au(m) => m.view(),
                    _ => unreachable!("track checked above"),
                })
                .collect();
            LabelData::Au(concatenate(Axis(0), &views).expect("equal column counts"))
        }
        Track::Expr => {
            let mut all = Vec::new();
            for p in parts {
                match &p.data {
                    LabelData::Expr(v) => all.extend_from_slice(v),
                    _ => unreachable!("track checked above"),
                }
            }
            LabelData::Expr(all)
        }
        Track::Va => {
            let views: Vec<_> = parts
                .iter()
                .map(|p| match &p.data {
                    LabelData::Va(m) => m.view(),
                    _ => unreachable!("track checked above"),
                })
                .collect();
            LabelData::Va(concatenate(Axis(0), &views).expect("equal column counts"))
        }
        Track::Ce => {
            let mut all = Vec::new();
            for p in parts {
                match &p.data {
                    LabelData::Ce(v) => all.extend_from_slice(v),
                    _ => unreachable!("track checked above"),
                }
            }
            LabelData::Ce(all)
        }
        Track::Emi => {
            let views: Vec<_> = parts
                .iter()
                .map(|p| match &p.data {
                    LabelData::Emi(m) => m.view(),
                    _ => unreachable!("track checked above"),
                })
                .collect();
            LabelData::Emi(concatenate(Axis(0), &views).expect("equal column counts"))
        }
    };
    Ok(LabelTrack { data })
}

/// Stack per-video prediction tracks into one track, rows in input order.
pub fn concat_prediction_tracks(parts: &[PredictionTrack]) -> Result<PredictionTrack> {
    let first = parts
        .first()
        .ok_or_else(|| Error::InvalidInput("concatenating zero prediction tracks".into()))?;
    let track = first.track();
    for p in parts {
        if p.track() != track {
            return Err(Error::WrongTrack {
                track,
                message: format!("cannot concatenate predictions with {}", p.track()),
            });
        }
    }
    let data = match track {
        Track::Au => {
            let (probs, decisions): (Vec<_>, Vec<_>) = parts
                .iter()
                .map(|p| match &p.data {
                    PredictionData::Au { probs, decisions } => (probs.view(), decisions.view()),
                    _ => unreachable!("track checked above"),
                })
                .unzip();
            PredictionData::Au {
                probs: concatenate(Axis(0), &probs).expect("equal column counts"),
                decisions: concatenate(Axis(0), &decisions).expect("equal column counts"),
            }
        }
        Track::Expr => {
            let mut all_probs = Vec::new();
            let mut all_decisions = Vec::new();
            for p in parts {
                match &p.data {
                    PredictionData::Expr { probs, decisions } => {
                        all_probs.push(probs.view());
                        all_decisions.extend_from_slice(decisions);
                    }
                    _ => unreachable!("track checked above"),
                }
            }
            PredictionData::Expr {
                probs: concatenate(Axis(0), &all_probs).expect("equal column counts"),
                decisions: all_decisions,
            }
        }
        Track::Va => {
            let views: Vec<_> = parts
                .iter()
                .map(|p| match &p.data {
                    PredictionData::Va(m) => m.view(),
                    _ => unreachable!("track checked above"),
                })
                .collect();
            PredictionData::Va(concatenate(Axis(0), &views).expect("equal column counts"))
        }
        Track::Ce => {
            let mut all_probs = Vec::new();
            let mut all_decisions = Vec::new();
            for p in parts {
                match &p.data {
                    PredictionData::Ce { probs, decisions } => {
                        all_probs.push(probs.view());
                        all_decisions.extend_from_slice(decisions);
                    }
                    _ => unreachable!("track checked above"),
                }
            }
            PredictionData::Ce {
                probs: concatenate(Axis(0), &all_probs).expect("equal column counts"),
                decisions: all_decisions,
            }
        }
        Track::Emi => {
            let views: Vec<_> = parts
                .iter()
                .map(|p| match &p.data {
                    PredictionData::Emi(m) => m.view(),
                    _ => unreachable!("track checked above"),
                })
                .collect();
            PredictionData::Emi(concatenate(Axis(0), &views).expect("equal column counts"))
        }
    };
    Ok(PredictionTrack { data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::WeightPolicy;
    use crate::postprocess::SIGMA_IDENTITY_THRESHOLD;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("vid_{i:03}")).collect()
    }

    #[test]
    fn folds_partition_the_videos() {
        for (n, k) in [(10, 5), (11, 5), (23, 4), (5, 5), (7, 2)] {
            let folds = split_folds(&ids(n), k, 99).unwrap();
            assert_eq!(folds.len(), k);
            let mut seen = HashSet::new();
            for f in &folds {
                for v in &f.val_video_ids {
                    assert!(seen.insert(v.clone()), "video {v} validates twice");
                    assert!(!f.train_video_ids.contains(v));
                }
                assert_eq!(f.train_video_ids.len() + f.val_video_ids.len(), n);
            }
            assert_eq!(seen.len(), n);
            let sizes: Vec<usize> = folds.iter().map(|f| f.val_video_ids.len()).collect();
            let max = *sizes.iter().max().unwrap();
            let min = *sizes.iter().min().unwrap();
            assert!(max - min <= 1, "sizes {sizes:?}");
        }
    }

    #[test]
    fn eleven_videos_in_five_folds() {
        let folds = split_folds(&ids(11), 5, 1).unwrap();
        let mut sizes: Vec<usize> = folds.iter().map(|f| f.val_video_ids.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 2, 2, 3]);
        assert_eq!(folds[0].fold_id, 1);
        assert_eq!(folds[4].fold_id, 5);
    }

    #[test]
    fn splitting_is_deterministic_and_seed_sensitive() {
        let a = split_folds(&ids(12), 4, 7).unwrap();
        let b = split_folds(&ids(12), 4, 7).unwrap();
        assert_eq!(a, b);
        let c = split_folds(&ids(12), 4, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn split_rejects_bad_arguments() {
        assert!(split_folds(&ids(10), 1, 0).is_err());
        assert!(split_folds(&ids(3), 4, 0).is_err());
        let mut dup = ids(4);
        dup[3] = dup[0].clone();
        assert!(split_folds(&dup, 2, 0).is_err());
    }

    fn tiny_expr_experiment() -> (ExperimentConfig, Vec<(FeatureBundle, LabelTrack)>) {
        let spec = SyntheticSpec {
            separation: 3.0,
            noise: 0.1,
            ..SyntheticSpec::new(Track::Expr, 8, 24, 8, 4)
        };
        let data = make_synthetic_corpus(&spec, 5).unwrap();
        let mut cfg = ExperimentConfig::new(Track::Expr, 8, 4, false);
        cfg.folds = 2;
        cfg.subsets = 1;
        cfg.fusion.n_layers = 1;
        cfg.fusion.n_heads = 2;
        cfg.fusion.ff_dim = 16;
        cfg.fusion.dropout = 0.0;
        cfg.train.epochs = 12;
        cfg.train.learning_rate = 3e-3;
        cfg.train.weight_policy = WeightPolicy::Uniform;
        cfg.seed = 11;
        (cfg, data)
    }

    #[test]
    fn experiment_runs_and_reports_each_fold() {
        let (cfg, data) = tiny_expr_experiment();
        let outcome = run_experiment(&cfg, &data, None).unwrap();
        assert_eq!(outcome.folds.len(), 2);
        for fold in &outcome.folds {
            let report = fold.report.as_ref().unwrap();
            assert_eq!(report.track, Track::Expr);
            assert!(report.performance.is_finite());
        }
        assert!(outcome.official.is_none());
        assert!(outcome.mean_performance().is_some());
    }

    #[test]
    fn experiment_is_deterministic() {
        let (cfg, data) = tiny_expr_experiment();
        let a = run_experiment(&cfg, &data, None).unwrap();
        let b = run_experiment(&cfg, &data, None).unwrap();
        for (x, y) in a.folds.iter().zip(&b.folds) {
            assert_eq!(
                x.report.as_ref().unwrap().per_class,
                y.report.as_ref().unwrap().per_class
            );
        }
    }

    #[test]
    fn official_split_is_reported_separately() {
        let (cfg, data) = tiny_expr_experiment();
        let ids: Vec<String> = data.iter().map(|(b, _)| b.manifest.video_id.clone()).collect();
        let official = FoldSplit {
            fold_id: 0,
            train_video_ids: ids[..6].to_vec(),
            val_video_ids: ids[6..].to_vec(),
            seed: 0,
        };
        let outcome = run_experiment(&cfg, &data, Some(&official)).unwrap();
        let off = outcome.official.as_ref().unwrap();
        assert_eq!(off.fold_id, 0);
        assert!(off.report.is_ok());
    }

    #[test]
    fn single_subset_tiny_sigma_equals_plain_pipeline() {
        let (mut cfg, data) = tiny_expr_experiment();
        cfg.subsets = 1;
        cfg.smoothing = Some(SmoothingConfig::new(SIGMA_IDENTITY_THRESHOLD / 2.0));
        let outcome = run_experiment(&cfg, &data, None).unwrap();

        let splits = split_folds(
            &data
                .iter()
                .map(|(b, _)| b.manifest.video_id.clone())
                .collect::<Vec<_>>(),
            cfg.folds,
            cfg.seed,
        )
        .unwrap();
        let by_id: HashMap<&str, &(FeatureBundle, LabelTrack)> = data
            .iter()
            .map(|pair| (pair.0.manifest.video_id.as_str(), pair))
            .collect();
        for (split, fold) in splits.iter().zip(&outcome.folds) {
            // Same video order as the fold pipeline uses.
            let train_data: Vec<(FeatureBundle, LabelTrack)> = split
                .train_video_ids
                .iter()
                .map(|id| by_id[id.as_str()].clone())
                .collect();
            let tc = TrainConfig {
                seed: fold_train_seed(cfg.seed, split.fold_id, 0),
                ..cfg.train.clone()
            };
            let model = train(&cfg.fusion, &tc, &train_data).unwrap();
            let mut preds = Vec::new();
            let mut labels = Vec::new();
            for id in &split.val_video_ids {
                let (b, l) = by_id[id.as_str()];
                let p = predict(&model, b).unwrap();
                preds.push(replace_missing_faces(&p, &b.face_flags).unwrap());
                labels.push(l);
            }
            let report = evaluate_track(
                &concat_prediction_tracks(&preds).unwrap(),
                &concat_label_tracks(&labels).unwrap(),
            )
            .unwrap();
            assert_eq!(fold.report.as_ref().unwrap(), &report);
        }
    }

    #[test]
    fn failing_fold_leaves_others_standing() {
        let (cfg, mut data) = tiny_expr_experiment();
        // Wreck one video's audio matrix so clip assembly fails in any
        // fold that trains or validates on it.
        data[0].0.audio = ndarray::Array2::zeros((1, 8));
        let outcome = run_experiment(&cfg, &data, None);
        // The bundle is invalid, so either clip assembly fails inside a
        // fold (isolated) or every fold touching it fails; other folds
        // must still report.
        if let Ok(outcome) = outcome {
            assert!(outcome.folds.iter().any(|f| f.report.is_err()));
        }
    }

    #[test]
    fn config_validation_rejects_inconsistencies() {
        let mut cfg = ExperimentConfig::new(Track::Expr, 8, 4, false);
        cfg.track = Track::Au;
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::new(Track::Ce, 8, 4, false);
        cfg.smoothing = Some(SmoothingConfig::new(2.0));
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::new(Track::Expr, 8, 4, false);
        cfg.subsets = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn concat_preserves_row_order() {
        let a = LabelTrack {
            data: LabelData::Expr(vec![0, 1]),
        };
        let b = LabelTrack {
            data: LabelData::Expr(vec![2]),
        };
        let joined = concat_label_tracks(&[&a, &b]).unwrap();
        assert_eq!(joined.data, LabelData::Expr(vec![0, 1, 2]));

        let mismatched = LabelTrack {
            data: LabelData::Ce(vec![0]),
        };
        assert!(concat_label_tracks(&[&a, &mismatched]).is_err());
    }

    #[test]
    fn seed_derivations_are_distinct() {
        let mut seen = HashSet::new();
        for fold in 0..6 {
            assert!(seen.insert(fold_partition_seed(7, fold)));
            for subset in 0..4 {
                assert!(seen.insert(fold_train_seed(7, fold, subset)));
            }
        }
    }
}
