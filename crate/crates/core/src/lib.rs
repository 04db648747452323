//! Affective behavior pipeline: clip assembly and transformer fusion over
//! precomputed per-frame features, task losses with analytic gradients,
//! temporal smoothing, background-partitioned ensembles, and a
//! cross-validation harness with the five track performance measures.

pub mod data;
pub mod ensemble;
pub mod error;
pub mod fusion;
pub mod harness;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod postprocess;
pub mod track;

pub use data::{
    BackgroundDescriptor, BundleManifest, FaceFlags, FeatureBundle, LabelData, LabelTrack,
    PredictionData, PredictionTrack, AU_DECISION_THRESHOLD, CLASS_INVALID, VA_INVALID,
};
pub use ensemble::{
    combine_predictions, fuse_regression, partition_backgrounds, vote, SubsetAssignment,
    VoteRecord,
};
pub use error::{Error, Result};
pub use fusion::{
    build_clip_tokens, predict, train, ClipTensor, FusionConfig, FusionParams, TrainConfig,
};
pub use harness::{
    make_synthetic_corpus, render_csv_report, render_text_report, run_experiment, split_folds,
    ExperimentConfig, ExperimentOutcome, FoldOutcome, FoldSplit, SyntheticSpec,
};
pub use losses::{
    au_bce_loss, au_bce_value, expr_ce_loss, expr_ce_value, va_ccc_loss, va_ccc_value,
    ClassWeights, LossValue, VAPair, WeightPolicy, CCC_EPS, PROB_CLIP, SIMPLEX_TOL,
};
pub use metrics::{
    ccc, evaluate_track, f1_per_class, pearson, track_performance, ConfusionCounts, MetricReport,
    SeriesStats,
};
pub use postprocess::{
    gaussian_smooth, replace_missing_faces, smooth_track, SmoothingConfig,
    SIGMA_IDENTITY_THRESHOLD,
};
pub use track::{Track, AU_NAMES, CE_NAMES, EMI_NAMES, EXPR_NAMES, VA_NAMES};
