//! `affect`: batch front-end for the affective-behavior pipeline.
//!
//! Each subcommand maps onto one library operation so a full experiment can
//! be scripted as `synth -> split -> train -> predict -> smooth -> ensemble
//! -> evaluate`. Every run logs its fully resolved configuration to stderr;
//! identical invocations with the same seed produce identical artifacts.

mod settings;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use affect_core::{
    combine_predictions, evaluate_track, make_synthetic_corpus, partition_backgrounds, predict,
    smooth_track, split_folds, train, FeatureBundle, LabelTrack, PredictionTrack, SyntheticSpec,
    Track,
};
use settings::{FlagOverrides, Settings};

#[derive(Parser)]
#[command(
    name = "affect",
    about = "Train and evaluate multi-modal affect models on feature bundles",
    version
)]
struct Cli {
    /// Configuration file (TOML). Flags and --set pairs override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one configuration key, e.g. --set epochs=20. Repeatable.
    #[arg(long, global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Seed for every stochastic stage.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker thread cap; 0 keeps the rayon default.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Task track: va, expr, au, ce, or emi.
    #[arg(long, global = true)]
    track: Option<String>,

    /// Gaussian smoothing width in frames.
    #[arg(long, global = true)]
    sigma: Option<f64>,

    /// Ensemble size (background subsets).
    #[arg(long, global = true)]
    subsets: Option<usize>,

    /// Cross-validation fold count.
    #[arg(long, global = true)]
    folds: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled corpus of feature bundles.
    Synth {
        /// Directory for the generated bundles and label tracks.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Partition a corpus into cross-validation folds.
    Split {
        /// Corpus directory (falls back to data_root, then the environment).
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
        /// Output JSON file describing the folds.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Train a fusion model and save a checkpoint.
    Train {
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
        /// Comma-separated video ids to train on; default is the whole corpus.
        #[arg(long, value_name = "IDS", value_delimiter = ',')]
        videos: Vec<String>,
        /// Checkpoint file to write.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Run a trained model over bundles and write prediction tracks.
    Predict {
        /// Checkpoint file produced by `train`.
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
        #[arg(long, value_name = "IDS", value_delimiter = ',')]
        videos: Vec<String>,
        /// Directory for the `<video>.preds.csv` outputs.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Smooth a frame-wise prediction track with a Gaussian kernel.
    Smooth {
        /// Prediction file to smooth.
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Background-partition ensembles: assign videos or combine predictions.
    Ensemble {
        #[command(subcommand)]
        action: EnsembleAction,
    },
    /// Score a prediction file against a label file.
    Evaluate {
        #[arg(long, value_name = "FILE")]
        pred: PathBuf,
        #[arg(long, value_name = "FILE")]
        labels: PathBuf,
    },
    /// Render a per-class score table with its average column.
    Report {
        /// CSV of `label,score,score,...` rows, one row per model or fold.
        #[arg(long, value_name = "FILE")]
        scores: PathBuf,
    },
}

#[derive(Subcommand)]
enum EnsembleAction {
    /// Cluster videos by background descriptor into training subsets.
    Partition {
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
        /// Output assignment file.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Fuse prediction tracks from several models by voting/averaging.
    Combine {
        /// Prediction files, one per model (at least one).
        #[arg(long, value_name = "FILES", value_delimiter = ',', required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let flags = FlagOverrides {
        seed: cli.seed,
        threads: cli.threads,
        track: cli.track.clone(),
        sigma: cli.sigma,
        subsets: cli.subsets,
        folds: cli.folds,
    };
    let settings = settings::resolve(cli.config.as_ref(), &cli.set, &flags)?;
    log_settings(&settings)?;
    if settings.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(settings.threads)
            .build_global()
            .ok();
    }

    match &cli.command {
        Command::Synth { out } => cmd_synth(&settings, out),
        Command::Split { data, out } => cmd_split(&settings, data.as_ref(), out),
        Command::Train { data, videos, out } => cmd_train(&settings, data.as_ref(), videos, out),
        Command::Predict {
            model,
            data,
            videos,
            out,
        } => cmd_predict(&settings, model, data.as_ref(), videos, out),
        Command::Smooth { input, out } => cmd_smooth(&settings, input, out),
        Command::Ensemble { action } => match action {
            EnsembleAction::Partition { data, out } => {
                cmd_partition(&settings, data.as_ref(), out)
            }
            EnsembleAction::Combine { inputs, out } => cmd_combine(inputs, out),
        },
        Command::Evaluate { pred, labels } => cmd_evaluate(pred, labels),
        Command::Report { scores } => cmd_report(&settings, scores),
    }
}

/// Every run logs the post-precedence configuration so artifacts can be
/// traced back to the exact settings that produced them.
fn log_settings(settings: &Settings) -> Result<()> {
    let rendered = toml::to_string(settings).context("render resolved configuration")?;
    eprintln!("resolved configuration:");
    for line in rendered.lines() {
        eprintln!("  {line}");
    }
    Ok(())
}

fn bundle_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.afbn"))
}

fn labels_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.labels.csv"))
}

fn preds_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.preds.csv"))
}

/// Video ids present in a corpus directory, sorted by filename so every
/// subcommand sees the corpus in the same order.
fn scan_video_ids(dir: &Path) -> Result<Vec<String>> {
    let entries = fs::read_dir(dir).with_context(|| format!("read corpus {}", dir.display()))?;
    let mut ids = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "afbn") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                ids.push(stem.to_string());
            }
        }
    }
    if ids.is_empty() {
        bail!("no .afbn bundles found in {}", dir.display());
    }
    ids.sort();
    Ok(ids)
}

/// Resolve the `--videos` filter against the corpus: an explicit list is
/// honored in the order given, otherwise the whole corpus is used.
fn select_videos(dir: &Path, requested: &[String]) -> Result<Vec<String>> {
    if requested.is_empty() {
        return scan_video_ids(dir);
    }
    for id in requested {
        let path = bundle_path(dir, id);
        if !path.is_file() {
            bail!("no bundle for video {id}: {} not found", path.display());
        }
    }
    Ok(requested.to_vec())
}

fn load_corpus(dir: &Path, ids: &[String]) -> Result<Vec<(FeatureBundle, LabelTrack)>> {
    ids.iter()
        .map(|id| {
            let bundle = affect_core::io::read_bundle(&bundle_path(dir, id))?;
            let labels = affect_core::io::read_labels(&labels_path(dir, id))?;
            Ok((bundle, labels))
        })
        .collect()
}

fn cmd_synth(settings: &Settings, out: &Path) -> Result<()> {
    let track = settings.track()?;
    let mut spec = SyntheticSpec::new(
        track,
        settings.videos,
        settings.frames,
        settings.model_dim,
        settings.clip_len,
    );
    spec.frame_jitter = settings.frame_jitter;
    spec.has_text = settings.has_text;
    spec.n_backgrounds = settings.backgrounds;
    spec.background_dim = settings.background_dim;
    spec.separation = settings.separation;
    spec.noise = settings.noise;
    spec.face_drop_rate = settings.face_drop_rate;

    let corpus = make_synthetic_corpus(&spec, settings.seed)?;
    fs::create_dir_all(out).with_context(|| format!("create {}", out.display()))?;
    for (bundle, labels) in &corpus {
        let id = &bundle.manifest.video_id;
        affect_core::io::write_bundle(&bundle_path(out, id), bundle)?;
        affect_core::io::write_labels(&labels_path(out, id), labels)?;
    }
    println!(
        "wrote {} videos ({} track) to {}",
        corpus.len(),
        track.key(),
        out.display()
    );
    Ok(())
}

fn cmd_split(settings: &Settings, data: Option<&PathBuf>, out: &Path) -> Result<()> {
    let dir = settings.data_dir(data, "split")?;
    let ids = scan_video_ids(&dir)?;
    let folds = split_folds(&ids, settings.folds, settings.seed)?;
    let json = serde_json::to_string_pretty(&folds).context("render folds")?;
    fs::write(out, json).with_context(|| format!("write {}", out.display()))?;
    println!(
        "split {} videos into {} folds at {}",
        ids.len(),
        folds.len(),
        out.display()
    );
    Ok(())
}

fn cmd_train(
    settings: &Settings,
    data: Option<&PathBuf>,
    videos: &[String],
    out: &Path,
) -> Result<()> {
    let dir = settings.data_dir(data, "train")?;
    let ids = select_videos(&dir, videos)?;
    let corpus = load_corpus(&dir, &ids)?;
    let fusion = settings.fusion_config()?;
    let train_cfg = settings.train_config()?;
    let params = train(&fusion, &train_cfg, &corpus)?;
    affect_core::io::write_checkpoint(out, &params)?;
    println!(
        "trained on {} videos, checkpoint at {}",
        ids.len(),
        out.display()
    );
    Ok(())
}

fn cmd_predict(
    settings: &Settings,
    model: &Path,
    data: Option<&PathBuf>,
    videos: &[String],
    out: &Path,
) -> Result<()> {
    let dir = settings.data_dir(data, "predict")?;
    let ids = select_videos(&dir, videos)?;
    let params = affect_core::io::read_checkpoint(model)?;
    fs::create_dir_all(out).with_context(|| format!("create {}", out.display()))?;
    for id in &ids {
        let bundle = affect_core::io::read_bundle(&bundle_path(&dir, id))?;
        let preds = predict(&params, &bundle)?;
        affect_core::io::write_predictions(&preds_path(out, id), &preds)?;
    }
    println!("predicted {} videos into {}", ids.len(), out.display());
    Ok(())
}

fn cmd_smooth(settings: &Settings, input: &Path, out: &Path) -> Result<()> {
    let preds = affect_core::io::read_predictions(input)?;
    let track = preds.track();
    let Some(cfg) = settings.smoothing(track) else {
        bail!("track {} has no smoothing configured; pass --sigma", track.key());
    };
    let smoothed = smooth_track(&preds, &cfg)?;
    affect_core::io::write_predictions(out, &smoothed)?;
    println!(
        "smoothed {} with sigma {} into {}",
        input.display(),
        cfg.sigma,
        out.display()
    );
    Ok(())
}

fn cmd_partition(settings: &Settings, data: Option<&PathBuf>, out: &Path) -> Result<()> {
    let dir = settings.data_dir(data, "ensemble partition")?;
    let ids = scan_video_ids(&dir)?;
    let videos: Vec<_> = ids
        .iter()
        .map(|id| {
            let bundle = affect_core::io::read_bundle(&bundle_path(&dir, id))?;
            Ok((id.clone(), bundle.background))
        })
        .collect::<Result<_>>()?;
    let assignment = partition_backgrounds(&videos, settings.subsets, settings.seed)?;
    affect_core::io::write_assignment(out, &assignment)?;
    println!(
        "assigned {} videos to {} subsets at {}",
        ids.len(),
        assignment.n_subsets(),
        out.display()
    );
    Ok(())
}

fn cmd_combine(inputs: &[PathBuf], out: &Path) -> Result<()> {
    let tracks: Vec<PredictionTrack> = inputs
        .iter()
        .map(|p| affect_core::io::read_predictions(p))
        .collect::<affect_core::Result<_>>()?;
    let combined = combine_predictions(&tracks)?;
    affect_core::io::write_predictions(out, &combined)?;
    println!("combined {} prediction files into {}", inputs.len(), out.display());
    Ok(())
}

fn cmd_evaluate(pred: &Path, labels: &Path) -> Result<()> {
    let preds = affect_core::io::read_predictions(pred)?;
    let truth = affect_core::io::read_labels(labels)?;
    let report = evaluate_track(&preds, &truth)?;
    for (name, score) in report.track.class_names().iter().zip(&report.per_class) {
        println!("{name}: {score:.4}");
    }
    println!("performance: {:.4}", report.performance);
    println!("n evaluated: {}", report.n_evaluated);
    Ok(())
}

/// F1-style tracks are reported on the percent scale with two decimals;
/// correlation tracks keep four decimals on the raw scale.
fn fmt_report_score(track: Track, value: f64) -> String {
    match track {
        Track::Au | Track::Expr | Track::Ce => format!("{value:.2}"),
        Track::Va | Track::Emi => format!("{value:.4}"),
    }
}

fn cmd_report(settings: &Settings, scores: &Path) -> Result<()> {
    let track = settings.track()?;
    let text =
        fs::read_to_string(scores).with_context(|| format!("read {}", scores.display()))?;
    let names = track.class_names();
    let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let label = fields.next().unwrap_or_default().trim().to_string();
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.map(|f| f.trim().parse::<f64>()).collect();
        // A header row (non-numeric fields) is allowed once, at the top.
        let values = match parsed {
            Ok(v) => v,
            Err(_) if lineno == 0 => continue,
            Err(e) => bail!("{} line {}: bad score: {e}", scores.display(), lineno + 1),
        };
        if values.len() != names.len() {
            bail!(
                "{} line {}: expected {} scores for {}, found {}",
                scores.display(),
                lineno + 1,
                names.len(),
                track.key(),
                values.len()
            );
        }
        rows.push((label, values));
    }
    if rows.is_empty() {
        bail!("{}: no score rows", scores.display());
    }

    let mut header = vec!["Row".to_string()];
    header.extend(names.iter().map(|n| n.to_string()));
    header.push("Avg.".to_string());
    let mut table: Vec<Vec<String>> = vec![header];
    for (label, values) in &rows {
        let avg = values.iter().sum::<f64>() / values.len() as f64;
        let mut row = vec![label.clone()];
        row.extend(values.iter().map(|v| fmt_report_score(track, *v)));
        row.push(fmt_report_score(track, avg));
        table.push(row);
    }

    let cols = table[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    for row in &table {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:>w$}"))
            .collect();
        println!("{}", line.join("  "));
    }
    Ok(())
}
