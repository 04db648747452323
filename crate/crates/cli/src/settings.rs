//! Resolved run settings with layered precedence: built-in defaults, then
//! the config file, then `--set key=value` pairs, then typed flags.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use affect_core::losses::WeightPolicy;
use affect_core::postprocess::SmoothingConfig;
use affect_core::{FusionConfig, Track, TrainConfig};

/// Environment variable naming the default data directory.
pub const DATA_ROOT_ENV: &str = "AFFECT_DATA_ROOT";

/// Every knob a subcommand can consume. One flat table so `--set` and the
/// config file address fields by their plain name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub seed: u64,
    /// Worker threads; 0 keeps the library default.
    pub threads: usize,
    pub track: String,
    pub data_root: Option<String>,

    // Fusion model shape.
    pub model_dim: usize,
    pub clip_len: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub ff_dim: usize,
    pub dropout: f64,
    pub has_text: bool,

    // Optimization.
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub weight_policy: String,

    // Experiment shape.
    pub folds: usize,
    pub subsets: usize,
    /// Smoothing width; unset falls back to the track default.
    pub sigma: Option<f64>,
    pub radius: Option<usize>,

    // Synthetic corpus.
    pub videos: usize,
    pub frames: usize,
    pub frame_jitter: usize,
    pub noise: f64,
    pub separation: f64,
    pub backgrounds: usize,
    pub background_dim: usize,
    pub face_drop_rate: f64,
}

impl Default for Settings {
    fn default() -> Settings {
        Settings {
            seed: 0,
            threads: 0,
            track: "expr".into(),
            data_root: None,
            model_dim: 16,
            clip_len: 10,
            n_layers: 4,
            n_heads: 4,
            ff_dim: 64,
            dropout: 0.3,
            has_text: false,
            epochs: 10,
            batch_size: 8,
            learning_rate: 1e-4,
            weight_decay: 0.01,
            weight_policy: "inverse-frequency".into(),
            folds: 5,
            subsets: 3,
            sigma: None,
            radius: None,
            videos: 20,
            frames: 200,
            frame_jitter: 3,
            noise: 0.3,
            separation: 2.0,
            backgrounds: 3,
            background_dim: 4,
            face_drop_rate: 0.02,
        }
    }
}

/// Typed flag values that override everything else.
#[derive(Debug, Default)]
pub struct FlagOverrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub track: Option<String>,
    pub sigma: Option<f64>,
    pub subsets: Option<usize>,
    pub folds: Option<usize>,
}

/// Parse one `key=value` pair into a single-entry table, quoting the value
/// when it is not valid bare syntax so strings work without shell quotes.
fn parse_set(spec: &str) -> Result<toml::Table> {
    let (key, value) = spec
        .split_once('=')
        .with_context(|| format!("--set needs KEY=VALUE, got {spec:?}"))?;
    let bare: std::result::Result<toml::Table, _> = format!("{key} = {value}").parse();
    match bare {
        Ok(t) => Ok(t),
        Err(_) => format!("{key} = {:?}", value)
            .parse()
            .with_context(|| format!("cannot parse --set value {spec:?}")),
    }
}

/// Build the final settings. Later layers win key by key; unknown keys in
/// the file or a `--set` are rejected rather than silently ignored.
pub fn resolve(
    config: Option<&PathBuf>,
    sets: &[String],
    flags: &FlagOverrides,
) -> Result<Settings> {
    let mut table =
        toml::Table::try_from(Settings::default()).expect("defaults serialize to a table");
    if let Some(path) = config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let file: toml::Table = text
            .parse()
            .with_context(|| format!("config file {} is not valid", path.display()))?;
        for (k, v) in file {
            table.insert(k, v);
        }
    }
    for spec in sets {
        for (k, v) in parse_set(spec)? {
            table.insert(k, v);
        }
    }
    let mut settings: Settings = table
        .try_into()
        .context("settings contain an unknown or ill-typed key")?;

    if let Some(seed) = flags.seed {
        settings.seed = seed;
    }
    if let Some(threads) = flags.threads {
        settings.threads = threads;
    }
    if let Some(track) = &flags.track {
        settings.track = track.clone();
    }
    if let Some(sigma) = flags.sigma {
        settings.sigma = Some(sigma);
    }
    if let Some(subsets) = flags.subsets {
        settings.subsets = subsets;
    }
    if let Some(folds) = flags.folds {
        settings.folds = folds;
    }
    Ok(settings)
}

impl Settings {
    pub fn track(&self) -> Result<Track> {
        Track::parse_key(&self.track)
            .with_context(|| format!("unknown track {:?}; use va|expr|au|ce|emi", self.track))
    }

    pub fn weight_policy(&self) -> Result<WeightPolicy> {
        match self.weight_policy.as_str() {
            "uniform" => Ok(WeightPolicy::Uniform),
            "inverse-frequency" => Ok(WeightPolicy::InverseFrequency),
            other => bail!("unknown weight policy {other:?}; use uniform|inverse-frequency"),
        }
    }

    pub fn fusion_config(&self) -> Result<FusionConfig> {
        let cfg = FusionConfig {
            model_dim: self.model_dim,
            clip_len: self.clip_len,
            n_layers: self.n_layers,
            n_heads: self.n_heads,
            ff_dim: self.ff_dim,
            dropout: self.dropout,
            track: self.track()?,
            has_text: self.has_text,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            seed: self.seed,
            weight_policy: self.weight_policy()?,
            ..TrainConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The smoothing to apply: the explicit sigma when given, otherwise
    /// the track's default. `None` means the track is not smoothed.
    pub fn smoothing(&self, track: Track) -> Option<SmoothingConfig> {
        match self.sigma {
            Some(sigma) => Some(match self.radius {
                Some(r) => SmoothingConfig::with_radius(sigma, r),
                None => SmoothingConfig::new(sigma),
            }),
            None => SmoothingConfig::default_for(track),
        }
    }

    /// Directory lookups fall back to the configured root, then the
    /// environment.
    pub fn data_dir(&self, flag: Option<&PathBuf>, purpose: &str) -> Result<PathBuf> {
        if let Some(p) = flag {
            return Ok(p.clone());
        }
        if let Some(root) = &self.data_root {
            return Ok(PathBuf::from(root));
        }
        if let Ok(root) = std::env::var(DATA_ROOT_ENV) {
            if !root.is_empty() {
                return Ok(PathBuf::from(root));
            }
        }
        bail!("no {purpose} directory: pass --data/--out, set data_root, or export {DATA_ROOT_ENV}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_pairs_accept_bare_and_string_values() {
        let t = parse_set("epochs=3").unwrap();
        assert_eq!(t["epochs"].as_integer(), Some(3));
        let t = parse_set("track=au").unwrap();
        assert_eq!(t["track"].as_str(), Some("au"));
        let t = parse_set("dropout=0.5").unwrap();
        assert_eq!(t["dropout"].as_float(), Some(0.5));
        assert!(parse_set("no_equals_sign").is_err());
    }

    #[test]
    fn layering_order_is_defaults_file_set_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, "seed = 5\nepochs = 3\n").unwrap();

        let s = resolve(Some(&path), &[], &FlagOverrides::default()).unwrap();
        assert_eq!(s.seed, 5);
        assert_eq!(s.epochs, 3);
        assert_eq!(s.folds, 5);

        let s = resolve(Some(&path), &["seed=9".into()], &FlagOverrides::default()).unwrap();
        assert_eq!(s.seed, 9);

        let flags = FlagOverrides {
            seed: Some(7),
            ..FlagOverrides::default()
        };
        let s = resolve(Some(&path), &["seed=9".into()], &flags).unwrap();
        assert_eq!(s.seed, 7);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = resolve(None, &["bogus_key=1".into()], &FlagOverrides::default())
            .unwrap_err()
            .root_cause()
            .to_string();
        assert!(err.contains("bogus_key"), "{err}");
    }

    #[test]
    fn explicit_sigma_beats_track_default() {
        let mut s = Settings::default();
        assert_eq!(s.smoothing(Track::Va).unwrap().sigma, 4.0);
        s.sigma = Some(1.25);
        assert_eq!(s.smoothing(Track::Va).unwrap().sigma, 1.25);
        s.sigma = None;
        assert!(s.smoothing(Track::Ce).is_none());
    }
}
