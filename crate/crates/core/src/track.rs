//! The five prediction tracks and their class layouts.

use serde::{Deserialize, Serialize};

/// One of the five competition tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Track {
    /// Valence/arousal regression, two continuous per-frame values.
    Va,
    /// 8-way basic expression classification per frame.
    Expr,
    /// 12 independent binary action-unit labels per frame.
    Au,
    /// 7-way compound expression classification per clip.
    Ce,
    /// 6 continuous emotional-mimicry intensities per clip.
    Emi,
}

pub const AU_NAMES: [&str; 12] = [
    "AU1", "AU2", "AU4", "AU6", "AU7", "AU10", "AU12", "AU15", "AU23", "AU24", "AU25", "AU26",
];

pub const EXPR_NAMES: [&str; 8] = [
    "Neutral",
    "Anger",
    "Disgust",
    "Fear",
    "Happiness",
    "Sadness",
    "Surprise",
    "Other",
];

pub const CE_NAMES: [&str; 7] = [
    "Fearfully Surprised",
    "Happily Surprised",
    "Sadly Surprised",
    "Disgustedly Surprised",
    "Angrily Surprised",
    "Sadly Fearful",
    "Sadly Angry",
];

pub const EMI_NAMES: [&str; 6] = [
    "Admiration",
    "Amusement",
    "Determination",
    "Empathic Pain",
    "Excitement",
    "Joy",
];

pub const VA_NAMES: [&str; 2] = ["Valence", "Arousal"];

impl Track {
    /// Number of per-class scores this track's performance averages over.
    pub fn class_count(self) -> usize {
        match self {
            Track::Va => 2,
            Track::Expr => 8,
            Track::Au => 12,
            Track::Ce => 7,
            Track::Emi => 6,
        }
    }

    /// Column headers for per-class reporting, in table order.
    pub fn class_names(self) -> &'static [&'static str] {
        match self {
            Track::Va => &VA_NAMES,
            Track::Expr => &EXPR_NAMES,
            Track::Au => &AU_NAMES,
            Track::Ce => &CE_NAMES,
            Track::Emi => &EMI_NAMES,
        }
    }

    /// Whether labels and predictions are per frame (true) or per clip.
    pub fn is_frame_wise(self) -> bool {
        matches!(self, Track::Va | Track::Expr | Track::Au)
    }

    /// Lower-case identifier used in file names and the CLI.
    pub fn key(self) -> &'static str {
        match self {
            Track::Va => "va",
            Track::Expr => "expr",
            Track::Au => "au",
            Track::Ce => "ce",
            Track::Emi => "emi",
        }
    }

    pub fn parse_key(s: &str) -> Option<Track> {
        match s.to_ascii_lowercase().as_str() {
            "va" => Some(Track::Va),
            "expr" => Some(Track::Expr),
            "au" => Some(Track::Au),
            "ce" => Some(Track::Ce),
            "emi" => Some(Track::Emi),
            _ => None,
        }
    }
}

impl std::fmt::Display for Track {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Track::Va => "VA",
            Track::Expr => "EXPR",
            Track::Au => "AU",
            Track::Ce => "CE",
            Track::Emi => "EMI",
        };
        f.write_str(name)
    }
}
