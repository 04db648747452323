//! Table rendering for experiment outcomes: one row per fold with
//! per-class columns and the row average, in the layout competition
//! write-ups use.

use std::fmt::Write as _;

use super::ExperimentOutcome;
use crate::io::slug;
use crate::track::Track;

/// F1-based tracks print percentages with two decimals; correlation and
/// intensity tracks print raw scores with four.
fn fmt_score(track: Track, v: f64) -> String {
    match track {
        Track::Au | Track::Expr | Track::Ce => format!("{:.2}", v * 100.0),
        Track::Va | Track::Emi => format!("{v:.4}"),
    }
}

fn metric_name(track: Track) -> &'static str {
    match track {
        Track::Au | Track::Expr | Track::Ce => "F1",
        Track::Va => "CCC",
        Track::Emi => "Pearson r",
    }
}

/// Fixed-width text table: header of class names plus `Avg.`, one row per
/// fold, a `Mean` row over the successful folds, and an `Official` row
/// when an explicit split was evaluated. Failed folds list their error
/// below the table.
pub fn render_text_report(outcome: &ExperimentOutcome) -> String {
    let track = outcome.track;
    let names = track.class_names();
    let mut widths: Vec<usize> = names.iter().map(|n| n.len().max(7)).collect();
    widths.push(7); // Avg.
    let label_width = "Official".len();

    let mut out = String::new();
    let _ = writeln!(
        out,
        "{track} per-class {} by fold ({})",
        metric_name(track),
        match track {
            Track::Au | Track::Expr | Track::Ce => "percent",
            Track::Va | Track::Emi => "raw scores",
        }
    );
    let _ = write!(out, "{:label_width$}", "Fold");
    for (name, w) in names.iter().zip(&widths) {
        let _ = write!(out, "  {name:>w$}");
    }
    let _ = writeln!(out, "  {:>7}", "Avg.");

    let row = |label: &str, per_class: &[f64], avg: f64| {
        let mut line = format!("{label:label_width$}");
        for (v, w) in per_class.iter().zip(&widths) {
            let _ = write!(line, "  {:>w$}", fmt_score(track, *v));
        }
        let _ = write!(line, "  {:>7}", fmt_score(track, avg));
        line
    };

    let mut failures = Vec::new();
    for fold in &outcome.folds {
        match &fold.report {
            Ok(r) => {
                let _ = writeln!(out, "{}", row(&fold.fold_id.to_string(), &r.per_class, r.performance));
            }
            Err(e) => failures.push(format!("fold {}: {e}", fold.fold_id)),
        }
    }
    if let (Some(mean), Some(avg)) = (outcome.mean_per_class(), outcome.mean_performance()) {
        let _ = writeln!(out, "{}", row("Mean", &mean, avg));
    } else {
        let _ = writeln!(out, "(no fold succeeded)");
    }
    if let Some(off) = &outcome.official {
        match &off.report {
            Ok(r) => {
                let _ = writeln!(out, "{}", row("Official", &r.per_class, r.performance));
            }
            Err(e) => failures.push(format!("official split: {e}")),
        }
    }
    for f in failures {
        let _ = writeln!(out, "{f}");
    }
    out
}

/// Machine-readable companion to the text table: full-precision raw
/// fractions, one line per successful fold plus `mean` (and `official`
/// when present). Failed folds are omitted; the text report carries their
/// diagnostics.
pub fn render_csv_report(outcome: &ExperimentOutcome) -> String {
    let track = outcome.track;
    let mut out = String::from("fold");
    for name in track.class_names() {
        out.push(',');
        out.push_str(&slug(name));
    }
    out.push_str(",avg,n_evaluated\n");

    let row = |label: &str, per_class: &[f64], avg: f64, n: Option<usize>| {
        let mut line = label.to_string();
        for v in per_class {
            let _ = write!(line, ",{v}");
        }
        let _ = write!(line, ",{avg}");
        match n {
            Some(n) => {
                let _ = writeln!(line, ",{n}");
            }
            None => line.push_str(",\n"),
        }
        line
    };

    for fold in &outcome.folds {
        if let Ok(r) = &fold.report {
            out.push_str(&row(
                &fold.fold_id.to_string(),
                &r.per_class,
                r.performance,
                Some(r.n_evaluated),
            ));
        }
    }
    if let (Some(mean), Some(avg)) = (outcome.mean_per_class(), outcome.mean_performance()) {
        out.push_str(&row("mean", &mean, avg, None));
    }
    if let Some(off) = &outcome.official {
        if let Ok(r) = &off.report {
            out.push_str(&row("official", &r.per_class, r.performance, Some(r.n_evaluated)));
        }
    }
    out
}
