//! The five track performance measures and their building blocks.
//!
//! All statistics use the population (1/n) variance. Zero-denominator F1
//! cases map to 0 so the macro average stays defined; degenerate
//! correlation inputs are reported as errors instead of silent zeros.

use ndarray::Array2;

use crate::data::{LabelData, LabelTrack, PredictionData, PredictionTrack};
use crate::error::{Error, Result};
use crate::track::Track;

/// Moments of a series paired with its prediction or reference series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesStats {
    pub mean: f64,
    /// Population standard deviation (1/n).
    pub std: f64,
    pub pearson_with_partner: f64,
}

impl SeriesStats {
    /// Compute mean, population std, and the Pearson correlation with
    /// `partner`. Errors when either series is constant, which leaves the
    /// correlation undefined.
    pub fn paired(series: &[f64], partner: &[f64]) -> Result<SeriesStats> {
        let rho = pearson(series, partner)?;
        let (mean, var) = mean_var(series);
        Ok(SeriesStats {
            mean,
            std: var.sqrt(),
            pearson_with_partner: rho,
        })
    }
}

/// Per-class confusion counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// Per-class scores and their mean for one track.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub track: Track,
    pub per_class: Vec<f64>,
    /// Arithmetic mean of `per_class`.
    pub performance: f64,
    /// Frames or clips that survived invalid-label masking.
    pub n_evaluated: usize,
}

pub(crate) fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

fn check_paired(x: &[f64], y: &[f64], what: &str) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::shape(what, x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "{what}: need at least 2 points, got {}",
            x.len()
        )));
    }
    Ok(())
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_paired(x, y, "pearson series lengths")?;
    let (mx, vx) = mean_var(x);
    let (my, vy) = mean_var(y);
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::Degenerate(
            "pearson is undefined for a constant series".into(),
        ));
    }
    let n = x.len() as f64;
    let cov = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / n;
    Ok((cov / (vx.sqrt() * vy.sqrt())).clamp(-1.0, 1.0))
}

/// Concordance correlation coefficient:
/// `2*cov / (var_x + var_xhat + (mean_x - mean_xhat)^2)`.
///
/// Computed through the covariance, which equals `rho * std_x * std_xhat`
/// wherever the latter is defined but stays finite when one series is
/// constant. Only the fully degenerate case (both constant with equal
/// means) is an error.
pub fn ccc(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    check_paired(x, x_hat, "ccc series lengths")?;
    let (mx, vx) = mean_var(x);
    let (mh, vh) = mean_var(x_hat);
    let gap = mx - mh;
    let denom = vx + vh + gap * gap;
    if denom == 0.0 {
        return Err(Error::Degenerate(
            "ccc is undefined when both series are constant with equal means".into(),
        ));
    }
    let n = x.len() as f64;
    let cov = x
        .iter()
        .zip(x_hat)
        .map(|(a, b)| (a - mx) * (b - mh))
        .sum::<f64>()
        / n;
    Ok((2.0 * cov / denom).clamp(-1.0, 1.0))
}

/// F1 from confusion counts. Degenerate denominators (no predicted
/// positives, no true positives, or precision+recall = 0) map to 0.
pub fn f1_per_class(cc: ConfusionCounts) -> f64 {
    if cc.tp + cc.fp == 0 || cc.tp + cc.fn_ == 0 {
        return 0.0;
    }
    let precision = cc.tp as f64 / (cc.tp + cc.fp) as f64;
    let recall = cc.tp as f64 / (cc.tp + cc.fn_) as f64;
    if precision + recall == 0.0 {
        return 0.0;
    }
    2.0 * precision * recall / (precision + recall)
}

/// Average the per-class scores into the track's performance measure.
pub fn track_performance(track: Track, per_class: &[f64]) -> Result<MetricReport> {
    if per_class.len() != track.class_count() {
        return Err(Error::shape(
            format!("{track} per-class scores"),
            track.class_count(),
            per_class.len(),
        ));
    }
    let performance = per_class.iter().sum::<f64>() / per_class.len() as f64;
    Ok(MetricReport {
        track,
        per_class: per_class.to_vec(),
        performance,
        n_evaluated: 0,
    })
}

fn masked_pairs<'a>(
    preds: &'a Array2<f64>,
    labels: &'a Array2<f64>,
    mask: &'a [bool],
    col: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut p = Vec::new();
    let mut l = Vec::new();
    for (i, &ok) in mask.iter().enumerate() {
        if ok {
            p.push(preds[(i, col)]);
            l.push(labels[(i, col)]);
        }
    }
    (p, l)
}

/// Evaluate a prediction track against its label track: mask invalid
/// labels, build the per-class statistic the track calls for, and average.
pub fn evaluate_track(preds: &PredictionTrack, labels: &LabelTrack) -> Result<MetricReport> {
    if preds.track() != labels.track() {
        return Err(Error::WrongTrack {
            track: preds.track(),
            message: format!("labels are for {}", labels.track()),
        });
    }
    if preds.len() != labels.len() {
        return Err(Error::shape(
            format!("{} prediction/label rows", preds.track()),
            labels.len(),
            preds.len(),
        ));
    }
    let mask = labels.valid_mask();
    let n_evaluated = mask.iter().filter(|&&b| b).count();
    if n_evaluated == 0 {
        return Err(Error::Degenerate(
            "no valid rows left after masking invalid labels".into(),
        ));
    }

    let per_class: Vec<f64> = match (&preds.data, &labels.data) {
        (PredictionData::Au { decisions, .. }, LabelData::Au(truth)) => (0..12)
            .map(|j| {
                let mut cc = ConfusionCounts::default();
                for (i, &ok) in mask.iter().enumerate() {
                    if !ok {
                        continue;
                    }
                    let t = truth[(i, j)] == 1;
                    let p = decisions[(i, j)] == 1;
                    match (t, p) {
                        (true, true) => cc.tp += 1,
                        (false, true) => cc.fp += 1,
                        (true, false) => cc.fn_ += 1,
                        (false, false) => {}
                    }
                }
                f1_per_class(cc)
            })
            .collect(),
        (PredictionData::Expr { decisions, .. }, LabelData::Expr(truth)) => {
            multiclass_f1(decisions, truth, &mask, 8)
        }
        (PredictionData::Ce { decisions, .. }, LabelData::Ce(truth)) => {
            multiclass_f1(decisions, truth, &mask, 7)
        }
        (PredictionData::Va(pred), LabelData::Va(truth)) => {
            let mut scores = Vec::with_capacity(2);
            for col in 0..2 {
                let (p, l) = masked_pairs(pred, truth, &mask, col);
                scores.push(ccc(&l, &p)?);
            }
            scores
        }
        (PredictionData::Emi(pred), LabelData::Emi(truth)) => {
            let mut scores = Vec::with_capacity(6);
            for col in 0..6 {
                let (p, l) = masked_pairs(pred, truth, &mask, col);
                scores.push(pearson(&l, &p)?);
            }
            scores
        }
        _ => unreachable!("track equality checked above"),
    };

    let mut report = track_performance(preds.track(), &per_class)?;
    report.n_evaluated = n_evaluated;
    Ok(report)
}

fn multiclass_f1(decisions: &[u8], truth: &[i8], mask: &[bool], n_classes: usize) -> Vec<f64> {
    (0..n_classes)
        .map(|c| {
            let mut cc = ConfusionCounts::default();
            for (i, &ok) in mask.iter().enumerate() {
                if !ok {
                    continue;
                }
                let t = truth[i] as usize == c;
                let p = decisions[i] as usize == c;
                match (t, p) {
                    (true, true) => cc.tp += 1,
                    (false, true) => cc.fp += 1,
                    (true, false) => cc.fn_ += 1,
                    (false, false) => {}
                }
            }
            f1_per_class(cc)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::PredictionTrack;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    const TABLE_TOL: f64 = 0.005;

    #[test]
    fn ccc_identity_is_one() {
        let x = [0.1, -0.3, 0.5];
        assert!((ccc(&x, &x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ccc_hand_evaluated_shift() {
        // cov = 0.25, both variances 0.25, mean gap 1 => 0.5 / 1.5.
        let v = ccc(&[0.0, 1.0], &[1.0, 2.0]).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ccc_constant_prediction_is_zero() {
        let v = ccc(&[0.0, 1.0, 2.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn ccc_errors() {
        assert!(matches!(
            ccc(&[0.0, 1.0], &[0.0]),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(matches!(ccc(&[0.0], &[0.0]), Err(Error::InvalidInput(_))));
        assert!(matches!(
            ccc(&[2.0, 2.0], &[2.0, 2.0]),
            Err(Error::Degenerate(_))
        ));
        // Constant but different means: defined, zero.
        assert_eq!(ccc(&[2.0, 2.0], &[3.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn pearson_exact_relations() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        let v = pearson(&[0.0, 1.0, 0.0, 1.0], &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(v.abs() < 1e-12);
        assert!(pearson(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn series_stats_population_std() {
        let s = SeriesStats::paired(&[0.0, 1.0], &[1.0, 3.0]).unwrap();
        assert!((s.mean - 0.5).abs() < 1e-12);
        assert!((s.std - 0.5).abs() < 1e-12);
        assert!((s.pearson_with_partner - 1.0).abs() < 1e-12);
        assert!(SeriesStats::paired(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn ccc_covariance_route_matches_pearson_route() {
        // 2*rho*sx*sh == 2*cov whenever both are defined.
        let x = [0.3, -0.2, 0.9, 0.4, -0.5];
        let h = [0.1, 0.0, 0.7, 0.6, -0.4];
        let s_x = SeriesStats::paired(&x, &h).unwrap();
        let s_h = SeriesStats::paired(&h, &x).unwrap();
        let (mx, _) = mean_var(&x);
        let (mh, _) = mean_var(&h);
        let gap = mx - mh;
        let via_pearson = 2.0 * s_x.pearson_with_partner * s_x.std * s_h.std
            / (s_x.std * s_x.std + s_h.std * s_h.std + gap * gap);
        assert!((ccc(&x, &h).unwrap() - via_pearson).abs() < 1e-12);
    }

    #[test]
    fn f1_cases() {
        assert_eq!(f1_per_class(ConfusionCounts { tp: 5, fp: 0, fn_: 0 }), 1.0);
        assert_eq!(f1_per_class(ConfusionCounts { tp: 1, fp: 1, fn_: 1 }), 0.5);
        assert_eq!(f1_per_class(ConfusionCounts { tp: 0, fp: 0, fn_: 3 }), 0.0);
        assert_eq!(f1_per_class(ConfusionCounts { tp: 0, fp: 2, fn_: 0 }), 0.0);
        assert_eq!(f1_per_class(ConfusionCounts::default()), 0.0);
    }

    #[test]
    fn va_official_row_average() {
        let r = track_performance(Track::Va, &[0.5523, 0.6531]).unwrap();
        assert!((r.performance - 0.6027).abs() < TABLE_TOL);
    }

    #[test]
    fn au_official_row_average() {
        let row = [
            55.29, 51.40, 65.81, 68.61, 76.08, 75.00, 75.24, 37.65, 18.89, 30.89, 83.41, 44.98,
        ];
        let r = track_performance(Track::Au, &row).unwrap();
        assert!((r.performance - 56.94).abs() < TABLE_TOL);
    }

    #[test]
    fn emi_official_row_average() {
        let row = [0.5942, 0.4982, 0.5090, 0.2275, 0.4961, 0.4580];
        let r = track_performance(Track::Emi, &row).unwrap();
        assert!((r.performance - 0.4638).abs() < TABLE_TOL);
    }

    #[test]
    fn expr_official_row_average() {
        let row = [70.21, 73.93, 50.34, 21.83, 59.05, 66.41, 36.51, 66.11];
        let r = track_performance(Track::Expr, &row).unwrap();
        assert!((r.performance - 55.55).abs() < TABLE_TOL);
    }

    #[test]
    fn track_performance_rejects_wrong_length() {
        assert!(track_performance(Track::Va, &[1.0]).is_err());
        assert!(track_performance(Track::Au, &[0.0; 11]).is_err());
    }

    #[test]
    fn perfect_expr_track_scores_one() {
        let classes: Vec<i8> = (0..100).map(|i| (i % 8) as i8).collect();
        let labels = LabelTrack {
            data: LabelData::Expr(classes),
        };
        let preds = PredictionTrack::from_labels(&labels);
        let r = evaluate_track(&preds, &labels).unwrap();
        assert_eq!(r.performance, 1.0);
        assert_eq!(r.n_evaluated, 100);
        assert!(r.per_class.iter().all(|&f| f == 1.0));
    }

    /// Independent confusion-count oracle: per class, re-derive TP/FP/FN
    /// straight from the definitions with no shared code path.
    fn au_f1_oracle(decisions: &Array2<u8>, truth: &Array2<i8>) -> Vec<f64> {
        (0..12)
            .map(|j| {
                let rows: Vec<usize> = (0..truth.nrows())
                    .filter(|&i| (0..12).all(|c| truth[(i, c)] != -1))
                    .collect();
                let tp = rows
                    .iter()
                    .filter(|&&i| truth[(i, j)] == 1 && decisions[(i, j)] == 1)
                    .count() as f64;
                let fp = rows
                    .iter()
                    .filter(|&&i| truth[(i, j)] == 0 && decisions[(i, j)] == 1)
                    .count() as f64;
                let fn_ = rows
                    .iter()
                    .filter(|&&i| truth[(i, j)] == 1 && decisions[(i, j)] == 0)
                    .count() as f64;
                let p = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
                let r = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
                if p + r > 0.0 {
                    2.0 * p * r / (p + r)
                } else {
                    0.0
                }
            })
            .collect()
    }

    #[test]
    fn au_synthetic_matches_confusion_oracle() {
        // 20 frames with a fixed pseudo-random pattern, including one
        // invalid row.
        let mut truth = Array2::<i8>::zeros((20, 12));
        let mut probs = Array2::<f64>::zeros((20, 12));
        let mut state = 0x2545f49u64;
        for i in 0..20 {
            for j in 0..12 {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                truth[(i, j)] = ((state >> 33) & 1) as i8;
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                probs[(i, j)] = ((state >> 11) as f64) / ((1u64 << 53) as f64);
            }
        }
        for j in 0..12 {
            truth[(7, j)] = -1;
        }
        let labels = LabelTrack {
            data: LabelData::Au(truth.clone()),
        };
        let preds = PredictionTrack::au_from_probs(probs).unwrap();
        let report = evaluate_track(&preds, &labels).unwrap();
        let decisions = match &preds.data {
            PredictionData::Au { decisions, .. } => decisions.clone(),
            _ => unreachable!(),
        };
        let expected = au_f1_oracle(&decisions, &truth);
        assert_eq!(report.n_evaluated, 19);
        for (a, b) in report.per_class.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!(
            (report.performance - expected.iter().sum::<f64>() / 12.0).abs() < 1e-12
        );
    }

    #[test]
    fn emi_uses_pearson_per_dimension() {
        let truth = array![
            [0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
            [0.2, 0.3, 0.4, 0.5, 0.6, 0.7],
            [0.5, 0.1, 0.9, 0.2, 0.4, 0.8],
        ];
        // Affine transform per column keeps Pearson at exactly 1.
        let pred = truth.mapv(|v| 2.0 * v + 0.1);
        let labels = LabelTrack {
            data: LabelData::Emi(truth),
        };
        let preds = PredictionTrack::emi_from_values(pred).unwrap();
        let r = evaluate_track(&preds, &labels).unwrap();
        assert!((r.performance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evaluate_rejects_mismatches() {
        let labels = LabelTrack {
            data: LabelData::Expr(vec![0, 1]),
        };
        let preds = PredictionTrack::va_from_values(array![[0.0, 0.0], [0.1, 0.1]]).unwrap();
        assert!(matches!(
            evaluate_track(&preds, &labels),
            Err(Error::WrongTrack { .. })
        ));

        let short = PredictionTrack::expr_from_probs(Array2::zeros((1, 8))).unwrap();
        assert!(matches!(
            evaluate_track(&short, &labels),
            Err(Error::ShapeMismatch { .. })
        ));

        let all_invalid = LabelTrack {
            data: LabelData::Expr(vec![-1, -1]),
        };
        let p = PredictionTrack::expr_from_probs(Array2::zeros((2, 8))).unwrap();
        assert!(matches!(
            evaluate_track(&p, &all_invalid),
            Err(Error::Degenerate(_))
        ));
    }

    fn nonconstant_series() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0f64..10.0, 2..40)
            .prop_filter("needs variance", |v| {
                let (_, var) = mean_var(v);
                var > 1e-9
            })
    }

    proptest! {
        #[test]
        fn ccc_self_is_one(x in nonconstant_series()) {
            let v = ccc(&x, &x).unwrap();
            prop_assert!((v - 1.0).abs() < 1e-12);
        }

        #[test]
        fn ccc_symmetric(pair in nonconstant_series().prop_flat_map(|x| {
            let n = x.len();
            (Just(x), proptest::collection::vec(-10.0f64..10.0, n))
        })) {
            let (x, y) = pair;
            if let (Ok(a), Ok(b)) = (ccc(&x, &y), ccc(&y, &x)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn ccc_attenuates_pearson(pair in nonconstant_series().prop_flat_map(|x| {
            let n = x.len();
            (Just(x), proptest::collection::vec(-10.0f64..10.0, n))
        })) {
            let (x, y) = pair;
            let (_, vy) = mean_var(&y);
            prop_assume!(vy > 1e-9);
            let c = ccc(&x, &y).unwrap();
            let p = pearson(&x, &y).unwrap();
            prop_assert!(c.abs() <= p.abs() + 1e-12);
        }

        #[test]
        fn pearson_positive_affine_invariant(
            x in nonconstant_series(),
            a in -5.0f64..5.0,
            b in 0.01f64..5.0,
        ) {
            let y: Vec<f64> = x.iter().map(|v| a + b * v).collect();
            let p = pearson(&x, &y).unwrap();
            prop_assert!((p - 1.0).abs() < 1e-9);
        }

        #[test]
        fn macro_average_is_exact_mean(scores in proptest::collection::vec(0.0f64..1.0, 8)) {
            let r = track_performance(Track::Expr, &scores).unwrap();
            let mean = scores.iter().sum::<f64>() / scores.len() as f64;
            prop_assert_eq!(r.performance, mean);
        }

        #[test]
        fn expr_evaluation_permutation_invariant(
            rows in proptest::collection::vec((0i8..8, 0u8..8), 4..60),
            seed in 0u64..1000,
        ) {
            let truth: Vec<i8> = rows.iter().map(|r| r.0).collect();
            let decided: Vec<u8> = rows.iter().map(|r| r.1).collect();
            let mut probs = Array2::zeros((rows.len(), 8));
            for (i, &d) in decided.iter().enumerate() {
                probs[(i, d as usize)] = 1.0;
            }
            let labels = LabelTrack { data: LabelData::Expr(truth.clone()) };
            let preds = PredictionTrack::expr_from_probs(probs.clone()).unwrap();
            let base = evaluate_track(&preds, &labels).unwrap();

            // Deterministic permutation from the seed.
            let mut order: Vec<usize> = (0..rows.len()).collect();
            let mut s = seed.wrapping_add(0x9e3779b97f4a7c15);
            for i in (1..order.len()).rev() {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                order.swap(i, (s % (i as u64 + 1)) as usize);
            }
            let truth_p: Vec<i8> = order.iter().map(|&i| truth[i]).collect();
            let mut probs_p = Array2::zeros((rows.len(), 8));
            for (new, &old) in order.iter().enumerate() {
                probs_p[(new, decided[old] as usize)] = 1.0;
            }
            let labels_p = LabelTrack { data: LabelData::Expr(truth_p) };
            let preds_p = PredictionTrack::expr_from_probs(probs_p).unwrap();
            let perm = evaluate_track(&preds_p, &labels_p).unwrap();
            for (a, b) in base.per_class.iter().zip(&perm.per_class) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
