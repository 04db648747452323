//! Background-partitioned ensembles: clustering videos by background
//! descriptor, majority voting over per-subset classifiers, and averaging
//! for the regression tracks.

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::data::{BackgroundDescriptor, PredictionData, PredictionTrack};
use crate::error::{Error, Result};

/// Upper bound on Lloyd iterations; assignments almost always settle far
/// earlier.
const KMEANS_MAX_ITERS: usize = 100;

/// One classifier's opinion for a single decision slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoteRecord {
    pub label: usize,
    /// Non-negative score used to break count ties.
    pub confidence: f64,
}

/// Which subset each video landed in, plus the cluster centroids that
/// define the partition.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetAssignment {
    /// Video id paired with its subset index in `0..n_subsets()`.
    pub videos: Vec<(String, usize)>,
    pub centroids: Vec<Vec<f64>>,
}

impl SubsetAssignment {
    pub fn n_subsets(&self) -> usize {
        self.centroids.len()
    }

    pub fn subset_of(&self, video_id: &str) -> Option<usize> {
        self.videos
            .iter()
            .find(|(id, _)| id == video_id)
            .map(|&(_, s)| s)
    }

    pub fn members(&self, subset: usize) -> Vec<&str> {
        self.videos
            .iter()
            .filter(|&&(_, s)| s == subset)
            .map(|(id, _)| id.as_str())
            .collect()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Cluster the videos' background descriptors into `m` subsets with
/// seeded k-means (k-means++ initialization, Lloyd iterations, empty
/// clusters refilled from the largest cluster's farthest point). The same
/// seed always yields the same partition.
pub fn partition_backgrounds(
    videos: &[(String, BackgroundDescriptor)],
    m: usize,
    seed: u64,
) -> Result<SubsetAssignment> {
    let n = videos.len();
    if m == 0 {
        return Err(Error::InvalidInput("subset count must be at least 1".into()));
    }
    if n < m {
        return Err(Error::InvalidInput(format!(
            "cannot split {n} videos into {m} subsets"
        )));
    }
    let dim = videos[0].1.dim();
    for (id, d) in videos {
        if d.dim() != dim {
            return Err(Error::shape(
                format!("background descriptor of {id}"),
                dim,
                d.dim(),
            ));
        }
        if d.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "background descriptor of {id} contains a non-finite value"
            )));
        }
    }

    let points: Vec<&[f64]> = videos.iter().map(|(_, d)| d.0.as_slice()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(&points, m, &mut rng);
    let mut assignments = vec![0usize; n];

    for _ in 0..KMEANS_MAX_ITERS {
        let mut next: Vec<usize> = points
            .iter()
            .map(|p| nearest_centroid(p, &centroids))
            .collect();
        repair_empty_clusters(&points, &centroids, &mut next, m);
        let converged = next == assignments;
        assignments = next;
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<&[f64]> = points
                .iter()
                .zip(&assignments)
                .filter(|&(_, &a)| a == c)
                .map(|(&p, _)| p)
                .collect();
            centroid.iter_mut().for_each(|v| *v = 0.0);
            for p in &members {
                for (acc, x) in centroid.iter_mut().zip(*p) {
                    *acc += x;
                }
            }
            let k = members.len() as f64;
            centroid.iter_mut().for_each(|v| *v /= k);
        }
        if converged {
            break;
        }
    }

    Ok(SubsetAssignment {
        videos: videos
            .iter()
            .zip(&assignments)
            .map(|((id, _), &a)| (id.clone(), a))
            .collect(),
        centroids,
    })
}

fn plus_plus_init(points: &[&[f64]], m: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(m);
    centroids.push(points[rng.random_range(0..points.len())].to_vec());
    while centroids.len() < m {
        let d2: Vec<f64> = points
            .iter()
            .map(|p| {
                centroids
                    .iter()
                    .map(|c| sq_dist(p, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut u = rng.random_range(0.0..total);
            let mut chosen = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            chosen
        } else {
            // All points coincide with existing centroids.
            rng.random_range(0..points.len())
        };
        centroids.push(points[idx].to_vec());
    }
    centroids
}

fn nearest_centroid(p: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(p, centroid);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// Give every empty cluster the point farthest from its current centroid,
/// taken from the most populous cluster.
fn repair_empty_clusters(
    points: &[&[f64]],
    centroids: &[Vec<f64>],
    assignments: &mut [usize],
    m: usize,
) {
    loop {
        let mut counts = vec![0usize; m];
        for &a in assignments.iter() {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let largest = counts
            .iter()
            .enumerate()
            .max_by_key(|&(_, &c)| c)
            .map(|(i, _)| i)
            .expect("at least one cluster exists");
        let donor = assignments
            .iter()
            .enumerate()
            .filter(|&(_, &a)| a == largest)
            .max_by(|&(i, _), &(j, _)| {
                let di = sq_dist(points[i], &centroids[largest]);
                let dj = sq_dist(points[j], &centroids[largest]);
                di.partial_cmp(&dj).expect("finite distances")
            })
            .map(|(i, _)| i)
            .expect("largest cluster is non-empty");
        assignments[donor] = empty;
    }
}

/// Plurality vote. Count ties break toward the label with the larger
/// summed confidence; exact confidence ties break toward the lowest label.
pub fn vote(records: &[VoteRecord], n_classes: usize) -> Result<usize> {
    if records.is_empty() {
        return Err(Error::InvalidInput("vote over zero classifiers".into()));
    }
    let mut counts = vec![0usize; n_classes];
    let mut confidence = vec![0.0f64; n_classes];
    for r in records {
        if r.label >= n_classes {
            return Err(Error::InvalidInput(format!(
                "vote label {} out of range for {n_classes} classes",
                r.label
            )));
        }
        if !r.confidence.is_finite() || r.confidence < 0.0 {
            return Err(Error::InvalidInput(format!(
                "vote confidence must be finite and non-negative, got {}",
                r.confidence
            )));
        }
        counts[r.label] += 1;
        confidence[r.label] += r.confidence;
    }
    let mut best = 0usize;
    for c in 1..n_classes {
        if counts[c] > counts[best]
            || (counts[c] == counts[best] && confidence[c] > confidence[best])
        {
            best = c;
        }
    }
    Ok(best)
}

/// Element-wise mean of aligned series, computed as sum over classifiers
/// divided by the classifier count so a one-member ensemble reproduces its
/// input bit for bit.
pub fn fuse_regression(series: &[&[f64]]) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::InvalidInput("fusing zero regression series".into()));
    }
    let len = series[0].len();
    for s in series {
        if s.len() != len {
            return Err(Error::shape("regression series length", len, s.len()));
        }
    }
    let m = series.len() as f64;
    Ok((0..len)
        .map(|j| series.iter().map(|s| s[j]).sum::<f64>() / m)
        .collect())
}

fn mean_arrays(arrays: Vec<&Array2<f64>>) -> Array2<f64> {
    let m = arrays.len() as f64;
    let mut acc = arrays[0].clone();
    for a in &arrays[1..] {
        acc += *a;
    }
    acc.mapv_inplace(|v| v / m);
    acc
}

/// Merge the per-subset classifiers' outputs for one video: scores are
/// averaged, categorical decisions are taken by [`vote`] with the source
/// classifier's own confidence, and regression tracks are averaged
/// element-wise. A single-member ensemble returns its input unchanged.
pub fn combine_predictions(tracks: &[PredictionTrack]) -> Result<PredictionTrack> {
    if tracks.is_empty() {
        return Err(Error::InvalidInput("combining zero prediction tracks".into()));
    }
    let track = tracks[0].track();
    let len = tracks[0].len();
    for t in &tracks[1..] {
        if t.track() != track {
            return Err(Error::WrongTrack {
                track,
                message: format!("ensemble member predicted {}", t.track()),
            });
        }
        if t.len() != len {
            return Err(Error::shape("ensemble member rows", len, t.len()));
        }
    }
    if tracks.len() == 1 {
        return Ok(tracks[0].clone());
    }

    let data = match &tracks[0].data {
        PredictionData::Va(_) => {
            let arrays: Vec<&Array2<f64>> = tracks
                .iter()
                .map(|t| match &t.data {
                    PredictionData::Va(v) => v,
                    _ => unreachable!("track equality checked above"),
                })
                .collect();
            PredictionData::Va(fuse_rows(&arrays)?)
        }
        PredictionData::Emi(_) => {
            let arrays: Vec<&Array2<f64>> = tracks
                .iter()
                .map(|t| match &t.data {
                    PredictionData::Emi(v) => v,
                    _ => unreachable!("track equality checked above"),
                })
                .collect();
            PredictionData::Emi(fuse_rows(&arrays)?)
        }
        PredictionData::Expr { .. } => {
            let members: Vec<(&Array2<f64>, &[u8])> = tracks
                .iter()
                .map(|t| match &t.data {
                    PredictionData::Expr { probs, decisions } => {
                        (probs, decisions.as_slice())
                    }
                    _ => unreachable!("track equality checked above"),
                })
                .collect();
            let (probs, decisions) = vote_multiclass(&members, 8)?;
            PredictionData::Expr { probs, decisions }
        }
        PredictionData::Ce { .. } => {
            let members: Vec<(&Array2<f64>, &[u8])> = tracks
                .iter()
                .map(|t| match &t.data {
                    PredictionData::Ce { probs, decisions } => (probs, decisions.as_slice()),
                    _ => unreachable!("track equality checked above"),
                })
                .collect();
            let (probs, decisions) = vote_multiclass(&members, 7)?;
            PredictionData::Ce { probs, decisions }
        }
        PredictionData::Au { .. } => {
            let members: Vec<(&Array2<f64>, &Array2<u8>)> = tracks
                .iter()
                .map(|t| match &t.data {
                    PredictionData::Au { probs, decisions } => (probs, decisions),
                    _ => unreachable!("track equality checked above"),
                })
                .collect();
            let probs = mean_arrays(members.iter().map(|(p, _)| *p).collect());
            let mut decisions = Array2::zeros((len, 12));
            for i in 0..len {
                for j in 0..12 {
                    let records: Vec<VoteRecord> = members
                        .iter()
                        .map(|(p, d)| {
                            let prob = p[(i, j)];
                            VoteRecord {
                                label: d[(i, j)] as usize,
                                confidence: prob.max(1.0 - prob),
                            }
                        })
                        .collect();
                    decisions[(i, j)] = vote(&records, 2)? as u8;
                }
            }
            PredictionData::Au { probs, decisions }
        }
    };
    Ok(PredictionTrack { data })
}

fn fuse_rows(arrays: &[&Array2<f64>]) -> Result<Array2<f64>> {
    let (n, k) = arrays[0].dim();
    let mut out = Array2::zeros((n, k));
    for i in 0..n {
        let rows: Vec<Vec<f64>> = arrays.iter().map(|a| a.row(i).to_vec()).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let fused = fuse_regression(&refs)?;
        for (j, v) in fused.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

fn vote_multiclass(
    members: &[(&Array2<f64>, &[u8])],
    n_classes: usize,
) -> Result<(Array2<f64>, Vec<u8>)> {
    let probs = mean_arrays(members.iter().map(|(p, _)| *p).collect());
    let n = probs.nrows();
    let mut decisions = Vec::with_capacity(n);
    for i in 0..n {
        let records: Vec<VoteRecord> = members
            .iter()
            .map(|(p, d)| VoteRecord {
                label: d[i] as usize,
                confidence: p[(i, d[i] as usize)],
            })
            .collect();
        decisions.push(vote(&records, n_classes)? as u8);
    }
    Ok((probs, decisions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn rec(label: usize, confidence: f64) -> VoteRecord {
        VoteRecord { label, confidence }
    }

    #[test]
    fn unanimous_vote() {
        let r = vec![rec(2, 0.5), rec(2, 0.9), rec(2, 0.1)];
        assert_eq!(vote(&r, 4).unwrap(), 2);
    }

    #[test]
    fn plurality_beats_confidence() {
        // Label 1 has two votes with tiny confidence; label 0 one vote
        // with huge confidence. Counts decide.
        let r = vec![rec(1, 0.01), rec(1, 0.01), rec(0, 100.0)];
        assert_eq!(vote(&r, 2).unwrap(), 1);
    }

    #[test]
    fn count_tie_breaks_on_summed_confidence() {
        let r = vec![rec(0, 0.4), rec(1, 0.6)];
        assert_eq!(vote(&r, 2).unwrap(), 1);
        let r = vec![rec(0, 0.7), rec(1, 0.6)];
        assert_eq!(vote(&r, 2).unwrap(), 0);
    }

    #[test]
    fn full_tie_takes_lowest_label() {
        let r = vec![rec(3, 0.5), rec(1, 0.5)];
        assert_eq!(vote(&r, 4).unwrap(), 1);
    }

    #[test]
    fn vote_input_validation() {
        assert!(vote(&[], 2).is_err());
        assert!(vote(&[rec(2, 0.5)], 2).is_err());
        assert!(vote(&[rec(0, -0.1)], 2).is_err());
        assert!(vote(&[rec(0, f64::NAN)], 2).is_err());
    }

    /// Brute-force tally with independently written tie rules.
    fn vote_oracle(records: &[VoteRecord], n_classes: usize) -> usize {
        let tally: Vec<(usize, f64)> = (0..n_classes)
            .map(|c| {
                let count = records.iter().filter(|r| r.label == c).count();
                let conf: f64 = records
                    .iter()
                    .filter(|r| r.label == c)
                    .map(|r| r.confidence)
                    .sum();
                (count, conf)
            })
            .collect();
        let mut best = 0;
        for c in 1..n_classes {
            let better = tally[c].0 > tally[best].0
                || (tally[c].0 == tally[best].0 && tally[c].1 > tally[best].1);
            if better {
                best = c;
            }
        }
        best
    }

    #[test]
    fn vote_matches_exhaustive_oracle() {
        // Every labeling of 3 classifiers over 3 classes, with scripted
        // confidences that produce both kinds of ties.
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for conf_case in 0..3 {
                        let confs = match conf_case {
                            0 => [0.5, 0.5, 0.5],
                            1 => [0.9, 0.2, 0.4],
                            _ => [0.1, 0.1, 0.8],
                        };
                        let records = vec![rec(a, confs[0]), rec(b, confs[1]), rec(c, confs[2])];
                        assert_eq!(
                            vote(&records, 3).unwrap(),
                            vote_oracle(&records, 3),
                            "labels ({a},{b},{c}) confs {confs:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn fuse_regression_mean_and_identity() {
        let a = [1.0, 2.0, 3.0];
        let b = [3.0, 2.0, 1.0];
        assert_eq!(fuse_regression(&[&a, &b]).unwrap(), vec![2.0, 2.0, 2.0]);
        // Single member: bit-for-bit identical, including odd values.
        let odd = [0.1 + 0.2, f64::MIN_POSITIVE, -0.0];
        let out = fuse_regression(&[&odd]).unwrap();
        for (x, y) in odd.iter().zip(&out) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert!(fuse_regression(&[]).is_err());
        assert!(fuse_regression(&[&a, &b[..2]]).is_err());
    }

    #[test]
    fn single_member_ensemble_is_identity() {
        let probs = array![[0.3, 0.7], [0.6, 0.4]];
        let mut padded = Array2::zeros((2, 8));
        padded.slice_mut(ndarray::s![.., ..2]).assign(&probs);
        padded.column_mut(7).mapv_inplace(|_| 0.0);
        // Make rows sum to 1.
        for mut row in padded.rows_mut() {
            let s: f64 = row.sum();
            row.mapv_inplace(|v| v / s);
        }
        let t = PredictionTrack::expr_from_probs(padded).unwrap();
        let combined = combine_predictions(&[t.clone()]).unwrap();
        assert_eq!(combined, t);
    }

    #[test]
    fn expression_vote_overrides_mean_argmax() {
        // Two members vote class 1 with modest confidence, one votes
        // class 0 with huge probability mass. The mean favors class 0 but
        // the vote must pick class 1.
        let mk = |p0: f64, p1: f64| {
            let mut probs = Array2::from_elem((1, 8), (1.0 - p0 - p1) / 6.0);
            probs[(0, 0)] = p0;
            probs[(0, 1)] = p1;
            PredictionTrack::expr_from_probs(probs).unwrap()
        };
        let members = [mk(0.01, 0.40), mk(0.01, 0.40), mk(0.97, 0.01)];
        let combined = combine_predictions(&members).unwrap();
        match &combined.data {
            PredictionData::Expr { probs, decisions } => {
                assert_eq!(decisions[0], 1);
                let mean0 = (0.01 + 0.01 + 0.97) / 3.0;
                assert!((probs[(0, 0)] - mean0).abs() < 1e-12);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn au_votes_per_channel() {
        let mk = |bits: [f64; 2]| {
            let mut probs = Array2::from_elem((1, 12), 0.2);
            probs[(0, 0)] = bits[0];
            probs[(0, 1)] = bits[1];
            PredictionTrack::au_from_probs(probs).unwrap()
        };
        let members = [mk([0.9, 0.9]), mk([0.8, 0.1]), mk([0.2, 0.3])];
        let combined = combine_predictions(&members).unwrap();
        match &combined.data {
            PredictionData::Au { probs, decisions } => {
                assert_eq!(decisions[(0, 0)], 1);
                assert_eq!(decisions[(0, 1)], 0);
                assert!((probs[(0, 0)] - (0.9 + 0.8 + 0.2) / 3.0).abs() < 1e-12);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn regression_tracks_average() {
        let a = PredictionTrack::va_from_values(array![[0.2, -0.4], [0.0, 1.0]]).unwrap();
        let b = PredictionTrack::va_from_values(array![[0.4, -0.2], [1.0, 0.0]]).unwrap();
        let combined = combine_predictions(&[a, b]).unwrap();
        match &combined.data {
            PredictionData::Va(v) => {
                assert!((v[(0, 0)] - 0.3).abs() < 1e-15);
                assert!((v[(0, 1)] + 0.3).abs() < 1e-15);
                assert!((v[(1, 0)] - 0.5).abs() < 1e-15);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn combine_rejects_mismatches() {
        assert!(combine_predictions(&[]).is_err());
        let va = PredictionTrack::va_from_values(array![[0.0, 0.0]]).unwrap();
        let expr = PredictionTrack::expr_from_probs({
            let mut p = Array2::zeros((1, 8));
            p[(0, 0)] = 1.0;
            p
        })
        .unwrap();
        assert!(matches!(
            combine_predictions(&[va.clone(), expr]),
            Err(Error::WrongTrack { .. })
        ));
        let longer = PredictionTrack::va_from_values(array![[0.0, 0.0], [0.1, 0.1]]).unwrap();
        assert!(matches!(
            combine_predictions(&[va, longer]),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    fn blob(center: &[f64], spread: f64, idx: usize) -> BackgroundDescriptor {
        // Deterministic pseudo-offsets, no RNG needed.
        let off: Vec<f64> = center
            .iter()
            .enumerate()
            .map(|(d, &c)| c + spread * (((idx * 7 + d * 3) % 5) as f64 - 2.0) / 10.0)
            .collect();
        BackgroundDescriptor(off)
    }

    #[test]
    fn kmeans_recovers_separated_blobs() {
        let mut videos = Vec::new();
        for i in 0..10 {
            videos.push((format!("a{i}"), blob(&[0.0, 0.0, 0.0], 0.5, i)));
        }
        for i in 0..10 {
            videos.push((format!("b{i}"), blob(&[10.0, 10.0, 10.0], 0.5, i)));
        }
        let assignment = partition_backgrounds(&videos, 2, 7).unwrap();
        let first = assignment.subset_of("a0").unwrap();
        let second = assignment.subset_of("b0").unwrap();
        assert_ne!(first, second);
        for i in 0..10 {
            assert_eq!(assignment.subset_of(&format!("a{i}")).unwrap(), first);
            assert_eq!(assignment.subset_of(&format!("b{i}")).unwrap(), second);
        }
        assert_eq!(assignment.members(first).len(), 10);
    }

    #[test]
    fn kmeans_is_deterministic_per_seed() {
        let videos: Vec<(String, BackgroundDescriptor)> = (0..12)
            .map(|i| (format!("v{i}"), blob(&[i as f64, -(i as f64)], 1.0, i)))
            .collect();
        let a = partition_backgrounds(&videos, 3, 42).unwrap();
        let b = partition_backgrounds(&videos, 3, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kmeans_single_cluster_is_the_mean() {
        let videos = vec![
            ("x".to_string(), BackgroundDescriptor(vec![1.0, 3.0])),
            ("y".to_string(), BackgroundDescriptor(vec![3.0, 5.0])),
        ];
        let a = partition_backgrounds(&videos, 1, 0).unwrap();
        assert_eq!(a.videos.iter().filter(|(_, s)| *s == 0).count(), 2);
        assert!((a.centroids[0][0] - 2.0).abs() < 1e-12);
        assert!((a.centroids[0][1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn kmeans_validation() {
        let videos = vec![
            ("x".to_string(), BackgroundDescriptor(vec![1.0])),
            ("y".to_string(), BackgroundDescriptor(vec![2.0])),
        ];
        assert!(partition_backgrounds(&videos, 0, 0).is_err());
        assert!(partition_backgrounds(&videos, 3, 0).is_err());
        let ragged = vec![
            ("x".to_string(), BackgroundDescriptor(vec![1.0])),
            ("y".to_string(), BackgroundDescriptor(vec![2.0, 3.0])),
        ];
        assert!(partition_backgrounds(&ragged, 1, 0).is_err());
        let bad = vec![("x".to_string(), BackgroundDescriptor(vec![f64::NAN]))];
        assert!(partition_backgrounds(&bad, 1, 0).is_err());
    }

    #[test]
    fn kmeans_identical_points_still_fill_every_subset() {
        let videos: Vec<(String, BackgroundDescriptor)> = (0..6)
            .map(|i| (format!("v{i}"), BackgroundDescriptor(vec![1.0, 1.0])))
            .collect();
        let a = partition_backgrounds(&videos, 3, 5).unwrap();
        for s in 0..3 {
            assert!(!a.members(s).is_empty(), "subset {s} is empty");
        }
    }

    proptest! {
        #[test]
        fn kmeans_partition_invariants(
            n in 1usize..25,
            m_raw in 1usize..6,
            seed in 0u64..500,
        ) {
            let m = m_raw.min(n);
            let videos: Vec<(String, BackgroundDescriptor)> = (0..n)
                .map(|i| {
                    let v = vec![
                        ((i * 13 + 5) % 17) as f64 + seed as f64 % 3.0,
                        ((i * 7 + 2) % 11) as f64,
                    ];
                    (format!("v{i}"), BackgroundDescriptor(v))
                })
                .collect();
            let a = partition_backgrounds(&videos, m, seed).unwrap();
            prop_assert_eq!(a.videos.len(), n);
            prop_assert_eq!(a.centroids.len(), m);
            // Every video in range, every subset non-empty.
            for &(_, s) in &a.videos {
                prop_assert!(s < m);
            }
            for s in 0..m {
                prop_assert!(!a.members(s).is_empty());
            }
            let again = partition_backgrounds(&videos, m, seed).unwrap();
            prop_assert_eq!(a, again);
        }
    }
}
