//! CSV label and prediction tracks.
//!
//! Every file opens with a self-describing comment line
//! `# format=affect-track v=1 kind=<labels|predictions> track=<key>`,
//! followed by a column header and one row per frame or clip. The first
//! column is the 0-based row index and must be consecutive.

use ndarray::Array2;
use std::fmt::Write as _;
use std::path::Path;

use super::{read_file, slug, write_file};
use crate::data::{LabelData, LabelTrack, PredictionData, PredictionTrack};
use crate::error::{Error, Result};
use crate::track::Track;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Labels,
    Predictions,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Labels => "labels",
            Kind::Predictions => "predictions",
        }
    }
}

fn preamble(kind: Kind, track: Track) -> String {
    format!(
        "# format=affect-track v=1 kind={} track={}\n",
        kind.name(),
        track.key()
    )
}

fn index_column(track: Track) -> &'static str {
    if track.is_frame_wise() {
        "frame"
    } else {
        "clip"
    }
}

fn label_header(track: Track) -> String {
    let idx = index_column(track);
    match track {
        Track::Va => format!("{idx},valence,arousal"),
        Track::Expr => format!("{idx},expression"),
        Track::Au => {
            let cols: Vec<String> = track.class_names().iter().map(|n| slug(n)).collect();
            format!("{idx},{}", cols.join(","))
        }
        Track::Ce => format!("{idx},class"),
        Track::Emi => {
            let cols: Vec<String> = track.class_names().iter().map(|n| slug(n)).collect();
            format!("{idx},{}", cols.join(","))
        }
    }
}

fn prediction_header(track: Track) -> String {
    let idx = index_column(track);
    match track {
        Track::Va => format!("{idx},valence,arousal"),
        Track::Expr | Track::Ce => {
            let cols: Vec<String> = track
                .class_names()
                .iter()
                .map(|n| format!("p_{}", slug(n)))
                .collect();
            format!("{idx},{},decision", cols.join(","))
        }
        Track::Au => {
            let probs: Vec<String> = track
                .class_names()
                .iter()
                .map(|n| format!("p_{}", slug(n)))
                .collect();
            let decisions: Vec<String> = track
                .class_names()
                .iter()
                .map(|n| format!("d_{}", slug(n)))
                .collect();
            format!("{idx},{},{}", probs.join(","), decisions.join(","))
        }
        Track::Emi => {
            let cols: Vec<String> = track.class_names().iter().map(|n| slug(n)).collect();
            format!("{idx},{}", cols.join(","))
        }
    }
}

pub fn write_labels(path: &Path, labels: &LabelTrack) -> Result<()> {
    labels.validate()?;
    let track = labels.track();
    let mut out = preamble(Kind::Labels, track);
    out.push_str(&label_header(track));
    out.push('\n');
    match &labels.data {
        LabelData::Va(m) => {
            for (i, row) in m.rows().into_iter().enumerate() {
                writeln!(out, "{i},{},{}", row[0], row[1]).expect("string write");
            }
        }
        LabelData::Expr(v) => {
            for (i, c) in v.iter().enumerate() {
                writeln!(out, "{i},{c}").expect("string write");
            }
        }
        LabelData::Au(m) => {
            for (i, row) in m.rows().into_iter().enumerate() {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{i},{}", cells.join(",")).expect("string write");
            }
        }
        LabelData::Ce(v) => {
            for (i, c) in v.iter().enumerate() {
                writeln!(out, "{i},{c}").expect("string write");
            }
        }
        LabelData::Emi(m) => {
            for (i, row) in m.rows().into_iter().enumerate() {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{i},{}", cells.join(",")).expect("string write");
            }
        }
    }
    write_file(path, out.as_bytes())
}

pub fn write_predictions(path: &Path, preds: &PredictionTrack) -> Result<()> {
    let track = preds.track();
    let mut out = preamble(Kind::Predictions, track);
    out.push_str(&prediction_header(track));
    out.push('\n');
    match &preds.data {
        PredictionData::Va(m) => {
            for (i, row) in m.rows().into_iter().enumerate() {
                writeln!(out, "{i},{},{}", row[0], row[1]).expect("string write");
            }
        }
        PredictionData::Expr { probs, decisions } | PredictionData::Ce { probs, decisions } => {
            for i in 0..probs.nrows() {
                let cells: Vec<String> = probs.row(i).iter().map(|v| v.to_string()).collect();
                writeln!(out, "{i},{},{}", cells.join(","), decisions[i]).expect("string write");
            }
        }
        PredictionData::Au { probs, decisions } => {
            for i in 0..probs.nrows() {
                let p: Vec<String> = probs.row(i).iter().map(|v| v.to_string()).collect();
                let d: Vec<String> = decisions.row(i).iter().map(|v| v.to_string()).collect();
                writeln!(out, "{i},{},{}", p.join(","), d.join(",")).expect("string write");
            }
        }
        PredictionData::Emi(m) => {
            for (i, row) in m.rows().into_iter().enumerate() {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{i},{}", cells.join(",")).expect("string write");
            }
        }
    }
    write_file(path, out.as_bytes())
}

/// Per-line parsing context so every diagnostic carries the path and the
/// 1-based line number.
struct LineParser<'a> {
    path: &'a Path,
    line_no: usize,
}

impl LineParser<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::format(self.path.display().to_string(), self.line_no, message.into())
    }

    fn f64(&self, field: &str, name: &str) -> Result<f64> {
        let v: f64 = field
            .parse()
            .map_err(|_| self.err(format!("{name}: cannot parse {field:?} as a number")))?;
        if !v.is_finite() {
            return Err(self.err(format!("{name}: non-finite value {field:?}")));
        }
        Ok(v)
    }

    fn i8(&self, field: &str, name: &str) -> Result<i8> {
        field
            .parse()
            .map_err(|_| self.err(format!("{name}: cannot parse {field:?} as an integer")))
    }

    fn u8_in(&self, field: &str, name: &str, limit: usize) -> Result<u8> {
        let v: u8 = field
            .parse()
            .map_err(|_| self.err(format!("{name}: cannot parse {field:?} as an integer")))?;
        if (v as usize) >= limit {
            return Err(self.err(format!("{name}: {v} out of range 0..{limit}")));
        }
        Ok(v)
    }

    fn prob(&self, field: &str, name: &str) -> Result<f64> {
        let v = self.f64(field, name)?;
        if !(0.0..=1.0).contains(&v) {
            return Err(self.err(format!("{name}: probability {v} outside [0, 1]")));
        }
        Ok(v)
    }
}

struct TrackFile<'a> {
    track: Track,
    /// (1-based line number, comma-split fields) for each data row.
    rows: Vec<(usize, Vec<&'a str>)>,
}

fn parse_track_file<'a>(path: &'a Path, content: &'a str, expect: Kind) -> Result<TrackFile<'a>> {
    let fail = |line: usize, msg: String| Error::format(path.display().to_string(), line, msg);
    if content.contains('\r') {
        return Err(fail(0, "carriage returns are not part of this format".into()));
    }
    let mut lines = content.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| fail(1, "empty file, expected a format line".into()))?;
    let tokens: Vec<&str> = first.split(' ').collect();
    let [hash, fmt, version, kind_tok, track_tok] = tokens.as_slice() else {
        return Err(fail(1, format!("malformed format line {first:?}")));
    };
    if *hash != "#" || *fmt != "format=affect-track" {
        return Err(fail(1, format!("not an affect-track file: {first:?}")));
    }
    if *version != "v=1" {
        return Err(fail(1, format!("unsupported version {version:?}, expected v=1")));
    }
    let kind = match *kind_tok {
        "kind=labels" => Kind::Labels,
        "kind=predictions" => Kind::Predictions,
        other => return Err(fail(1, format!("unknown kind {other:?}"))),
    };
    if kind != expect {
        return Err(fail(
            1,
            format!("file holds {}, expected {}", kind.name(), expect.name()),
        ));
    }
    let track_key = track_tok
        .strip_prefix("track=")
        .ok_or_else(|| fail(1, format!("malformed track token {track_tok:?}")))?;
    let track = Track::parse_key(track_key)
        .ok_or_else(|| fail(1, format!("unknown track {track_key:?}")))?;

    let (_, header) = lines
        .next()
        .ok_or_else(|| fail(2, "missing column header".into()))?;
    let expected_header = match kind {
        Kind::Labels => label_header(track),
        Kind::Predictions => prediction_header(track),
    };
    if header != expected_header {
        return Err(fail(
            2,
            format!("column header {header:?} does not match {expected_header:?}"),
        ));
    }

    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            return Err(fail(line_no, "blank line inside data section".into()));
        }
        rows.push((line_no, line.split(',').collect::<Vec<&str>>()));
    }
    Ok(TrackFile { track, rows })
}

fn check_row_shape(p: &LineParser<'_>, fields: &[&str], want: usize, row: usize) -> Result<()> {
    if fields.len() != want {
        return Err(p.err(format!("expected {want} fields, found {}", fields.len())));
    }
    let idx: usize = fields[0]
        .parse()
        .map_err(|_| p.err(format!("row index: cannot parse {:?}", fields[0])))?;
    if idx != row {
        return Err(p.err(format!("row index {idx}, expected consecutive index {row}")));
    }
    Ok(())
}

pub fn read_labels(path: &Path) -> Result<LabelTrack> {
    let buf = read_file(path)?;
    let content = String::from_utf8(buf)
        .map_err(|_| Error::format(path.display().to_string(), 0, "file is not valid UTF-8"))?;
    let file = parse_track_file(path, &content, Kind::Labels)?;
    let n = file.rows.len();
    let data = match file.track {
        Track::Va => {
            let mut m = Array2::zeros((n, 2));
            for (row, (line_no, fields)) in file.rows.iter().enumerate() {
                let p = LineParser { path, line_no: *line_no };
                check_row_shape(&p, fields, 3, row)?;
                for (j, name) in ["valence", "arousal"].iter().enumerate() {
                    let v = p.f64(fields[j + 1], name)?;
                    if !(-1.0..=1.0).contains(&v) && v != crate::data::VA_INVALID {
                        return Err(p.err(format!(
                            "{name}: {v} outside [-1, 1] and not the -5 sentinel"
                        )));
                    }
                    m[(row, j)] = v;
                }
            }
            LabelData::Va(m)
        }
        Track::Expr => {
            let mut v = Vec::with_capacity(n);
            for (row, (line_no, fields)) in file.rows.iter().enumerate() {
                let p = LineParser { path, line_no: *line_no };
                check_row_shape(&p, fields, 2, row)?;
                let c = p.i8(fields[1], "expression")?;
                if !(0..8).contains(&c) && c != -1 {
                    return Err(p.err(format!("expression: {c} outside {{0..7, -1}}")));
                }
                v.push(c);
            }
            LabelData::Expr(v)
        }
        Track::Au => {
            let mut m = Array2::zeros((n, 12));
            for (row, (line_no, fields)) in file.rows.iter().enumerate() {
                let p = LineParser { path, line_no: *line_no };
                check_row_shape(&p, fields, 13, row)?;
                for j in 0..12 {
                    let v = p.i8(fields[j + 1], "action unit")?;
                    if !matches!(v, 0 | 1 | -1) {
                        return Err(p.err(format!("action unit: {v} outside {{0, 1, -1}}")));
                    }
                    m[(row, j)] = v;
                }
            }
            LabelData::Au(m)
        }
        Track::Ce => {
            let mut v = Vec::with_capacity(n);
            for (row, (line_no, fields)) in file.rows.iter().enumerate() {
                let p = LineParser { path, line_no: *line_no };
                check_row_shape(&p, fields, 2, row)?;
                let c = p.i8(fields[1], "class")?;
                if !(0..7).contains(&c) {
                    return Err(p.err(format!("class: {c} outside {{0..6}}")));
                }
                v.push(c);
            }
            LabelData::Ce(v)
        }
        Track::Emi => {
            let mut m = Array2::zeros((n, 6));
            for (row, (line_no, fields)) in file.rows.iter().enumerate() {
                let p = LineParser { path, line_no: *line_no };
                check_row_shape(&p, fields, 7, row)?;
                for j in 0..6 {
                    let v = p.f64(fields[j + 1], "intensity")?;
                    if !(0.0..=1.0).contains(&v) {
                        return Err(p.err(format!("intensity: {v} outside [0, 1]")));
                    }
                    m[(row, j)] = v;
                }
            }
            LabelData::Emi(m)
        }
    };
    let labels = LabelTrack { data };
    labels
        .validate()
        .map_err(|e| Error::format(path.display().to_string(), 0, e.to_string()))?;
    Ok(labels)
}

pub fn read_predictions(path: &Path) -> Result<PredictionTrack> {
    let buf = read_file(path)?;
    let content = String::from_utf8(buf)
        .map_err(|_| Error::format(path.display().to_string(), 0, "file is not valid UTF-8"))?;
    let file = parse_track_file(path, &content, Kind::Predictions)?;
    let n = file.rows.len();
    let data = match file.track {
        Track::Va => {
            let mut m = Array2::zeros((n, 2));
            for (row, (line_no, fields)) in file.rows.iter().enumerate() {
                let p = LineParser { path, line_no: *line_no };
                check_row_shape(&p, fields, 3, row)?;
                m[(row, 0)] = p.f64(fields[1], "valence")?;
                m[(row, 1)] = p.f64(fields[2], "arousal")?;
            }
            PredictionData::Va(m)
        }
        Track::Expr | Track::Ce => {
            let k = file.track.class_count();
            let mut probs = Array2::zeros((n, k));
            let mut decisions = Vec::with_capacity(n);
            for (row, (line_no, fields)) in file.rows.iter().enumerate() {
                let p = LineParser { path, line_no: *line_no };
                check_row_shape(&p, fields, k + 2, row)?;
                let mut sum = 0.0;
                for j in 0..k {
                    let v = p.prob(fields[j + 1], "class probability")?;
                    probs[(row, j)] = v;
                    sum += v;
                }
                if (sum - 1.0).abs() > 1e-6 {
                    return Err(p.err(format!(
                        "class probabilities sum to {sum}, expected 1 within 1e-6"
                    )));
                }
                decisions.push(p.u8_in(fields[k + 1], "decision", k)?);
            }
            if file.track == Track::Expr {
                PredictionData::Expr { probs, decisions }
            } else {
                PredictionData::Ce { probs, decisions }
            }
        }
        Track::Au => {
            let mut probs = Array2::zeros((n, 12));
            let mut decisions = Array2::zeros((n, 12));
            for (row, (line_no, fields)) in file.rows.iter().enumerate() {
                let p = LineParser { path, line_no: *line_no };
                check_row_shape(&p, fields, 25, row)?;
                for j in 0..12 {
                    probs[(row, j)] = p.prob(fields[j + 1], "unit probability")?;
                }
                for j in 0..12 {
                    decisions[(row, j)] = p.u8_in(fields[j + 13], "unit decision", 2)?;
                }
            }
            PredictionData::Au { probs, decisions }
        }
        Track::Emi => {
            let mut m = Array2::zeros((n, 6));
            for (row, (line_no, fields)) in file.rows.iter().enumerate() {
                let p = LineParser { path, line_no: *line_no };
                check_row_shape(&p, fields, 7, row)?;
                for j in 0..6 {
                    m[(row, j)] = p.f64(fields[j + 1], "intensity")?;
                }
            }
            PredictionData::Emi(m)
        }
    };
    Ok(PredictionTrack { data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use tempfile::tempdir;

    fn round_trip_labels(labels: &LabelTrack) {
        let dir = tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_labels(&a, labels).unwrap();
        let back = read_labels(&a).unwrap();
        assert_eq!(&back, labels);
        write_labels(&b, &back).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    fn round_trip_predictions(preds: &PredictionTrack) {
        let dir = tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_predictions(&a, preds).unwrap();
        let back = read_predictions(&a).unwrap();
        assert_eq!(&back, preds);
        write_predictions(&b, &back).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn label_round_trips() {
        round_trip_labels(&LabelTrack {
            data: LabelData::Va(array![[0.25, -0.5], [-5.0, -5.0], [1.0, 0.0]]),
        });
        round_trip_labels(&LabelTrack {
            data: LabelData::Expr(vec![0, 7, -1, 3]),
        });
        round_trip_labels(&LabelTrack {
            data: LabelData::Au(array![[1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0], [-1; 12]]),
        });
        round_trip_labels(&LabelTrack {
            data: LabelData::Ce(vec![0, 6, 3]),
        });
        round_trip_labels(&LabelTrack {
            data: LabelData::Emi(array![[0.0, 0.125, 0.25, 0.375, 0.5, 1.0]]),
        });
    }

    #[test]
    fn prediction_round_trips() {
        round_trip_predictions(
            &PredictionTrack::va_from_values(array![[0.1, -0.9], [2.5, -3.125]]).unwrap(),
        );
        let mut probs = Array2::from_elem((3, 8), 0.1);
        for i in 0..3 {
            probs[(i, i)] = 0.3;
        }
        round_trip_predictions(&PredictionTrack::expr_from_probs(probs).unwrap());
        let au = Array2::from_shape_fn((4, 12), |(i, j)| (i * 12 + j) as f64 / 48.0);
        round_trip_predictions(&PredictionTrack::au_from_probs(au).unwrap());
        let mut ce = Array2::from_elem((2, 7), 0.1);
        ce.column_mut(4).mapv_inplace(|_| 0.4);
        round_trip_predictions(&PredictionTrack::ce_from_probs(ce).unwrap());
        round_trip_predictions(
            &PredictionTrack::emi_from_values(array![[0.0, 0.1, 0.2, 0.3, 0.4, 0.5]]).unwrap(),
        );
    }

    #[test]
    fn vote_decision_differing_from_argmax_survives_round_trip() {
        let mut probs = Array2::from_elem((1, 8), 0.1);
        probs[(0, 0)] = 0.24;
        probs[(0, 1)] = 0.16;
        let preds = PredictionTrack {
            data: PredictionData::Expr {
                probs,
                decisions: vec![1],
            },
        };
        round_trip_predictions(&preds);
    }

    #[test]
    fn shortest_float_formatting_is_stable() {
        // Values notorious for round-trip drift keep their bits.
        let vals = array![[0.1, 0.2], [1.0 / 3.0, 2.0 / 3.0], [-0.0, 1e-300]];
        let preds = PredictionTrack::va_from_values(vals).unwrap();
        round_trip_predictions(&preds);
    }

    #[test]
    fn diagnostics_name_path_line_and_problem() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let labels = LabelTrack {
            data: LabelData::Expr(vec![0, 1, 2]),
        };
        write_labels(&path, &labels).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();

        // Out-of-range class on data line 4 (row index 1).
        let bad = text.replace("\n1,1\n", "\n1,9\n");
        std::fs::write(&path, &bad).unwrap();
        let err = read_labels(&path).unwrap_err();
        match &err {
            Error::Format { path: p, line, message } => {
                assert!(p.contains("t.csv"));
                assert_eq!(*line, 4);
                assert!(message.contains('9'), "{message}");
            }
            other => panic!("expected format error, got {other}"),
        }

        // Non-numeric field.
        let bad = text.replace("\n1,1\n", "\n1,x\n");
        std::fs::write(&path, &bad).unwrap();
        assert!(read_labels(&path).unwrap_err().to_string().contains("\"x\""));

        // Broken row indexing.
        let bad = text.replace("\n2,2\n", "\n5,2\n");
        std::fs::write(&path, &bad).unwrap();
        assert!(read_labels(&path)
            .unwrap_err()
            .to_string()
            .contains("consecutive"));

        // Wrong kind.
        assert!(read_predictions(&path)
            .unwrap_err()
            .to_string()
            .contains("labels"));

        // Tampered header.
        let bad = text.replace("frame,expression", "frame,expr");
        std::fs::write(&path, &bad).unwrap();
        assert!(read_labels(&path).unwrap_err().to_string().contains("header"));

        // Unsupported version.
        let bad = text.replace("v=1", "v=2");
        std::fs::write(&path, &bad).unwrap();
        assert!(read_labels(&path).unwrap_err().to_string().contains("version"));
    }

    #[test]
    fn prediction_validation_on_read() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let mut probs = Array2::from_elem((1, 8), 0.125);
        probs[(0, 2)] = 0.125;
        let preds = PredictionTrack::expr_from_probs(probs).unwrap();
        write_predictions(&path, &preds).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();

        // Probability out of range.
        let bad = text.replace("0,0.125,", "0,1.5,");
        std::fs::write(&path, &bad).unwrap();
        assert!(read_predictions(&path)
            .unwrap_err()
            .to_string()
            .contains("outside [0, 1]"));

        // Simplex broken.
        let bad = text.replacen("0.125", "0.5", 1);
        std::fs::write(&path, &bad).unwrap();
        assert!(read_predictions(&path)
            .unwrap_err()
            .to_string()
            .contains("sum"));

        // Decision out of range.
        let bad = text.trim_end().trim_end_matches('0').to_string() + "8\n";
        std::fs::write(&path, &bad).unwrap();
        assert!(read_predictions(&path)
            .unwrap_err()
            .to_string()
            .contains("out of range"));
    }

    #[test]
    fn header_self_description_matches_track() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("va.csv");
        let labels = LabelTrack {
            data: LabelData::Va(array![[0.5, 0.5]]),
        };
        write_labels(&path, &labels).unwrap();
        let first = std::fs::read_to_string(&path).unwrap();
        assert!(first.starts_with("# format=affect-track v=1 kind=labels track=va\n"));
        assert_eq!(read_labels(&path).unwrap().track(), Track::Va);
    }
}
