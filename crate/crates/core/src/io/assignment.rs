//! Text table for ensemble subset assignments.
//!
//! ```text
//! # format=affect-assignment v=1 m=<subsets>
//! [videos]
//! <video_id> <subset>
//! [centroids]
//! <subset> <c_0> <c_1> ...
//! ```
//!
//! Video order and centroid order are preserved exactly, so writing a
//! freshly read assignment reproduces the file byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use super::{read_file, write_file};
use crate::ensemble::SubsetAssignment;
use crate::error::{Error, Result};

pub fn write_assignment(path: &Path, assignment: &SubsetAssignment) -> Result<()> {
    let m = assignment.n_subsets();
    if m == 0 {
        return Err(Error::InvalidInput("assignment has no subsets".into()));
    }
    let dim = assignment.centroids[0].len();
    for (s, c) in assignment.centroids.iter().enumerate() {
        if c.len() != dim {
            return Err(Error::shape(format!("centroid {s} dimension"), dim, c.len()));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("centroid {s}")));
        }
    }
    for (id, s) in &assignment.videos {
        if id.is_empty() || id.contains(char::is_whitespace) || id.starts_with('[') {
            return Err(Error::InvalidInput(format!(
                "video id {id:?} cannot be stored: ids must be non-empty, \
                 without whitespace, and must not start with '['"
            )));
        }
        if *s >= m {
            return Err(Error::InvalidInput(format!(
                "video {id} assigned to subset {s}, but only {m} subsets exist"
            )));
        }
    }

    let mut out = format!("# format=affect-assignment v=1 m={m}\n[videos]\n");
    for (id, s) in &assignment.videos {
        writeln!(out, "{id} {s}").expect("string write");
    }
    out.push_str("[centroids]\n");
    for (s, c) in assignment.centroids.iter().enumerate() {
        let cells: Vec<String> = c.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{s} {}", cells.join(" ")).expect("string write");
    }
    write_file(path, out.as_bytes())
}

pub fn read_assignment(path: &Path) -> Result<SubsetAssignment> {
    let fail =
        |line: usize, msg: String| Error::format(path.display().to_string(), line, msg);
    let buf = read_file(path)?;
    let content = String::from_utf8(buf)
        .map_err(|_| fail(0, "file is not valid UTF-8".into()))?;
    if content.contains('\r') {
        return Err(fail(0, "carriage returns are not part of this format".into()));
    }
    let mut lines = content.lines().enumerate();

    let (_, first) = lines
        .next()
        .ok_or_else(|| fail(1, "empty file, expected a format line".into()))?;
    let m: usize = first
        .strip_prefix("# format=affect-assignment v=1 m=")
        .and_then(|rest| rest.parse().ok())
        .ok_or_else(|| fail(1, format!("malformed format line {first:?}")))?;
    if m == 0 {
        return Err(fail(1, "subset count must be at least 1".into()));
    }

    let (_, videos_header) = lines
        .next()
        .ok_or_else(|| fail(2, "missing [videos] section".into()))?;
    if videos_header != "[videos]" {
        return Err(fail(2, format!("expected [videos], found {videos_header:?}")));
    }

    let mut videos = Vec::new();
    let mut centroid_header_line = 0;
    for (idx, line) in lines.by_ref() {
        let line_no = idx + 1;
        if line == "[centroids]" {
            centroid_header_line = line_no;
            break;
        }
        let mut parts = line.split(' ');
        let (Some(id), Some(subset), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(fail(line_no, format!("expected \"<video_id> <subset>\", found {line:?}")));
        };
        let subset: usize = subset
            .parse()
            .map_err(|_| fail(line_no, format!("cannot parse subset index {subset:?}")))?;
        if subset >= m {
            return Err(fail(line_no, format!("subset {subset} out of range 0..{m}")));
        }
        videos.push((id.to_string(), subset));
    }
    if centroid_header_line == 0 {
        return Err(fail(0, "missing [centroids] section".into()));
    }

    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut dim = None;
    for (idx, line) in lines {
        let line_no = idx + 1;
        let mut parts = line.split(' ');
        let idx_tok = parts
            .next()
            .ok_or_else(|| fail(line_no, "empty centroid row".into()))?;
        let s: usize = idx_tok
            .parse()
            .map_err(|_| fail(line_no, format!("cannot parse centroid index {idx_tok:?}")))?;
        if s != centroids.len() {
            return Err(fail(
                line_no,
                format!("centroid index {s}, expected consecutive index {}", centroids.len()),
            ));
        }
        let mut c = Vec::new();
        for tok in parts {
            let v: f64 = tok
                .parse()
                .map_err(|_| fail(line_no, format!("cannot parse centroid value {tok:?}")))?;
            if !v.is_finite() {
                return Err(fail(line_no, format!("non-finite centroid value {tok:?}")));
            }
            c.push(v);
        }
        if c.is_empty() {
            return Err(fail(line_no, "centroid row has no values".into()));
        }
        match dim {
            None => dim = Some(c.len()),
            Some(d) if d != c.len() => {
                return Err(fail(
                    line_no,
                    format!("centroid has {} values, previous rows had {d}", c.len()),
                ))
            }
            _ => {}
        }
        centroids.push(c);
    }
    if centroids.len() != m {
        return Err(fail(
            0,
            format!("found {} centroid rows, header says m={m}", centroids.len()),
        ));
    }
    Ok(SubsetAssignment { videos, centroids })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn sample() -> SubsetAssignment {
        SubsetAssignment {
            videos: vec![
                ("vid-3".into(), 1),
                ("vid-1".into(), 0),
                ("vid-2".into(), 1),
            ],
            centroids: vec![vec![0.5, -1.25], vec![1.0 / 3.0, 2.0]],
        }
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let dir = tempdir().unwrap();
        let a = dir.path().join("a.txt");
        let b = dir.path().join("b.txt");
        write_assignment(&a, &sample()).unwrap();
        let back = read_assignment(&a).unwrap();
        assert_eq!(back, sample());
        write_assignment(&b, &back).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn write_rejects_unstorable_ids() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.txt");
        let mut bad = sample();
        bad.videos[0].0 = "has space".into();
        assert!(write_assignment(&path, &bad).is_err());
        bad.videos[0].0 = "".into();
        assert!(write_assignment(&path, &bad).is_err());
        bad.videos[0].0 = "[videos]".into();
        assert!(write_assignment(&path, &bad).is_err());
    }

    #[test]
    fn write_rejects_inconsistencies() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.txt");
        let mut bad = sample();
        bad.videos[0].1 = 5;
        assert!(write_assignment(&path, &bad).is_err());
        let mut ragged = sample();
        ragged.centroids[1] = vec![1.0];
        assert!(write_assignment(&path, &ragged).is_err());
    }

    #[test]
    fn read_diagnostics() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.txt");
        write_assignment(&path, &sample()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();

        let bad = text.replace("vid-1 0", "vid-1 7");
        std::fs::write(&path, &bad).unwrap();
        let err = read_assignment(&path).unwrap_err();
        match &err {
            Error::Format { line, message, .. } => {
                assert_eq!(*line, 4);
                assert!(message.contains("out of range"), "{message}");
            }
            other => panic!("expected format error, got {other}"),
        }

        // Renaming the centroids header makes its line unparseable as a
        // video row, which is where the diagnostic lands.
        let bad = text.replace("[centroids]", "[middles]");
        std::fs::write(&path, &bad).unwrap();
        assert!(read_assignment(&path)
            .unwrap_err()
            .to_string()
            .contains("middles"));

        // Dropping the section entirely is called out by name.
        let bad = text.replace("[centroids]\n", "");
        let bad = bad.lines().take(4).collect::<Vec<_>>().join("\n") + "\n";
        std::fs::write(&path, &bad).unwrap();
        assert!(read_assignment(&path)
            .unwrap_err()
            .to_string()
            .contains("centroids"));

        let bad = text.replace("m=2", "m=3");
        std::fs::write(&path, &bad).unwrap();
        assert!(read_assignment(&path)
            .unwrap_err()
            .to_string()
            .contains("centroid rows"));

        let bad = text.replace("1 0.3333333333333333 2", "2 0.3333333333333333 2");
        std::fs::write(&path, &bad).unwrap();
        assert!(read_assignment(&path)
            .unwrap_err()
            .to_string()
            .contains("consecutive"));
    }
}
