//! Binary feature bundle files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "AFBN"  magic
//! u32     format version (1)
//! string  video id (u32 length + UTF-8 bytes)
//! u64     frame count
//! u64     feature dimension
//! u64     clip length
//! u8      has-text flag
//! "VISL"  u64 rows, u64 cols, rows*cols f64
//! "AUDI"  u64 rows, u64 cols, rows*cols f64
//! "TEXT"  (only when has-text) u64 rows, u64 cols, rows*cols f64
//! "FACE"  u64 count, count bytes of 0/1
//! "BGRD"  u64 dim, dim f64
//! ```

use ndarray::Array2;
use std::path::Path;

use super::{push_string, read_file, write_file, ByteReader};
use crate::data::{BackgroundDescriptor, BundleManifest, FaceFlags, FeatureBundle};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"AFBN";
const VERSION: u32 = 1;

pub fn write_bundle(path: &Path, bundle: &FeatureBundle) -> Result<()> {
    bundle.validate()?;
    let m = &bundle.manifest;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    push_string(&mut out, &m.video_id);
    out.extend_from_slice(&(m.frame_count as u64).to_le_bytes());
    out.extend_from_slice(&(m.feature_dim as u64).to_le_bytes());
    out.extend_from_slice(&(m.clip_len as u64).to_le_bytes());
    out.push(u8::from(m.has_text));

    push_matrix(&mut out, b"VISL", &bundle.visual);
    push_matrix(&mut out, b"AUDI", &bundle.audio);
    if let Some(text) = &bundle.text {
        push_matrix(&mut out, b"TEXT", text);
    }
    out.extend_from_slice(b"FACE");
    out.extend_from_slice(&(bundle.face_flags.len() as u64).to_le_bytes());
    out.extend(bundle.face_flags.0.iter().map(|&p| u8::from(p)));
    out.extend_from_slice(b"BGRD");
    out.extend_from_slice(&(bundle.background.dim() as u64).to_le_bytes());
    for &v in &bundle.background.0 {
        out.extend_from_slice(&v.to_le_bytes());
    }
    write_file(path, &out)
}

fn push_matrix(out: &mut Vec<u8>, tag: &[u8; 4], m: &Array2<f64>) {
    out.extend_from_slice(tag);
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for &v in m.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn read_bundle(path: &Path) -> Result<FeatureBundle> {
    let buf = read_file(path)?;
    let mut r = ByteReader::new(&buf, path);
    r.tag(MAGIC, "bundle magic")?;
    let version = r.u32("format version")?;
    if version != VERSION {
        return Err(r.err(format!(
            "unsupported bundle version {version}, expected {VERSION}"
        )));
    }
    let video_id = r.string("video id")?;
    let frame_count = r.u64("frame count")? as usize;
    let feature_dim = r.u64("feature dimension")? as usize;
    let clip_len = r.u64("clip length")? as usize;
    let has_text = match r.u8("has-text flag")? {
        0 => false,
        1 => true,
        v => return Err(r.err(format!("has-text flag must be 0 or 1, got {v}"))),
    };
    let manifest = BundleManifest {
        video_id,
        frame_count,
        feature_dim,
        clip_len,
        has_text,
    };

    let visual = read_matrix(&mut r, b"VISL", "visual section")?;
    let audio = read_matrix(&mut r, b"AUDI", "audio section")?;
    let text = if has_text {
        Some(read_matrix(&mut r, b"TEXT", "text section")?)
    } else {
        None
    };
    r.tag(b"FACE", "face section")?;
    let n_flags = r.count("face flag count", 1)?;
    let mut flags = Vec::with_capacity(n_flags);
    for _ in 0..n_flags {
        match r.u8("face flag")? {
            0 => flags.push(false),
            1 => flags.push(true),
            v => return Err(r.err(format!("face flag must be 0 or 1, got {v}"))),
        }
    }
    r.tag(b"BGRD", "background section")?;
    let dim = r.count("background dimension", 8)?;
    let background = BackgroundDescriptor(r.f64s(dim, "background values")?);
    r.finish()?;

    let bundle = FeatureBundle {
        manifest,
        visual,
        audio,
        text,
        face_flags: FaceFlags(flags),
        background,
    };
    bundle
        .validate()
        .map_err(|e| Error::format(path.display().to_string(), 0, e.to_string()))?;
    Ok(bundle)
}

fn read_matrix(r: &mut ByteReader<'_>, tag: &[u8; 4], what: &str) -> Result<Array2<f64>> {
    r.tag(tag, what)?;
    let rows = r.u64(what)? as usize;
    let cols = r.u64(what)? as usize;
    let total = rows
        .checked_mul(cols)
        .ok_or_else(|| r.err(format!("{what}: {rows}x{cols} overflows")))?;
    // Bound the claimed size by the bytes actually present.
    let remaining = r.buf.len() - r.pos;
    if total.saturating_mul(8) > remaining {
        return Err(r.err(format!(
            "{what}: claims {rows}x{cols} values but only {remaining} bytes remain"
        )));
    }
    let data = r.f64s(total, what)?;
    Array2::from_shape_vec((rows, cols), data)
        .map_err(|e| r.err(format!("{what}: {e}")))
}
