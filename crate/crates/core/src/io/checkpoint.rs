//! Binary model checkpoints.
//!
//! Layout: magic `AFCK`, u32 version, a length-prefixed JSON blob holding
//! the model configuration, a u64 tensor count, then each tensor as a
//! length-prefixed name, u64 rows, u64 cols, and row-major f64 values.
//! The tensor list matches [`FusionParams::named_tensors`] order exactly,
//! position table last, so a checkpoint restores a bit-identical model.

use std::path::Path;

use ndarray::Array2;

use super::{push_string, read_file, write_file, ByteReader};
use crate::error::{Error, Result};
use crate::fusion::{FusionConfig, FusionParams};

const MAGIC: &[u8; 4] = b"AFCK";
const VERSION: u32 = 1;

pub fn write_checkpoint(path: &Path, params: &FusionParams) -> Result<()> {
    let config_json = serde_json::to_string(&params.config)
        .map_err(|e| Error::InvalidInput(format!("could not encode configuration: {e}")))?;
    let tensors = params.named_tensors();

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    push_string(&mut out, &config_json);
    out.extend_from_slice(&(tensors.len() as u64).to_le_bytes());
    for (name, tensor) in &tensors {
        push_string(&mut out, name);
        out.extend_from_slice(&(tensor.nrows() as u64).to_le_bytes());
        out.extend_from_slice(&(tensor.ncols() as u64).to_le_bytes());
        for &v in tensor.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    write_file(path, &out)
}

pub fn read_checkpoint(path: &Path) -> Result<FusionParams> {
    let buf = read_file(path)?;
    let mut r = ByteReader::new(&buf, path);
    r.tag(MAGIC, "checkpoint magic")?;
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(r.err(format!("unsupported checkpoint version {version}")));
    }
    let config_json = r.string("configuration")?;
    let config: FusionConfig = serde_json::from_str(&config_json)
        .map_err(|e| r.err(format!("malformed configuration: {e}")))?;

    let n_tensors = r.count("tensor count", 8)?;
    let mut tensors: Vec<(String, Array2<f64>)> = Vec::with_capacity(n_tensors);
    for _ in 0..n_tensors {
        let name = r.string("tensor name")?;
        let rows = r.count(&format!("{name} rows"), 8)?;
        let cols = r.count(&format!("{name} columns"), 8)?;
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| r.err(format!("{name} dimensions overflow")))?;
        let values = r.f64s(n, &name)?;
        let tensor = Array2::from_shape_vec((rows, cols), values)
            .map_err(|e| r.err(format!("{name} shape: {e}")))?;
        tensors.push((name, tensor));
    }
    r.finish()?;
    FusionParams::from_named_tensors(&config, &tensors)
}
