//! CMHW model checkpoints.
//!
//! ```text
//! "CMHW" | version u32 = 1 | n u32 | k u32 | category_count u32 | seed u64
//!        | w_fusion, b_fusion, w_hash, b_hash, head w, head b   (f64 LE, row-major)
//!        | flags u32   (bit 0: inputs L2-normalized per modality)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::ModelParams;
use crate::binio::{put_f64s, put_u32, put_u64, LeReader};
use crate::error::FormatError;

const MAGIC: [u8; 4] = *b"CMHW";
const VERSION: u32 = 1;
const FLAG_NORMALIZE: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub seed: u64,
    pub normalize_inputs: bool,
}

pub fn write_checkpoint<W: Write>(ckpt: &Checkpoint, mut w: W) -> Result<(), FormatError> {
    ckpt.params
        .check_shapes()
        .map_err(|e| FormatError::Inconsistent(e.to_string()))?;
    let (n, k, c) = ckpt.params.dims();
    w.write_all(&MAGIC)?;
    put_u32(&mut w, VERSION)?;
    for d in [n, k, c] {
        put_u32(
            &mut w,
            u32::try_from(d).map_err(|_| FormatError::Inconsistent(format!("dimension {d} too large")))?,
        )?;
    }
    put_u64(&mut w, ckpt.seed)?;
    for t in ckpt.params.tensors() {
        put_f64s(&mut w, t)?;
    }
    put_u32(&mut w, if ckpt.normalize_inputs { FLAG_NORMALIZE } else { 0 })?;
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(r: R) -> Result<Checkpoint, FormatError> {
    let mut r = LeReader::new(r);
    r.magic(MAGIC)?;
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion {
            format: "CMHW",
            found: version,
        });
    }
    let n = r.u32("n")? as usize;
    let k = r.u32("k")? as usize;
    let c = r.u32("category_count")? as usize;
    if n == 0 || k == 0 || c == 0 {
        return Err(FormatError::Inconsistent(format!(
            "checkpoint dims must be positive (n={n}, k={k}, categories={c})"
        )));
    }
    let seed = r.u64("seed")?;
    let mut params = ModelParams::zeros(n, k, c);
    for t in params.tensors_mut() {
        let vals = r.f64s(t.len(), "tensor payload")?;
        t.copy_from_slice(&vals);
    }
    let flags = r.u32("flags")?;
    if flags & !FLAG_NORMALIZE != 0 {
        return Err(FormatError::Inconsistent(format!(
            "unknown checkpoint flags {flags:#x}"
        )));
    }
    r.finish("CMHW")?;
    Ok(Checkpoint {
        params,
        seed,
        normalize_inputs: flags & FLAG_NORMALIZE != 0,
    })
}

pub fn write_checkpoint_file(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<(), FormatError> {
    write_checkpoint(ckpt, BufWriter::new(File::create(path)?))
}

pub fn read_checkpoint_file(path: impl AsRef<Path>) -> Result<Checkpoint, FormatError> {
    read_checkpoint(BufReader::new(File::open(path)?))
}
