//! EMBX: the canonical embedding file.
//!
//! ```text
//! "EMBX" | version u32 = 1 | sample_count u64 | modality_count u32
//!        | dim u32 × modality_count | category_count u32
//!        | features f32 LE, modality-major then row-major
//!        | labels u8 (0/1), sample_count × category_count
//!        | ids u64 LE × sample_count
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::EmbeddingSet;
use crate::binio::{put_f32s, put_u32, put_u64, put_u64s, usize_from, LeReader};
use crate::error::FormatError;

const MAGIC: [u8; 4] = *b"EMBX";
const VERSION: u32 = 1;

pub fn write_embeddings<W: Write>(set: &EmbeddingSet, mut w: W) -> Result<(), FormatError> {
    set.validate()?;
    w.write_all(&MAGIC)?;
    put_u32(&mut w, VERSION)?;
    put_u64(&mut w, set.sample_count() as u64)?;
    put_u32(&mut w, u32_field(set.modality_dims().len(), "modality_count")?)?;
    for &d in set.modality_dims() {
        put_u32(&mut w, u32_field(d, "modality dim")?)?;
    }
    put_u32(&mut w, u32_field(set.category_count(), "category_count")?)?;
    for feat in &set.features {
        // Standard layout is guaranteed for matrices we built; copy otherwise.
        match feat.as_slice() {
            Some(s) => put_f32s(&mut w, s)?,
            None => put_f32s(&mut w, &feat.iter().copied().collect::<Vec<_>>())?,
        }
    }
    let labels: Vec<u8> = set.labels.iter().copied().collect();
    w.write_all(&labels)?;
    put_u64s(&mut w, set.ids())?;
    w.flush()?;
    Ok(())
}

pub fn read_embeddings<R: Read>(r: R) -> Result<EmbeddingSet, FormatError> {
    let mut r = LeReader::new(r);
    r.magic(MAGIC)?;
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion {
            format: "EMBX",
            found: version,
        });
    }
    let count = usize_from(r.u64("sample_count")?, "sample_count")?;
    let modality_count = r.u32("modality_count")? as usize;
    let mut dims = Vec::with_capacity(modality_count.min(64));
    for _ in 0..modality_count {
        dims.push(r.u32("modality dim")? as usize);
    }
    let categories = r.u32("category_count")? as usize;
    let mut features = Vec::with_capacity(dims.len());
    for &d in &dims {
        let len = count.checked_mul(d).ok_or(FormatError::Truncated {
            what: "feature payload",
        })?;
        let vals = r.f32s(len, "feature payload")?;
        features.push(Array2::from_shape_vec((count, d), vals).expect("length checked"));
    }
    let label_len = count
        .checked_mul(categories)
        .ok_or(FormatError::Truncated { what: "label payload" })?;
    let labels = r.bytes(label_len, "label payload")?;
    let labels = Array2::from_shape_vec((count, categories), labels).expect("length checked");
    let ids = r.u64s(count, "ids payload")?;
    r.finish("EMBX")?;
    EmbeddingSet::new(dims, features, labels, ids)
}

pub fn write_embedding_file(set: &EmbeddingSet, path: impl AsRef<Path>) -> Result<(), FormatError> {
    // Validate before touching the filesystem so a bad set leaves no partial file.
    set.validate()?;
    let file = File::create(path)?;
    write_embeddings(set, BufWriter::new(file))
}

pub fn read_embedding_file(path: impl AsRef<Path>) -> Result<EmbeddingSet, FormatError> {
    read_embeddings(BufReader::new(File::open(path)?))
}

fn u32_field(v: usize, what: &str) -> Result<u32, FormatError> {
    u32::try_from(v).map_err(|_| FormatError::Inconsistent(format!("{what} {v} does not fit in u32")))
}
