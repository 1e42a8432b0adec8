//! CMHC code files.
//!
//! ```text
//! "CMHC" | version u32 = 1 | count u64 | k u32
//!        | packed words u64 LE, count × ceil(k/64) | ids u64 LE × count
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{words_for, BinaryCodeMatrix};
use crate::binio::{put_u32, put_u64, put_u64s, usize_from, LeReader};
use crate::error::FormatError;

const MAGIC: [u8; 4] = *b"CMHC";
const VERSION: u32 = 1;

pub fn write_codes<W: Write>(codes: &BinaryCodeMatrix, mut w: W) -> Result<(), FormatError> {
    w.write_all(&MAGIC)?;
    put_u32(&mut w, VERSION)?;
    put_u64(&mut w, codes.len() as u64)?;
    put_u32(
        &mut w,
        u32::try_from(codes.k()).map_err(|_| FormatError::Inconsistent("k too large".into()))?,
    )?;
    put_u64s(&mut w, codes.words())?;
    put_u64s(&mut w, codes.ids())?;
    w.flush()?;
    Ok(())
}

pub fn read_codes<R: Read>(r: R) -> Result<BinaryCodeMatrix, FormatError> {
    let mut r = LeReader::new(r);
    r.magic(MAGIC)?;
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion {
            format: "CMHC",
            found: version,
        });
    }
    let count = usize_from(r.u64("count")?, "count")?;
    let k = r.u32("k")? as usize;
    if k == 0 {
        return Err(FormatError::Inconsistent("code length must be positive".into()));
    }
    let n_words = count
        .checked_mul(words_for(k))
        .ok_or(FormatError::Truncated { what: "packed words" })?;
    let words = r.u64s(n_words, "packed words")?;
    let ids = r.u64s(count, "ids payload")?;
    r.finish("CMHC")?;
    BinaryCodeMatrix::new(k, words, ids)
}

pub fn write_code_file(codes: &BinaryCodeMatrix, path: impl AsRef<Path>) -> Result<(), FormatError> {
    write_codes(codes, BufWriter::new(File::create(path)?))
}

pub fn read_code_file(path: impl AsRef<Path>) -> Result<BinaryCodeMatrix, FormatError> {
    read_codes(BufReader::new(File::open(path)?))
}
