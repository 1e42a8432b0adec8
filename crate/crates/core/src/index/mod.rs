//! Bit-packed binary codes and exact Hamming-distance search.
//!
//! Bit `i` of a code lives in word `i / 64`, bit `i % 64`; a set bit means
//! `+1`. Padding bits past `k` in the last word are always zero so a plain
//! XOR + popcount over whole words gives the distance.

mod codefile;

use std::collections::HashSet;

use crate::error::{Error, FormatError, Result};
use crate::par::Execution;

pub use codefile::{read_code_file, read_codes, write_code_file, write_codes};

pub fn words_for(k: usize) -> usize {
    k.div_ceil(64)
}

fn pack_signs(signs: &[i8], out: &mut [u64]) -> Result<()> {
    for (i, &s) in signs.iter().enumerate() {
        match s {
            1 => out[i / 64] |= 1 << (i % 64),
            -1 => {}
            other => {
                return Err(Error::InvalidArgument(format!(
                    "code component {i} is {other}, expected +1 or -1"
                )))
            }
        }
    }
    Ok(())
}

fn padding_mask(k: usize) -> u64 {
    match k % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

/// Popcount of XOR across words.
#[inline]
pub fn distance_words(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

/// One packed k-bit code.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PackedCode {
    k: usize,
    words: Vec<u64>,
}

impl PackedCode {
    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        if signs.is_empty() {
            return Err(Error::InvalidArgument("code length must be positive".into()));
        }
        let mut words = vec![0u64; words_for(signs.len())];
        pack_signs(signs, &mut words)?;
        Ok(Self { k: signs.len(), words })
    }

    pub fn from_words(k: usize, words: Vec<u64>) -> Result<Self> {
        if k == 0 || words.len() != words_for(k) {
            return Err(Error::DimensionMismatch {
                what: "code words",
                expected: words_for(k),
                found: words.len(),
            });
        }
        if words[words.len() - 1] & !padding_mask(k) != 0 {
            return Err(Error::InvalidArgument("padding bits past k must be zero".into()));
        }
        Ok(Self { k, words })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn bit(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn to_signs(&self) -> Vec<i8> {
        (0..self.k).map(|i| if self.bit(i) { 1 } else { -1 }).collect()
    }
}

pub fn hamming_distance(a: &PackedCode, b: &PackedCode) -> Result<u32> {
    if a.k != b.k {
        return Err(Error::DimensionMismatch {
            what: "code length",
            expected: a.k,
            found: b.k,
        });
    }
    Ok(distance_words(&a.words, &b.words))
}

/// `count` codes of `k` bits stored contiguously, with one id per code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryCodeMatrix {
    k: usize,
    words: Vec<u64>,
    ids: Vec<u64>,
}

impl BinaryCodeMatrix {
    pub fn new(k: usize, words: Vec<u64>, ids: Vec<u64>) -> Result<Self, FormatError> {
        if k == 0 {
            return Err(FormatError::Inconsistent("code length must be positive".into()));
        }
        let wpc = words_for(k);
        if words.len() != ids.len() * wpc {
            return Err(FormatError::Inconsistent(format!(
                "{} words for {} codes of {k} bits",
                words.len(),
                ids.len()
            )));
        }
        let mask = padding_mask(k);
        if let Some(i) = words.chunks_exact(wpc).position(|c| c[wpc - 1] & !mask != 0) {
            return Err(FormatError::Inconsistent(format!("code {i} has non-zero padding bits")));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        if let Some(&dup) = ids.iter().find(|&&id| !seen.insert(id)) {
            return Err(FormatError::DuplicateId(dup));
        }
        Ok(Self { k, words, ids })
    }

    pub fn empty(k: usize) -> Self {
        Self {
            k,
            words: Vec::new(),
            ids: Vec::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn words_per_code(&self) -> usize {
        words_for(self.k)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn code_words(&self, i: usize) -> &[u64] {
        let w = self.words_per_code();
        &self.words[i * w..(i + 1) * w]
    }

    pub fn code(&self, i: usize) -> PackedCode {
        PackedCode {
            k: self.k,
            words: self.code_words(i).to_vec(),
        }
    }

    pub fn position_of(&self, id: u64) -> Option<usize> {
        self.ids.iter().position(|&x| x == id)
    }

    pub fn unpack(&self) -> Vec<Vec<i8>> {
        (0..self.len()).map(|i| self.code(i).to_signs()).collect()
    }
}

/// Packs ±1 sign vectors of length `k`.
pub fn pack_codes<S: AsRef<[i8]>>(k: usize, codes: &[S], ids: Vec<u64>) -> Result<BinaryCodeMatrix> {
    if codes.len() != ids.len() {
        return Err(Error::DimensionMismatch {
            what: "ids",
            expected: codes.len(),
            found: ids.len(),
        });
    }
    let wpc = words_for(k);
    let mut words = vec![0u64; codes.len() * wpc];
    for (i, code) in codes.iter().enumerate() {
        let code = code.as_ref();
        if code.len() != k {
            return Err(Error::DimensionMismatch {
                what: "code length",
                expected: k,
                found: code.len(),
            });
        }
        pack_signs(code, &mut words[i * wpc..(i + 1) * wpc])?;
    }
    Ok(BinaryCodeMatrix::new(k, words, ids)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Hit {
    pub id: u64,
    pub distance: u32,
}

/// Neighbors ordered by `(distance, id)` ascending.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchResult {
    pub hits: Vec<Hit>,
}

impl SearchResult {
    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.hits.iter().map(|h| h.id)
    }
}

fn scored(index: &BinaryCodeMatrix, query: &[u64]) -> Vec<(u32, u64)> {
    (0..index.len())
        .map(|i| (distance_words(index.code_words(i), query), index.ids[i]))
        .collect()
}

fn into_result(pairs: Vec<(u32, u64)>) -> SearchResult {
    SearchResult {
        hits: pairs.into_iter().map(|(distance, id)| Hit { id, distance }).collect(),
    }
}

fn check_k(index: &BinaryCodeMatrix, k: usize) -> Result<()> {
    if index.k != k {
        return Err(Error::DimensionMismatch {
            what: "code length",
            expected: index.k,
            found: k,
        });
    }
    Ok(())
}

/// Exact `topk` nearest codes; ties go to the smaller id.
pub fn search_topk(index: &BinaryCodeMatrix, query: &PackedCode, topk: usize) -> Result<SearchResult> {
    if topk == 0 {
        return Err(Error::InvalidArgument("topk must be at least 1".into()));
    }
    check_k(index, query.k)?;
    if index.is_empty() {
        return Err(Error::EmptyIndex);
    }
    let mut pairs = scored(index, &query.words);
    // (distance, id) keys are unique, so unstable selection is deterministic.
    if topk < pairs.len() {
        pairs.select_nth_unstable(topk - 1);
        pairs.truncate(topk);
    }
    pairs.sort_unstable();
    Ok(into_result(pairs))
}

/// Full ranking of the index for every query, in query order.
pub fn rank_all(index: &BinaryCodeMatrix, queries: &BinaryCodeMatrix, exec: Execution) -> Result<Vec<SearchResult>> {
    check_k(index, queries.k)?;
    Ok(exec.map(queries.len(), |q| {
        let mut pairs = scored(index, queries.code_words(q));
        pairs.sort_unstable();
        into_result(pairs)
    }))
}
