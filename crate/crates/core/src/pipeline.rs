//! Embeddings → packed binary codes.

use crate::data::EmbeddingSet;
use crate::error::{Error, Result};
use crate::index::{pack_codes, BinaryCodeMatrix};
use crate::net::{binarize, forward_batch, Checkpoint, ModelParams};
use crate::par::Execution;

const ENCODE_CHUNK: usize = 256;

/// Runs the network over every sample and packs `sgn(pre_tanh)`; the sign
/// of the pre-activation equals the sign of its tanh.
pub fn encode_set(
    params: &ModelParams,
    set: &EmbeddingSet,
    normalize_inputs: bool,
    exec: Execution,
) -> Result<BinaryCodeMatrix> {
    let (n, k, _) = params.dims();
    if set.concat_dim() != n {
        return Err(Error::DimensionMismatch {
            what: "embedding width vs checkpoint",
            expected: n,
            found: set.concat_dim(),
        });
    }
    let count = set.sample_count();
    let chunks = exec.try_map(count.div_ceil(ENCODE_CHUNK), |c| {
        let start = c * ENCODE_CHUNK;
        let end = (start + ENCODE_CHUNK).min(count);
        let trace = forward_batch(params, set.concat_rows(start, end, normalize_inputs))?;
        trace
            .pre_tanh
            .rows()
            .into_iter()
            .map(|row| binarize(row.as_slice().expect("standard layout")))
            .collect::<Result<Vec<_>>>()
    })?;
    let signs: Vec<Vec<i8>> = chunks.into_iter().flatten().collect();
    pack_codes(k, &signs, set.ids().to_vec())
}

pub fn encode_with_checkpoint(ckpt: &Checkpoint, set: &EmbeddingSet, exec: Execution) -> Result<BinaryCodeMatrix> {
    encode_set(&ckpt.params, set, ckpt.normalize_inputs, exec)
}
