//! Training objective: per-label binary cross-entropy through a linear head
//! on the relaxed code, plus a quantization penalty pulling codes to ±1.
//!
//! ```text
//! classification = mean_s (1/C) Σ_j BCE(sigmoid(W_head·c_s + b_head)_j, y_sj)
//! quantization   = mean_s (1/k) Σ_i (1 − c_si²)
//! total          = classification + λ · quantization
//! ```

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::net::{backward_batch, forward_batch, sigmoid, standard, BatchTrace, ModelGrads, ModelParams};
use crate::par::Execution;

/// Rows per gradient chunk. Chunks are reduced in order, so results do not
/// depend on the number of worker threads.
pub const GRAD_CHUNK: usize = 32;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossTerms {
    pub classification: f64,
    pub quantization: f64,
    pub total: f64,
}

impl LossTerms {
    fn accumulate(&mut self, other: &LossTerms) {
        self.classification += other.classification;
        self.quantization += other.quantization;
    }

    fn finish(mut self, lambda_quant: f64) -> Self {
        self.total = self.classification + lambda_quant * self.quantization;
        self
    }
}

/// A borrowed minibatch: one row per sample.
#[derive(Clone, Copy, Debug)]
pub struct Batch<'a> {
    pub x: ArrayView2<'a, f64>,
    pub labels: ArrayView2<'a, u8>,
    pub ids: &'a [u64],
}

impl<'a> Batch<'a> {
    pub fn new(x: ArrayView2<'a, f64>, labels: ArrayView2<'a, u8>, ids: &'a [u64]) -> Result<Self> {
        if x.nrows() != labels.nrows() || x.nrows() != ids.len() {
            return Err(Error::DimensionMismatch {
                what: "batch rows",
                expected: x.nrows(),
                found: labels.nrows().min(ids.len()),
            });
        }
        Ok(Self { x, labels, ids })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn chunk(&self, c: usize) -> Batch<'a> {
        let start = c * GRAD_CHUNK;
        let end = (start + GRAD_CHUNK).min(self.len());
        Batch {
            x: self.x.slice_move(ndarray::s![start..end, ..]),
            labels: self.labels.slice_move(ndarray::s![start..end, ..]),
            ids: &self.ids[start..end],
        }
    }

    fn chunk_count(&self) -> usize {
        self.len().div_ceil(GRAD_CHUNK)
    }
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn check_batch(params: &ModelParams, batch: &Batch<'_>) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let (_, _, c) = params.dims();
    if batch.labels.ncols() != c {
        return Err(Error::DimensionMismatch {
            what: "label columns",
            expected: c,
            found: batch.labels.ncols(),
        });
    }
    Ok(())
}

struct ChunkForward {
    trace: BatchTrace,
    logits: Array2<f64>,
    terms: LossTerms,
}

/// Forward pass plus loss terms for one chunk, each sample weighted by `scale`.
fn chunk_forward(params: &ModelParams, batch: &Batch<'_>, scale: f64) -> Result<ChunkForward> {
    let (_, k, c) = params.dims();
    let trace = forward_batch(params, batch.x.to_owned())?;
    let logits = trace.codes.dot(&params.head.w.t()) + &params.head.b;
    let mut terms = LossTerms::default();
    for (s, (lrow, code)) in logits.rows().into_iter().zip(trace.codes.rows()).enumerate() {
        let bce: f64 = lrow
            .iter()
            .zip(batch.labels.row(s))
            .map(|(&l, &y)| softplus(l) - y as f64 * l)
            .sum::<f64>()
            / c as f64;
        let quant = code.iter().map(|t| 1.0 - t * t).sum::<f64>() / k as f64;
        if !(bce.is_finite() && quant.is_finite()) {
            return Err(Error::NonFinite(format!(
                "loss for sample id {} (classification {bce}, quantization {quant})",
                batch.ids[s]
            )));
        }
        terms.classification += scale * bce;
        terms.quantization += scale * quant;
    }
    Ok(ChunkForward { trace, logits, terms })
}

fn chunk_loss_and_grad(
    params: &ModelParams,
    batch: &Batch<'_>,
    lambda_quant: f64,
    scale: f64,
) -> Result<(LossTerms, ModelGrads)> {
    let (_, k, c) = params.dims();
    let fwd = chunk_forward(params, batch, scale)?;

    let mut d_logits = fwd.logits.mapv(sigmoid);
    d_logits.zip_mut_with(&batch.labels, |d, &y| *d = (*d - y as f64) * scale / c as f64);

    let quant_coeff = -2.0 * lambda_quant * scale / k as f64;
    let d_codes = d_logits.dot(&params.head.w) + &fwd.trace.codes.mapv(|t| quant_coeff * t);

    let mut grads = backward_batch(params, &fwd.trace, d_codes.view())?;
    grads.head.w = standard(d_logits.t().dot(&fwd.trace.codes));
    grads.head.b = d_logits.sum_axis(Axis(0));
    Ok((fwd.terms, grads))
}

/// Loss terms and their gradient with respect to every parameter.
pub fn compute_loss(
    params: &ModelParams,
    batch: &Batch<'_>,
    lambda_quant: f64,
    exec: Execution,
) -> Result<(LossTerms, ModelGrads)> {
    check_batch(params, batch)?;
    let scale = 1.0 / batch.len() as f64;
    let parts = exec.try_map(batch.chunk_count(), |i| {
        chunk_loss_and_grad(params, &batch.chunk(i), lambda_quant, scale)
    })?;
    let mut terms = LossTerms::default();
    let mut grads = params.zeros_like();
    for (t, g) in &parts {
        terms.accumulate(t);
        grads.add_assign(g);
    }
    Ok((terms.finish(lambda_quant), grads))
}

/// Loss terms only.
pub fn loss_terms(params: &ModelParams, batch: &Batch<'_>, lambda_quant: f64, exec: Execution) -> Result<LossTerms> {
    check_batch(params, batch)?;
    let scale = 1.0 / batch.len() as f64;
    let parts = exec.try_map(batch.chunk_count(), |i| {
        chunk_forward(params, &batch.chunk(i), scale).map(|f| f.terms)
    })?;
    let mut terms = LossTerms::default();
    for t in &parts {
        terms.accumulate(t);
    }
    Ok(terms.finish(lambda_quant))
}
