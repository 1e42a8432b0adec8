//! Average precision and mAP over full Hamming rankings.
//!
//! An item is relevant to a query when their label sets intersect. AP is
//! taken over the whole ranking (no cutoff), and queries without a single
//! relevant item are left out of the mean and counted separately.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use ndarray::ArrayView2;

use crate::data::EmbeddingSet;
use crate::error::{Error, Result};
use crate::index::{rank_all, BinaryCodeMatrix};
use crate::par::Execution;

/// True iff the two multi-hot rows share a set bit.
pub fn relevance(query_labels: &[u8], item_labels: &[u8]) -> bool {
    debug_assert_eq!(query_labels.len(), item_labels.len());
    query_labels.iter().zip(item_labels).any(|(&a, &b)| a != 0 && b != 0)
}

/// AP of `ranking` against `relevant`: the mean, over relevant items, of
/// precision at the rank where each is retrieved.
pub fn average_precision(ranking: &[u64], relevant: &HashSet<u64>) -> Result<f64> {
    if relevant.is_empty() {
        return Err(Error::EmptyRelevantSet);
    }
    Ok(ap_from_flags(
        ranking.iter().map(|id| relevant.contains(id)),
        relevant.len(),
    ))
}

fn ap_from_flags(flags: impl Iterator<Item = bool>, relevant: usize) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (pos, rel) in flags.enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (pos + 1) as f64;
        }
    }
    sum / relevant as f64
}

/// Multi-hot labels packed into 64-bit words, addressed by sample id.
#[derive(Clone, Debug)]
struct LabelTable {
    words_per_row: usize,
    bits: Vec<u64>,
    rows: HashMap<u64, usize>,
}

impl LabelTable {
    fn new(ids: &[u64], labels: ArrayView2<'_, u8>) -> Self {
        let words_per_row = labels.ncols().div_ceil(64).max(1);
        let mut bits = vec![0u64; ids.len() * words_per_row];
        for (r, row) in labels.rows().into_iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v != 0 {
                    bits[r * words_per_row + c / 64] |= 1 << (c % 64);
                }
            }
        }
        let rows = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        Self {
            words_per_row,
            bits,
            rows,
        }
    }

    fn row(&self, id: u64) -> Result<&[u64]> {
        let r = *self.rows.get(&id).ok_or(Error::UnknownId(id))?;
        Ok(&self.bits[r * self.words_per_row..(r + 1) * self.words_per_row])
    }
}

fn intersects(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).any(|(x, y)| x & y != 0)
}

/// Ground-truth relevance between query samples and retrieval samples.
#[derive(Clone, Debug)]
pub struct RelevanceOracle {
    query: LabelTable,
    retrieval: LabelTable,
}

impl RelevanceOracle {
    pub fn new(
        query_ids: &[u64],
        query_labels: ArrayView2<'_, u8>,
        retrieval_ids: &[u64],
        retrieval_labels: ArrayView2<'_, u8>,
    ) -> Result<Self> {
        if query_labels.ncols() != retrieval_labels.ncols() {
            return Err(Error::DimensionMismatch {
                what: "category_count",
                expected: query_labels.ncols(),
                found: retrieval_labels.ncols(),
            });
        }
        if query_labels.nrows() != query_ids.len() || retrieval_labels.nrows() != retrieval_ids.len() {
            return Err(Error::InvalidArgument("one label row per id required".into()));
        }
        Ok(Self {
            query: LabelTable::new(query_ids, query_labels),
            retrieval: LabelTable::new(retrieval_ids, retrieval_labels),
        })
    }

    pub fn from_sets(query: &EmbeddingSet, retrieval: &EmbeddingSet) -> Result<Self> {
        Self::new(query.ids(), query.labels(), retrieval.ids(), retrieval.labels())
    }

    pub fn is_relevant(&self, query_id: u64, item_id: u64) -> Result<bool> {
        Ok(intersects(self.query.row(query_id)?, self.retrieval.row(item_id)?))
    }
}

/// mAP for one code length, with the exclusion diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct MapReport {
    pub bits: usize,
    pub map: f64,
    pub evaluated_queries: usize,
    pub excluded_queries: usize,
    /// Mean relevant-set size over evaluated queries.
    pub mean_relevant: f64,
}

pub fn mean_average_precision(
    oracle: &RelevanceOracle,
    query_codes: &BinaryCodeMatrix,
    retrieval_codes: &BinaryCodeMatrix,
    exec: Execution,
) -> Result<MapReport> {
    let rankings = rank_all(retrieval_codes, query_codes, exec)?;
    // Resolve every retrieval label row once; ranking order then indexes into it.
    let item_rows = retrieval_codes
        .ids()
        .iter()
        .map(|&id| oracle.retrieval.row(id).map(|row| (id, row)))
        .collect::<Result<HashMap<u64, &[u64]>>>()?;

    let per_query: Vec<Option<(f64, usize)>> = exec.try_map(query_codes.len(), |q| {
        let qrow = oracle.query.row(query_codes.ids()[q])?;
        let flags: Vec<bool> = rankings[q].ids().map(|id| intersects(qrow, item_rows[&id])).collect();
        let relevant = flags.iter().filter(|&&f| f).count();
        Ok::<_, Error>((relevant > 0).then(|| (ap_from_flags(flags.into_iter(), relevant), relevant)))
    })?;

    let mut sum_ap = 0.0;
    let mut sum_rel = 0usize;
    let mut evaluated = 0usize;
    for (ap, rel) in per_query.iter().flatten() {
        sum_ap += ap;
        sum_rel += rel;
        evaluated += 1;
    }
    if evaluated == 0 {
        return Err(Error::NoEvaluableQueries);
    }
    Ok(MapReport {
        bits: query_codes.k(),
        map: sum_ap / evaluated as f64,
        evaluated_queries: evaluated,
        excluded_queries: per_query.len() - evaluated,
        mean_relevant: sum_rel as f64 / evaluated as f64,
    })
}

/// Plain-text table, one row per code length.
pub fn format_report(reports: &[MapReport]) -> String {
    let mut out = String::new();
    writeln!(out, "bits\tmAP\tqueries\texcluded\tmean_relevant").unwrap();
    for r in reports {
        writeln!(
            out,
            "{}\t{:.6}\t{}\t{}\t{:.2}",
            r.bits, r.map, r.evaluated_queries, r.excluded_queries, r.mean_relevant
        )
        .unwrap();
    }
    out
}
