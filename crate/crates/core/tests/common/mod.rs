//! Straight-line reference implementations used as test oracles. They share
//! no code with the library paths they check (no ndarray, no packing).

#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;

pub fn naive_sigmoid(a: f64) -> f64 {
    1.0 / (1.0 + (-a).exp())
}

/// gate = sigmoid(W x + b), fused = gate ∘ x, with nested loops.
pub fn scalar_gate(w: &[Vec<f64>], b: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let mut gate = vec![0.0; n];
    let mut fused = vec![0.0; n];
    for i in 0..n {
        let mut acc = b[i];
        for j in 0..n {
            acc += w[i][j] * x[j];
        }
        gate[i] = naive_sigmoid(acc);
        fused[i] = gate[i] * x[i];
    }
    (gate, fused)
}

/// pre = W f + b, code = tanh(pre).
pub fn scalar_hash(w: &[Vec<f64>], b: &[f64], fused: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let k = b.len();
    let mut pre = vec![0.0; k];
    let mut code = vec![0.0; k];
    for i in 0..k {
        let mut acc = b[i];
        for (j, f) in fused.iter().enumerate() {
            acc += w[i][j] * f;
        }
        pre[i] = acc;
        code[i] = acc.tanh();
    }
    (pre, code)
}

/// max |a - b| / max |b|
pub fn normwise_rel_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|y| y.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.random_range(-scale..scale)).collect())
        .collect()
}

pub fn random_signs<R: Rng>(rng: &mut R, k: usize) -> Vec<i8> {
    (0..k).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect()
}

pub fn naive_hamming(a: &[i8], b: &[i8]) -> u32 {
    assert_eq!(a.len(), b.len());
    let mut d = 0;
    for i in 0..a.len() {
        if a[i] != b[i] {
            d += 1;
        }
    }
    d
}

/// Every `(id, distance)` sorted by distance then id.
pub fn naive_full_sort(codes: &[Vec<i8>], ids: &[u64], query: &[i8]) -> Vec<(u64, u32)> {
    let mut all: Vec<(u64, u32)> = codes
        .iter()
        .zip(ids)
        .map(|(c, &id)| (id, naive_hamming(c, query)))
        .collect();
    all.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
    all
}

/// End-to-end mAP from sign vectors and label rows in one function:
/// naive distances, sort, label-overlap relevance, AP over the full list,
/// mean over queries with at least one relevant item.
pub fn naive_map(
    query_codes: &[Vec<i8>],
    query_labels: &[Vec<u8>],
    item_codes: &[Vec<i8>],
    item_labels: &[Vec<u8>],
    item_ids: &[u64],
) -> Option<f64> {
    let label_of: HashMap<u64, &Vec<u8>> = item_ids.iter().copied().zip(item_labels).collect();
    let mut total = 0.0;
    let mut counted = 0;
    for (qc, ql) in query_codes.iter().zip(query_labels) {
        let ranking = naive_full_sort(item_codes, item_ids, qc);
        let rel: Vec<bool> = ranking
            .iter()
            .map(|(id, _)| label_of[id].iter().zip(ql).any(|(&a, &b)| a == 1 && b == 1))
            .collect();
        let n_rel = rel.iter().filter(|&&r| r).count();
        if n_rel == 0 {
            continue;
        }
        let mut hits = 0.0;
        let mut ap = 0.0;
        for (i, &r) in rel.iter().enumerate() {
            if r {
                hits += 1.0;
                ap += hits / (i as f64 + 1.0);
            }
        }
        total += ap / n_rel as f64;
        counted += 1;
    }
    (counted > 0).then(|| total / counted as f64)
}
