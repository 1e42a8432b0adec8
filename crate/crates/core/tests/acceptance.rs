//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

mod common;

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use gatehash::data::{default_modality_dims, generate_synthetic, read_embeddings, write_embeddings, EmbeddingSet};
use gatehash::eval::{average_precision, format_report, mean_average_precision, RelevanceOracle};
use gatehash::index::{
    hamming_distance, pack_codes, read_codes, search_topk, write_codes, BinaryCodeMatrix, PackedCode,
};
use gatehash::net::{
    binarize, gate_forward, hash_forward, read_checkpoint, write_checkpoint, Checkpoint, GatingParams, HashParams,
    ModelParams,
};
use gatehash::pipeline::encode_set;
use gatehash::train::{finite_diff_check, train_with, TrainConfig};
use gatehash::Execution;
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

// Analytic vs central finite differences, 24 seeds across shapes with n <= 8, k <= 4.
fn gradient_correctness() -> Verdict {
    let start = Instant::now();
    let shapes = [(8, 4, 3), (5, 3, 2), (3, 2, 4), (8, 1, 1), (1, 4, 2), (6, 4, 5)];
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for seed in 0..24u64 {
        let (n, k, c) = shapes[seed as usize % shapes.len()];
        let err = finite_diff_check(n, k, c, seed).map_err(|e| e.to_string())?;
        ensure(err <= 1e-4, || {
            format!("seed {seed} (n={n}, k={k}): max rel error {err:e}")
        })?;
        worst = worst.max(err);
        runs += 1;
    }
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!(
        "{runs} seeds, worst max-rel-error {worst:.3e} <= 1e-4, {:.2?}",
        start.elapsed()
    ))
}

// gate_forward / hash_forward vs nested-loop re-implementations.
fn fusion_oracle_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE01);
    let mut worst: f64 = 0.0;
    for inst in 0..100 {
        let n = rng.random_range(1..=24);
        let k = rng.random_range(1..=20);
        let wf = random_matrix(&mut rng, n, n, 1.0);
        let bf: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let wh = random_matrix(&mut rng, k, n, 1.0);
        let bh: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();

        let gating = GatingParams {
            w: Array2::from_shape_vec((n, n), wf.concat()).unwrap(),
            b: Array1::from(bf.clone()),
        };
        let hash = HashParams {
            w: Array2::from_shape_vec((k, n), wh.concat()).unwrap(),
            b: Array1::from(bh.clone()),
        };
        let (gate, fused) = gate_forward(&gating, &x.clone().into()).map_err(|e| e.to_string())?;
        let (pre, code) = hash_forward(&hash, fused.view()).map_err(|e| e.to_string())?;

        let (ref_gate, ref_fused) = scalar_gate(&wf, &bf, &x);
        let (ref_pre, ref_code) = scalar_hash(&wh, &bh, &ref_fused);
        for (name, got, want) in [
            ("gate", gate.to_vec(), ref_gate),
            ("x_fusion", fused.to_vec(), ref_fused),
            ("pre_tanh", pre.to_vec(), ref_pre),
            ("relaxed_code", code.to_vec(), ref_code),
        ] {
            let err = normwise_rel_error(&got, &want);
            ensure(err <= 1e-12, || format!("instance {inst}: {name} rel error {err:e}"))?;
            worst = worst.max(err);
        }
    }
    Ok(format!("100 instances, worst rel error {worst:.3e} <= 1e-12"))
}

// sgn(tanh(z)) == sgn(z) componentwise.
fn binarization_consistency() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB17);
    let mut checked = 0usize;
    for k in [16, 32, 64, 128] {
        for _ in 0..10_000 {
            let z: Vec<f64> = (0..k)
                .map(|_| match rng.random_range(0..10) {
                    0 => 0.0,
                    1 => -0.0,
                    2 => rng.random_range(-1e-300..1e-300),
                    3 => rng.random_range(-50.0..50.0),
                    _ => rng.random_range(-3.0..3.0),
                })
                .collect();
            let relaxed: Vec<f64> = z.iter().map(|v| v.tanh()).collect();
            let a = binarize(&z).map_err(|e| e.to_string())?;
            let b = binarize(&relaxed).map_err(|e| e.to_string())?;
            ensure(a == b, || format!("k={k}: mismatch for z={z:?}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} vectors over k in {{16,32,64,128}} agree"))
}

// Packed distance / search_topk vs per-bit loop and full sort.
fn hamming_oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x4A3);
    let mut comparisons = 0usize;
    for k in [16, 32, 64, 128] {
        let codes: Vec<Vec<i8>> = (0..1000).map(|_| random_signs(&mut rng, k)).collect();
        let mut ids: Vec<u64> = (0..1000u64).map(|i| i * 7 + 3).collect();
        ids.shuffle(&mut rng);
        let index = pack_codes(k, &codes, ids.clone()).map_err(|e| e.to_string())?;
        for q in 0..50 {
            // every fifth query is a copy of an indexed code
            let query = if q % 5 == 0 {
                codes[rng.random_range(0..1000)].clone()
            } else {
                random_signs(&mut rng, k)
            };
            let packed = PackedCode::from_signs(&query).map_err(|e| e.to_string())?;
            for (i, c) in codes.iter().enumerate() {
                let d = hamming_distance(&index.code(i), &packed).map_err(|e| e.to_string())?;
                ensure(d == naive_hamming(c, &query), || {
                    format!("k={k}: distance mismatch at code {i}")
                })?;
                comparisons += 1;
            }
            let oracle = naive_full_sort(&codes, &ids, &query);
            for topk in [1, 10, 100, 1000, 1500] {
                let got: Vec<(u64, u32)> = search_topk(&index, &packed, topk)
                    .map_err(|e| e.to_string())?
                    .hits
                    .iter()
                    .map(|h| (h.id, h.distance))
                    .collect();
                let want = &oracle[..topk.min(oracle.len())];
                ensure(got == want, || {
                    format!("k={k}, query {q}, topk {topk}: ranking differs")
                })?;
            }
        }
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!(
        "{comparisons} distances and 1000 top-k searches exact, {:.2?}",
        start.elapsed()
    ))
}

fn random_labels(rng: &mut ChaCha8Rng, rows: usize, categories: usize, density: f64) -> Vec<Vec<u8>> {
    (0..rows)
        .map(|_| {
            let mut row: Vec<u8> = (0..categories).map(|_| u8::from(rng.random_bool(density))).collect();
            if row.iter().all(|&v| v == 0) {
                row[rng.random_range(0..categories)] = 1;
            }
            row
        })
        .collect()
}

fn to_array(rows: &[Vec<u8>]) -> Array2<u8> {
    let cols = rows.first().map_or(0, Vec::len);
    Array2::from_shape_vec((rows.len(), cols), rows.concat()).unwrap()
}

// Pipeline mAP vs a single naive function; plus the [rel, non, rel] hand case.
fn map_oracle_equivalence() -> Verdict {
    let rel: HashSet<u64> = [1, 3].into();
    let ap = average_precision(&[1, 2, 3], &rel).map_err(|e| e.to_string())?;
    let hand = (1.0 + 2.0 / 3.0) / 2.0;
    ensure((ap - hand).abs() <= 1e-12, || {
        format!("hand case AP {ap}, expected {hand}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(0x3A9);
    let mut worst: f64 = 0.0;
    for inst in 0..20 {
        let nq = rng.random_range(1..=100);
        let ni = rng.random_range(1..=1000);
        // short codes so distance ties are common and the tie rule matters
        let k = [4, 8, 16, 24][inst % 4];
        let categories = rng.random_range(2..=12);
        let density = rng.random_range(0.05..0.4);
        let qcodes: Vec<Vec<i8>> = (0..nq).map(|_| random_signs(&mut rng, k)).collect();
        let icodes: Vec<Vec<i8>> = (0..ni).map(|_| random_signs(&mut rng, k)).collect();
        let qlabels = random_labels(&mut rng, nq, categories, density);
        let ilabels = random_labels(&mut rng, ni, categories, density);
        let qids: Vec<u64> = (0..nq as u64).map(|i| 100_000 + i).collect();
        let mut iids: Vec<u64> = (0..ni as u64).collect();
        iids.shuffle(&mut rng);

        let want = naive_map(&qcodes, &qlabels, &icodes, &ilabels, &iids);
        let oracle = RelevanceOracle::new(&qids, to_array(&qlabels).view(), &iids, to_array(&ilabels).view())
            .map_err(|e| e.to_string())?;
        let q = pack_codes(k, &qcodes, qids.clone()).map_err(|e| e.to_string())?;
        let r = pack_codes(k, &icodes, iids.clone()).map_err(|e| e.to_string())?;
        let got = mean_average_precision(&oracle, &q, &r, Execution::default());
        match (want, got) {
            (Some(w), Ok(report)) => {
                let err = (report.map - w).abs();
                ensure(err <= 1e-12, || {
                    format!("instance {inst}: mAP {} vs naive {w}", report.map)
                })?;
                worst = worst.max(err);
            }
            (None, Err(_)) => {}
            (w, g) => return Err(format!("instance {inst}: naive {w:?} vs pipeline {g:?}")),
        }
    }
    Ok(format!(
        "hand AP = {ap:.15}; 20 instances, worst |diff| {worst:.3e} <= 1e-12"
    ))
}

fn map_for(params: &ModelParams, split: &gatehash::data::DatasetSplit, normalize: bool) -> Result<f64, String> {
    let oracle = RelevanceOracle::from_sets(&split.query, &split.retrieval).map_err(|e| e.to_string())?;
    let q = encode_set(params, &split.query, normalize, Execution::default()).map_err(|e| e.to_string())?;
    let r = encode_set(params, &split.retrieval, normalize, Execution::default()).map_err(|e| e.to_string())?;
    Ok(mean_average_precision(&oracle, &q, &r, Execution::default())
        .map_err(|e| e.to_string())?
        .map)
}

// Trained k=16 model on separable synthetic data vs the untrained model.
fn end_to_end_learning_signal() -> Verdict {
    let start = Instant::now();
    let split = generate_synthetic(10, 100, &default_modality_dims(), 0.05, 42).map_err(|e| e.to_string())?;
    let base = TrainConfig {
        bits: 16,
        epochs: 30,
        seed: 42,
        ..TrainConfig::default()
    };
    let untrained = train_with(
        &split,
        &TrainConfig {
            epochs: 0,
            ..base.clone()
        },
        Execution::default(),
    )
    .map_err(|e| e.to_string())?;
    let trained = train_with(&split, &base, Execution::default()).map_err(|e| e.to_string())?;
    let map0 = map_for(&untrained.params, &split, base.normalize_inputs)?;
    let map30 = map_for(&trained.params, &split, base.normalize_inputs)?;
    let first = trained.log.first().unwrap().terms.total;
    let last = trained.log.last().unwrap().terms.total;
    ensure(last < first, || format!("loss did not decrease: {first} -> {last}"))?;
    ensure(map30 >= 0.95, || format!("trained mAP {map30:.4} < 0.95"))?;
    ensure(map30 - map0 >= 0.30, || {
        format!("trained mAP {map30:.4} exceeds untrained {map0:.4} by less than 0.30")
    })?;
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!(
        "mAP {map0:.4} -> {map30:.4} (loss {first:.4} -> {last:.4}), {:.2?}",
        start.elapsed()
    ))
}

struct RunArtifacts {
    checkpoint: Vec<u8>,
    query_codes: Vec<u8>,
    retrieval_codes: Vec<u8>,
    report: String,
}

fn full_run(exec: Execution) -> Result<RunArtifacts, String> {
    let split = generate_synthetic(5, 24, &[16, 12], 0.2, 3).map_err(|e| e.to_string())?;
    let config = TrainConfig {
        bits: 32,
        epochs: 4,
        batch_size: 16,
        learning_rate: 5e-3,
        seed: 11,
        ..TrainConfig::default()
    };
    let out = train_with(&split, &config, exec).map_err(|e| e.to_string())?;
    let ckpt = Checkpoint {
        params: out.params,
        seed: config.seed,
        normalize_inputs: config.normalize_inputs,
    };
    let mut checkpoint = Vec::new();
    write_checkpoint(&ckpt, &mut checkpoint).map_err(|e| e.to_string())?;
    let q = encode_set(&ckpt.params, &split.query, true, exec).map_err(|e| e.to_string())?;
    let r = encode_set(&ckpt.params, &split.retrieval, true, exec).map_err(|e| e.to_string())?;
    let (mut query_codes, mut retrieval_codes) = (Vec::new(), Vec::new());
    write_codes(&q, &mut query_codes).map_err(|e| e.to_string())?;
    write_codes(&r, &mut retrieval_codes).map_err(|e| e.to_string())?;
    let oracle = RelevanceOracle::from_sets(&split.query, &split.retrieval).map_err(|e| e.to_string())?;
    let report = format_report(&[mean_average_precision(&oracle, &q, &r, exec).map_err(|e| e.to_string())?]);
    Ok(RunArtifacts {
        checkpoint,
        query_codes,
        retrieval_codes,
        report,
    })
}

fn determinism() -> Verdict {
    let a = full_run(Execution::default())?;
    let b = full_run(Execution::default())?;
    let c = full_run(Execution::Sequential)?;
    for (name, other) in [("rerun", &b), ("sequential", &c)] {
        ensure(a.checkpoint == other.checkpoint, || {
            format!("{name}: checkpoints differ")
        })?;
        ensure(a.query_codes == other.query_codes, || {
            format!("{name}: query code files differ")
        })?;
        ensure(a.retrieval_codes == other.retrieval_codes, || {
            format!("{name}: retrieval code files differ")
        })?;
        ensure(a.report == other.report, || format!("{name}: reports differ"))?;
    }
    Ok(format!(
        "checkpoint ({} B), code files, report identical across reruns and execution strategies",
        a.checkpoint.len()
    ))
}

fn embedding_set_strategy() -> impl Strategy<Value = EmbeddingSet> {
    (prop::collection::vec(1usize..6, 1..4), 0usize..6, 0usize..5).prop_flat_map(|(dims, count, cats)| {
        let feats: Vec<_> = dims
            .iter()
            .map(|&d| prop::collection::vec(any::<f32>().prop_filter("finite", |v| v.is_finite()), count * d))
            .collect();
        let labels = prop::collection::vec(prop::collection::vec(0u8..=1, cats), count);
        let ids = prop::collection::hash_set(any::<u64>(), count);
        (Just(dims), feats, labels, ids).prop_map(move |(dims, feats, mut labels, ids)| {
            for (i, row) in labels.iter_mut().enumerate() {
                if cats > 0 && row.iter().all(|&v| v == 0) {
                    row[i % cats] = 1;
                }
            }
            let features = feats
                .into_iter()
                .zip(&dims)
                .map(|(v, &d)| Array2::from_shape_vec((count, d), v).unwrap())
                .collect();
            let labels = Array2::from_shape_vec((count, cats), labels.concat()).unwrap();
            EmbeddingSet::new(dims.clone(), features, labels, ids.into_iter().collect()).unwrap()
        })
    })
}

fn checkpoint_strategy() -> impl Strategy<Value = Checkpoint> {
    (1usize..6, 1usize..5, 1usize..4, any::<u64>(), any::<bool>()).prop_flat_map(|(n, k, c, seed, norm)| {
        let total = n * n + n + k * n + k + c * k + c;
        prop::collection::vec(-1e6f64..1e6, total).prop_map(move |vals| {
            let mut params = ModelParams::zeros(n, k, c);
            let mut it = vals.into_iter();
            for t in params.tensors_mut() {
                t.iter_mut().for_each(|v| *v = it.next().unwrap());
            }
            Checkpoint {
                params,
                seed,
                normalize_inputs: norm,
            }
        })
    })
}

fn code_matrix_strategy() -> impl Strategy<Value = BinaryCodeMatrix> {
    (1usize..=130, 0usize..8).prop_flat_map(|(k, count)| {
        let codes = prop::collection::vec(prop::collection::vec(prop::bool::ANY, k), count);
        let ids = prop::collection::hash_set(any::<u64>(), count);
        (codes, ids).prop_map(move |(codes, ids)| {
            let signs: Vec<Vec<i8>> = codes
                .iter()
                .map(|c| c.iter().map(|&b| if b { 1 } else { -1 }).collect())
                .collect();
            pack_codes(k, &signs, ids.into_iter().collect()).unwrap()
        })
    })
}

fn format_round_trips() -> Verdict {
    let cases = 128;
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&embedding_set_strategy(), |set| {
            let mut bytes = Vec::new();
            write_embeddings(&set, &mut bytes).unwrap();
            let back = read_embeddings(&bytes[..]).unwrap();
            prop_assert_eq!(&back, &set);
            let mut again = Vec::new();
            write_embeddings(&back, &mut again).unwrap();
            prop_assert_eq!(again, bytes);
            Ok(())
        })
        .map_err(|e| format!("EMBX: {e}"))?;
    runner
        .run(&checkpoint_strategy(), |ckpt| {
            let mut bytes = Vec::new();
            write_checkpoint(&ckpt, &mut bytes).unwrap();
            prop_assert_eq!(read_checkpoint(&bytes[..]).unwrap(), ckpt);
            Ok(())
        })
        .map_err(|e| format!("CMHW: {e}"))?;
    runner
        .run(&code_matrix_strategy(), |codes| {
            let mut bytes = Vec::new();
            write_codes(&codes, &mut bytes).unwrap();
            prop_assert_eq!(read_codes(&bytes[..]).unwrap(), codes);
            Ok(())
        })
        .map_err(|e| format!("CMHC: {e}"))?;
    Ok(format!(
        "EMBX, CMHW, CMHC: {cases} random cases each round-trip exactly"
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("gradient correctness", gradient_correctness),
        ("fusion/hash oracle equivalence", fusion_oracle_equivalence),
        ("binarization consistency", binarization_consistency),
        ("hamming oracle equivalence", hamming_oracle_equivalence),
        ("mAP oracle equivalence", map_oracle_equivalence),
        ("end-to-end learning signal", end_to_end_learning_signal),
        ("determinism", determinism),
        ("format round-trips", format_round_trips),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match verdict {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
