use std::fs;
use std::io::Write;

use gatehash::data::{generate_synthetic, read_embedding_file, SplitManifest};
use gatehash::eval::{format_report, mean_average_precision, RelevanceOracle};
use gatehash::index::{read_code_file, search_topk, write_code_file, PackedCode};
use gatehash::net::{read_checkpoint_file, write_checkpoint_file, Checkpoint, SUPPORTED_BITS};
use gatehash::pipeline::encode_with_checkpoint;
use gatehash::train::{train as train_model, Optimizer, TrainConfig};
use gatehash::Execution;
use serde_json::json;

use crate::run_manifest::{sibling, RunManifest};
use crate::{CliError, EncodeArgs, EvalArgs, OptimizerArg, SearchArgs, SynthArgs, TrainArgs};

fn io_err(context: String) -> impl FnOnce(std::io::Error) -> CliError {
    move |source| CliError::Io { context, source }
}

pub fn synth(a: &SynthArgs) -> Result<(), CliError> {
    let split = generate_synthetic(a.classes, a.per_class, &a.dims, a.noise, a.seed)?;
    fs::create_dir_all(&a.out_dir).map_err(io_err(format!("creating {}", a.out_dir.display())))?;
    let (manifest, path) = SplitManifest::save_split(&split, &a.out_dir, &a.prefix)?;
    println!(
        "wrote {} (train {}, retrieval {}, query {}, dims {:?})",
        path.display(),
        split.train.sample_count(),
        split.retrieval.sample_count(),
        split.query.sample_count(),
        split.modality_dims()
    );

    let mut run = RunManifest::new("synth").output("split_manifest", &path);
    for (role, file) in [
        ("train", &manifest.train),
        ("retrieval", &manifest.retrieval),
        ("query", &manifest.query),
    ] {
        run = run.output(role, &a.out_dir.join(file));
    }
    run.seed = Some(a.seed);
    run.config = json!({
        "classes": a.classes,
        "per_class": a.per_class,
        "dims": a.dims,
        "noise": a.noise,
    });
    run.write(
        &a.run_manifest
            .clone()
            .unwrap_or_else(|| a.out_dir.join(format!("{}.run.json", a.prefix))),
    )
}

pub fn train(a: &TrainArgs) -> Result<(), CliError> {
    if !a.allow_any_bits && !SUPPORTED_BITS.contains(&a.bits) {
        return Err(CliError::Usage(format!(
            "--bits must be one of {SUPPORTED_BITS:?} (pass --allow-any-bits to override), got {}",
            a.bits
        )));
    }
    let split = SplitManifest::load_split(&a.manifest)?;
    let config = TrainConfig {
        bits: a.bits,
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        lambda_quant: a.lambda_quant,
        normalize_inputs: !a.no_normalize,
        seed: a.seed,
        optimizer: match a.optimizer {
            OptimizerArg::Sgd => Optimizer::Sgd,
            OptimizerArg::Adam => Optimizer::Adam {
                beta1: a.beta1,
                beta2: a.beta2,
                epsilon: a.epsilon,
            },
        },
    };
    let outcome = train_model(&split, &config)?;

    let log_path = a.log.clone().unwrap_or_else(|| sibling(&a.out, ".log"));
    let mut log_text = String::new();
    for entry in &outcome.log {
        let line = entry.line();
        println!("{line}");
        log_text.push_str(&line);
        log_text.push('\n');
    }
    fs::write(&log_path, log_text).map_err(io_err(format!("writing {}", log_path.display())))?;

    let ckpt = Checkpoint {
        params: outcome.params,
        seed: config.seed,
        normalize_inputs: config.normalize_inputs,
    };
    write_checkpoint_file(&ckpt, &a.out)?;

    let mut run = RunManifest::new("train")
        .input("split_manifest", &a.manifest)
        .output("checkpoint", &a.out)
        .output("log", &log_path);
    run.seed = Some(config.seed);
    run.config = serde_json::to_value(&config).expect("config serializes");
    run.write(&a.run_manifest.clone().unwrap_or_else(|| sibling(&a.out, ".run.json")))
}

pub fn encode(a: &EncodeArgs) -> Result<(), CliError> {
    let ckpt = read_checkpoint_file(&a.checkpoint)?;
    let set = read_embedding_file(&a.input)?;
    let codes = encode_with_checkpoint(&ckpt, &set, Execution::default())?;
    write_code_file(&codes, &a.out)?;
    println!(
        "encoded {} samples to {} bits -> {}",
        codes.len(),
        codes.k(),
        a.out.display()
    );

    let mut run = RunManifest::new("encode")
        .input("checkpoint", &a.checkpoint)
        .input("embeddings", &a.input)
        .output("codes", &a.out);
    run.seed = Some(ckpt.seed);
    run.config = json!({ "bits": codes.k(), "normalize_inputs": ckpt.normalize_inputs });
    run.write(&a.run_manifest.clone().unwrap_or_else(|| sibling(&a.out, ".run.json")))
}

pub fn eval(a: &EvalArgs) -> Result<(), CliError> {
    if a.query_codes.len() != a.retrieval_codes.len() {
        return Err(CliError::Usage(format!(
            "{} --query-codes but {} --retrieval-codes; pass them in pairs",
            a.query_codes.len(),
            a.retrieval_codes.len()
        )));
    }
    let split = SplitManifest::load_split(&a.manifest)?;
    let oracle = RelevanceOracle::from_sets(&split.query, &split.retrieval)?;
    let mut reports = Vec::with_capacity(a.query_codes.len());
    for (q, r) in a.query_codes.iter().zip(&a.retrieval_codes) {
        let query = read_code_file(q)?;
        let retrieval = read_code_file(r)?;
        reports.push(mean_average_precision(
            &oracle,
            &query,
            &retrieval,
            Execution::default(),
        )?);
    }
    let report = format_report(&reports);
    print!("{report}");

    if let Some(out) = &a.out {
        fs::write(out, &report).map_err(io_err(format!("writing {}", out.display())))?;
    }
    let manifest_path = a
        .run_manifest
        .clone()
        .or_else(|| a.out.as_ref().map(|o| sibling(o, ".run.json")));
    if let Some(path) = manifest_path {
        let mut run = RunManifest::new("eval").input("split_manifest", &a.manifest);
        if let Some(out) = &a.out {
            run = run.output("report", out);
        }
        run.config = json!({ "query_codes": a.query_codes, "retrieval_codes": a.retrieval_codes });
        run.write(&path)?;
    }
    Ok(())
}

fn parse_code(text: &str) -> Result<PackedCode, CliError> {
    let signs = text
        .chars()
        .map(|c| match c {
            '+' | '1' => Ok(1i8),
            '-' | '0' => Ok(-1i8),
            other => Err(CliError::Usage(format!("invalid code character {other:?}"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    PackedCode::from_signs(&signs).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn search(a: &SearchArgs) -> Result<(), CliError> {
    if a.topk == 0 {
        return Err(CliError::Usage("--topk must be at least 1".into()));
    }
    let index = read_code_file(&a.index)?;
    let query = match (&a.code, a.query_id) {
        (Some(text), _) => parse_code(text)?,
        (None, Some(id)) => {
            let source = match &a.queries {
                Some(path) => read_code_file(path)?,
                None => index.clone(),
            };
            let pos = source.position_of(id).ok_or(gatehash::Error::UnknownId(id))?;
            source.code(pos)
        }
        (None, None) => return Err(CliError::Usage("pass --query-id or --code".into())),
    };
    let result = search_topk(&index, &query, a.topk)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "rank\tid\tdistance").map_err(io_err("writing results".into()))?;
    for (rank, hit) in result.hits.iter().enumerate() {
        writeln!(out, "{}\t{}\t{}", rank + 1, hit.id, hit.distance).map_err(io_err("writing results".into()))?;
    }

    if let Some(path) = &a.run_manifest {
        let mut run = RunManifest::new("search").input("index", &a.index);
        if let Some(q) = &a.queries {
            run = run.input("queries", q);
        }
        run.config = json!({ "query_id": a.query_id, "code": a.code, "topk": a.topk });
        run.write(path)?;
    }
    Ok(())
}
