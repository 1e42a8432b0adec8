//! Minibatch training of the fusion-and-hash network.

mod gradcheck;
mod loss;
mod optim;

use ndarray::Axis;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::DatasetSplit;
use crate::error::{Error, Result};
use crate::net::{init_params, ModelParams};
use crate::par::Execution;

pub use gradcheck::{
    finite_diff_check, finite_diff_check_with, relative_error, GradCheckObjective, FD_STEP, REL_ERROR_FLOOR,
};
pub use loss::{compute_loss, loss_terms, Batch, LossTerms, GRAD_CHUNK};
pub use optim::{optimizer_step, Optimizer, OptimizerState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub bits: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lambda_quant: f64,
    /// L2-normalize each modality vector before concatenation.
    pub normalize_inputs: bool,
    pub seed: u64,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            bits: 16,
            epochs: 30,
            batch_size: 64,
            learning_rate: 1e-3,
            lambda_quant: 0.1,
            normalize_inputs: true,
            seed: 0,
            optimizer: Optimizer::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, train_size: usize) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidArgument(msg));
        if self.bits == 0 {
            return fail("bits must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.lambda_quant >= 0.0 && self.lambda_quant.is_finite()) {
            return fail(format!("lambda_quant must be non-negative, got {}", self.lambda_quant));
        }
        if self.batch_size == 0 || self.batch_size > train_size {
            return fail(format!(
                "batch_size must be in 1..={train_size} (training set size), got {}",
                self.batch_size
            ));
        }
        if let Optimizer::Adam { beta1, beta2, epsilon } = self.optimizer {
            if !((0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && epsilon > 0.0) {
                return fail("adam needs beta1, beta2 in [0, 1) and epsilon > 0".into());
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLog {
    /// 0 is the untrained model.
    pub epoch: usize,
    pub terms: LossTerms,
}

impl EpochLog {
    /// `epoch<TAB>classification<TAB>quantization<TAB>total`
    pub fn line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.epoch, self.terms.classification, self.terms.quantization, self.terms.total
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Full training-set loss before training and after every epoch.
    pub log: Vec<EpochLog>,
}

/// Permutation of `0..len` for one epoch, drawn from stream `epoch` of the
/// seeded generator.
pub fn epoch_permutation(seed: u64, epoch: usize, len: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    let mut perm: Vec<usize> = (0..len).collect();
    perm.shuffle(&mut rng);
    perm
}

pub fn train(split: &DatasetSplit, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(split, config, Execution::default())
}

pub fn train_with(split: &DatasetSplit, config: &TrainConfig, exec: Execution) -> Result<TrainOutcome> {
    let set = &split.train;
    config.validate(set.sample_count())?;
    let x = set.concat_all(config.normalize_inputs);
    let labels = set.labels();
    let ids = set.ids();
    let full = Batch::new(x.view(), labels, ids)?;

    let mut params = init_params(set.concat_dim(), config.bits, split.category_count(), config.seed)?;
    let mut state = OptimizerState::default();
    let mut log = Vec::with_capacity(config.epochs + 1);
    log.push(EpochLog {
        epoch: 0,
        terms: loss_terms(&params, &full, config.lambda_quant, exec)?,
    });

    for epoch in 1..=config.epochs {
        let perm = epoch_permutation(config.seed, epoch, set.sample_count());
        for (b, rows) in perm.chunks(config.batch_size).enumerate() {
            let bx = x.select(Axis(0), rows);
            let bl = labels.select(Axis(0), rows);
            let bids: Vec<u64> = rows.iter().map(|&r| ids[r]).collect();
            let batch = Batch::new(bx.view(), bl.view(), &bids)?;
            let (_, grads) =
                compute_loss(&params, &batch, config.lambda_quant, exec).map_err(|e| with_context(e, epoch, b))?;
            optimizer_step(&mut params, &grads, &mut state, &config.optimizer, config.learning_rate)?;
        }
        let terms = loss_terms(&params, &full, config.lambda_quant, exec).map_err(|e| with_context(e, epoch, 0))?;
        log.push(EpochLog { epoch, terms });
    }
    Ok(TrainOutcome { params, log })
}

fn with_context(e: Error, epoch: usize, batch: usize) -> Error {
    match e {
        Error::NonFinite(msg) => Error::NonFinite(format!("epoch {epoch}, batch {batch}: {msg}")),
        other => other,
    }
}
