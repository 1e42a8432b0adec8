//! Central finite-difference check of the full loss gradient.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use super::loss::{compute_loss, loss_terms, Batch};
use crate::error::{Error, Result};
use crate::net::ModelParams;
use crate::par::Execution;

pub const FD_STEP: f64 = 1e-5;

/// Relative errors are measured against `max(|a|, |b|, REL_ERROR_FLOOR)` so
/// that entries whose true gradient is ~0 are judged on absolute error.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

const CHECK_BATCH: usize = 3;
const CHECK_LAMBDA: f64 = 0.3;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
    (analytic - numeric).abs() / denom
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradCheckObjective {
    /// classification + λ · quantization
    TotalLoss,
    /// A loss that ignores the network output; every gradient is zero.
    Constant,
}

/// Max relative error between analytic and finite-difference gradients of
/// the total loss on a random instance.
pub fn finite_diff_check(n: usize, k: usize, categories: usize, seed: u64) -> Result<f64> {
    finite_diff_check_with(n, k, categories, seed, GradCheckObjective::TotalLoss)
}

pub fn finite_diff_check_with(
    n: usize,
    k: usize,
    categories: usize,
    seed: u64,
    objective: GradCheckObjective,
) -> Result<f64> {
    if !(1..=8).contains(&n) || !(1..=4).contains(&k) || categories == 0 {
        return Err(Error::InvalidArgument(format!(
            "gradient check needs 1 <= n <= 8, 1 <= k <= 4, categories >= 1 (got {n}, {k}, {categories})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new_inclusive(-1.0, 1.0).expect("finite bounds");
    let mut params = ModelParams::zeros(n, k, categories);
    for t in params.tensors_mut() {
        t.iter_mut().for_each(|v| *v = unit.sample(&mut rng));
    }
    let x = Array2::from_shape_simple_fn((CHECK_BATCH, n), || StandardNormal.sample(&mut rng));
    let mut labels = Array2::from_shape_simple_fn((CHECK_BATCH, categories), || u8::from(rng.random_bool(0.5)));
    for mut row in labels.rows_mut() {
        if row.iter().all(|&v| v == 0) {
            row[rng.random_range(0..categories)] = 1;
        }
    }
    let ids: Vec<u64> = (0..CHECK_BATCH as u64).collect();
    let batch = Batch::new(x.view(), labels.view(), &ids)?;
    let exec = Execution::Sequential;

    type Objective<'a> = Box<dyn Fn(&ModelParams) -> Result<f64> + 'a>;
    let (objective_fn, analytic): (Objective<'_>, ModelParams) = match objective {
        GradCheckObjective::TotalLoss => (
            Box::new(|p| Ok(loss_terms(p, &batch, CHECK_LAMBDA, exec)?.total)),
            compute_loss(&params, &batch, CHECK_LAMBDA, exec)?.1,
        ),
        GradCheckObjective::Constant => (Box::new(|_| Ok(1.0)), params.zeros_like()),
    };

    let mut worst: f64 = 0.0;
    let mut probe = params.clone();
    for (t, grad) in analytic.tensors().iter().enumerate() {
        for (i, &g) in grad.iter().enumerate() {
            let orig = probe.tensors()[t][i];
            probe.tensors_mut()[t][i] = orig + FD_STEP;
            let plus = objective_fn(&probe)?;
            probe.tensors_mut()[t][i] = orig - FD_STEP;
            let minus = objective_fn(&probe)?;
            probe.tensors_mut()[t][i] = orig;
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            worst = worst.max(relative_error(g, numeric));
        }
    }
    Ok(worst)
}
