use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{ModelGrads, ModelParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl Default for Optimizer {
    fn default() -> Self {
        Self::adam()
    }
}

/// Adam moments and step counter; unused by SGD.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OptimizerState {
    pub step: u64,
    moments: Option<(ModelParams, ModelParams)>,
}

/// Applies one update in place.
pub fn optimizer_step(
    params: &mut ModelParams,
    grads: &ModelGrads,
    state: &mut OptimizerState,
    optimizer: &Optimizer,
    learning_rate: f64,
) -> Result<()> {
    if !params.same_shape(grads) {
        return Err(Error::DimensionMismatch {
            what: "gradient shape",
            expected: params.tensors().iter().map(|t| t.len()).sum(),
            found: grads.tensors().iter().map(|t| t.len()).sum(),
        });
    }
    state.step += 1;
    match *optimizer {
        Optimizer::Sgd => {
            for (p, g) in params.tensors_mut().into_iter().zip(grads.tensors()) {
                p.iter_mut().zip(g).for_each(|(p, g)| *p -= learning_rate * g);
            }
        }
        Optimizer::Adam { beta1, beta2, epsilon } => {
            let (m, v) = state
                .moments
                .get_or_insert_with(|| (params.zeros_like(), params.zeros_like()));
            if !m.same_shape(params) {
                return Err(Error::InvalidArgument(
                    "optimizer state does not match parameters".into(),
                ));
            }
            let t = state.step as i32;
            let bias1 = 1.0 - beta1.powi(t);
            let bias2 = 1.0 - beta2.powi(t);
            let tensors = params
                .tensors_mut()
                .into_iter()
                .zip(grads.tensors())
                .zip(m.tensors_mut())
                .zip(v.tensors_mut());
            for (((p, g), m), v) in tensors {
                for i in 0..p.len() {
                    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                    let m_hat = m[i] / bias1;
                    let v_hat = v[i] / bias2;
                    p[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
                }
            }
        }
    }
    Ok(())
}
