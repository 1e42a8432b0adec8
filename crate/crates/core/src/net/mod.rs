//! The fusion-and-hash network.
//!
//! ```text
//! gate     = sigmoid(W_fusion · x + b_fusion)        (n)
//! x_fusion = gate ∘ x                                (n)
//! pre_tanh = W_hash · x_fusion + b_hash              (k)
//! relaxed  = tanh(pre_tanh)                          (k)
//! code     = sgn(relaxed), with sgn(0) = +1          (k bits)
//! ```
//!
//! The hash layer maps the `n`-wide fused feature straight to `k` bits.
//! A linear classification head on the relaxed code (`category_count × k`)
//! is carried alongside for training; it never affects encoding.

mod checkpoint;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use crate::data::ConcatFeature;
use crate::error::{Error, Result};

pub use checkpoint::{read_checkpoint, read_checkpoint_file, write_checkpoint, write_checkpoint_file, Checkpoint};

/// Code lengths accepted without an explicit override.
pub const SUPPORTED_BITS: [usize; 4] = [16, 32, 64, 128];

/// Logistic function, evaluated without overflowing `exp` for large |x|.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GatingParams {
    /// n × n
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HashParams {
    /// k × n
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl HashParams {
    pub fn bits(&self) -> usize {
        self.b.len()
    }
}

/// Linear classification head used only by the training loss.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadParams {
    /// category_count × k
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub gating: GatingParams,
    pub hash: HashParams,
    pub head: HeadParams,
}

/// Gradients share the parameter layout, one entry per trainable scalar.
pub type ModelGrads = ModelParams;

impl ModelParams {
    pub fn zeros(n: usize, k: usize, category_count: usize) -> Self {
        Self {
            gating: GatingParams {
                w: Array2::zeros((n, n)),
                b: Array1::zeros(n),
            },
            hash: HashParams {
                w: Array2::zeros((k, n)),
                b: Array1::zeros(k),
            },
            head: HeadParams {
                w: Array2::zeros((category_count, k)),
                b: Array1::zeros(category_count),
            },
        }
    }

    pub fn zeros_like(&self) -> Self {
        let (n, k, c) = self.dims();
        Self::zeros(n, k, c)
    }

    /// `(n, k, category_count)`
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.gating.b.len(), self.hash.b.len(), self.head.b.len())
    }

    /// Checks that all six tensors agree with `(n, k, category_count)`.
    pub fn check_shapes(&self) -> Result<()> {
        let (n, k, c) = self.dims();
        let expect = |what, found: (usize, usize), want: (usize, usize)| {
            if found != want {
                Err(Error::DimensionMismatch {
                    what,
                    expected: want.0 * want.1,
                    found: found.0 * found.1,
                })
            } else {
                Ok(())
            }
        };
        expect("w_fusion", self.gating.w.dim(), (n, n))?;
        expect("w_hash", self.hash.w.dim(), (k, n))?;
        expect("loss head weights", self.head.w.dim(), (c, k))
    }

    /// Flat views in declaration order:
    /// w_fusion, b_fusion, w_hash, b_hash, head w, head b.
    pub fn tensors(&self) -> [&[f64]; 6] {
        [
            self.gating.w.as_slice().expect("standard layout"),
            self.gating.b.as_slice().expect("standard layout"),
            self.hash.w.as_slice().expect("standard layout"),
            self.hash.b.as_slice().expect("standard layout"),
            self.head.w.as_slice().expect("standard layout"),
            self.head.b.as_slice().expect("standard layout"),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 6] {
        [
            self.gating.w.as_slice_mut().expect("standard layout"),
            self.gating.b.as_slice_mut().expect("standard layout"),
            self.hash.w.as_slice_mut().expect("standard layout"),
            self.hash.b.as_slice_mut().expect("standard layout"),
            self.head.w.as_slice_mut().expect("standard layout"),
            self.head.b.as_slice_mut().expect("standard layout"),
        ]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.tensors()
            .iter()
            .zip(other.tensors())
            .all(|(a, b)| a.len() == b.len())
            && self.dims() == other.dims()
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// Glorot-uniform weights (`a = sqrt(6 / (fan_in + fan_out))`) and zero
/// biases, drawn in the order w_fusion, w_hash, head.
pub fn init_params(n: usize, k: usize, category_count: usize, seed: u64) -> Result<ModelParams> {
    if n == 0 || k == 0 || category_count == 0 {
        return Err(Error::InvalidArgument(format!(
            "n, k and category_count must be positive (got {n}, {k}, {category_count})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = ModelParams::zeros(n, k, category_count);
    for w in [&mut p.gating.w, &mut p.hash.w, &mut p.head.w] {
        let (fan_out, fan_in) = w.dim();
        let a = glorot_bound(fan_in, fan_out);
        let dist = Uniform::new_inclusive(-a, a).expect("finite bound");
        w.iter_mut().for_each(|v| *v = dist.sample(&mut rng));
    }
    Ok(p)
}

pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Context gating: returns `(gate, x_fusion)`.
pub fn gate_forward(p: &GatingParams, x: &ConcatFeature) -> Result<(Array1<f64>, Array1<f64>)> {
    check_len("concatenated feature", p.b.len(), x.len())?;
    let mut gate = p.w.dot(&x.0);
    gate.zip_mut_with(&p.b, |g, &b| *g = sigmoid(*g + b));
    let fused = &gate * &x.0;
    Ok((gate, fused))
}

/// Linear + tanh: returns `(pre_tanh, relaxed_code)`.
pub fn hash_forward(p: &HashParams, x_fusion: ArrayView1<'_, f64>) -> Result<(Array1<f64>, Array1<f64>)> {
    check_len("fused feature", p.w.ncols(), x_fusion.len())?;
    let pre = p.w.dot(&x_fusion) + &p.b;
    let relaxed = pre.mapv(f64::tanh);
    Ok((pre, relaxed))
}

/// Intermediate values of one forward pass, kept for the backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    pub x_concat: Array1<f64>,
    pub gate: Array1<f64>,
    pub x_fusion: Array1<f64>,
    pub pre_tanh: Array1<f64>,
    pub relaxed_code: Array1<f64>,
}

pub fn forward(p: &ModelParams, x: &ConcatFeature) -> Result<ForwardTrace> {
    let (gate, x_fusion) = gate_forward(&p.gating, x)?;
    let (pre_tanh, relaxed_code) = hash_forward(&p.hash, x_fusion.view())?;
    Ok(ForwardTrace {
        x_concat: x.0.clone(),
        gate,
        x_fusion,
        pre_tanh,
        relaxed_code,
    })
}

/// Sign of each component as ±1, with `sgn(0) = +1`.
pub fn binarize(v: &[f64]) -> Result<Vec<i8>> {
    v.iter()
        .map(|&x| {
            if !x.is_finite() {
                Err(Error::NonFinite(format!("cannot binarize {x}")))
            } else if x >= 0.0 {
                Ok(1)
            } else {
                Ok(-1)
            }
        })
        .collect()
}

/// Row-per-sample forward pass over a batch.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchTrace {
    pub x: Array2<f64>,
    pub gate: Array2<f64>,
    pub fused: Array2<f64>,
    pub pre_tanh: Array2<f64>,
    pub codes: Array2<f64>,
}

impl BatchTrace {
    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    /// Trace of a single row.
    pub fn row(&self, i: usize) -> ForwardTrace {
        ForwardTrace {
            x_concat: self.x.row(i).to_owned(),
            gate: self.gate.row(i).to_owned(),
            x_fusion: self.fused.row(i).to_owned(),
            pre_tanh: self.pre_tanh.row(i).to_owned(),
            relaxed_code: self.codes.row(i).to_owned(),
        }
    }
}

pub fn forward_batch(p: &ModelParams, x: Array2<f64>) -> Result<BatchTrace> {
    check_len("concatenated feature", p.gating.b.len(), x.ncols())?;
    let mut gate = x.dot(&p.gating.w.t());
    for mut row in gate.rows_mut() {
        row.zip_mut_with(&p.gating.b, |g, &b| *g = sigmoid(*g + b));
    }
    let fused = &gate * &x;
    let pre_tanh = fused.dot(&p.hash.w.t()) + &p.hash.b;
    let codes = pre_tanh.mapv(f64::tanh);
    Ok(BatchTrace {
        x,
        gate,
        fused,
        pre_tanh,
        codes,
    })
}

/// Backpropagates `upstream` (∂L/∂relaxed_code, one row per sample) through
/// the hash layer and the gate, including the gate's dependence on `x`
/// through both the sigmoid argument and the element-wise product. Head
/// gradients are zero; the loss adds them.
pub fn backward_batch(p: &ModelParams, trace: &BatchTrace, upstream: ArrayView2<'_, f64>) -> Result<ModelGrads> {
    let (n, k, c) = p.dims();
    if upstream.dim() != (trace.len(), k) {
        return Err(Error::DimensionMismatch {
            what: "upstream gradient",
            expected: trace.len() * k,
            found: upstream.len(),
        });
    }
    check_len("trace width", n, trace.x.ncols())?;

    let dz = &upstream * &trace.codes.mapv(|t| 1.0 - t * t);
    let d_fused = dz.dot(&p.hash.w);
    let da = &d_fused * &trace.x * &trace.gate.mapv(|g| g * (1.0 - g));

    Ok(ModelParams {
        gating: GatingParams {
            w: standard(da.t().dot(&trace.x)),
            b: da.sum_axis(Axis(0)),
        },
        hash: HashParams {
            w: standard(dz.t().dot(&trace.fused)),
            b: dz.sum_axis(Axis(0)),
        },
        head: HeadParams {
            w: Array2::zeros((c, k)),
            b: Array1::zeros(c),
        },
    })
}

/// Single-sample backward pass; see [`backward_batch`].
pub fn model_backward(p: &ModelParams, trace: &ForwardTrace, upstream: ArrayView1<'_, f64>) -> Result<ModelGrads> {
    let batch = BatchTrace {
        x: trace.x_concat.clone().insert_axis(Axis(0)),
        gate: trace.gate.clone().insert_axis(Axis(0)),
        fused: trace.x_fusion.clone().insert_axis(Axis(0)),
        pre_tanh: trace.pre_tanh.clone().insert_axis(Axis(0)),
        codes: trace.relaxed_code.clone().insert_axis(Axis(0)),
    };
    backward_batch(p, &batch, upstream.insert_axis(Axis(0)))
}

/// Row-major copy if needed; parameter tensors are always viewed as flat slices.
pub(crate) fn standard(a: Array2<f64>) -> Array2<f64> {
    if a.is_standard_layout() {
        a
    } else {
        a.as_standard_layout().into_owned()
    }
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { what, expected, found });
    }
    Ok(())
}
