use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::rng;

/// Layer widths `d_0..d_D` of a fully connected ReLU network.
///
/// Hidden layers apply ReLU componentwise; the last layer is affine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    widths: Vec<usize>,
}

impl MlpSpec {
    pub fn new(widths: Vec<usize>) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::InvalidConfig(
                "a network needs at least an input and an output width".into(),
            ));
        }
        if widths.contains(&0) {
            return Err(Error::InvalidConfig("layer widths must be positive".into()));
        }
        Ok(MlpSpec { widths })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    /// Number of affine layers `D`.
    pub fn depth(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        self.widths[self.widths.len() - 1]
    }

    /// Width of the last hidden layer, or the input width when `D = 1`.
    pub fn feature_dim(&self) -> usize {
        self.widths[self.widths.len() - 2]
    }

    pub fn parameter_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }
}

/// Weights and biases of one network. `weights[j]` maps layer `j` to
/// layer `j + 1` and has shape `d_{j+1} × d_j`.
///
/// The same layout doubles as the container for gradients and optimizer
/// moments.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpParams {
    pub fn zeros(spec: &MlpSpec) -> Self {
        let weights = spec
            .widths
            .windows(2)
            .map(|w| Matrix::zeros(w[1], w[0]))
            .collect();
        let biases = spec.widths[1..].iter().map(|&d| vec![0.0; d]).collect();
        MlpParams { weights, biases }
    }

    /// Checks that every matrix and bias matches `spec`.
    pub fn conforms_to(&self, spec: &MlpSpec) -> Result<()> {
        if self.weights.len() != spec.depth() || self.biases.len() != spec.depth() {
            return Err(Error::DimensionMismatch {
                context: "number of layers",
                expected: spec.depth(),
                found: self.weights.len().min(self.biases.len()),
            });
        }
        for (j, w) in spec.widths.windows(2).enumerate() {
            let mat = &self.weights[j];
            if mat.rows() != w[1] || mat.cols() != w[0] {
                return Err(Error::DimensionMismatch {
                    context: "weight matrix shape",
                    expected: w[1] * w[0],
                    found: mat.rows() * mat.cols(),
                });
            }
            if self.biases[j].len() != w[1] {
                return Err(Error::DimensionMismatch {
                    context: "bias length",
                    expected: w[1],
                    found: self.biases[j].len(),
                });
            }
        }
        Ok(())
    }

    /// Every parameter, layer by layer: weights then bias.
    pub fn flat_values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out
    }

    /// Mutable slices over every parameter in [`flat_values`](Self::flat_values) order.
    pub fn slices_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
    }

    pub fn slices(&self) -> impl Iterator<Item = &[f64]> {
        self.weights
            .iter()
            .zip(self.biases.iter())
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
    }

    pub fn is_finite(&self) -> bool {
        self.slices().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Glorot-uniform weights on `[-L, L]` with `L = sqrt(6 / (fan_in + fan_out))`
/// and zero biases, drawn from the init stream of `seed`.
pub fn xavier_init(spec: &MlpSpec, seed: u64) -> MlpParams {
    let mut rng = rng::stream(seed, rng::streams::INIT);
    let mut params = MlpParams::zeros(spec);
    for (w, dims) in params.weights.iter_mut().zip(spec.widths.windows(2)) {
        let limit = libm::sqrt(6.0 / (dims[0] + dims[1]) as f64);
        for v in w.as_mut_slice() {
            *v = rng.gen_range(-limit..=limit);
        }
    }
    params
}

/// Per-sample activations of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `H_1..H_{D-1}`, each after ReLU.
    pub hidden: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

/// Evaluates the network on a single input vector.
pub fn forward(spec: &MlpSpec, params: &MlpParams, x: &[f64]) -> Result<ForwardTrace> {
    params.conforms_to(spec)?;
    if x.len() != spec.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "forward input",
            expected: spec.input_dim(),
            found: x.len(),
        });
    }
    let depth = spec.depth();
    let mut hidden = Vec::with_capacity(depth - 1);
    let mut current: Vec<f64> = x.to_vec();
    for j in 0..depth {
        let w = &params.weights[j];
        let b = &params.biases[j];
        let mut next: Vec<f64> = (0..w.rows()).map(|r| dot(w.row(r), &current) + b[r]).collect();
        if j + 1 < depth {
            relu_in_place(&mut next);
            hidden.push(next.clone());
        }
        current = next;
    }
    Ok(ForwardTrace {
        hidden,
        output: current,
    })
}

/// Activations for a batch; `hidden[j]` is `N × d_{j+1}` post-ReLU.
#[derive(Debug, Clone)]
pub struct BatchTrace {
    pub hidden: Vec<Matrix>,
    pub output: Matrix,
}

/// Evaluates the network on every row of `inputs`.
pub fn forward_batch(spec: &MlpSpec, params: &MlpParams, inputs: &Matrix) -> Result<BatchTrace> {
    check_batch_input(spec, params, inputs)?;
    let depth = spec.depth();
    let mut hidden: Vec<Matrix> = Vec::with_capacity(depth - 1);
    for j in 0..depth {
        let source = if j == 0 { inputs } else { &hidden[j - 1] };
        let mut z = affine(source, &params.weights[j], &params.biases[j])?;
        if j + 1 == depth {
            return Ok(BatchTrace { hidden, output: z });
        }
        relu_in_place(z.as_mut_slice());
        hidden.push(z);
    }
    unreachable!("depth is at least one")
}

/// Network outputs for every row of `inputs`.
pub fn predict_batch(spec: &MlpSpec, params: &MlpParams, inputs: &Matrix) -> Result<Matrix> {
    Ok(forward_batch(spec, params, inputs)?.output)
}

/// Last hidden layer `H_{D-1}` for every row of `inputs`. For `D = 1` the
/// inputs are returned unchanged.
pub fn hidden_features(spec: &MlpSpec, params: &MlpParams, inputs: &Matrix) -> Result<Matrix> {
    check_batch_input(spec, params, inputs)?;
    let depth = spec.depth();
    let mut current = inputs.clone();
    for j in 0..depth - 1 {
        let mut z = affine(&current, &params.weights[j], &params.biases[j])?;
        relu_in_place(z.as_mut_slice());
        current = z;
    }
    Ok(current)
}

/// `(1/2N) Σ ‖y_ℓ − ŷ_ℓ‖²`.
pub fn mse_loss(preds: &Matrix, targets: &Matrix) -> Result<f64> {
    if preds.rows() != targets.rows() {
        return Err(Error::DimensionMismatch {
            context: "loss sample count",
            expected: targets.rows(),
            found: preds.rows(),
        });
    }
    if preds.cols() != targets.cols() {
        return Err(Error::DimensionMismatch {
            context: "loss vector length",
            expected: targets.cols(),
            found: preds.cols(),
        });
    }
    let sum: f64 = preds
        .as_slice()
        .iter()
        .zip(targets.as_slice())
        .map(|(p, y)| (y - p) * (y - p))
        .sum();
    Ok(sum / (2.0 * preds.rows() as f64))
}

/// Exact gradient of [`mse_loss`] with respect to every weight and bias,
/// together with the loss itself. ReLU'(0) is taken as 0.
pub fn backward(
    spec: &MlpSpec,
    params: &MlpParams,
    inputs: &Matrix,
    targets: &Matrix,
) -> Result<(MlpParams, f64)> {
    let trace = forward_batch(spec, params, inputs)?;
    let loss = mse_loss(&trace.output, targets)?;
    if !loss.is_finite() {
        return Err(Error::Divergence {
            grade: 0,
            epoch: 0,
            detail: "non-finite loss in backward pass",
        });
    }
    let n = inputs.rows() as f64;
    let depth = spec.depth();

    // delta = dL/dz for the current layer's pre-activation
    let mut delta = trace.output.sub(targets)?;
    for v in delta.as_mut_slice() {
        *v /= n;
    }

    let mut grads = MlpParams::zeros(spec);
    for j in (0..depth).rev() {
        let source = if j == 0 { inputs } else { &trace.hidden[j - 1] };
        grads.weights[j] = delta.transposed_matmul(source)?;
        let gb = &mut grads.biases[j];
        for row in delta.iter_rows() {
            for (g, d) in gb.iter_mut().zip(row) {
                *g += d;
            }
        }
        if j > 0 {
            let mut prev = delta.matmul(&params.weights[j])?;
            for (d, &h) in prev.as_mut_slice().iter_mut().zip(source.as_slice()) {
                if h <= 0.0 {
                    *d = 0.0;
                }
            }
            delta = prev;
        }
    }
    if !grads.is_finite() {
        return Err(Error::Divergence {
            grade: 0,
            epoch: 0,
            detail: "non-finite gradient",
        });
    }
    Ok((grads, loss))
}

fn check_batch_input(spec: &MlpSpec, params: &MlpParams, inputs: &Matrix) -> Result<()> {
    params.conforms_to(spec)?;
    if inputs.cols() != spec.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "batch input width",
            expected: spec.input_dim(),
            found: inputs.cols(),
        });
    }
    Ok(())
}

fn affine(inputs: &Matrix, weights: &Matrix, bias: &[f64]) -> Result<Matrix> {
    let mut z = inputs.matmul_transposed(weights)?;
    for r in 0..z.rows() {
        for (v, b) in z.row_mut(r).iter_mut().zip(bias) {
            *v += b;
        }
    }
    Ok(z)
}

#[inline]
fn relu_in_place(values: &mut [f64]) {
    for v in values {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}
