//! Feed-forward perceptron used to invert the forward model.
//!
//! Hidden layers use `tanh`, the single output is linear. Inputs and the
//! output pass through per-dimension affine scalers mapping the training
//! range onto `[−1, 1]`. Parameters live in one flat vector laid out layer by
//! layer, neuron by neuron, each neuron as `[bias, w_1, …, w_fan_in]`, the
//! same order the weight file uses.

mod io;
mod train;

pub use train::{lm_train, TrainOptions, TrainReport};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    fn slope_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    layer_sizes: Vec<usize>,
    hidden: Activation,
}

impl MlpSpec {
    /// Tanh hidden layers, linear scalar output, at least one hidden layer.
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self> {
        if layer_sizes.len() < 3 {
            return Err(Error::Config(format!(
                "need input, hidden and output layers, got sizes {layer_sizes:?}"
            )));
        }
        Self::build(layer_sizes, Activation::Tanh)
    }

    /// All-linear network; `[n, 1]` is plain linear regression.
    pub fn linear(layer_sizes: Vec<usize>) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Config(format!("need at least two layers, got {layer_sizes:?}")));
        }
        Self::build(layer_sizes, Activation::Linear)
    }

    fn build(layer_sizes: Vec<usize>, hidden: Activation) -> Result<Self> {
        if layer_sizes.contains(&0) {
            return Err(Error::Config(format!(
                "layer sizes must be positive, got {layer_sizes:?}"
            )));
        }
        if *layer_sizes.last().unwrap() != 1 {
            return Err(Error::Config(format!(
                "output layer must have exactly one neuron, got {layer_sizes:?}"
            )));
        }
        Ok(Self { layer_sizes, hidden })
    }

    /// `[inputs, 20, 20, 1]`.
    pub fn two_hidden_twenty(inputs: usize) -> Result<Self> {
        Self::new(vec![inputs, 20, 20, 1])
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn num_params(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }
}

/// Per-dimension affine map of `[min, max]` onto `[−1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    mins: Vec<f64>,
    maxs: Vec<f64>,
}

impl Scaler {
    pub fn new(mins: Vec<f64>, maxs: Vec<f64>) -> Result<Self> {
        if mins.len() != maxs.len() {
            return Err(Error::Shape {
                expected: mins.len(),
                got: maxs.len(),
            });
        }
        for (lo, hi) in mins.iter().zip(&maxs) {
            if !(hi - lo > 0.0) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Config(format!(
                    "scaler range [{lo}, {hi}] has no positive width"
                )));
            }
        }
        Ok(Self { mins, maxs })
    }

    pub fn identity(dims: usize) -> Self {
        Self {
            mins: vec![-1.0; dims],
            maxs: vec![1.0; dims],
        }
    }

    /// Bounds taken from the data. A constant column is widened to `v ± 1`
    /// so the map stays invertible.
    pub fn fit<'a, I>(dims: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut mins = vec![f64::INFINITY; dims];
        let mut maxs = vec![f64::NEG_INFINITY; dims];
        let mut seen = false;
        for row in rows {
            if row.len() != dims {
                return Err(Error::Shape {
                    expected: dims,
                    got: row.len(),
                });
            }
            seen = true;
            for (k, &v) in row.iter().enumerate() {
                mins[k] = mins[k].min(v);
                maxs[k] = maxs[k].max(v);
            }
        }
        if !seen {
            return Err(Error::Input("cannot fit a scaler to no data".into()));
        }
        for (lo, hi) in mins.iter_mut().zip(maxs.iter_mut()) {
            if *hi <= *lo {
                *lo -= 1.0;
                *hi += 1.0;
            }
        }
        Self::new(mins, maxs)
    }

    pub fn dims(&self) -> usize {
        self.mins.len()
    }

    pub fn mins(&self) -> &[f64] {
        &self.mins
    }

    pub fn maxs(&self) -> &[f64] {
        &self.maxs
    }

    #[inline]
    pub fn scale(&self, k: usize, v: f64) -> f64 {
        2.0 * (v - self.mins[k]) / (self.maxs[k] - self.mins[k]) - 1.0
    }

    #[inline]
    pub fn descale(&self, k: usize, s: f64) -> f64 {
        (s + 1.0) * 0.5 * (self.maxs[k] - self.mins[k]) + self.mins[k]
    }

    /// d(scaled)/d(raw) for dimension `k`.
    pub fn gain(&self, k: usize) -> f64 {
        2.0 / (self.maxs[k] - self.mins[k])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    spec: MlpSpec,
    params: Vec<f64>,
    input_scaler: Scaler,
    output_scaler: Scaler,
}

impl Mlp {
    /// Weights and biases uniform in `±1/√fan_in`; identity scalers.
    pub fn init(spec: MlpSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(spec.num_params());
        for w in spec.layer_sizes.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..(w[0] + 1) * w[1] {
                params.push(rng.random_range(-bound..=bound));
            }
        }
        let inputs = spec.inputs();
        Self {
            spec,
            params,
            input_scaler: Scaler::identity(inputs),
            output_scaler: Scaler::identity(1),
        }
    }

    pub fn from_parts(spec: MlpSpec, params: Vec<f64>, input_scaler: Scaler, output_scaler: Scaler) -> Result<Self> {
        if params.len() != spec.num_params() {
            return Err(Error::Shape {
                expected: spec.num_params(),
                got: params.len(),
            });
        }
        if input_scaler.dims() != spec.inputs() {
            return Err(Error::Shape {
                expected: spec.inputs(),
                got: input_scaler.dims(),
            });
        }
        if output_scaler.dims() != 1 {
            return Err(Error::Shape {
                expected: 1,
                got: output_scaler.dims(),
            });
        }
        Ok(Self {
            spec,
            params,
            input_scaler,
            output_scaler,
        })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn inputs(&self) -> usize {
        self.spec.inputs()
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::Shape {
                expected: self.params.len(),
                got: params.len(),
            });
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    pub fn input_scaler(&self) -> &Scaler {
        &self.input_scaler
    }

    pub fn output_scaler(&self) -> &Scaler {
        &self.output_scaler
    }

    pub fn set_scalers(&mut self, input: Scaler, output: Scaler) -> Result<()> {
        if input.dims() != self.inputs() {
            return Err(Error::Shape {
                expected: self.inputs(),
                got: input.dims(),
            });
        }
        if output.dims() != 1 {
            return Err(Error::Shape {
                expected: 1,
                got: output.dims(),
            });
        }
        self.input_scaler = input;
        self.output_scaler = output;
        Ok(())
    }

    /// Sets both scalers from the bounds of a training set.
    pub fn fit_scalers(&mut self, inputs: &[Vec<f64>], targets: &[f64]) -> Result<()> {
        let input = Scaler::fit(self.inputs(), inputs.iter().map(Vec::as_slice))?;
        let output = Scaler::fit(1, targets.iter().map(std::slice::from_ref))?;
        self.set_scalers(input, output)
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.inputs() {
            return Err(Error::Shape {
                expected: self.inputs(),
                got: input.len(),
            });
        }
        Ok(())
    }

    /// Activations of every layer for one sample; the first entry is the scaled input.
    fn activations(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let sizes = &self.spec.layer_sizes;
        let last = sizes.len() - 1;
        let mut acts = Vec::with_capacity(sizes.len());
        acts.push(
            input
                .iter()
                .enumerate()
                .map(|(k, &v)| self.input_scaler.scale(k, v))
                .collect::<Vec<_>>(),
        );
        let mut offset = 0;
        for l in 1..=last {
            let fan_in = sizes[l - 1];
            let act = if l == last {
                Activation::Linear
            } else {
                self.spec.hidden
            };
            let prev = &acts[l - 1];
            let mut out = Vec::with_capacity(sizes[l]);
            for _ in 0..sizes[l] {
                let neuron = &self.params[offset..offset + fan_in + 1];
                let z = neuron[0] + neuron[1..].iter().zip(prev).map(|(w, a)| w * a).sum::<f64>();
                out.push(act.apply(z));
                offset += fan_in + 1;
            }
            acts.push(out);
        }
        acts
    }

    /// Network output in scaled units, before the output scaler is undone.
    pub fn raw_output(&self, input: &[f64]) -> Result<f64> {
        self.check_input(input)?;
        Ok(self.activations(input).last().unwrap()[0])
    }

    pub fn forward(&self, input: &[f64]) -> Result<f64> {
        Ok(self.output_scaler.descale(0, self.raw_output(input)?))
    }

    pub fn forward_batch(&self, inputs: &[Vec<f64>]) -> Result<Vec<f64>> {
        inputs.par_iter().map(|x| self.forward(x)).collect()
    }

    /// Gradient of the scaled output with respect to every parameter, by backpropagation.
    pub(crate) fn gradient_into(&self, input: &[f64], grad: &mut [f64]) -> f64 {
        let sizes = &self.spec.layer_sizes;
        let last = sizes.len() - 1;
        let acts = self.activations(input);

        let mut offsets = Vec::with_capacity(sizes.len());
        let mut off = 0;
        for l in 1..=last {
            offsets.push(off);
            off += (sizes[l - 1] + 1) * sizes[l];
        }

        // delta = d(output)/d(pre-activation) of the current layer
        let mut delta = vec![1.0];
        for l in (1..=last).rev() {
            let fan_in = sizes[l - 1];
            let base = offsets[l - 1];
            let prev = &acts[l - 1];
            for (j, &dj) in delta.iter().enumerate() {
                let start = base + j * (fan_in + 1);
                grad[start] = dj;
                for (i, &a) in prev.iter().enumerate() {
                    grad[start + 1 + i] = dj * a;
                }
            }
            if l > 1 {
                let act = self.spec.hidden;
                let mut next = vec![0.0; fan_in];
                for (j, &dj) in delta.iter().enumerate() {
                    let start = base + j * (fan_in + 1) + 1;
                    for (i, n) in next.iter_mut().enumerate() {
                        *n += self.params[start + i] * dj;
                    }
                }
                for (n, &a) in next.iter_mut().zip(prev) {
                    *n *= act.slope_from_output(a);
                }
                delta = next;
            }
        }
        acts[last][0]
    }

    /// One row per sample: derivative of the scaled output (and so of the
    /// training residual) with respect to each parameter.
    pub fn jacobian(&self, inputs: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        if inputs.is_empty() {
            return Err(Error::Input("jacobian of an empty batch".into()));
        }
        for x in inputs {
            self.check_input(x)?;
        }
        let p = self.num_params();
        let rows: Vec<Vec<f64>> = inputs
            .par_iter()
            .map(|x| {
                let mut g = vec![0.0; p];
                self.gradient_into(x, &mut g);
                g
            })
            .collect();
        Ok(DMatrix::from_fn(inputs.len(), p, |r, c| rows[r][c]))
    }
}
