use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::Mlp;
use crate::lm::{self, LeastSquaresProblem, LmOptions, NormalEquations, StopReason};
use crate::{Error, Result};

/// Full-batch Levenberg–Marquardt settings; the MSE goal is in scaled output units.
pub type TrainOptions = LmOptions;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub iterations: usize,
    pub final_mse: f64,
    pub mse_history: Vec<f64>,
    pub converged: bool,
    pub damping_final: f64,
    pub stop: StopReason,
}

impl std::fmt::Display for TrainReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "iterations={}", self.iterations)?;
        writeln!(f, "final_mse={}", self.final_mse)?;
        writeln!(f, "converged={}", self.converged)?;
        writeln!(f, "stop={:?}", self.stop)?;
        writeln!(f, "damping_final={}", self.damping_final)?;
        let hist: Vec<String> = self.mse_history.iter().map(f64::to_string).collect();
        writeln!(f, "mse_history={}", hist.join(" "))
    }
}

// Rows per JᵀJ accumulation block, independent of the thread count.
const BLOCK: usize = 256;

struct NetProblem<'a> {
    net: &'a mut Mlp,
    inputs: &'a [Vec<f64>],
    targets: Vec<f64>,
}

impl NetProblem<'_> {
    fn residual(&self, k: usize) -> f64 {
        self.net.activations(&self.inputs[k]).last().unwrap()[0] - self.targets[k]
    }
}

impl LeastSquaresProblem for NetProblem<'_> {
    fn num_params(&self) -> usize {
        self.net.num_params()
    }

    fn params(&self) -> DVector<f64> {
        DVector::from_column_slice(self.net.params())
    }

    fn set_params(&mut self, params: &DVector<f64>) {
        self.net.params.copy_from_slice(params.as_slice());
    }

    fn sse(&self) -> Result<(f64, usize)> {
        let sq: Vec<f64> = (0..self.inputs.len())
            .into_par_iter()
            .map(|k| self.residual(k).powi(2))
            .collect();
        Ok((sq.iter().sum(), sq.len()))
    }

    fn normal_equations(&self) -> Result<NormalEquations> {
        let p = self.net.num_params();
        let n = self.inputs.len();
        let blocks: Vec<(DMatrix<f64>, DVector<f64>, f64)> = (0..n.div_ceil(BLOCK))
            .into_par_iter()
            .map(|b| {
                let lo = b * BLOCK;
                let hi = (lo + BLOCK).min(n);
                let rows = hi - lo;
                // column k of `jt` is the gradient of sample lo + k
                let mut jt = DMatrix::<f64>::zeros(p, rows);
                let mut r = DVector::<f64>::zeros(rows);
                {
                    let data = jt.as_mut_slice();
                    for k in 0..rows {
                        let out = self
                            .net
                            .gradient_into(&self.inputs[lo + k], &mut data[k * p..(k + 1) * p]);
                        r[k] = out - self.targets[lo + k];
                    }
                }
                let j = jt.transpose();
                (&jt * &j, &jt * &r, r.norm_squared())
            })
            .collect();
        let mut jtj = DMatrix::zeros(p, p);
        let mut jtr = DVector::zeros(p);
        let mut sse = 0.0;
        for (a, g, s) in blocks {
            jtj += a;
            jtr += g;
            sse += s;
        }
        Ok(NormalEquations {
            jtj,
            jtr,
            sse,
            n_residuals: n,
        })
    }
}

/// Trains `net` in place on `(inputs, targets)` with the network's current scalers.
pub fn lm_train(net: &mut Mlp, inputs: &[Vec<f64>], targets: &[f64], opts: &TrainOptions) -> Result<TrainReport> {
    if inputs.len() != targets.len() {
        return Err(Error::Shape {
            expected: inputs.len(),
            got: targets.len(),
        });
    }
    if inputs.is_empty() {
        return Err(Error::Input("training set is empty".into()));
    }
    for x in inputs {
        net.check_input(x)?;
    }
    if inputs.len() < net.num_params() {
        log::warn!(
            "{} training samples for {} parameters; the fit is underdetermined",
            inputs.len(),
            net.num_params()
        );
    }
    let targets = targets.iter().map(|&t| net.output_scaler.scale(0, t)).collect();
    let mut problem = NetProblem { net, inputs, targets };
    let report = lm::minimize(&mut problem, opts)?;
    log::debug!(
        "training stopped after {} steps ({:?}), mse {}",
        report.iterations,
        report.stop,
        report.final_mse
    );
    Ok(TrainReport {
        iterations: report.iterations,
        final_mse: report.final_mse,
        mse_history: report.mse_history,
        converged: report.converged,
        damping_final: report.damping_final,
        stop: report.stop,
    })
}
