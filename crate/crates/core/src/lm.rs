//! Damped Gauss–Newton (Levenberg–Marquardt) for small dense problems.
//!
//! Each step solves `(JᵀJ + μI) δ = −Jᵀr`. A step is accepted only when it
//! strictly lowers the mean squared residual; then μ is divided by
//! `damping_down`. A rejected step multiplies μ by `damping_up` and retries
//! from the same point. Large μ turns the step into a short gradient-descent
//! step. Small μ turns it into a Gauss–Newton step.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// `JᵀJ`, `Jᵀr` and the residual sum of squares at the current parameters.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    pub jtj: DMatrix<f64>,
    pub jtr: DVector<f64>,
    pub sse: f64,
    pub n_residuals: usize,
}

impl NormalEquations {
    pub fn from_jacobian(jacobian: &DMatrix<f64>, residuals: &DVector<f64>) -> Self {
        let jt = jacobian.transpose();
        Self {
            jtj: &jt * jacobian,
            jtr: &jt * residuals,
            sse: residuals.norm_squared(),
            n_residuals: residuals.len(),
        }
    }

    pub fn mse(&self) -> f64 {
        self.sse / self.n_residuals as f64
    }
}

/// A least-squares problem over a flat parameter vector.
pub trait LeastSquaresProblem {
    fn num_params(&self) -> usize;

    fn params(&self) -> DVector<f64>;

    fn set_params(&mut self, params: &DVector<f64>);

    /// Residual sum of squares and residual count at the current parameters.
    fn sse(&self) -> Result<(f64, usize)>;

    /// Normal equations at the current parameters.
    fn normal_equations(&self) -> Result<NormalEquations>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop once the mean squared residual is at or below this.
    pub mse_goal: f64,
    pub damping_init: f64,
    pub damping_up: f64,
    pub damping_down: f64,
    /// Escalating past this ends the run.
    pub damping_max: f64,
    /// Stop when an accepted step improves the MSE by less than this fraction.
    /// Zero disables the test.
    pub rel_improvement_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            mse_goal: 1e-6,
            damping_init: 1e-3,
            damping_up: 10.0,
            damping_down: 10.0,
            damping_max: 1e10,
            rel_improvement_tol: 0.0,
        }
    }
}

impl LmOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.mse_goal >= 0.0
            && self.damping_init > 0.0
            && self.damping_up > 1.0
            && self.damping_down > 1.0
            && self.damping_max >= self.damping_init
            && self.rel_improvement_tol >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid Levenberg–Marquardt options {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MseGoal,
    MaxIterations,
    DampingOverflow,
    SmallImprovement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmReport {
    /// Accepted steps taken.
    pub iterations: usize,
    pub final_mse: f64,
    /// MSE at the start and after every accepted step.
    pub mse_history: Vec<f64>,
    /// True when the MSE goal was reached.
    pub converged: bool,
    pub damping_final: f64,
    pub stop: StopReason,
}

/// Solves `(JᵀJ + μI) δ = −Jᵀr`. `None` if the damped matrix is not positive definite.
pub fn lm_step(ne: &NormalEquations, damping: f64) -> Option<DVector<f64>> {
    let mut a = ne.jtj.clone();
    for i in 0..a.nrows() {
        a[(i, i)] += damping;
    }
    let chol = a.cholesky()?;
    let step = chol.solve(&(-&ne.jtr));
    step.iter().all(|v| v.is_finite()).then_some(step)
}

pub fn minimize<P: LeastSquaresProblem + ?Sized>(problem: &mut P, opts: &LmOptions) -> Result<LmReport> {
    opts.validate()?;
    let mut ne = problem.normal_equations()?;
    let mut mse = ne.mse();
    if !mse.is_finite() {
        return Err(Error::Training("initial residuals are not finite".into()));
    }
    let mut history = vec![mse];
    let mut damping = opts.damping_init;
    let mut iterations = 0;

    let stop = loop {
        if mse <= opts.mse_goal {
            break StopReason::MseGoal;
        }
        if iterations >= opts.max_iter {
            break StopReason::MaxIterations;
        }
        let start = problem.params();
        let mut any_solved = false;
        let mut accepted = None;
        while damping <= opts.damping_max {
            if let Some(step) = lm_step(&ne, damping) {
                any_solved = true;
                problem.set_params(&(&start + &step));
                let (sse, n) = problem.sse()?;
                let trial = sse / n as f64;
                if trial < mse {
                    accepted = Some(trial);
                    break;
                }
            }
            damping *= opts.damping_up;
        }
        let Some(new_mse) = accepted else {
            problem.set_params(&start);
            if !any_solved {
                return Err(Error::Training(format!(
                    "normal equations stayed singular up to damping {:e}",
                    opts.damping_max
                )));
            }
            break StopReason::DampingOverflow;
        };
        iterations += 1;
        damping = (damping / opts.damping_down).max(f64::MIN_POSITIVE);
        let improvement = (mse - new_mse) / mse;
        mse = new_mse;
        history.push(mse);
        if opts.rel_improvement_tol > 0.0 && improvement < opts.rel_improvement_tol {
            break StopReason::SmallImprovement;
        }
        ne = problem.normal_equations()?;
    };

    Ok(LmReport {
        iterations,
        final_mse: mse,
        mse_history: history,
        converged: stop == StopReason::MseGoal,
        damping_final: damping,
        stop,
    })
}
