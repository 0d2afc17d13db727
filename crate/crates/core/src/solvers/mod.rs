//! Nonlinear and time-stepping drivers for banded systems `F(w, p) = 0` and
//! `M dw/dt = F(w, p)`.

use thiserror::Error;

use crate::fvm::SemiDiscreteSystem;
use crate::linalg::{BandMatrix, LinalgError};

mod continuation;
mod esdirk;
mod newton;

pub use continuation::{
    plac_trace, turning_points, Branch, BranchPoint, ContinuationOptions, StopReason,
};
pub use esdirk::{
    consistent_initialization, esdirk_integrate, steady_vs_dynamic_check, IntegrationOptions,
    TableauSpec, Trajectory,
};
pub use newton::{newton_solve, NewtonOptions, NewtonReport};

/// Failure inside a residual or Jacobian callback.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct EvalError(pub String);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("linear solve failed: {0}")]
    Linear(#[from] LinalgError),
    #[error("Newton did not converge in {iterations} iterations, residual {residual:.3e}")]
    MaxIterations {
        iterations: usize,
        residual: f64,
        log: Vec<f64>,
    },
    #[error("line search stalled after {iterations} iterations, residual {residual:.3e}")]
    LineSearch {
        iterations: usize,
        residual: f64,
        log: Vec<f64>,
    },
    #[error("continuation seed is not a solution, residual {0:.3e}")]
    SeedNotConverged(f64),
    #[error("continuation stalled at p = {lambda} after {points} points (step below minimum)")]
    ContinuationStalled { points: usize, lambda: f64 },
    #[error("step size underflow at t = {t}, h = {h:.3e}")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("inconsistent initial condition, algebraic residual {0:.3e}")]
    Inconsistent(f64),
    #[error("invalid options: {0}")]
    Options(String),
}

/// A square system with a banded Jacobian and one scalar parameter.
pub trait System {
    fn dim(&self) -> usize;

    fn residual(&self, w: &[f64], p: f64, out: &mut [f64]) -> Result<(), EvalError>;

    fn jacobian(&self, w: &[f64], p: f64) -> Result<BandMatrix, EvalError>;

    /// `dF/dp`, by central differences unless overridden.
    fn dparam(&self, w: &[f64], p: f64) -> Result<Vec<f64>, EvalError> {
        let step = 1e-6 * p.abs().max(1.0);
        let n = self.dim();
        let mut fp = vec![0.0; n];
        let mut fm = vec![0.0; n];
        self.residual(w, p + step, &mut fp)?;
        self.residual(w, p - step, &mut fm)?;
        Ok(fp
            .iter()
            .zip(&fm)
            .map(|(a, b)| (a - b) / (2.0 * step))
            .collect())
    }

    /// Row weights for residual norms given the variable scales; `None`
    /// selects Jacobian row equilibration.
    fn residual_weights(&self, _var_scales: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn residual_vec(&self, w: &[f64], p: f64) -> Result<Vec<f64>, EvalError> {
        let mut out = vec![0.0; self.dim()];
        self.residual(w, p, &mut out)?;
        Ok(out)
    }
}

impl System for SemiDiscreteSystem {
    fn dim(&self) -> usize {
        SemiDiscreteSystem::dim(self)
    }

    fn residual(&self, w: &[f64], p: f64, out: &mut [f64]) -> Result<(), EvalError> {
        SemiDiscreteSystem::residual(self, w, p, out).map_err(|e| EvalError(e.to_string()))
    }

    fn jacobian(&self, w: &[f64], p: f64) -> Result<BandMatrix, EvalError> {
        SemiDiscreteSystem::jacobian(self, w, p).map_err(|e| EvalError(e.to_string()))
    }

    fn residual_weights(&self, var_scales: &[f64]) -> Option<Vec<f64>> {
        Some(self.residual_scales(var_scales))
    }

    fn dparam(&self, w: &[f64], p: f64) -> Result<Vec<f64>, EvalError> {
        self.dlambda(w, p).map_err(|e| EvalError(e.to_string()))
    }
}

/// System-provided residual weights, or Jacobian row equilibration at `w`.
pub fn residual_weights<S: System + ?Sized>(
    sys: &S,
    w: &[f64],
    p: f64,
    var_scales: &[f64],
) -> Result<Vec<f64>, EvalError> {
    match sys.residual_weights(var_scales) {
        Some(r) => Ok(r),
        None => Ok(row_scales(&sys.jacobian(w, p)?, var_scales)),
    }
}

/// Row equilibration `r_i = 1 / max_j |J_ij s_j|` for variable scales `s`.
pub fn row_scales(jac: &BandMatrix, var_scales: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0f64; jac.n()];
    jac.for_each(|i, j, v| r[i] = r[i].max((v * var_scales[j]).abs()));
    r.iter()
        .map(|&m| if m > 0.0 { 1.0 / m } else { 1.0 })
        .collect()
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub(crate) fn scaled_inf_norm(v: &[f64], rows: Option<&[f64]>) -> f64 {
    match rows {
        Some(r) => v.iter().zip(r).fold(0.0, |m, (x, s)| m.max((x * s).abs())),
        None => inf_norm(v),
    }
}

#[cfg(test)]
mod tests;
