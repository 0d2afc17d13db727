use super::{scaled_inf_norm, SolverError, System};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    /// Tolerance on the (row-scaled) residual infinity norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    /// Smallest line-search fraction before giving up.
    pub step_min: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 50,
            armijo: 1e-4,
            step_min: 1.0 / 1024.0,
        }
    }
}

impl NewtonOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.tol > 0.0) {
            return Err(SolverError::Options("tol must be positive".into()));
        }
        if !(self.armijo > 0.0 && self.armijo < 0.5) {
            return Err(SolverError::Options("armijo must lie in (0, 0.5)".into()));
        }
        if !(self.step_min > 0.0 && self.step_min < 1.0) {
            return Err(SolverError::Options("step_min must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    /// Residual norm before every iteration and after the last one.
    pub residuals: Vec<f64>,
    /// Accepted line-search fractions.
    pub steps: Vec<f64>,
}

/// Damped Newton iteration with backtracking on `||R F||^2`.
///
/// `rows` optionally equilibrates the residual; convergence and the merit
/// function both use the scaled residual. Evaluation failures during the
/// line search count as an infinite merit and trigger backtracking.
pub fn newton_solve<S: System + ?Sized>(
    sys: &S,
    w0: &[f64],
    p: f64,
    opts: &NewtonOptions,
    rows: Option<&[f64]>,
) -> Result<(Vec<f64>, NewtonReport), SolverError> {
    opts.validate()?;
    let n = sys.dim();
    let mut w = w0.to_vec();
    let mut f = sys.residual_vec(&w, p)?;
    let merit = |f: &[f64]| -> f64 {
        match rows {
            Some(r) => f.iter().zip(r).map(|(x, s)| (x * s) * (x * s)).sum::<f64>() * 0.5,
            None => f.iter().map(|x| x * x).sum::<f64>() * 0.5,
        }
    };
    let mut report = NewtonReport::default();
    let mut trial = vec![0.0; n];
    let mut f_trial = vec![0.0; n];
    loop {
        let norm = scaled_inf_norm(&f, rows);
        report.residuals.push(norm);
        if !norm.is_finite() {
            return Err(SolverError::LineSearch {
                iterations: report.iterations,
                residual: norm,
                log: report.residuals,
            });
        }
        if norm <= opts.tol {
            return Ok((w, report));
        }
        if report.iterations >= opts.max_iter {
            return Err(SolverError::MaxIterations {
                iterations: report.iterations,
                residual: norm,
                log: report.residuals,
            });
        }
        let lu = sys.jacobian(&w, p)?.factor()?;
        let mut dw: Vec<f64> = f.iter().map(|x| -x).collect();
        lu.solve_in_place(&mut dw)?;
        let phi0 = merit(&f);
        let mut alpha = 1.0;
        loop {
            for i in 0..n {
                trial[i] = w[i] + alpha * dw[i];
            }
            let phi = match sys.residual(&trial, p, &mut f_trial) {
                Ok(()) => merit(&f_trial),
                Err(_) => f64::INFINITY,
            };
            // the Newton direction has directional derivative -2 phi0
            if phi.is_finite() && phi <= (1.0 - 2.0 * opts.armijo * alpha) * phi0 {
                break;
            }
            alpha *= 0.5;
            if alpha < opts.step_min {
                return Err(SolverError::LineSearch {
                    iterations: report.iterations,
                    residual: norm,
                    log: report.residuals,
                });
            }
        }
        std::mem::swap(&mut w, &mut trial);
        std::mem::swap(&mut f, &mut f_trial);
        report.steps.push(alpha);
        report.iterations += 1;
    }
}
