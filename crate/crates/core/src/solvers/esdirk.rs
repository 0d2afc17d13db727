//! Stiffly accurate ESDIRK integration of `M dw/dt = F(w, p(t))` with a
//! diagonal 0/1 mass matrix.

use super::{
    newton_solve, residual_weights, row_scales, EvalError, NewtonOptions, SolverError, System,
};
use crate::linalg::BandMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct TableauSpec {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub b_hat: Vec<f64>,
    pub c: Vec<f64>,
    pub order: u32,
    pub embedded_order: u32,
}

impl TableauSpec {
    /// Four-stage ESDIRK3(2) with `gamma` the middle root of
    /// `6 g^3 - 18 g^2 + 9 g - 1`; the embedded solution is stage 3.
    pub fn esdirk32() -> Self {
        let g = 0.435_866_521_508_458_999_416;
        let a = vec![
            vec![0.0, 0.0, 0.0, 0.0],
            vec![g, g, 0.0, 0.0],
            vec![
                0.490_563_388_421_780_570_63,
                0.073_570_090_069_760_429_956,
                g,
                0.0,
            ],
            vec![
                0.308_809_969_976_746_523_35,
                1.490_563_388_421_780_570_6,
                -1.235_239_879_906_986_093_4,
                g,
            ],
        ];
        let b = a[3].clone();
        let b_hat = vec![a[2][0], a[2][1], a[2][2], 0.0];
        Self {
            a,
            b,
            b_hat,
            c: vec![0.0, 2.0 * g, 1.0, 1.0],
            order: 3,
            embedded_order: 2,
        }
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn gamma(&self) -> f64 {
        self.a[1][1]
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let s = self.stages();
        let bad = |m: &str| Err(SolverError::Options(format!("tableau: {m}")));
        if self.a.len() != s || self.c.len() != s || self.b_hat.len() != s || s < 2 {
            return bad("inconsistent sizes");
        }
        if self.a[0].iter().any(|&x| x != 0.0) {
            return bad("first stage must be explicit");
        }
        let g = self.gamma();
        for i in 0..s {
            if self.a[i].len() != s {
                return bad("a must be square");
            }
            for j in i + 1..s {
                if self.a[i][j] != 0.0 {
                    return bad("a must be lower triangular");
                }
            }
            if i >= 1 && self.a[i][i] != g {
                return bad("diagonal must be constant");
            }
            let row: f64 = self.a[i].iter().sum();
            if (row - self.c[i]).abs() > 1e-12 {
                return bad("row sums must equal c");
            }
        }
        if self.b != self.a[s - 1] {
            return bad("not stiffly accurate");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegrationOptions {
    /// Absolute tolerance in units of the variable scales.
    pub atol: f64,
    pub rtol: f64,
    pub h0: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Constant steps without error control.
    pub fixed_step: Option<f64>,
    /// Stage convergence on the weighted update norm.
    pub newton_tol: f64,
    /// Row-scaled bound on algebraic residuals at accepted stages.
    pub algebraic_tol: f64,
    pub max_newton: usize,
    pub max_steps: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            atol: 1e-5,
            rtol: 1e-5,
            h0: 1e-3,
            h_min: 1e-10,
            h_max: f64::INFINITY,
            fixed_step: None,
            newton_tol: 0.03,
            algebraic_tol: 1e-8,
            max_newton: 10,
            max_steps: 200_000,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub w: Vec<Vec<f64>>,
    pub accepted: usize,
    pub rejected: usize,
    pub stage_failures: usize,
}

impl Trajectory {
    pub fn last(&self) -> Option<(f64, &[f64])> {
        self.t
            .last()
            .map(|&t| (t, self.w.last().unwrap().as_slice()))
    }
}

/// Differential rows pinned to `x0`, algebraic rows from the system.
struct Pinned<'a, S: ?Sized> {
    sys: &'a S,
    mass: &'a [f64],
    w0: &'a [f64],
}

impl<S: System + ?Sized> System for Pinned<'_, S> {
    fn dim(&self) -> usize {
        self.sys.dim()
    }

    fn residual(&self, w: &[f64], p: f64, out: &mut [f64]) -> Result<(), EvalError> {
        self.sys.residual(w, p, out)?;
        for i in 0..out.len() {
            if self.mass[i] != 0.0 {
                out[i] = w[i] - self.w0[i];
            }
        }
        Ok(())
    }

    fn jacobian(&self, w: &[f64], p: f64) -> Result<BandMatrix, EvalError> {
        let mut j = self.sys.jacobian(w, p)?;
        let n = j.n();
        let mut keep = vec![1.0; n];
        for i in 0..n {
            if self.mass[i] != 0.0 {
                keep[i] = 0.0;
            }
        }
        j.scale_rows(&keep);
        for i in 0..n {
            if self.mass[i] != 0.0 {
                j.set(i, i, 1.0);
            }
        }
        Ok(j)
    }
}

/// Solve the algebraic rows for their unknowns with the differential
/// unknowns held fixed.
pub fn consistent_initialization<S: System + ?Sized>(
    sys: &S,
    mass: &[f64],
    w0: &[f64],
    p: f64,
    var_scales: &[f64],
    tol: f64,
) -> Result<Vec<f64>, SolverError> {
    let pinned = Pinned { sys, mass, w0 };
    let rows = match sys.residual_weights(var_scales) {
        Some(r) => r,
        None => row_scales(&pinned.jacobian(w0, p)?, var_scales),
    };
    let opts = NewtonOptions {
        tol,
        max_iter: 30,
        ..NewtonOptions::default()
    };
    match newton_solve(&pinned, w0, p, &opts, Some(&rows)) {
        Ok((w, _)) => Ok(w),
        Err(SolverError::Eval(e)) => Err(SolverError::Eval(e)),
        Err(e) => Err(SolverError::Inconsistent(match e {
            SolverError::MaxIterations { residual, .. }
            | SolverError::LineSearch { residual, .. } => residual,
            _ => f64::NAN,
        })),
    }
}

fn weights(atol: f64, rtol: f64, s: &[f64], a: &[f64], b: &[f64]) -> Vec<f64> {
    (0..s.len())
        .map(|i| atol * s[i] + rtol * a[i].abs().max(b[i].abs()))
        .collect()
}

/// Integrate from `t_span.0` to `t_span.1`. The initial state is first made
/// consistent on the algebraic rows; every accepted step is recorded.
#[allow(clippy::too_many_arguments)]
pub fn esdirk_integrate<S: System + ?Sized>(
    sys: &S,
    mass: &[f64],
    w0: &[f64],
    param: &dyn Fn(f64) -> f64,
    t_span: (f64, f64),
    tab: &TableauSpec,
    opts: &IntegrationOptions,
    var_scales: &[f64],
) -> Result<Trajectory, SolverError> {
    tab.validate()?;
    let n = sys.dim();
    let (t0, t_end) = t_span;
    if !(t_end > t0) {
        return Err(SolverError::Options("empty time span".into()));
    }
    let s = tab.stages();
    let gamma = tab.gamma();
    let differential: Vec<usize> = (0..n).filter(|&i| mass[i] != 0.0).collect();
    let algebraic: Vec<usize> = (0..n).filter(|&i| mass[i] == 0.0).collect();

    let mut w = if algebraic.is_empty() {
        w0.to_vec()
    } else {
        consistent_initialization(sys, mass, w0, param(t0), var_scales, opts.algebraic_tol)?
    };
    let rows = residual_weights(sys, &w, param(t0), var_scales)?;
    let alg_norm = |f: &[f64]| {
        algebraic
            .iter()
            .fold(0.0f64, |m, &i| m.max((f[i] * rows[i]).abs()))
    };

    let mut traj = Trajectory {
        t: vec![t0],
        w: vec![w.clone()],
        ..Trajectory::default()
    };
    let mut t = t0;
    let mut h = opts.fixed_step.unwrap_or(opts.h0).min(opts.h_max);
    let mut err_prev: f64 = 1.0;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; s];
    k[0] = sys.residual_vec(&w, param(t))?;
    let mut stages: Vec<Vec<f64>> = vec![vec![0.0; n]; s];
    let mut f = vec![0.0; n];
    let mut consecutive_failures = 0usize;

    while t < t_end {
        if traj.accepted + traj.rejected >= opts.max_steps {
            return Err(SolverError::StepSizeUnderflow { t, h });
        }
        let last_step = t + h >= t_end;
        if last_step {
            h = t_end - t;
        }
        let jac = sys.jacobian(&w, param(t))?;
        let lu = jac.scaled_plus_diag(-h * gamma, mass).factor()?;
        stages[0].copy_from_slice(&w);

        let mut stage_ok = true;
        for i in 1..s {
            let ti = t + tab.c[i] * h;
            let pi = param(ti);
            // explicit part of the stage equation
            let mut rhs_base = vec![0.0; n];
            for j in 0..i {
                let aij = tab.a[i][j];
                if aij != 0.0 {
                    for r in 0..n {
                        rhs_base[r] += h * aij * k[j][r];
                    }
                }
            }
            let mut wi = stages[i - 1].clone();
            let mut converged = false;
            for _ in 0..opts.max_newton {
                if sys.residual(&wi, pi, &mut f).is_err() {
                    break;
                }
                let mut g: Vec<f64> = (0..n)
                    .map(|r| -(mass[r] * (wi[r] - w[r]) - rhs_base[r] - h * gamma * f[r]))
                    .collect();
                if lu.solve_in_place(&mut g).is_err() {
                    break;
                }
                let wts = weights(opts.atol, opts.rtol, var_scales, &wi, &w);
                let mut du = 0.0f64;
                for r in 0..n {
                    wi[r] += g[r];
                    du = du.max((g[r] / wts[r]).abs());
                }
                if !du.is_finite() {
                    break;
                }
                if du <= opts.newton_tol {
                    if sys.residual(&wi, pi, &mut f).is_err() {
                        break;
                    }
                    if alg_norm(&f) <= opts.algebraic_tol || du == 0.0 {
                        converged = true;
                        break;
                    }
                }
            }
            if !converged {
                stage_ok = false;
                break;
            }
            k[i].copy_from_slice(&f);
            stages[i] = wi;
        }

        if !stage_ok {
            traj.stage_failures += 1;
            consecutive_failures += 1;
            if opts.fixed_step.is_some() {
                return Err(SolverError::StepSizeUnderflow { t, h });
            }
            h *= 0.25;
            if h < opts.h_min || consecutive_failures > 20 {
                return Err(SolverError::StepSizeUnderflow { t, h });
            }
            continue;
        }
        consecutive_failures = 0;
        let w_new = &stages[s - 1];

        let err = if opts.fixed_step.is_some() || differential.is_empty() {
            0.0
        } else {
            let wts = weights(opts.atol, opts.rtol, var_scales, &w, w_new);
            let mut acc = 0.0;
            for &r in &differential {
                let mut e = 0.0;
                for j in 0..s {
                    e += (tab.b[j] - tab.b_hat[j]) * k[j][r];
                }
                let q = h * e / wts[r];
                acc += q * q;
            }
            (acc / differential.len() as f64).sqrt()
        };

        if err <= 1.0 {
            t = if last_step { t_end } else { t + h };
            w.copy_from_slice(w_new);
            k[0] = k[s - 1].clone();
            traj.t.push(t);
            traj.w.push(w.clone());
            traj.accepted += 1;
            if opts.fixed_step.is_none() {
                let e = err.max(1e-10);
                let fac = 0.9 * e.powf(-0.7 / 3.0) * err_prev.max(1e-10).powf(0.4 / 3.0);
                h = (h * fac.clamp(0.2, 5.0)).min(opts.h_max);
                err_prev = e;
            }
        } else {
            traj.rejected += 1;
            h *= (0.9 * err.powf(-1.0 / 3.0)).clamp(0.2, 0.9);
            if h < opts.h_min {
                return Err(SolverError::StepSizeUnderflow { t, h });
            }
        }
    }
    Ok(traj)
}

/// Largest scaled deviation `max |w(t) - w*| / s` while integrating from a
/// steady state at constant parameter.
#[allow(clippy::too_many_arguments)]
pub fn steady_vs_dynamic_check<S: System + ?Sized>(
    sys: &S,
    mass: &[f64],
    w_star: &[f64],
    p: f64,
    horizon: f64,
    tab: &TableauSpec,
    opts: &IntegrationOptions,
    var_scales: &[f64],
) -> Result<f64, SolverError> {
    let traj = esdirk_integrate(
        sys,
        mass,
        w_star,
        &|_| p,
        (0.0, horizon),
        tab,
        opts,
        var_scales,
    )?;
    let mut drift = 0.0f64;
    for w in &traj.w {
        for i in 0..w.len() {
            drift = drift.max(((w[i] - w_star[i]) / var_scales[i]).abs());
        }
    }
    Ok(drift)
}
