//! Pseudo-arclength continuation in a scaled (w, p) metric.

use super::{newton_solve, scaled_inf_norm, NewtonOptions, SolverError, System};
use crate::linalg::{BandLu, BandMatrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuationOptions {
    /// Steps are measured in the metric
    /// `ds^2 = mean((dw / s)^2) + (dp / p_scale)^2`.
    pub ds0: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub max_points: usize,
    pub p_scale: f64,
    /// Initial direction of travel in p, +1 or -1.
    pub direction: f64,
    pub newton: NewtonOptions,
    /// Corrector iteration cap per point.
    pub corrector_iter: usize,
    /// Corrector iteration count at or below which the step grows.
    pub fast_iter: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            ds0: 0.01,
            ds_min: 1e-6,
            ds_max: 0.05,
            p_min: f64::NEG_INFINITY,
            p_max: f64::INFINITY,
            max_points: 2000,
            p_scale: 1.0,
            direction: 1.0,
            newton: NewtonOptions::default(),
            corrector_iter: 10,
            fast_iter: 3,
        }
    }
}

impl ContinuationOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.ds_min > 0.0 && self.ds_min <= self.ds0 && self.ds0 <= self.ds_max) {
            return Err(SolverError::Options(
                "need 0 < ds_min <= ds0 <= ds_max".into(),
            ));
        }
        if !(self.p_scale > 0.0) || !(self.p_min < self.p_max) {
            return Err(SolverError::Options(
                "invalid parameter range or scale".into(),
            ));
        }
        if self.direction == 0.0 {
            return Err(SolverError::Options("direction must be nonzero".into()));
        }
        self.newton.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchPoint {
    pub w: Vec<f64>,
    pub p: f64,
    /// The secant's p-component changes sign at this point.
    pub turning: bool,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    LeftRange,
    MaxPoints,
    /// The branch returned to its seed.
    Closed,
    /// The step fell below `ds_min` without a converged corrector.
    Stalled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub stop: StopReason,
}

impl Branch {
    /// Errors if the trace stalled; the partial branch is discarded.
    pub fn into_result(self) -> Result<Self, SolverError> {
        match self.stop {
            StopReason::Stalled => Err(SolverError::ContinuationStalled {
                points: self.points.len(),
                lambda: self.points.last().map_or(f64::NAN, |p| p.p),
            }),
            _ => Ok(self),
        }
    }

    pub fn parameters(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.p).collect()
    }
}

struct Metric<'a> {
    s: &'a [f64],
    p_scale: f64,
}

impl Metric<'_> {
    fn dot(&self, a: &[f64], ap: f64, b: &[f64], bp: f64) -> f64 {
        let n = self.s.len() as f64;
        let mut acc = 0.0;
        for i in 0..self.s.len() {
            acc += a[i] * b[i] / (self.s[i] * self.s[i]);
        }
        acc / n + ap * bp / (self.p_scale * self.p_scale)
    }

    fn dist(&self, a: &[f64], ap: f64, b: &[f64], bp: f64) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.dot(&d, ap - bp, &d, ap - bp).sqrt()
    }

    fn normalize(&self, t: &mut [f64], tp: &mut f64) {
        let norm = self.dot(t, *tp, t, *tp).sqrt();
        t.iter_mut().for_each(|x| *x /= norm);
        *tp /= norm;
    }
}

/// Solve `[J b; c^T d] [x; y] = [f; g]` by block elimination with one
/// step of iterative refinement.
fn bordered_solve(
    jac: &BandMatrix,
    lu: &BandLu,
    b: &[f64],
    c: &[f64],
    d: f64,
    f: &[f64],
    g: f64,
) -> Result<(Vec<f64>, f64), SolverError> {
    let solve_once = |f: &[f64], g: f64| -> Result<(Vec<f64>, f64), SolverError> {
        let a = lu.solve(f)?;
        let z = lu.solve(b)?;
        let ca: f64 = c.iter().zip(&a).map(|(x, y)| x * y).sum();
        let cz: f64 = c.iter().zip(&z).map(|(x, y)| x * y).sum();
        let y = (g - ca) / (d - cz);
        let x = a.iter().zip(&z).map(|(ai, zi)| ai - zi * y).collect();
        Ok((x, y))
    };
    let (mut x, mut y) = solve_once(f, g)?;
    let jx = jac.mul_vec(&x);
    let r1: Vec<f64> = (0..f.len()).map(|i| f[i] - jx[i] - b[i] * y).collect();
    let r2 = g - c.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() - d * y;
    let (dx, dy) = solve_once(&r1, r2)?;
    x.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
    y += dy;
    Ok((x, y))
}

/// Tangent of `F(w, p) = 0` at a point where `F_w` may be singular, from
/// a dense bordered system. Only used to start a branch.
fn null_tangent<S: System + ?Sized>(
    sys: &S,
    w: &[f64],
    p: f64,
) -> Result<(Vec<f64>, f64), SolverError> {
    let n = sys.dim();
    let jac = sys.jacobian(w, p)?;
    let fp = sys.dparam(w, p)?;
    if let Ok(lu) = jac.clone().factor() {
        let mut t: Vec<f64> = fp.iter().map(|x| -x).collect();
        lu.solve_in_place(&mut t)?;
        return Ok((t, 1.0));
    }
    if n > 400 {
        return Err(SolverError::Options(
            "singular Jacobian at the seed of a large system".into(),
        ));
    }
    // border with unit rows until the augmented matrix is regular
    for k in (0..=n).rev() {
        let mut a = BandMatrix::zeros(n + 1, n, n);
        jac.for_each(|i, j, v| a.set(i, j, v));
        for (i, v) in fp.iter().enumerate() {
            a.set(i, n, *v);
        }
        a.set(n, k, 1.0);
        if let Ok(lu) = a.factor() {
            let mut rhs = vec![0.0; n + 1];
            rhs[n] = 1.0;
            lu.solve_in_place(&mut rhs)?;
            let tp = rhs.pop().unwrap();
            return Ok((rhs, tp));
        }
    }
    Err(SolverError::Options(
        "no tangent: rank of [F_w F_p] below n".into(),
    ))
}

/// Trace the solution branch through `(w0, p0)`.
///
/// The second point comes from natural continuation in `p`; when that
/// fails the first step follows the null-space tangent instead. Later
/// steps use normalized secants. `var_scales` define the metric and `rows`
/// the residual equilibration used by the convergence test.
pub fn plac_trace<S: System + ?Sized>(
    sys: &S,
    w0: &[f64],
    p0: f64,
    opts: &ContinuationOptions,
    var_scales: &[f64],
    rows: Option<&[f64]>,
) -> Result<Branch, SolverError> {
    opts.validate()?;
    let n = sys.dim();
    let metric = Metric {
        s: var_scales,
        p_scale: opts.p_scale,
    };
    let f0 = sys.residual_vec(w0, p0)?;
    let r0 = scaled_inf_norm(&f0, rows);
    if !(r0 <= opts.newton.tol) {
        return Err(SolverError::SeedNotConverged(r0));
    }
    let mut points = vec![BranchPoint {
        w: w0.to_vec(),
        p: p0,
        turning: false,
        iterations: 0,
    }];
    let dir = opts.direction.signum();

    let mut ds = opts.ds0;
    loop {
        let p1 = p0 + dir * ds * opts.p_scale;
        if let Ok((w1, rep)) = newton_solve(sys, w0, p1, &opts.newton, rows) {
            if metric.dist(&w1, p1, w0, p0) <= opts.ds_max {
                points.push(BranchPoint {
                    w: w1,
                    p: p1,
                    turning: false,
                    iterations: rep.iterations,
                });
                break;
            }
        }
        ds *= 0.5;
        if ds < opts.ds_min {
            break;
        }
    }
    let mut ds = ds.max(opts.ds_min);

    let (mut t, mut tp) = if points.len() == 2 {
        let t: Vec<f64> = points[1].w.iter().zip(w0).map(|(a, b)| a - b).collect();
        (t, points[1].p - p0)
    } else {
        let (t, tp) = null_tangent(sys, w0, p0)?;
        let flip = if tp * dir < 0.0 { -1.0 } else { 1.0 };
        (t.iter().map(|x| x * flip).collect(), tp * flip)
    };
    metric.normalize(&mut t, &mut tp);
    let mut last_secant_p = if points.len() == 2 { tp } else { 0.0 };

    let mut stop = StopReason::MaxPoints;
    let mut f = vec![0.0; n];
    while points.len() < opts.max_points {
        let last = points.last().unwrap();
        let (wl, pl) = (last.w.clone(), last.p);
        let mut w: Vec<f64> = wl.iter().zip(&t).map(|(a, b)| a + ds * b).collect();
        let mut p = pl + ds * tp;
        // border row: <(w - wl, p - pl), t> - ds in the metric
        let c: Vec<f64> = (0..n)
            .map(|i| t[i] / (var_scales[i] * var_scales[i] * n as f64))
            .collect();
        let d = tp / (opts.p_scale * opts.p_scale);
        let mut converged = None;
        for it in 0..opts.corrector_iter {
            if sys.residual(&w, p, &mut f).is_err() {
                break;
            }
            let g = metric.dot(
                &w.iter().zip(&wl).map(|(a, b)| a - b).collect::<Vec<_>>(),
                p - pl,
                &t,
                tp,
            ) - ds;
            let r = scaled_inf_norm(&f, rows);
            if !r.is_finite() {
                break;
            }
            if r <= opts.newton.tol && g.abs() <= 1e-6 * ds {
                converged = Some(it);
                break;
            }
            let Ok(mut jac) = sys.jacobian(&w, p) else {
                break;
            };
            let Ok(mut fp) = sys.dparam(&w, p) else { break };
            let mut rhs: Vec<f64> = f.iter().map(|x| -x).collect();
            if let Some(r) = rows {
                jac.scale_rows(r);
                for i in 0..n {
                    fp[i] *= r[i];
                    rhs[i] *= r[i];
                }
            }
            let Ok(lu) = jac.clone().factor() else { break };
            let Ok((dw, dp)) = bordered_solve(&jac, &lu, &fp, &c, d, &rhs, -g) else {
                break;
            };
            for i in 0..n {
                w[i] += dw[i];
            }
            p += dp;
        }
        let accept = match converged {
            Some(_) => metric.dist(&w, p, &wl, pl) <= opts.ds_max * (1.0 + 1e-9),
            None => false,
        };
        if !accept {
            ds *= 0.5;
            if ds < opts.ds_min {
                stop = StopReason::Stalled;
                break;
            }
            continue;
        }
        let iterations = converged.unwrap();
        if p < opts.p_min || p > opts.p_max {
            stop = StopReason::LeftRange;
            break;
        }
        let mut secant: Vec<f64> = w.iter().zip(&wl).map(|(a, b)| a - b).collect();
        let mut secant_p = p - pl;
        if last_secant_p != 0.0 && secant_p * last_secant_p < 0.0 {
            points.last_mut().unwrap().turning = true;
        }
        last_secant_p = secant_p;
        metric.normalize(&mut secant, &mut secant_p);
        t = secant;
        tp = secant_p;
        let closed = points.len() > 3 && metric.dist(&w, p, w0, p0) < ds;
        points.push(BranchPoint {
            w,
            p,
            turning: false,
            iterations,
        });
        if closed {
            stop = StopReason::Closed;
            break;
        }
        if iterations <= opts.fast_iter {
            ds = (ds * 1.3).min(opts.ds_max);
        }
    }
    Ok(Branch { points, stop })
}

/// Parameter values at the flagged turning points, refined by the vertex
/// of a parabola through the point and its neighbours (parameterized by
/// chord length in the continuation metric).
pub fn turning_points(branch: &Branch, var_scales: &[f64], p_scale: f64) -> Vec<(usize, f64)> {
    let metric = Metric {
        s: var_scales,
        p_scale,
    };
    let pts = &branch.points;
    let mut out = Vec::new();
    for k in 1..pts.len().saturating_sub(1) {
        if !pts[k].turning {
            continue;
        }
        let s1 = metric.dist(&pts[k].w, pts[k].p, &pts[k - 1].w, pts[k - 1].p);
        let s2 = s1 + metric.dist(&pts[k + 1].w, pts[k + 1].p, &pts[k].w, pts[k].p);
        let (p0, p1, p2) = (pts[k - 1].p, pts[k].p, pts[k + 1].p);
        // Newton divided differences for p(s) through (0, s1, s2)
        let d01 = (p1 - p0) / s1;
        let d12 = (p2 - p1) / (s2 - s1);
        let a = (d12 - d01) / s2;
        let refined = if a != 0.0 {
            let b = d01 - a * s1;
            let s_star = -b / (2.0 * a);
            if (0.0..=s2).contains(&s_star) {
                p0 + b * s_star + a * s_star * s_star
            } else {
                p1
            }
        } else {
            p1
        };
        out.push((k, refined));
    }
    out
}
