//! End-to-end drivers on top of the discretized units: steady states,
//! parameter sweeps, step responses and the heat-of-reaction diagnostic.

use crate::fvm::{MassMatrixMode, Parameter, SemiDiscreteSystem, Var};
use crate::reactor::UnitSpec;
use crate::solvers::{
    esdirk_integrate, newton_solve, plac_trace, turning_points, Branch, ContinuationOptions,
    IntegrationOptions, NewtonOptions, NewtonReport, SolverError, StopReason, TableauSpec,
    Trajectory,
};
use crate::submodels::KineticParams;
use crate::thermo::{FluidModel, ThermoError, ThermoState};

#[derive(Clone, Debug, PartialEq)]
pub struct SteadyOptions {
    pub newton: NewtonOptions,
    /// Length of the pseudo-transient run used when Newton fails from the
    /// initial guess, s.
    pub pseudo_transient: f64,
    pub integration: IntegrationOptions,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self {
            newton: NewtonOptions::default(),
            pseudo_transient: 3600.0,
            integration: IntegrationOptions {
                atol: 1e-4,
                rtol: 1e-4,
                h0: 1e-2,
                ..IntegrationOptions::default()
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    pub w: Vec<f64>,
    pub lambda: f64,
    pub report: NewtonReport,
    pub pseudo_transient_used: bool,
    pub var_scales: Vec<f64>,
    pub row_scales: Vec<f64>,
}

/// Scalar outputs of a converged state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub conversion: f64,
    pub t_out: f64,
    pub t_top: f64,
}

pub fn summarize(sys: &SemiDiscreteSystem, w: &[f64], lambda: f64) -> Result<Summary, SolverError> {
    let conversion = sys
        .h2_conversion(w, lambda)
        .map_err(|e| SolverError::Eval(crate::solvers::EvalError(e.to_string())))?;
    Ok(Summary {
        conversion,
        t_out: sys.outlet_temperature(w),
        t_top: sys.top_temperature(w),
    })
}

fn eval_err(e: crate::fvm::FvmError) -> SolverError {
    SolverError::Eval(crate::solvers::EvalError(e.to_string()))
}

/// Newton from `guess` (or the constructed initial guess), falling back to
/// a pseudo-transient integration followed by Newton.
pub fn solve_steady(
    sys: &SemiDiscreteSystem,
    lambda: f64,
    guess: Option<&[f64]>,
    opts: &SteadyOptions,
) -> Result<SteadyState, SolverError> {
    let w0 = match guess {
        Some(g) => g.to_vec(),
        None => sys.initial_guess(lambda).map_err(eval_err)?,
    };
    let var_scales = sys.variable_scales(&w0, lambda);
    let rows = sys.residual_scales(&var_scales);
    match newton_solve(sys, &w0, lambda, &opts.newton, Some(&rows)) {
        Ok((w, report)) => Ok(SteadyState {
            w,
            lambda,
            report,
            pseudo_transient_used: false,
            var_scales,
            row_scales: rows,
        }),
        Err(first) => {
            let mass = sys.mass_matrix(MassMatrixMode::FullDynamic);
            let traj = esdirk_integrate(
                sys,
                &mass,
                &w0,
                &|_| lambda,
                (0.0, opts.pseudo_transient),
                &TableauSpec::esdirk32(),
                &opts.integration,
                &var_scales,
            )
            .map_err(|_| first.clone())?;
            let w1 = traj.w.last().unwrap().clone();
            let (w, report) = newton_solve(sys, &w1, lambda, &opts.newton, Some(&rows))?;
            Ok(SteadyState {
                w,
                lambda,
                report,
                pseudo_transient_used: true,
                var_scales,
                row_scales: rows,
            })
        }
    }
}

/// One point of a parameter sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub lambda: f64,
    pub summary: Summary,
    pub turning: bool,
    pub w: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Sweep {
    pub points: Vec<SweepPoint>,
    /// Turning points refined by parabolic interpolation.
    pub turning: Vec<f64>,
    pub stop: StopReason,
    /// Why a grid sweep ended early; its points up to the failure are kept.
    pub failure: Option<SolverError>,
}

impl Sweep {
    /// Parameter and value at the largest conversion, refined by a parabola
    /// through the best point and its neighbours.
    pub fn optimum(&self) -> Option<(f64, f64)> {
        let k = (0..self.points.len()).max_by(|&a, &b| {
            self.points[a]
                .summary
                .conversion
                .total_cmp(&self.points[b].summary.conversion)
        })?;
        let at = |i: usize| (self.points[i].lambda, self.points[i].summary.conversion);
        if k == 0 || k + 1 == self.points.len() {
            return Some(at(k));
        }
        Some(parabola_vertex(at(k - 1), at(k), at(k + 1)))
    }
}

/// Vertex of the parabola through three points; falls back to the middle
/// point when degenerate.
pub fn parabola_vertex(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> (f64, f64) {
    let d1 = (b.1 - a.1) / (b.0 - a.0);
    let d2 = (c.1 - b.1) / (c.0 - b.0);
    let q = (d2 - d1) / (c.0 - a.0);
    if !(q < 0.0 || q > 0.0) || !q.is_finite() {
        return b;
    }
    let lin = d1 - q * (a.0 + b.0);
    let x = -lin / (2.0 * q);
    if x < a.0.min(c.0) || x > a.0.max(c.0) {
        return b;
    }
    let y = a.1 + d1 * (x - a.0) + q * (x - a.0) * (x - b.0);
    (x, y)
}

fn sweep_from_branch(
    sys: &SemiDiscreteSystem,
    branch: Branch,
    scales: &[f64],
    p_scale: f64,
) -> Result<Sweep, SolverError> {
    let turning = turning_points(&branch, scales, p_scale)
        .into_iter()
        .map(|(_, p)| p)
        .collect();
    let mut points = Vec::with_capacity(branch.points.len());
    for pt in branch.points {
        points.push(SweepPoint {
            lambda: pt.p,
            summary: summarize(sys, &pt.w, pt.p)?,
            turning: pt.turning,
            w: pt.w,
        });
    }
    Ok(Sweep {
        points,
        turning,
        stop: branch.stop,
        failure: None,
    })
}

/// Arclength sweep starting from a steady state at `start`.
pub fn arclength_sweep(
    sys: &SemiDiscreteSystem,
    start: f64,
    range: (f64, f64),
    opts: &ContinuationOptions,
    steady: &SteadyOptions,
) -> Result<Sweep, SolverError> {
    let seed = solve_steady(sys, start, None, steady)?;
    let opts = ContinuationOptions {
        p_min: range.0,
        p_max: range.1,
        newton: steady.newton,
        ..*opts
    };
    let branch = plac_trace(
        sys,
        &seed.w,
        start,
        &opts,
        &seed.var_scales,
        Some(&seed.row_scales),
    )?;
    sweep_from_branch(sys, branch, &seed.var_scales, opts.p_scale)
}

/// Sequential steady solves on a fixed parameter grid, each warm-started
/// by secant extrapolation of the previous two.
pub fn grid_sweep(
    sys: &SemiDiscreteSystem,
    grid: &[f64],
    steady: &SteadyOptions,
) -> Result<Sweep, SolverError> {
    let mut points: Vec<SweepPoint> = Vec::with_capacity(grid.len());
    for (k, &lambda) in grid.iter().enumerate() {
        let guess = match k {
            0 => None,
            1 => Some(points[0].w.clone()),
            _ => {
                let (a, b) = (&points[k - 2], &points[k - 1]);
                let r = (lambda - b.lambda) / (b.lambda - a.lambda);
                Some(b.w.iter().zip(&a.w).map(|(y, x)| y + r * (y - x)).collect())
            }
        };
        let attempt = match solve_steady(sys, lambda, guess.as_deref(), steady) {
            Err(e) if k > 0 => {
                // extrapolation can overshoot near sharp features
                let prev = points[k - 1].w.clone();
                solve_steady(sys, lambda, Some(&prev), steady).map_err(|_| e)
            }
            other => other,
        };
        let st = match attempt {
            Ok(st) => st,
            Err(e) if k == 0 => return Err(e),
            Err(e) => {
                return Ok(Sweep {
                    points,
                    turning: Vec::new(),
                    stop: StopReason::Stalled,
                    failure: Some(e),
                })
            }
        };
        points.push(SweepPoint {
            lambda,
            summary: summarize(sys, &st.w, lambda)?,
            turning: false,
            w: st.w,
        });
    }
    Ok(Sweep {
        points,
        turning: Vec::new(),
        stop: StopReason::LeftRange,
        failure: None,
    })
}

#[derive(Clone, Debug)]
pub struct StepResponse {
    pub t: Vec<f64>,
    pub summary: Vec<Summary>,
    pub trajectory: Trajectory,
}

impl StepResponse {
    pub fn conversion(&self) -> Vec<f64> {
        self.summary.iter().map(|s| s.conversion).collect()
    }

    pub fn outlet_temperature(&self) -> Vec<f64> {
        self.summary.iter().map(|s| s.t_out).collect()
    }

    pub fn top_temperature(&self) -> Vec<f64> {
        self.summary.iter().map(|s| s.t_top).collect()
    }
}

/// Response to a step of the parameter from `lambda0` to `lambda1` at
/// `t = 0`, starting from the steady state `w0` at `lambda0`.
#[allow(clippy::too_many_arguments)]
pub fn step_response(
    sys: &SemiDiscreteSystem,
    mode: MassMatrixMode,
    w0: &[f64],
    lambda0: f64,
    lambda1: f64,
    horizon: f64,
    opts: &IntegrationOptions,
    var_scales: &[f64],
) -> Result<StepResponse, SolverError> {
    let mass = sys.mass_matrix(mode);
    let param = move |t: f64| if t > 0.0 { lambda1 } else { lambda0 };
    let trajectory = esdirk_integrate(
        sys,
        &mass,
        w0,
        &param,
        (0.0, horizon),
        &TableauSpec::esdirk32(),
        opts,
        var_scales,
    )?;
    let mut summary = Vec::with_capacity(trajectory.t.len());
    for (&t, w) in trajectory.t.iter().zip(&trajectory.w) {
        summary.push(summarize(sys, w, param(t))?);
    }
    Ok(StepResponse {
        t: trajectory.t.clone(),
        summary,
        trajectory,
    })
}

/// First time a signal covers half of its total change, by linear
/// interpolation between samples.
pub fn half_response_time(t: &[f64], y: &[f64]) -> Option<f64> {
    let (y0, y1) = (*y.first()?, *y.last()?);
    let target = 0.5 * (y0 + y1);
    let up = y1 > y0;
    for k in 1..y.len() {
        let crossed = if up { y[k] >= target } else { y[k] <= target };
        if crossed {
            let f = (target - y[k - 1]) / (y[k] - y[k - 1]);
            return Some(t[k - 1] + f * (t[k] - t[k - 1]));
        }
    }
    None
}

/// Last time the signal is outside `frac` of its total change around the
/// final value.
pub fn settling_time(t: &[f64], y: &[f64], frac: f64) -> Option<f64> {
    let (y0, y1) = (*y.first()?, *y.last()?);
    let band = frac * (y1 - y0).abs();
    if band == 0.0 {
        return Some(t[0]);
    }
    let k = y.iter().rposition(|v| (v - y1).abs() > band)?;
    Some(t[(k + 1).min(t.len() - 1)])
}

/// First time the signal has moved `frac` of its largest excursion from
/// the initial value, by linear interpolation between samples.
pub fn onset_time(t: &[f64], y: &[f64], frac: f64) -> Option<f64> {
    let y0 = *y.first()?;
    let peak = y.iter().fold(0.0f64, |m, v| m.max((v - y0).abs()));
    if peak == 0.0 {
        return None;
    }
    let target = frac * peak;
    for k in 1..y.len() {
        let d = (y[k] - y0).abs();
        if d >= target {
            let dp = (y[k - 1] - y0).abs();
            let f = (target - dp) / (d - dp);
            return Some(t[k - 1] + f * (t[k] - t[k - 1]));
        }
    }
    None
}

/// Delay of the outlet-temperature response behind the conversion
/// response, measured between the times at which each has moved half of
/// its largest excursion. Unlike the half-way point to the final value
/// this stays meaningful when the conversion overshoots.
pub fn response_lag(resp: &StepResponse) -> Option<f64> {
    let tx = onset_time(&resp.t, &resp.conversion(), 0.5)?;
    let tt = onset_time(&resp.t, &resp.outlet_temperature(), 0.5)?;
    Some(tt - tx)
}

/// Molar heat of reaction `nu . Hbar` for the ammonia reaction, J/mol.
pub fn heat_of_reaction(fluid: &FluidModel, x: &[f64], t: f64, p: f64) -> Result<f64, ThermoError> {
    let v = fluid.molar_volume(t, p, x)?;
    let c: Vec<f64> = x.iter().map(|xi| xi / v).collect();
    let nu = KineticParams::ammonia(0.5).nu;
    fluid
        .heat_of_reaction(&ThermoState::new(t, p, c), &[nu])
        .map(|h| h[0])
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeatOfReactionPoint {
    pub t: f64,
    pub p: f64,
    pub ideal: f64,
    pub real: f64,
}

impl HeatOfReactionPoint {
    pub fn ratio(&self) -> f64 {
        self.real / self.ideal
    }
}

/// Heat of reaction of a real-fluid model against the ideal gas on a
/// (T, P) grid.
pub fn heat_of_reaction_grid(
    real: &FluidModel,
    x: &[f64],
    temperatures: &[f64],
    pressures: &[f64],
) -> Result<Vec<HeatOfReactionPoint>, ThermoError> {
    let ideal = real.with_eos(crate::thermo::EosKind::IdealGas);
    let mut out = Vec::with_capacity(temperatures.len() * pressures.len());
    for &t in temperatures {
        for &p in pressures {
            out.push(HeatOfReactionPoint {
                t,
                p,
                ideal: heat_of_reaction(&ideal, x, t, p)?,
                real: heat_of_reaction(real, x, t, p)?,
            });
        }
    }
    Ok(out)
}

/// Build the system for a unit with the inlet temperature as parameter.
pub fn inlet_temperature_system(
    unit: UnitSpec,
    n_cells: usize,
) -> Result<SemiDiscreteSystem, SolverError> {
    SemiDiscreteSystem::new(unit, n_cells, Parameter::InletTemperature).map_err(eval_err)
}

/// Largest scaled constraint residual at a state.
pub fn constraint_residual(
    sys: &SemiDiscreteSystem,
    w: &[f64],
    lambda: f64,
) -> Result<f64, SolverError> {
    let f = sys.residual_vec(w, lambda).map_err(eval_err)?;
    let mut worst = 0.0f64;
    for vol in 0..sys.unit.volumes.len() {
        for k in 0..sys.n_cells() {
            worst = worst.max(f[sys.layout.index(vol, k, Var::T)].abs());
            let u = w[sys.layout.index(vol, k, Var::U)].abs().max(1.0);
            worst = worst.max(f[sys.layout.index(vol, k, Var::P)].abs() / u);
        }
    }
    Ok(worst)
}
