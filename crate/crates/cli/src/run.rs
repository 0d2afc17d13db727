//! Executes one configured run and writes its tables and metadata.

use std::path::Path;
use std::time::Instant;

use fixedbed::experiments::{
    arclength_sweep, grid_sweep, heat_of_reaction_grid, response_lag, settling_time, solve_steady,
    step_response, summarize, SteadyOptions, SteadyState, Sweep,
};
use fixedbed::fvm::{Parameter, SemiDiscreteSystem, Var};
use fixedbed::solvers::{
    ContinuationOptions, IntegrationOptions, NewtonOptions, SolverError, StopReason,
};
use toml::{Table as Toml, Value};

use crate::config::{Experiment, ParamName, RunConfig, SweepMethod};
use crate::table::Table;
use crate::CliError;

pub const METADATA: &str = "metadata.toml";
pub const SWEEP: &str = "sweep.csv";
pub const HEAT_OF_REACTION: &str = "heat_of_reaction.csv";

/// Band used for settling times, as a fraction of the total change.
const SETTLING_BAND: f64 = 0.05;

/// Collects the metadata file while a run progresses.
struct Metadata {
    run: Toml,
    solver: Toml,
    results: Toml,
    tables: Toml,
    config: Value,
}

impl Metadata {
    fn new(cfg: &RunConfig, mode: &str) -> Self {
        let mut run = Toml::new();
        run.insert("mode".into(), mode.into());
        run.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        Self {
            run,
            solver: Toml::new(),
            results: Toml::new(),
            tables: Toml::new(),
            config: Value::try_from(cfg).expect("config serializes"),
        }
    }

    fn table(&mut self, out: &Path, file: &str, t: &Table) -> Result<(), CliError> {
        t.write(&out.join(file))?;
        let mut entry = Toml::new();
        entry.insert("rows".into(), (t.len() as i64).into());
        entry.insert(
            "columns".into(),
            Value::Array(t.header.iter().map(|h| h.as_str().into()).collect()),
        );
        self.tables.insert(file.into(), entry.into());
        Ok(())
    }

    fn finish(
        mut self,
        out: &Path,
        started: Instant,
        failure: Option<&CliError>,
    ) -> Result<(), CliError> {
        self.run.insert(
            "status".into(),
            if failure.is_some() { "failed" } else { "ok" }.into(),
        );
        self.run
            .insert("wall_time_s".into(), started.elapsed().as_secs_f64().into());
        if let Some(e) = failure {
            self.run.insert("error".into(), e.to_string().into());
            if let CliError::Solver { log, .. } = e {
                self.run.insert("iteration_log".into(), floats(log));
            }
        }
        let mut doc = Toml::new();
        doc.insert("run".into(), self.run.into());
        doc.insert("results".into(), self.results.into());
        doc.insert("solver".into(), self.solver.into());
        doc.insert("tables".into(), self.tables.into());
        doc.insert("config".into(), self.config);
        let text = toml::to_string(&doc).expect("metadata serializes");
        std::fs::write(out.join(METADATA), text)
            .map_err(|e| CliError::Io(format!("{}: {e}", out.join(METADATA).display())))
    }
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| x.into()).collect())
}

fn solver_error(e: SolverError) -> CliError {
    let log = match &e {
        SolverError::MaxIterations { log, .. } | SolverError::LineSearch { log, .. } => log.clone(),
        _ => Vec::new(),
    };
    CliError::Solver {
        message: e.to_string(),
        log,
    }
}

fn steady_options(cfg: &RunConfig) -> SteadyOptions {
    let d = SteadyOptions::default();
    SteadyOptions {
        newton: NewtonOptions {
            tol: cfg.tolerances.steady,
            ..d.newton
        },
        integration: IntegrationOptions {
            atol: cfg.tolerances.steady,
            rtol: cfg.tolerances.steady,
            ..d.integration
        },
        ..d
    }
}

/// Run the configured experiment (or the heat-of-reaction diagnostic)
/// into `out`. The metadata file is written whatever the outcome.
pub fn simulate(cfg: &RunConfig, out: &Path, heat_of_reaction: bool) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let started = Instant::now();
    let mode = if heat_of_reaction {
        "heat-of-reaction"
    } else {
        match cfg.experiment {
            Experiment::Steady => "steady",
            Experiment::Sweep => "sweep",
            Experiment::Step => "step",
        }
    };
    let mut meta = Metadata::new(cfg, mode);
    let result = if heat_of_reaction {
        run_heat_of_reaction(cfg, out, &mut meta)
    } else {
        match cfg.experiment {
            Experiment::Steady => run_steady(cfg, out, &mut meta),
            Experiment::Sweep => run_sweep(cfg, out, &mut meta),
            Experiment::Step => run_step(cfg, out, &mut meta),
        }
    };
    meta.finish(out, started, result.as_ref().err())?;
    result
}

fn system(cfg: &RunConfig, parameter: Parameter) -> Result<SemiDiscreteSystem, CliError> {
    SemiDiscreteSystem::new(cfg.build_unit()?, cfg.n_cells, parameter)
        .map_err(|e| CliError::Config(e.to_string()))
}

fn record_steady(
    meta: &mut Metadata,
    sys: &SemiDiscreteSystem,
    st: &SteadyState,
) -> Result<(), CliError> {
    let s = summarize(sys, &st.w, st.lambda).map_err(solver_error)?;
    meta.results.insert("x_out".into(), s.conversion.into());
    meta.results.insert("t_out_K".into(), s.t_out.into());
    meta.results.insert("t_top_K".into(), s.t_top.into());
    meta.solver.insert(
        "newton_iterations".into(),
        (st.report.iterations as i64).into(),
    );
    meta.solver
        .insert("newton_residuals".into(), floats(&st.report.residuals));
    meta.solver
        .insert("pseudo_transient".into(), st.pseudo_transient_used.into());
    Ok(())
}

/// One table per volume, in its own flow direction.
fn write_profiles(
    meta: &mut Metadata,
    out: &Path,
    sys: &SemiDiscreteSystem,
    w: &[f64],
    lambda: f64,
    prefix: &str,
) -> Result<(), CliError> {
    let names: Vec<String> = sys
        .unit
        .fluid
        .components()
        .iter()
        .map(|c| c.name.clone())
        .collect();
    for (vol, spec) in sys.unit.volumes.iter().enumerate() {
        let mut header = vec!["z [m]".to_string()];
        header.extend(names.iter().map(|n| format!("c_{n} [mol/m3]")));
        header.extend(["u [J/m3]", "T [K]", "P [bar]", "v [m/s]"].map(String::from));
        let mut t = Table::new(header);
        let v = sys
            .face_velocities(w, vol, lambda)
            .map_err(|e| CliError::Solver {
                message: e.to_string(),
                log: Vec::new(),
            })?;
        for k in 0..sys.n_cells() {
            let mut row = vec![sys.grids[vol].midpoint(k)];
            row.extend((0..names.len()).map(|i| sys.cell_value(w, vol, k, Var::C(i))));
            row.push(sys.cell_value(w, vol, k, Var::U));
            row.push(sys.cell_value(w, vol, k, Var::T));
            row.push(sys.cell_value(w, vol, k, Var::P) / 1e5);
            row.push(v[k]);
            t.push(row);
        }
        meta.table(out, &format!("{prefix}profile_{}.csv", spec.name), &t)?;
    }
    Ok(())
}

fn run_steady(cfg: &RunConfig, out: &Path, meta: &mut Metadata) -> Result<(), CliError> {
    let sys = system(cfg, Parameter::InletTemperature)?;
    let lambda = cfg.conditions.t_in;
    let st = solve_steady(&sys, lambda, None, &steady_options(cfg)).map_err(solver_error)?;
    record_steady(meta, &sys, &st)?;
    write_profiles(meta, out, &sys, &st.w, lambda, "")
}

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let dir = (stop - start).signum();
    let n = ((stop - start).abs() / step + 1e-9).floor() as usize;
    let mut g: Vec<f64> = (0..=n).map(|i| start + dir * step * i as f64).collect();
    if (g[n] - stop).abs() > 1e-9 * step {
        g.push(stop);
    }
    g
}

fn stop_label(s: StopReason) -> &'static str {
    match s {
        StopReason::LeftRange => "left-range",
        StopReason::MaxPoints => "max-points",
        StopReason::Closed => "closed",
        StopReason::Stalled => "stalled",
    }
}

fn run_sweep(cfg: &RunConfig, out: &Path, meta: &mut Metadata) -> Result<(), CliError> {
    let sc = cfg.sweep.as_ref().expect("validated");
    let si = sc.parameter.to_si();
    let sys = system(cfg, sc.parameter.parameter())?;
    let steady = steady_options(cfg);
    let sweep: Sweep = match sc.method {
        SweepMethod::Arclength => {
            let opts = ContinuationOptions {
                ds_max: sc.ds_max,
                ds0: sc.ds_max.min(ContinuationOptions::default().ds0),
                p_scale: sc.p_scale * si,
                max_points: sc.max_points,
                direction: (sc.stop - sc.start).signum(),
                ..ContinuationOptions::default()
            };
            let range = (sc.start.min(sc.stop) * si, sc.start.max(sc.stop) * si);
            let seed = sc.seed.unwrap_or(sc.start) * si;
            arclength_sweep(&sys, seed, range, &opts, &steady)
        }
        SweepMethod::Grid => {
            let g: Vec<f64> = grid(sc.start, sc.stop, sc.grid_step)
                .iter()
                .map(|p| p * si)
                .collect();
            grid_sweep(&sys, &g, &steady)
        }
    }
    .map_err(solver_error)?;

    let mut t = Table::new([
        sc.parameter.column(),
        "X_out [-]",
        "T_out [K]",
        "T_top [K]",
        "turning [-]",
    ]);
    for p in &sweep.points {
        t.push(vec![
            p.lambda / si,
            p.summary.conversion,
            p.summary.t_out,
            p.summary.t_top,
            if p.turning { 1.0 } else { 0.0 },
        ]);
    }
    meta.table(out, SWEEP, &t)?;
    meta.solver
        .insert("points".into(), (sweep.points.len() as i64).into());
    meta.solver
        .insert("stop".into(), stop_label(sweep.stop).into());
    let turning: Vec<f64> = sweep.turning.iter().map(|p| p / si).collect();
    meta.results
        .insert("turning_points".into(), floats(&turning));
    if let Some((p, x)) = sweep.optimum() {
        meta.results
            .insert("optimum_parameter".into(), (p / si).into());
        meta.results.insert("optimum_x_out".into(), x.into());
    }
    match (sweep.stop, sweep.failure) {
        (_, Some(e)) => Err(solver_error(e)),
        (StopReason::Stalled, None) => Err(CliError::Solver {
            message: format!(
                "continuation stalled after {} points at {}",
                sweep.points.len(),
                sweep.points.last().map_or(f64::NAN, |p| p.lambda / si)
            ),
            log: Vec::new(),
        }),
        _ => Ok(()),
    }
}

fn step_file(m: f64) -> String {
    format!("step_{m:+}.csv")
}

fn run_step(cfg: &RunConfig, out: &Path, meta: &mut Metadata) -> Result<(), CliError> {
    let sc = cfg.step.as_ref().expect("validated");
    let pn: ParamName = sc.parameter;
    let si = pn.to_si();
    let base = pn.base_value(&cfg.conditions);
    let sys = system(cfg, pn.parameter())?;
    let st = solve_steady(&sys, base * si, None, &steady_options(cfg)).map_err(solver_error)?;
    record_steady(meta, &sys, &st)?;
    write_profiles(meta, out, &sys, &st.w, base * si, "initial_")?;
    let opts = IntegrationOptions {
        atol: cfg.tolerances.dynamic,
        rtol: cfg.tolerances.dynamic,
        ..IntegrationOptions::default()
    };
    let mut steps = Vec::new();
    let mut failure = None;
    for &m in &sc.magnitudes {
        let target = base + m;
        let resp = match step_response(
            &sys,
            cfg.mass_matrix_mode.into(),
            &st.w,
            base * si,
            target * si,
            sc.horizon,
            &opts,
            &st.var_scales,
        ) {
            Ok(r) => r,
            Err(e) => {
                failure = Some(solver_error(e));
                break;
            }
        };
        let mut t = Table::new(["t [s]", pn.column(), "X_out [-]", "T_out [K]", "T_top [K]"]);
        for (k, s) in resp.summary.iter().enumerate() {
            let p = if resp.t[k] > 0.0 { target } else { base };
            t.push(vec![resp.t[k], p, s.conversion, s.t_out, s.t_top]);
        }
        let file = step_file(m);
        meta.table(out, &file, &t)?;
        let mut entry = Toml::new();
        entry.insert("magnitude".into(), m.into());
        entry.insert("file".into(), file.into());
        entry.insert(
            "accepted_steps".into(),
            (resp.trajectory.accepted as i64).into(),
        );
        entry.insert(
            "rejected_steps".into(),
            (resp.trajectory.rejected as i64).into(),
        );
        let last = resp.summary.last().expect("nonempty trajectory");
        entry.insert("final_x_out".into(), last.conversion.into());
        entry.insert("final_t_out_K".into(), last.t_out.into());
        if let Some(lag) = response_lag(&resp) {
            entry.insert("lag_s".into(), lag.into());
        }
        for (key, y) in [
            ("settling_t_out_s", resp.outlet_temperature()),
            ("settling_t_top_s", resp.top_temperature()),
        ] {
            if let Some(ts) = settling_time(&resp.t, &y, SETTLING_BAND) {
                entry.insert(key.into(), ts.into());
            }
        }
        steps.push(Value::Table(entry));
    }
    meta.results.insert("steps".into(), Value::Array(steps));
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn run_heat_of_reaction(cfg: &RunConfig, out: &Path, meta: &mut Metadata) -> Result<(), CliError> {
    let h = cfg.heat_of_reaction.clone().unwrap_or_default();
    let fluid = fixedbed::thermo::FluidModel::ammonia(cfg.eos);
    let pressures: Vec<f64> = h.pressures.iter().map(|p| p * 1e5).collect();
    let pts = heat_of_reaction_grid(&fluid, &cfg.conditions.x_in, &h.temperatures, &pressures)
        .map_err(|e| CliError::Solver {
            message: e.to_string(),
            log: Vec::new(),
        })?;
    let mut t = Table::new([
        "T [K]",
        "P [bar]",
        "dH [J/mol]",
        "dH_ideal [J/mol]",
        "ratio [-]",
    ]);
    for p in &pts {
        t.push(vec![p.t, p.p / 1e5, p.real, p.ideal, p.ratio()]);
    }
    meta.table(out, HEAT_OF_REACTION, &t)?;
    let worst = pts
        .iter()
        .map(|p| (p.ratio() - 1.0).abs())
        .fold(0.0, f64::max);
    meta.results
        .insert("max_relative_deviation".into(), worst.into());
    Ok(())
}
