//! Run configuration read from TOML. Temperatures are in K, pressures in
//! bar and times in s; conversion to SI happens when the unit is built.

use fixedbed::fvm::{MassMatrixMode, Parameter};
use fixedbed::reactor::{
    build_afbr, build_idcr, OperatingConditions, ReactorDimensions, ReactorParameters, UnitKind,
    UnitSpec,
};
use fixedbed::thermo::EosKind;
use serde::{Deserialize, Serialize};

use crate::CliError;

const BAR: f64 = 1e5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub unit: UnitKind,
    #[serde(default = "default_eos")]
    pub eos: EosKind,
    #[serde(default = "default_cells")]
    pub n_cells: usize,
    pub experiment: Experiment,
    #[serde(default)]
    pub mass_matrix_mode: MatrixMode,
    #[serde(default = "yes")]
    pub dispersion: bool,
    #[serde(default)]
    pub conditions: Conditions,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<StepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heat_of_reaction: Option<HeatOfReactionConfig>,
}

fn default_eos() -> EosKind {
    EosKind::Srk
}

fn default_cells() -> usize {
    100
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Steady,
    Sweep,
    Step,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixMode {
    #[default]
    Full,
    PseudoSteady,
}

impl From<MatrixMode> for MassMatrixMode {
    fn from(m: MatrixMode) -> Self {
        match m {
            MatrixMode::Full => MassMatrixMode::FullDynamic,
            MatrixMode::PseudoSteady => MassMatrixMode::PseudoSteady,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Conditions {
    /// K
    pub t_in: f64,
    /// bar
    pub p_in: f64,
    /// bar
    pub p_out: f64,
    /// N2, H2, NH3, Ar
    pub x_in: Vec<f64>,
}

impl Default for Conditions {
    fn default() -> Self {
        let nominal = OperatingConditions::nominal(760.0);
        Self {
            t_in: nominal.t_in,
            p_in: nominal.p_in / BAR,
            p_out: nominal.p_out / BAR,
            x_in: nominal.x_in,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Newton and continuation corrector tolerance.
    pub steady: f64,
    /// Absolute and relative tolerance of the integrator.
    pub dynamic: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            steady: 1e-4,
            dynamic: 1e-5,
        }
    }
}

/// Parameters that can be swept or stepped.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamName {
    #[default]
    TIn,
    PIn,
    POut,
}

impl ParamName {
    pub fn parameter(self) -> Parameter {
        match self {
            ParamName::TIn => Parameter::InletTemperature,
            ParamName::PIn => Parameter::InletPressure,
            ParamName::POut => Parameter::OutletPressure,
        }
    }

    /// Factor from the configured unit to SI.
    pub fn to_si(self) -> f64 {
        match self {
            ParamName::TIn => 1.0,
            ParamName::PIn | ParamName::POut => BAR,
        }
    }

    /// Column header of the parameter in result tables.
    pub fn column(self) -> &'static str {
        match self {
            ParamName::TIn => "T_in [K]",
            ParamName::PIn => "P_in [bar]",
            ParamName::POut => "P_out [bar]",
        }
    }

    pub fn base_value(self, c: &Conditions) -> f64 {
        match self {
            ParamName::TIn => c.t_in,
            ParamName::PIn => c.p_in,
            ParamName::POut => c.p_out,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMethod {
    #[default]
    Arclength,
    Grid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub parameter: ParamName,
    /// Range bounds, in the parameter's unit.
    pub start: f64,
    pub stop: f64,
    #[serde(default)]
    pub method: SweepMethod,
    /// Grid spacing for the grid method.
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    /// Parameter value of the seed steady state (default: `start`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<f64>,
    /// Largest arclength step in the scaled metric.
    #[serde(default = "default_ds_max")]
    pub ds_max: f64,
    /// Parameter change that counts as one unit of arclength.
    #[serde(default = "default_p_scale")]
    pub p_scale: f64,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
}

fn default_grid_step() -> f64 {
    5.0
}

fn default_ds_max() -> f64 {
    0.05
}

fn default_p_scale() -> f64 {
    100.0
}

fn default_max_points() -> usize {
    2000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    #[serde(default)]
    pub parameter: ParamName,
    /// Step sizes away from the base value, in the parameter's unit.
    pub magnitudes: Vec<f64>,
    /// s
    pub horizon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatOfReactionConfig {
    /// K
    pub temperatures: Vec<f64>,
    /// bar
    pub pressures: Vec<f64>,
}

impl Default for HeatOfReactionConfig {
    fn default() -> Self {
        Self {
            temperatures: (0..=10).map(|i| 600.0 + 20.0 * i as f64).collect(),
            pressures: (0..=6).map(|i| 150.0 + 25.0 * i as f64).collect(),
        }
    }
}

/// Command-line overrides of config keys.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub eos: Option<EosKind>,
    pub n_cells: Option<usize>,
    pub tol: Option<f64>,
}

fn invalid(key: &str, why: &str) -> CliError {
    CliError::Config(format!("`{key}`: {why}"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(eos) = o.eos {
            self.eos = eos;
        }
        if let Some(n) = o.n_cells {
            self.n_cells = n;
        }
        if let Some(tol) = o.tol {
            self.tolerances = Tolerances {
                steady: tol,
                dynamic: tol,
            };
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n_cells < 2 {
            return Err(invalid("n_cells", "must be at least 2"));
        }
        let c = &self.conditions;
        if !(c.t_in > 0.0) {
            return Err(invalid("conditions.t_in", "must be positive"));
        }
        if !(c.p_in > 0.0 && c.p_out > 0.0) {
            return Err(invalid("conditions.p_in", "pressures must be positive"));
        }
        if c.x_in.len() != 4 {
            return Err(invalid(
                "conditions.x_in",
                "needs four mole fractions (N2, H2, NH3, Ar)",
            ));
        }
        if c.x_in.iter().any(|x| !(*x >= 0.0)) || (c.x_in.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(invalid(
                "conditions.x_in",
                "must be nonnegative and sum to 1",
            ));
        }
        let t = &self.tolerances;
        if !(t.steady > 0.0) {
            return Err(invalid("tolerances.steady", "must be positive"));
        }
        if !(t.dynamic > 0.0) {
            return Err(invalid("tolerances.dynamic", "must be positive"));
        }
        match self.experiment {
            Experiment::Sweep => {
                let s = self.sweep.as_ref().ok_or_else(|| {
                    invalid("sweep", "section required for experiment = \"sweep\"")
                })?;
                if !(s.start.is_finite() && s.stop.is_finite() && s.start != s.stop) {
                    return Err(invalid("sweep.start", "range must be nonempty"));
                }
                if s.method == SweepMethod::Grid && !(s.grid_step > 0.0) {
                    return Err(invalid("sweep.grid_step", "must be positive"));
                }
                if !(s.ds_max > 0.0) {
                    return Err(invalid("sweep.ds_max", "must be positive"));
                }
                if !(s.p_scale > 0.0) {
                    return Err(invalid("sweep.p_scale", "must be positive"));
                }
                if let Some(seed) = s.seed {
                    let (lo, hi) = (s.start.min(s.stop), s.start.max(s.stop));
                    if !(seed >= lo && seed <= hi) {
                        return Err(invalid("sweep.seed", "must lie inside the range"));
                    }
                }
            }
            Experiment::Step => {
                let s = self
                    .step
                    .as_ref()
                    .ok_or_else(|| invalid("step", "section required for experiment = \"step\""))?;
                if s.magnitudes.is_empty() {
                    return Err(invalid("step.magnitudes", "must not be empty"));
                }
                if s.magnitudes.iter().any(|m| !(m.is_finite() && *m != 0.0)) {
                    return Err(invalid("step.magnitudes", "must be finite and nonzero"));
                }
                if !(s.horizon > 0.0) {
                    return Err(invalid("step.horizon", "must be positive"));
                }
            }
            Experiment::Steady => {}
        }
        if let Some(h) = &self.heat_of_reaction {
            if h.temperatures.is_empty() || h.temperatures.iter().any(|t| !(*t > 0.0)) {
                return Err(invalid(
                    "heat_of_reaction.temperatures",
                    "must be nonempty and positive",
                ));
            }
            if h.pressures.is_empty() || h.pressures.iter().any(|p| !(*p > 0.0)) {
                return Err(invalid(
                    "heat_of_reaction.pressures",
                    "must be nonempty and positive",
                ));
            }
        }
        Ok(())
    }

    pub fn operating_conditions(&self) -> OperatingConditions {
        let c = &self.conditions;
        OperatingConditions {
            x_in: c.x_in.clone(),
            t_in: c.t_in,
            p_in: c.p_in * BAR,
            p_out: c.p_out * BAR,
        }
    }

    pub fn build_unit(&self) -> Result<UnitSpec, CliError> {
        let dims = ReactorDimensions::default();
        let params = ReactorParameters::default();
        let cond = self.operating_conditions();
        let unit = match self.unit {
            UnitKind::Afbr => build_afbr(&dims, &params, &cond, self.eos),
            UnitKind::Idcr => build_idcr(&dims, &params, &cond, self.eos),
        }
        .map_err(|e| CliError::Config(format!("`conditions`: {e}")))?;
        Ok(if self.dispersion {
            unit
        } else {
            unit.without_dispersion()
        })
    }
}
