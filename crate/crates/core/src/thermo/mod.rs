//! Fluid and solid thermodynamics.
//!
//! The fluid model supplies two degree-one homogeneous functions, volume
//! `V(T, P, n)` and enthalpy `H(T, P, n)`. Everything else (internal energy
//! density, partial molar enthalpies, derivatives) is derived from them.
//! Because both are homogeneous, passing a concentration vector in place of
//! a mole vector yields per-cubic-metre quantities directly.

mod components;
mod cubic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{Dual, Scalar};
pub use components::{
    bundled_components, load_database, parse_database, ComponentData, BUNDLED_COMPONENTS, T_REF,
};
use cubic::CubicConstants;

/// J/(mol K)
pub const GAS_CONSTANT: f64 = 8.314;

/// Largest mixture size supported by the derivative routines.
pub const MAX_COMPONENTS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThermoError {
    #[error("temperature must be positive, got {0} K")]
    NonPositiveTemperature(f64),
    #[error("pressure must be positive, got {0} Pa")]
    NonPositivePressure(f64),
    #[error("total amount must be non-negative, got {0}")]
    NegativeAmount(f64),
    #[error("no vapour root of the cubic: Z = {z}, reduced co-volume B = {b}")]
    NoVaporRoot { z: f64, b: f64 },
    #[error("singular (V, U) constraint block in (T, P): determinant {0}")]
    SingularConstraintBlock(f64),
    #[error("expected {expected} components, got {got}")]
    ComponentCount { expected: usize, got: usize },
    #[error("component database: {0}")]
    Database(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EosKind {
    #[serde(rename = "ideal")]
    IdealGas,
    #[serde(rename = "srk")]
    Srk,
    #[serde(rename = "pr")]
    PengRobinson,
}

impl EosKind {
    pub fn label(self) -> &'static str {
        match self {
            EosKind::IdealGas => "ideal",
            EosKind::Srk => "srk",
            EosKind::PengRobinson => "pr",
        }
    }
}

impl std::str::FromStr for EosKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ideal" | "idealgas" | "ideal-gas" => Ok(EosKind::IdealGas),
            "srk" => Ok(EosKind::Srk),
            "pr" | "peng-robinson" | "pengrobinson" => Ok(EosKind::PengRobinson),
            other => Err(format!("unknown equation of state `{other}`")),
        }
    }
}

/// Algebraic state of a point: temperature [K], pressure [Pa] and
/// concentrations [mol/m3-fluid].
#[derive(Clone, Debug, PartialEq)]
pub struct ThermoState {
    pub t: f64,
    pub p: f64,
    pub c: Vec<f64>,
}

impl ThermoState {
    pub fn new(t: f64, p: f64, c: Vec<f64>) -> Self {
        Self { t, p, c }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolidProperties {
    /// kg/m3
    pub density: f64,
    /// J/(kg K)
    pub heat_capacity: f64,
}

impl SolidProperties {
    /// Internal energy density with the reference `u_solid(0 K) = 0`.
    pub fn internal_energy<S: Scalar>(&self, t: S) -> S {
        t * (self.density * self.heat_capacity)
    }
}

/// Partial derivatives of the fluid volume function and the fluid internal
/// energy density with respect to (T, P, c).
#[derive(Clone, Debug, PartialEq)]
pub struct ThermoDerivatives {
    pub dv_dt: f64,
    pub dv_dp: f64,
    pub dv_dc: Vec<f64>,
    pub du_dt: f64,
    pub du_dp: f64,
    pub du_dc: Vec<f64>,
    /// det [dV/dT dV/dP; du/dT du/dP]
    pub determinant: f64,
}

/// Mixture evaluation shared by the property functions.
pub(crate) struct Mixture<S> {
    t: S,
    p: S,
    n_tot: S,
    volume: S,
    cubic: Option<cubic::CubicMixture<S>>,
}

impl<S: Scalar> Mixture<S> {
    /// Volume occupied by the amounts the mixture was built from.
    pub(crate) fn volume(&self) -> S {
        self.volume
    }
}

#[derive(Clone, Debug)]
pub struct FluidModel {
    eos: EosKind,
    components: Vec<ComponentData>,
    cubic: Option<CubicConstants>,
}

impl FluidModel {
    pub fn new(eos: EosKind, components: Vec<ComponentData>) -> Result<Self, ThermoError> {
        if components.is_empty() || components.len() > MAX_COMPONENTS {
            return Err(ThermoError::Database(format!(
                "between 1 and {MAX_COMPONENTS} components are supported, got {}",
                components.len()
            )));
        }
        for c in &components {
            c.validate()?;
        }
        let cubic = CubicConstants::new(eos, &components);
        Ok(Self {
            eos,
            components,
            cubic,
        })
    }

    /// Bundled N2/H2/NH3/Ar database.
    pub fn ammonia(eos: EosKind) -> Self {
        Self::new(eos, bundled_components()).expect("bundled components are valid")
    }

    pub fn with_eos(&self, eos: EosKind) -> Self {
        Self::new(eos, self.components.clone()).expect("components already validated")
    }

    pub fn eos(&self) -> EosKind {
        self.eos
    }

    pub fn components(&self) -> &[ComponentData] {
        &self.components
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name == name)
    }

    pub fn molar_masses(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.molar_mass).collect()
    }

    pub(crate) fn mixture<S: Scalar>(
        &self,
        t: S,
        p: S,
        n: &[S],
    ) -> Result<Mixture<S>, ThermoError> {
        if n.len() != self.components.len() {
            return Err(ThermoError::ComponentCount {
                expected: self.components.len(),
                got: n.len(),
            });
        }
        if !(t.re() > 0.0) {
            return Err(ThermoError::NonPositiveTemperature(t.re()));
        }
        if !(p.re() > 0.0) {
            return Err(ThermoError::NonPositivePressure(p.re()));
        }
        let mut n_tot = S::zero();
        for &ni in n {
            n_tot += ni;
        }
        if n_tot.re() < 0.0 || !n_tot.re().is_finite() {
            return Err(ThermoError::NegativeAmount(n_tot.re()));
        }
        if n_tot.re() == 0.0 {
            return Ok(Mixture {
                t,
                p,
                n_tot,
                volume: S::zero(),
                cubic: None,
            });
        }
        match &self.cubic {
            None => Ok(Mixture {
                t,
                p,
                n_tot,
                volume: n_tot * t * GAS_CONSTANT / p,
                cubic: None,
            }),
            Some(cc) => {
                let (mix, volume) = cc.mixture(t, p, n, n_tot)?;
                Ok(Mixture {
                    t,
                    p,
                    n_tot,
                    volume,
                    cubic: Some(mix),
                })
            }
        }
    }

    pub(crate) fn mixture_enthalpy<S: Scalar>(&self, mix: &Mixture<S>, n: &[S]) -> S {
        if mix.n_tot.re() == 0.0 {
            return S::zero();
        }
        let mut h = S::zero();
        for (c, &ni) in self.components.iter().zip(n) {
            h += ni * c.ideal_enthalpy(mix.t);
        }
        if let (Some(cc), Some(cm)) = (&self.cubic, &mix.cubic) {
            h += cc.residual_enthalpy(cm, mix.t, mix.p, mix.volume, mix.n_tot);
        }
        h
    }

    pub(crate) fn mixture_partial_enthalpies<S: Scalar>(&self, mix: &Mixture<S>) -> Vec<S> {
        let mut hbar: Vec<S> = self
            .components
            .iter()
            .map(|c| c.ideal_enthalpy(mix.t))
            .collect();
        if let (Some(cc), Some(cm)) = (&self.cubic, &mix.cubic) {
            let res = cc.residual_partial_enthalpies(cm, mix.t, mix.p, mix.volume, mix.n_tot);
            for (h, r) in hbar.iter_mut().zip(res) {
                *h += r;
            }
        }
        hbar
    }

    pub fn volume_s<S: Scalar>(&self, t: S, p: S, n: &[S]) -> Result<S, ThermoError> {
        Ok(self.mixture(t, p, n)?.volume)
    }

    pub fn enthalpy_s<S: Scalar>(&self, t: S, p: S, n: &[S]) -> Result<S, ThermoError> {
        let mix = self.mixture(t, p, n)?;
        Ok(self.mixture_enthalpy(&mix, n))
    }

    /// `H(T,P,c) - P V(T,P,c)` from a single mixture evaluation.
    pub fn fluid_internal_energy_s<S: Scalar>(
        &self,
        t: S,
        p: S,
        c: &[S],
    ) -> Result<S, ThermoError> {
        let mix = self.mixture(t, p, c)?;
        Ok(self.mixture_enthalpy(&mix, c) - p * mix.volume)
    }

    pub fn partial_molar_enthalpy_s<S: Scalar>(
        &self,
        t: S,
        p: S,
        c: &[S],
    ) -> Result<Vec<S>, ThermoError> {
        let mix = self.mixture(t, p, c)?;
        Ok(self.mixture_partial_enthalpies(&mix))
    }

    /// Gas volume [m3]; the largest compressibility root for cubic models.
    pub fn molar_volume(&self, t: f64, p: f64, n: &[f64]) -> Result<f64, ThermoError> {
        self.volume_s(t, p, n)
    }

    /// Enthalpy [J] anchored at the formation enthalpies at 298.15 K.
    pub fn enthalpy(&self, t: f64, p: f64, n: &[f64]) -> Result<f64, ThermoError> {
        self.enthalpy_s(t, p, n)
    }

    /// Compressibility factor PV/(NRT).
    pub fn compressibility(&self, t: f64, p: f64, n: &[f64]) -> Result<f64, ThermoError> {
        let mix = self.mixture(t, p, n)?;
        Ok(p * mix.volume / (mix.n_tot * GAS_CONSTANT * t))
    }

    pub fn fluid_internal_energy_density(&self, state: &ThermoState) -> Result<f64, ThermoError> {
        self.fluid_internal_energy_s(state.t, state.p, &state.c)
    }

    /// `eps u_fluid + (1 - eps) rho_s cp_s T`; `eps = 1` drops the solid.
    pub fn volume_internal_energy_density(
        &self,
        state: &ThermoState,
        epsilon: f64,
        solid: &SolidProperties,
    ) -> Result<f64, ThermoError> {
        volume_internal_energy_s(self, state.t, state.p, &state.c, epsilon, solid)
    }

    pub fn partial_molar_enthalpy(&self, state: &ThermoState) -> Result<Vec<f64>, ThermoError> {
        self.partial_molar_enthalpy_s(state.t, state.p, &state.c)
    }

    /// Heat of reaction `nu . Hbar` for each stoichiometric row, J/mol.
    pub fn heat_of_reaction(
        &self,
        state: &ThermoState,
        nu: &[Vec<f64>],
    ) -> Result<Vec<f64>, ThermoError> {
        let hbar = self.partial_molar_enthalpy(state)?;
        Ok(nu
            .iter()
            .map(|row| row.iter().zip(&hbar).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn thermo_derivatives(
        &self,
        state: &ThermoState,
    ) -> Result<ThermoDerivatives, ThermoError> {
        const N: usize = MAX_COMPONENTS + 2;
        let nc = self.n_components();
        let t = Dual::<N>::variable(state.t, 0);
        let p = Dual::<N>::variable(state.p, 1);
        let c: Vec<Dual<N>> = state
            .c
            .iter()
            .enumerate()
            .map(|(i, &ci)| Dual::variable(ci, 2 + i))
            .collect();
        let mix = self.mixture(t, p, &c)?;
        let u = self.mixture_enthalpy(&mix, &c) - p * mix.volume;
        let v = mix.volume;
        let determinant = v.eps[0] * u.eps[1] - v.eps[1] * u.eps[0];
        let out = ThermoDerivatives {
            dv_dt: v.eps[0],
            dv_dp: v.eps[1],
            dv_dc: v.eps[2..2 + nc].to_vec(),
            du_dt: u.eps[0],
            du_dp: u.eps[1],
            du_dc: u.eps[2..2 + nc].to_vec(),
            determinant,
        };
        let scale = (v.eps[0] * u.eps[1]).abs() + (v.eps[1] * u.eps[0]).abs();
        if !(determinant.abs() > 1e-12 * scale) {
            return Err(ThermoError::SingularConstraintBlock(determinant));
        }
        Ok(out)
    }
}

pub fn volume_internal_energy_s<S: Scalar>(
    fluid: &FluidModel,
    t: S,
    p: S,
    c: &[S],
    epsilon: f64,
    solid: &SolidProperties,
) -> Result<S, ThermoError> {
    let uf = fluid.fluid_internal_energy_s(t, p, c)?;
    if epsilon >= 1.0 {
        Ok(uf)
    } else {
        Ok(uf * epsilon + solid.internal_energy(t) * (1.0 - epsilon))
    }
}

#[cfg(test)]
mod tests;
