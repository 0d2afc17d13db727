//! Pure-component constants and the component database file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ThermoError, GAS_CONSTANT};
use crate::scalar::Scalar;

/// Reference temperature of the formation enthalpies, K.
pub const T_REF: f64 = 298.15;

/// Bundled database for N2, H2, NH3 and Ar.
pub const BUNDLED_COMPONENTS: &str = include_str!("../../data/components.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentData {
    pub name: String,
    /// kg/mol
    pub molar_mass: f64,
    /// K
    pub tc: f64,
    /// Pa
    pub pc: f64,
    pub omega: f64,
    /// Cp/R polynomial coefficients in ascending powers of T.
    pub cp_over_r: Vec<f64>,
    /// J/mol at 298.15 K
    pub dhf298: f64,
}

impl ComponentData {
    pub fn validate(&self) -> Result<(), ThermoError> {
        let bad = |what: &str| {
            Err(ThermoError::Database(format!(
                "component `{}`: {what}",
                self.name
            )))
        };
        if !(self.molar_mass > 0.0) {
            return bad("molar_mass must be positive");
        }
        if !(self.tc > 0.0) {
            return bad("tc must be positive");
        }
        if !(self.pc > 0.0) {
            return bad("pc must be positive");
        }
        if self.cp_over_r.is_empty() {
            return bad("cp_over_r is empty");
        }
        let mut t = 200.0;
        while t <= 1200.0 {
            if !(self.cp(t) > 0.0) {
                return bad(&format!("cp is not positive at {t} K"));
            }
            t += 10.0;
        }
        Ok(())
    }

    /// Ideal-gas heat capacity, J/(mol K).
    pub fn cp(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for &a in self.cp_over_r.iter().rev() {
            acc = acc * t + a;
        }
        GAS_CONSTANT * acc
    }

    /// Ideal-gas molar enthalpy anchored at the formation enthalpy,
    /// `dhf298 + int_{298.15}^{T} cp dT`, J/mol.
    pub fn ideal_enthalpy<S: Scalar>(&self, t: S) -> S {
        // sum_k a_k/(k+1) (T^{k+1} - T_ref^{k+1}), Horner in both terms
        let mut acc = S::zero();
        let mut acc_ref = 0.0;
        for (k, &a) in self.cp_over_r.iter().enumerate().rev() {
            let c = a / (k as f64 + 1.0);
            acc = (acc + c) * t;
            acc_ref = (acc_ref + c) * T_REF;
        }
        (acc - acc_ref) * GAS_CONSTANT + self.dhf298
    }
}

#[derive(Deserialize)]
struct DatabaseFile {
    component: Vec<ComponentData>,
}

/// Parse a component database in the documented TOML layout.
pub fn parse_database(text: &str) -> Result<Vec<ComponentData>, ThermoError> {
    let file: DatabaseFile =
        toml::from_str(text).map_err(|e| ThermoError::Database(e.to_string()))?;
    if file.component.is_empty() {
        return Err(ThermoError::Database("no [[component]] entries".into()));
    }
    for c in &file.component {
        c.validate()?;
    }
    Ok(file.component)
}

pub fn load_database(path: &Path) -> Result<Vec<ComponentData>, ThermoError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ThermoError::Database(format!("{}: {e}", path.display())))?;
    parse_database(&text)
}

pub fn bundled_components() -> Vec<ComponentData> {
    parse_database(BUNDLED_COMPONENTS).expect("bundled component database is valid")
}
