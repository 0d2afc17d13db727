//! Constitutive closures: kinetics, advection, dispersion and interfacial
//! heat transfer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::thermo::{FluidModel, ThermoError, ThermoState, GAS_CONSTANT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubmodelError {
    #[error("non-finite reaction rate at T = {t} K, P = {p} Pa")]
    NonFiniteRate { t: f64, p: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Thermo(#[from] ThermoError),
}

/// Partial pressures below this value (bar) are clamped before the
/// fractional powers of the rate law.
pub const PARTIAL_PRESSURE_FLOOR: f64 = 1e-10;

/// Temkin-Pyzhev kinetics for `N2 + 3 H2 <-> 2 NH3`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KineticParams {
    /// Stoichiometric row over the fluid components.
    pub nu: Vec<f64>,
    /// mol/(s m3-solid)
    pub a_fwd: f64,
    pub a_bwd: f64,
    /// J/mol
    pub e_fwd: f64,
    pub e_bwd: f64,
    pub beta: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub n2: usize,
    pub h2: usize,
    pub nh3: usize,
}

impl KineticParams {
    /// Catalyst parameters for the component order (N2, H2, NH3, Ar).
    pub fn ammonia(epsilon: f64) -> Self {
        Self {
            nu: vec![-1.0, -3.0, 2.0, 0.0],
            a_fwd: 4972.0,
            a_bwd: 7.14e15,
            e_fwd: 87_090.0,
            e_bwd: 198_464.0,
            beta: 0.5,
            eta: 4.75,
            epsilon,
            n2: 0,
            h2: 1,
            nh3: 2,
        }
    }

    pub fn validate(&self, n_components: usize) -> Result<(), SubmodelError> {
        let bad = |m: String| Err(SubmodelError::Parameter(m));
        if self.nu.len() != n_components {
            return bad(format!(
                "stoichiometric row has {} entries for {n_components} components",
                self.nu.len()
            ));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if !(self.eta > 0.0) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!(
                "kinetic porosity must lie in (0, 1), got {}",
                self.epsilon
            ));
        }
        for (name, i) in [("n2", self.n2), ("h2", self.h2), ("nh3", self.nh3)] {
            if i >= n_components {
                return bad(format!("{name} index {i} out of range"));
            }
        }
        Ok(())
    }

    pub fn k_fwd<S: Scalar>(&self, t: S) -> S {
        ((t * GAS_CONSTANT).recip() * (-self.e_fwd)).exp() * self.a_fwd
    }

    pub fn k_bwd<S: Scalar>(&self, t: S) -> S {
        ((t * GAS_CONSTANT).recip() * (-self.e_bwd)).exp() * self.a_bwd
    }

    /// Pseudo-homogeneous rate per fluid volume, mol/(s m3-fluid).
    pub fn rate_s<S: Scalar>(&self, t: S, p: S, c: &[S]) -> S {
        let mut ctot = S::zero();
        for &ci in c {
            ctot += ci;
        }
        let p_bar = p / 1e5;
        let partial = |i: usize| {
            let pi = p_bar * c[i] / ctot;
            if pi.re() < PARTIAL_PRESSURE_FLOOR || !pi.re().is_finite() {
                S::cst(PARTIAL_PRESSURE_FLOOR)
            } else {
                pi
            }
        };
        let (pn2, ph2, pnh3) = (partial(self.n2), partial(self.h2), partial(self.nh3));
        let ratio = ph2 * ph2 * ph2 / (pnh3 * pnh3);
        let fwd = self.k_fwd(t) * pn2 * ratio.powf(self.beta);
        let bwd = self.k_bwd(t) * ratio.powf(-self.beta);
        (fwd - bwd) * ((1.0 - self.epsilon) / self.epsilon * self.eta)
    }

    pub fn temkin_rate(&self, state: &ThermoState) -> Result<f64, SubmodelError> {
        let r = self.rate_s(state.t, state.p, &state.c);
        if r.is_finite() {
            Ok(r)
        } else {
            Err(SubmodelError::NonFiniteRate {
                t: state.t,
                p: state.p,
            })
        }
    }

    /// `R = nu^T r`, mol/(s m3-fluid).
    pub fn production_rates_s<S: Scalar>(&self, t: S, p: S, c: &[S]) -> Vec<S> {
        let r = self.rate_s(t, p, c);
        self.nu.iter().map(|&nu| r * nu).collect()
    }

    pub fn production_rates(&self, state: &ThermoState) -> Result<Vec<f64>, SubmodelError> {
        let r = self.temkin_rate(state)?;
        Ok(self.nu.iter().map(|&nu| r * nu).collect())
    }
}

/// `rho = sum_a M_a c_a`, kg/m3-fluid.
pub fn fluid_density<S: Scalar>(c: &[S], molar_mass: &[f64]) -> S {
    let mut rho = S::zero();
    for (&ci, &m) in c.iter().zip(molar_mass) {
        rho += ci * m;
    }
    rho
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum AdvectionParams {
    /// Packed-bed pressure drop.
    Ergun {
        /// Pa s
        mu: f64,
        /// m
        d_p: f64,
        epsilon: f64,
    },
    /// Turbulent tube flow with a fixed friction factor.
    DarcyWeisbach {
        /// m
        d_t: f64,
        f_dw: f64,
    },
}

impl AdvectionParams {
    pub fn ergun_default(epsilon: f64) -> Self {
        AdvectionParams::Ergun {
            mu: 3.08e-5,
            d_p: 8e-3,
            epsilon,
        }
    }

    pub fn darcy_weisbach_default() -> Self {
        AdvectionParams::DarcyWeisbach {
            d_t: 13.3e-3,
            f_dw: 0.02,
        }
    }

    pub fn validate(&self) -> Result<(), SubmodelError> {
        let ok = match *self {
            AdvectionParams::Ergun { mu, d_p, epsilon } => {
                mu > 0.0 && d_p > 0.0 && epsilon > 0.0 && epsilon < 1.0
            }
            AdvectionParams::DarcyWeisbach { d_t, f_dw } => d_t > 0.0 && f_dw > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(SubmodelError::Parameter(format!(
                "invalid advection parameters {self:?}"
            )))
        }
    }

    /// Ergun coefficients `(a, b/rho)` of `-dP/dz = a v + b v|v|`.
    pub fn ergun_coefficients(mu: f64, d_p: f64, epsilon: f64) -> (f64, f64) {
        let one_m = 1.0 - epsilon;
        (
            150.0 * mu * one_m * one_m / (d_p * d_p * epsilon * epsilon),
            1.75 * one_m / (d_p * epsilon),
        )
    }

    /// Interstitial velocity from the pressure gradient, m/s.
    pub fn velocity_s<S: Scalar>(&self, dpdz: S, rho: S) -> S {
        let s = -dpdz;
        match *self {
            AdvectionParams::Ergun { mu, d_p, epsilon } => {
                let (a, b_per_rho) = Self::ergun_coefficients(mu, d_p, epsilon);
                let b = rho * b_per_rho;
                // rationalized root of a v + b v|v| = s, stable as b -> 0
                let disc = (b * s.abs() * 4.0 + a * a).sqrt();
                s * 2.0 / (disc + a)
            }
            AdvectionParams::DarcyWeisbach { d_t, f_dw } => {
                if s.re() == 0.0 {
                    return S::zero();
                }
                let mag = (s.abs() * (2.0 * d_t) / (rho * f_dw)).sqrt();
                if s.re() > 0.0 {
                    mag
                } else {
                    -mag
                }
            }
        }
    }

    pub fn velocity_from_pressure_gradient(&self, dpdz: f64, rho: f64) -> f64 {
        self.velocity_s(dpdz, rho)
    }
}

/// Dispersion coefficients; zero values disable the corresponding term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportParams {
    /// m2/s, common to all components
    pub diffusivity: f64,
    /// W/(m K)
    pub conductivity: f64,
}

impl TransportParams {
    pub const NONE: TransportParams = TransportParams {
        diffusivity: 0.0,
        conductivity: 0.0,
    };

    /// Packed bed: gas diffusion plus conduction through the solid fraction.
    pub fn packed_bed(epsilon: f64) -> Self {
        Self {
            diffusivity: 1e-5,
            conductivity: (1.0 - epsilon) * 50.0,
        }
    }

    /// Empty tube: the gas conductivity is neglected.
    pub fn tube() -> Self {
        Self {
            diffusivity: 1e-5,
            conductivity: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), SubmodelError> {
        if self.diffusivity >= 0.0 && self.conductivity >= 0.0 {
            Ok(())
        } else {
            Err(SubmodelError::Parameter(format!(
                "dispersion coefficients must be non-negative, got {self:?}"
            )))
        }
    }
}

/// Fick's law, `N = -D * dc/dz` elementwise.
pub fn diffusive_flux<S: Scalar>(d: &[f64], dc_dz: &[S]) -> Vec<S> {
    dc_dz.iter().zip(d).map(|(&g, &di)| g * (-di)).collect()
}

/// Total energy flux `eps H(T,P,N_adv) - Hbar . N_diff - kappa dT/dz`, W/m2.
#[allow(clippy::too_many_arguments)]
pub fn energy_flux_s<S: Scalar>(
    fluid: &FluidModel,
    t: S,
    p: S,
    c: &[S],
    n_adv: &[S],
    n_diff: &[S],
    dt_dz: S,
    kappa: f64,
    epsilon: f64,
) -> Result<S, ThermoError> {
    let mut e = fluid.enthalpy_s(t, p, n_adv)? * epsilon;
    if n_diff.iter().any(|n| *n != S::zero()) {
        let hbar = fluid.partial_molar_enthalpy_s(t, p, c)?;
        for (h, &n) in hbar.iter().zip(n_diff) {
            e -= *h * n;
        }
    }
    if kappa != 0.0 {
        e -= dt_dz * kappa;
    }
    Ok(e)
}

pub fn energy_flux_parts(
    fluid: &FluidModel,
    state: &ThermoState,
    n_adv: &[f64],
    n_diff: &[f64],
    dt_dz: f64,
    kappa: f64,
    epsilon: f64,
) -> Result<f64, ThermoError> {
    energy_flux_s(
        fluid, state.t, state.p, &state.c, n_adv, n_diff, dt_dz, kappa, epsilon,
    )
}

/// Newton's law of cooling across a shared wall.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatTransferParams {
    /// W/(m2 K)
    pub u_overall: f64,
    /// m2
    pub area: f64,
    /// A/V of the owning volume, 1/m
    pub a_self: f64,
    /// A/V' of the neighbour, 1/m
    pub a_other: f64,
}

impl HeatTransferParams {
    pub fn new(u_overall: f64, area: f64, v_self: f64, v_other: f64) -> Self {
        Self {
            u_overall,
            area,
            a_self: area / v_self,
            a_other: area / v_other,
        }
    }

    /// Swap the roles of the two volumes.
    pub fn mirrored(&self) -> Self {
        Self {
            a_self: self.a_other,
            a_other: self.a_self,
            ..*self
        }
    }

    pub fn check_volume(&self, v_self: f64) -> Result<(), SubmodelError> {
        if (self.a_self * v_self - self.area).abs() <= 1e-12 * self.area.abs().max(1.0) {
            Ok(())
        } else {
            Err(SubmodelError::Parameter(format!(
                "a_self = {} does not equal A/V = {}",
                self.a_self,
                self.area / v_self
            )))
        }
    }

    /// W/m3 of the owning volume.
    pub fn interfacial_heat_s<S: Scalar>(&self, t_other: S, t_self: S) -> S {
        (t_other - t_self) * (self.a_self * self.u_overall)
    }

    pub fn interfacial_heat(&self, t_other: f64, t_self: f64) -> f64 {
        self.interfacial_heat_s(t_other, t_self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::EosKind;

    const X: [f64; 4] = [0.215, 0.645, 0.10, 0.04];

    fn nominal_state(fluid: &FluidModel, t: f64, p: f64) -> ThermoState {
        let v = fluid.molar_volume(t, p, &X).unwrap();
        ThermoState::new(t, p, X.iter().map(|x| x / v).collect())
    }

    /// Same rate law evaluated from mole fractions with plain arithmetic.
    fn rate_oracle(t: f64, p_bar: f64, x: [f64; 4], eps: f64) -> f64 {
        let r = 8.314;
        let kf = 4972.0 * (-87090.0 / (r * t)).exp();
        let kb = 7.14e15 * (-198464.0 / (r * t)).exp();
        let (pn2, ph2, pnh3) = (p_bar * x[0], p_bar * x[1], p_bar * x[2]);
        let fwd = kf * pn2 * (ph2.powi(3) / pnh3.powi(2)).sqrt();
        let bwd = kb * (pnh3.powi(2) / ph2.powi(3)).sqrt();
        (1.0 - eps) / eps * 4.75 * (fwd - bwd)
    }

    #[test]
    fn rate_matches_oracle_at_nominal_state() {
        let fluid = FluidModel::ammonia(EosKind::Srk);
        let k = KineticParams::ammonia(0.33);
        let s = nominal_state(&fluid, 700.0, 200e5);
        let r = k.temkin_rate(&s).unwrap();
        let oracle = rate_oracle(700.0, 200.0, X, 0.33);
        assert!(
            (r - oracle).abs() <= 1e-12 * oracle.abs(),
            "{r} vs {oracle}"
        );
        let rates = k.production_rates(&s).unwrap();
        assert_eq!(rates, vec![-r, -3.0 * r, 2.0 * r, 0.0 * r]);
    }

    #[test]
    fn rate_positive_without_ammonia_and_linear_in_eta() {
        let mut k = KineticParams::ammonia(0.33);
        let s = ThermoState::new(700.0, 200e5, vec![800.0, 2400.0, 0.0, 100.0]);
        let r = k.temkin_rate(&s).unwrap();
        assert!(r > 0.0 && r.is_finite());
        k.eta *= 2.0;
        assert_eq!(k.temkin_rate(&s).unwrap(), 2.0 * r);
    }

    #[test]
    fn production_rates_are_stoichiometric_and_mass_conserving() {
        let fluid = FluidModel::ammonia(EosKind::IdealGas);
        let k = KineticParams::ammonia(0.18);
        let m = fluid.molar_masses();
        for t in [550.0, 650.0, 800.0] {
            let s = nominal_state(&fluid, t, 150e5);
            let rates = k.production_rates(&s).unwrap();
            assert_eq!(rates[1], 3.0 * rates[0]);
            assert_eq!(rates[2], -2.0 * rates[0]);
            assert_eq!(rates[3], 0.0);
            let mass: f64 = rates.iter().zip(&m).map(|(a, b)| a * b).sum();
            assert!(mass.abs() < 1e-8 * rates[0].abs() * 0.03);
        }
    }

    #[test]
    fn rate_crosses_zero_and_decreases_in_ammonia() {
        let k = KineticParams::ammonia(0.33);
        let (t, p) = (700.0, 200e5);
        let ctot = 3400.0;
        let rate_at = |y: f64| {
            // NH3 fraction y, remaining gas in feed proportions
            let rest = 1.0 - y - 0.04;
            let c = vec![
                0.25 * rest * ctot,
                0.75 * rest * ctot,
                y * ctot,
                0.04 * ctot,
            ];
            k.temkin_rate(&ThermoState::new(t, p, c)).unwrap()
        };
        let ys: Vec<f64> = (1..400).map(|i| i as f64 * 0.002).collect();
        let rates: Vec<f64> = ys.iter().map(|&y| rate_at(y)).collect();
        let cross = rates
            .windows(2)
            .position(|w| w[0] > 0.0 && w[1] <= 0.0)
            .unwrap();
        for w in rates[cross.saturating_sub(5)..cross + 5].windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn density_is_dot_product() {
        let fluid = FluidModel::ammonia(EosKind::Srk);
        let m = fluid.molar_masses();
        assert_eq!(fluid_density(&[0.0; 4], &m), 0.0);
        assert!((fluid_density(&[1000.0], &[0.028]) - 28.0).abs() < 1e-12);
        let s = nominal_state(&fluid, 650.0, 200e5);
        let oracle = s.c[0] * m[0] + s.c[1] * m[1] + s.c[2] * m[2] + s.c[3] * m[3];
        assert!((fluid_density(&s.c, &m) - oracle).abs() < 1e-12 * oracle);
    }

    #[test]
    fn ergun_root_matches_bisection() {
        let law = AdvectionParams::ergun_default(0.33);
        let (rho, dpdz) = (60.0, -5e4);
        let v = law.velocity_from_pressure_gradient(dpdz, rho);
        let (a, bpr) = AdvectionParams::ergun_coefficients(3.08e-5, 8e-3, 0.33);
        let f = |v: f64| a * v + bpr * rho * v * v + dpdz;
        let (mut lo, mut hi) = (0.0, 100.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((v - 0.5 * (lo + hi)).abs() < 1e-10);
        assert_eq!(law.velocity_from_pressure_gradient(-dpdz, rho), -v);
        assert_eq!(law.velocity_from_pressure_gradient(0.0, rho), 0.0);
    }

    #[test]
    fn darcy_weisbach_velocity() {
        let law = AdvectionParams::darcy_weisbach_default();
        assert_eq!(law.velocity_from_pressure_gradient(0.0, 50.0), 0.0);
        let v = law.velocity_from_pressure_gradient(-1000.0, 50.0);
        assert!((0.02 * 50.0 / (2.0 * 13.3e-3) * v * v - 1000.0).abs() < 1e-9);
        assert_eq!(law.velocity_from_pressure_gradient(1000.0, 50.0), -v);
    }

    #[test]
    fn diffusive_flux_arithmetic() {
        let d = [1e-5; 4];
        let n = diffusive_flux(&d, &[100.0, -200.0, 0.0, 50.0]);
        let expect = [-1e-3, 2e-3, 0.0, -5e-4];
        for (a, b) in n.iter().zip(expect) {
            assert!((a - b).abs() < 1e-18);
        }
        assert!(diffusive_flux(&[0.0; 4], &[1.0, 2.0, 3.0, 4.0])
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn energy_flux_reduces_to_convection() {
        let fluid = FluidModel::ammonia(EosKind::Srk);
        let s = nominal_state(&fluid, 760.0, 200e5);
        let zero = [0.0; 4];
        assert_eq!(
            energy_flux_parts(&fluid, &s, &zero, &zero, 0.0, 33.5, 0.33).unwrap(),
            0.0
        );
        let rho = fluid_density(&s.c, &fluid.molar_masses());
        let v = AdvectionParams::ergun_default(0.33).velocity_from_pressure_gradient(-500.0, rho);
        let n_adv: Vec<f64> = s.c.iter().map(|c| v * c).collect();
        let e = energy_flux_parts(&fluid, &s, &n_adv, &zero, 3.0, 0.0, 0.33).unwrap();
        let h = fluid.enthalpy(s.t, s.p, &n_adv).unwrap();
        assert!((e - 0.33 * h).abs() <= 1e-10 * h.abs());

        let n_diff = diffusive_flux(&[1e-5; 4], &[100.0, -200.0, 0.0, 50.0]);
        let e = energy_flux_parts(&fluid, &s, &n_adv, &n_diff, 3.0, 33.5, 0.33).unwrap();
        let hbar = fluid.partial_molar_enthalpy(&s).unwrap();
        let q: f64 = hbar.iter().zip(&n_diff).map(|(a, b)| a * b).sum();
        let expect = 0.33 * h - q - 33.5 * 3.0;
        assert!((e - expect).abs() <= 1e-10 * expect.abs());
    }

    #[test]
    fn interfacial_heat_is_antisymmetric() {
        let fbr = HeatTransferParams::new(300.0, 150.0, 3.0, 0.5);
        let lct = fbr.mirrored();
        assert_eq!(fbr.a_self, 50.0);
        assert_eq!(lct.a_self, 300.0);
        let q_fbr = fbr.interfacial_heat(610.0, 600.0);
        let q_lct = lct.interfacial_heat(600.0, 610.0);
        assert!((q_fbr - 1.5e5).abs() < 1e-9);
        assert!((q_lct + 9e5).abs() < 1e-9);
        assert!((3.0 * q_fbr + 0.5 * q_lct).abs() < 1e-9);
        assert_eq!(fbr.interfacial_heat(600.0, 600.0), 0.0);
        assert!(fbr.check_volume(3.0).is_ok());
        assert!(fbr.check_volume(2.0).is_err());
    }
}
