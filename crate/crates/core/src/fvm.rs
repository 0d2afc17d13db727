//! First-order upwind finite-volume semi-discretization.
//!
//! Every volume is split into `n` cells carrying `[c_1..c_nc, u, T, P]`.
//! The residual is assembled from face terms (fluxes between two cells or
//! across a boundary) and cell terms (production, heat exchange and the two
//! thermodynamic constraints). Each term touches at most two cells, so its
//! exact derivatives come from one forward-mode pass with dual numbers
//! seeded on those cells.
//!
//! Cells are stored block-interleaved by physical position: block `j` holds
//! cell `j` of every volume, counted along the unit's physical axis. For a
//! counter-current pair this puts heat-exchanging cells and the coupled
//! tube-outlet/bed-inlet cells in the same block, and the Jacobian is
//! block-tridiagonal with a bandwidth of two blocks.

use thiserror::Error;

use crate::linalg::BandMatrix;
use crate::reactor::{
    counter_current, inlet_concentration, BoundarySpec, OutletSpec, UnitSpec, VolumeSpec,
};
use crate::scalar::{Dual, Scalar};
use crate::submodels::fluid_density;
use crate::thermo::{ThermoError, MAX_COMPONENTS};

/// Dual-number width: two cells of `MAX_COMPONENTS + 3` unknowns.
const DN: usize = 2 * (MAX_COMPONENTS + 3);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FvmError {
    #[error("{what} in volume {volume}, cell {cell}: {source}")]
    Thermo {
        volume: usize,
        cell: usize,
        what: &'static str,
        #[source]
        source: ThermoError,
    },
    #[error("non-finite {what} in volume {volume}, cell {cell}")]
    NonFinite {
        volume: usize,
        cell: usize,
        what: &'static str,
    },
    #[error("state vector has length {got}, layout expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid discretization: {0}")]
    Setup(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub n_cells: usize,
    pub length: f64,
    pub h: f64,
}

impl Grid {
    pub fn new(length: f64, n_cells: usize) -> Result<Self, FvmError> {
        if n_cells < 2 {
            return Err(FvmError::Setup(format!(
                "need at least 2 cells, got {n_cells}"
            )));
        }
        if !(length > 0.0) {
            return Err(FvmError::Setup(format!(
                "length must be positive, got {length}"
            )));
        }
        Ok(Self {
            n_cells,
            length,
            h: length / n_cells as f64,
        })
    }

    /// Cell midpoint `(k + 1/2) h` for the zero-based cell index.
    pub fn midpoint(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.h
    }
}

/// Position of one unknown inside a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    C(usize),
    U,
    T,
    P,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateLayout {
    pub n_components: usize,
    pub n_cells: usize,
    pub n_volumes: usize,
    reversed: Vec<bool>,
}

impl StateLayout {
    pub fn new(n_components: usize, n_cells: usize, reversed: Vec<bool>) -> Self {
        Self {
            n_components,
            n_cells,
            n_volumes: reversed.len(),
            reversed,
        }
    }

    /// Unknowns per cell: `nc + 1` differential and 2 algebraic.
    pub fn cell_size(&self) -> usize {
        self.n_components + 3
    }

    pub fn dim(&self) -> usize {
        self.cell_size() * self.n_cells * self.n_volumes
    }

    pub fn block(&self, volume: usize, cell: usize) -> usize {
        if self.reversed[volume] {
            self.n_cells - 1 - cell
        } else {
            cell
        }
    }

    pub fn offset(&self, volume: usize, cell: usize) -> usize {
        (self.block(volume, cell) * self.n_volumes + volume) * self.cell_size()
    }

    pub fn index(&self, volume: usize, cell: usize, var: Var) -> usize {
        let nc = self.n_components;
        self.offset(volume, cell)
            + match var {
                Var::C(i) => i,
                Var::U => nc,
                Var::T => nc + 1,
                Var::P => nc + 2,
            }
    }

    /// Lower and upper bandwidth of the Jacobian.
    pub fn bandwidth(&self) -> usize {
        2 * self.n_volumes * self.cell_size() - 1
    }

    /// True for `c` and `u` rows.
    pub fn is_differential(&self, row: usize) -> bool {
        row % self.cell_size() <= self.n_components
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MassMatrixMode {
    /// Concentrations and internal energy are dynamic.
    FullDynamic,
    /// Only internal energy is dynamic; mass balances are quasi-steady.
    PseudoSteady,
}

/// Diagonal of the 0/1 mass matrix.
pub fn mass_matrix(layout: &StateLayout, mode: MassMatrixMode) -> Vec<f64> {
    let cs = layout.cell_size();
    let nc = layout.n_components;
    (0..layout.dim())
        .map(|i| {
            let r = i % cs;
            let dynamic = match mode {
                MassMatrixMode::FullDynamic => r <= nc,
                MassMatrixMode::PseudoSteady => r == nc,
            };
            if dynamic {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Upwind cell of a face: the left cell unless the right cell has the
/// strictly higher pressure.
pub fn upwind_select<'a, T>(left: &'a T, right: &'a T, p_left: f64, p_right: f64) -> &'a T {
    if p_right <= p_left {
        left
    } else {
        right
    }
}

pub fn interface_gradient<S: Scalar>(w_left: S, w_right: S, h: f64) -> S {
    (w_right - w_left) / h
}

/// Scalar parameter exposed to continuation and time-dependent inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parameter {
    None,
    /// Fresh-feed temperature [K].
    InletTemperature,
    /// Fresh-feed pressure [Pa].
    InletPressure,
    /// Product outlet pressure [Pa].
    OutletPressure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Face {
    Interior { vol: usize, k: usize },
    Inlet { vol: usize },
    Outlet { vol: usize },
    Coupling { up: usize, down: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Term {
    Face(Face),
    Cell { vol: usize, k: usize },
}

#[derive(Clone, Debug)]
struct CellVars<S> {
    c: Vec<S>,
    u: S,
    t: S,
    p: S,
}

/// Molar and energy flux through a face, per unit fluid area and per unit
/// total area respectively, with the interstitial velocity.
#[derive(Clone, Debug, PartialEq)]
pub struct Flux<S> {
    pub n: Vec<S>,
    pub e: S,
    pub v: S,
}

/// Fluxes through both ends of every volume.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFluxes {
    pub inlet: Vec<Flux<f64>>,
    pub outlet: Vec<Flux<f64>>,
}

#[derive(Clone, Debug)]
pub struct SemiDiscreteSystem {
    pub unit: UnitSpec,
    pub grids: Vec<Grid>,
    pub layout: StateLayout,
    pub parameter: Parameter,
    molar_masses: Vec<f64>,
    terms: Vec<Term>,
}

impl SemiDiscreteSystem {
    pub fn new(unit: UnitSpec, n_cells: usize, parameter: Parameter) -> Result<Self, FvmError> {
        unit.validate()
            .map_err(|e| FvmError::Setup(e.to_string()))?;
        let nc = unit.n_components();
        if nc > MAX_COMPONENTS {
            return Err(FvmError::Setup(format!(
                "at most {MAX_COMPONENTS} components"
            )));
        }
        let grids = unit
            .volumes
            .iter()
            .map(|v| Grid::new(v.geometry.length, n_cells))
            .collect::<Result<Vec<_>, _>>()?;
        let layout = StateLayout::new(
            nc,
            n_cells,
            unit.volumes.iter().map(|v| v.reversed).collect(),
        );
        let mut terms = Vec::new();
        for (vol, spec) in unit.volumes.iter().enumerate() {
            match spec.inlet {
                BoundarySpec::Coupled { upstream, .. } => terms.push(Term::Face(Face::Coupling {
                    up: upstream,
                    down: vol,
                })),
                _ => terms.push(Term::Face(Face::Inlet { vol })),
            }
            for k in 0..n_cells - 1 {
                terms.push(Term::Face(Face::Interior { vol, k }));
            }
            if let OutletSpec::Pressure { .. } = spec.outlet {
                terms.push(Term::Face(Face::Outlet { vol }));
            }
            for k in 0..n_cells {
                terms.push(Term::Cell { vol, k });
            }
        }
        let molar_masses = unit.fluid.molar_masses();
        Ok(Self {
            unit,
            grids,
            layout,
            parameter,
            molar_masses,
            terms,
        })
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn n_cells(&self) -> usize {
        self.layout.n_cells
    }

    fn partner(&self, vol: usize) -> Option<usize> {
        match self.unit.heat_pair {
            Some((a, b)) if a == vol => Some(b),
            Some((a, b)) if b == vol => Some(a),
            _ => None,
        }
    }

    fn term_cells(&self, term: Term) -> ([(usize, usize); 2], usize) {
        let n = self.n_cells();
        match term {
            Term::Face(Face::Interior { vol, k }) => ([(vol, k), (vol, k + 1)], 2),
            Term::Face(Face::Inlet { vol }) => ([(vol, 0), (vol, 0)], 1),
            Term::Face(Face::Outlet { vol }) => ([(vol, n - 1), (vol, n - 1)], 1),
            Term::Face(Face::Coupling { up, down }) => ([(up, n - 1), (down, 0)], 2),
            Term::Cell { vol, k } => match self.partner(vol) {
                Some(o) => ([(vol, k), (o, counter_current(k, n))], 2),
                None => ([(vol, k), (vol, k)], 1),
            },
        }
    }

    fn load<S: Scalar>(
        &self,
        w: &[f64],
        vol: usize,
        cell: usize,
        mut make: impl FnMut(f64, usize) -> S,
    ) -> CellVars<S> {
        let base = self.layout.offset(vol, cell);
        let nc = self.layout.n_components;
        CellVars {
            c: (0..nc).map(|i| make(w[base + i], i)).collect(),
            u: make(w[base + nc], nc),
            t: make(w[base + nc + 1], nc + 1),
            p: make(w[base + nc + 2], nc + 2),
        }
    }

    /// Inlet reservoir (x, T, P) with the continuation parameter applied.
    fn reservoir(&self, vol: usize, lambda: f64) -> Option<(&[f64], f64, f64)> {
        match &self.unit.volumes[vol].inlet {
            BoundarySpec::PressureDriven { x_in, t_in, p_in } => {
                let feed = vol == self.unit.feed_volume;
                let t = if feed && self.parameter == Parameter::InletTemperature {
                    lambda
                } else {
                    *t_in
                };
                let p = if feed && self.parameter == Parameter::InletPressure {
                    lambda
                } else {
                    *p_in
                };
                Some((x_in, t, p))
            }
            _ => None,
        }
    }

    fn outlet_pressure(&self, vol: usize, lambda: f64) -> Option<f64> {
        match self.unit.volumes[vol].outlet {
            OutletSpec::Pressure { p_out } => {
                if vol == self.unit.product_volume && self.parameter == Parameter::OutletPressure {
                    Some(lambda)
                } else {
                    Some(p_out)
                }
            }
            OutletSpec::Coupled { .. } => None,
        }
    }

    fn thermo_err(vol: usize, cell: usize, what: &'static str) -> impl Fn(ThermoError) -> FvmError {
        move |source| FvmError::Thermo {
            volume: vol,
            cell,
            what,
            source,
        }
    }

    /// Enthalpy density `H(T, P, c)` and partial molar enthalpies if needed.
    fn enthalpy_props<S: Scalar>(
        &self,
        vol: usize,
        cell: usize,
        s: &CellVars<S>,
        with_hbar: bool,
    ) -> Result<(S, Option<Vec<S>>), FvmError> {
        let fluid = &self.unit.fluid;
        let mix = fluid.mixture(s.t, s.p, &s.c).map_err(Self::thermo_err(
            vol,
            cell,
            "interface enthalpy",
        ))?;
        let h = fluid.mixture_enthalpy(&mix, &s.c);
        let hbar = with_hbar.then(|| fluid.mixture_partial_enthalpies(&mix));
        Ok((h, hbar))
    }

    /// Convective flux carried by the upwind state `s` at velocity `v`.
    fn convective<S: Scalar>(
        &self,
        spec: &VolumeSpec,
        vol: usize,
        cell: usize,
        s: &CellVars<S>,
        v: S,
    ) -> Result<Flux<S>, FvmError> {
        let (h, _) = self.enthalpy_props(vol, cell, s, false)?;
        Ok(Flux {
            n: s.c.iter().map(|&c| c * v).collect(),
            e: h * v * spec.geometry.epsilon,
            v,
        })
    }

    fn face_flux<S: Scalar>(
        &self,
        face: Face,
        a: &CellVars<S>,
        b: &CellVars<S>,
        lambda: f64,
    ) -> Result<Flux<S>, FvmError> {
        let n = self.n_cells();
        match face {
            Face::Interior { vol, k } => {
                let spec = &self.unit.volumes[vol];
                let h = self.grids[vol].h;
                let (up, kup) = if b.p.re() <= a.p.re() {
                    (a, k)
                } else {
                    (b, k + 1)
                };
                let rho = fluid_density(&up.c, &self.molar_masses);
                let v = spec
                    .advection
                    .velocity_s(interface_gradient(a.p, b.p, h), rho);
                let d = spec.transport.diffusivity;
                let kappa = spec.transport.conductivity;
                let eps = spec.geometry.epsilon;
                let (hd, hbar) = self.enthalpy_props(vol, kup, up, d != 0.0)?;
                let mut flux = Flux {
                    n: up.c.iter().map(|&c| c * v).collect(),
                    e: hd * v * eps,
                    v,
                };
                if let Some(hbar) = hbar {
                    let mut q = S::zero();
                    for i in 0..a.c.len() {
                        let nd = interface_gradient(a.c[i], b.c[i], h) * (-d);
                        flux.n[i] += nd;
                        q += hbar[i] * nd;
                    }
                    flux.e -= q;
                }
                if kappa != 0.0 {
                    flux.e -= interface_gradient(a.t, b.t, h) * kappa;
                }
                Ok(flux)
            }
            Face::Inlet { vol } => {
                let spec = &self.unit.volumes[vol];
                let g = &spec.geometry;
                match &spec.inlet {
                    BoundarySpec::FlowDriven { f_in, h_in } => Ok(Flux {
                        n: f_in.iter().map(|f| S::cst(f / g.fluid_area)).collect(),
                        e: S::cst(h_in / g.area),
                        v: S::zero(),
                    }),
                    BoundarySpec::PressureDriven { .. } => {
                        let (x, t_in, p_in) = self.reservoir(vol, lambda).unwrap();
                        let half = 0.5 * self.grids[vol].h;
                        let dpdz = (a.p - p_in) / half;
                        if a.p.re() <= p_in {
                            let fluid = &self.unit.fluid;
                            let c_in = inlet_concentration(fluid, x, t_in, p_in)
                                .map_err(Self::thermo_err(vol, 0, "inlet state"))?;
                            let rho = fluid_density(&c_in, &self.molar_masses);
                            let h_in = fluid
                                .enthalpy(t_in, p_in, &c_in)
                                .map_err(Self::thermo_err(vol, 0, "inlet enthalpy"))?;
                            let v = spec.advection.velocity_s(dpdz, S::cst(rho));
                            Ok(Flux {
                                n: c_in.iter().map(|&c| v * c).collect(),
                                e: v * (h_in * g.epsilon),
                                v,
                            })
                        } else {
                            let rho = fluid_density(&a.c, &self.molar_masses);
                            let v = spec.advection.velocity_s(dpdz, rho);
                            self.convective(spec, vol, 0, a, v)
                        }
                    }
                    BoundarySpec::Coupled { .. } => {
                        unreachable!("coupled inlets use Face::Coupling")
                    }
                }
            }
            Face::Outlet { vol } => {
                let spec = &self.unit.volumes[vol];
                let p_out = self.outlet_pressure(vol, lambda).unwrap();
                let half = 0.5 * self.grids[vol].h;
                let rho = fluid_density(&a.c, &self.molar_masses);
                let v = spec.advection.velocity_s((S::cst(p_out) - a.p) / half, rho);
                self.convective(spec, vol, n - 1, a, v)
            }
            Face::Coupling { up, down } => {
                let spec = &self.unit.volumes[up];
                let half = 0.5 * self.grids[up].h;
                let (s, vol, cell) = if b.p.re() <= a.p.re() {
                    (a, up, n - 1)
                } else {
                    (b, down, 0)
                };
                let rho = fluid_density(&s.c, &self.molar_masses);
                let v = spec.advection.velocity_s((b.p - a.p) / half, rho);
                let (h, _) = self.enthalpy_props(vol, cell, s, false)?;
                Ok(Flux {
                    n: s.c.iter().map(|&c| c * v).collect(),
                    e: h * v * spec.geometry.epsilon,
                    v,
                })
            }
        }
    }

    /// Row contributions of one term, as `(global row, value)`.
    fn eval_term<S: Scalar>(
        &self,
        term: Term,
        a: &CellVars<S>,
        b: &CellVars<S>,
        lambda: f64,
        out: &mut Vec<(usize, S)>,
    ) -> Result<(), FvmError> {
        let nc = self.layout.n_components;
        let n = self.n_cells();
        let idx = |vol, cell, var| self.layout.index(vol, cell, var);
        match term {
            Term::Face(face) => {
                let flux = self.face_flux(face, a, b, lambda)?;
                // (volume, cell, molar weight, energy weight)
                let targets: [(usize, usize, f64, f64); 2] = match face {
                    Face::Interior { vol, k } => {
                        let h = self.grids[vol].h;
                        [(vol, k, -1.0 / h, -1.0 / h), (vol, k + 1, 1.0 / h, 1.0 / h)]
                    }
                    Face::Inlet { vol } => {
                        let h = self.grids[vol].h;
                        [(vol, 0, 1.0 / h, 1.0 / h), (vol, 0, 0.0, 0.0)]
                    }
                    Face::Outlet { vol } => {
                        let h = self.grids[vol].h;
                        [(vol, n - 1, -1.0 / h, -1.0 / h), (vol, n - 1, 0.0, 0.0)]
                    }
                    Face::Coupling { up, down } => {
                        let (gu, gd) = (
                            &self.unit.volumes[up].geometry,
                            &self.unit.volumes[down].geometry,
                        );
                        let psi = gu.fluid_area / gd.fluid_area;
                        let area_ratio = gu.area / gd.area;
                        let (hu, hd) = (self.grids[up].h, self.grids[down].h);
                        [
                            (up, n - 1, -1.0 / hu, -1.0 / hu),
                            (down, 0, psi / hd, area_ratio / hd),
                        ]
                    }
                };
                for (vol, cell, wn, we) in targets {
                    if wn == 0.0 && we == 0.0 {
                        continue;
                    }
                    for i in 0..nc {
                        out.push((idx(vol, cell, Var::C(i)), flux.n[i] * wn));
                    }
                    out.push((idx(vol, cell, Var::U), flux.e * we));
                }
            }
            Term::Cell { vol, k } => {
                let spec = &self.unit.volumes[vol];
                let fluid = &self.unit.fluid;
                if let Some(kin) = &spec.kinetics {
                    let r = kin.rate_s(a.t, a.p, &a.c);
                    if !r.re().is_finite() {
                        return Err(FvmError::NonFinite {
                            volume: vol,
                            cell: k,
                            what: "reaction rate",
                        });
                    }
                    for i in 0..nc {
                        if kin.nu[i] != 0.0 {
                            out.push((idx(vol, k, Var::C(i)), r * kin.nu[i]));
                        }
                    }
                }
                if let (Some(heat), Some(_)) = (&spec.heat, self.partner(vol)) {
                    out.push((idx(vol, k, Var::U), heat.interfacial_heat_s(b.t, a.t)));
                }
                let mix = fluid.mixture(a.t, a.p, &a.c).map_err(Self::thermo_err(
                    vol,
                    k,
                    "constraint",
                ))?;
                let u_fluid = fluid.mixture_enthalpy(&mix, &a.c) - a.p * mix_volume(&mix);
                let eps = spec.geometry.epsilon;
                let u = match &spec.solid {
                    Some(solid) if eps < 1.0 => {
                        u_fluid * eps + solid.internal_energy(a.t) * (1.0 - eps)
                    }
                    _ => u_fluid,
                };
                out.push((idx(vol, k, Var::T), mix_volume(&mix) - 1.0));
                out.push((idx(vol, k, Var::P), u - a.u));
            }
        }
        Ok(())
    }

    fn check_dim(&self, w: &[f64]) -> Result<(), FvmError> {
        if w.len() != self.dim() {
            return Err(FvmError::Dimension {
                expected: self.dim(),
                got: w.len(),
            });
        }
        Ok(())
    }

    pub fn residual(&self, w: &[f64], lambda: f64, out: &mut [f64]) -> Result<(), FvmError> {
        self.check_dim(w)?;
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut buf = Vec::with_capacity(16);
        for &term in &self.terms {
            let (cells, _) = self.term_cells(term);
            let a = self.load::<f64>(w, cells[0].0, cells[0].1, |v, _| v);
            let b = self.load::<f64>(w, cells[1].0, cells[1].1, |v, _| v);
            buf.clear();
            self.eval_term(term, &a, &b, lambda, &mut buf)?;
            for &(row, v) in &buf {
                out[row] += v;
            }
        }
        Ok(())
    }

    pub fn residual_vec(&self, w: &[f64], lambda: f64) -> Result<Vec<f64>, FvmError> {
        let mut out = vec![0.0; self.dim()];
        self.residual(w, lambda, &mut out)?;
        Ok(out)
    }

    pub fn jacobian(&self, w: &[f64], lambda: f64) -> Result<BandMatrix, FvmError> {
        self.check_dim(w)?;
        let bw = self.layout.bandwidth();
        let mut jac = BandMatrix::zeros(self.dim(), bw, bw);
        let cs = self.layout.cell_size();
        let mut buf: Vec<(usize, Dual<DN>)> = Vec::with_capacity(16);
        for &term in &self.terms {
            let (cells, count) = self.term_cells(term);
            let a = self.load::<Dual<DN>>(w, cells[0].0, cells[0].1, |v, i| Dual::variable(v, i));
            let b = if count == 2 {
                self.load::<Dual<DN>>(w, cells[1].0, cells[1].1, |v, i| Dual::variable(v, cs + i))
            } else {
                a.clone()
            };
            buf.clear();
            self.eval_term(term, &a, &b, lambda, &mut buf)?;
            for &(row, ref d) in &buf {
                for (slot, &(vol, cell)) in cells.iter().take(count).enumerate() {
                    let base = self.layout.offset(vol, cell);
                    for i in 0..cs {
                        let g = d.eps[slot * cs + i];
                        if g != 0.0 {
                            jac.add(row, base + i, g);
                        }
                    }
                }
            }
        }
        Ok(jac)
    }

    /// Central difference of the residual in the parameter.
    pub fn dlambda(&self, w: &[f64], lambda: f64) -> Result<Vec<f64>, FvmError> {
        let step = 1e-6 * lambda.abs().max(1.0);
        let fp = self.residual_vec(w, lambda + step)?;
        let fm = self.residual_vec(w, lambda - step)?;
        Ok(fp
            .iter()
            .zip(&fm)
            .map(|(a, b)| (a - b) / (2.0 * step))
            .collect())
    }

    pub fn mass_matrix(&self, mode: MassMatrixMode) -> Vec<f64> {
        mass_matrix(&self.layout, mode)
    }

    pub fn boundary_fluxes(&self, w: &[f64], lambda: f64) -> Result<BoundaryFluxes, FvmError> {
        self.check_dim(w)?;
        let nv = self.unit.volumes.len();
        let n = self.n_cells();
        let mut inlet: Vec<Option<Flux<f64>>> = vec![None; nv];
        let mut outlet: Vec<Option<Flux<f64>>> = vec![None; nv];
        for &term in &self.terms {
            let Term::Face(face) = term else { continue };
            let (cells, _) = self.term_cells(term);
            let a = self.load::<f64>(w, cells[0].0, cells[0].1, |v, _| v);
            let b = self.load::<f64>(w, cells[1].0, cells[1].1, |v, _| v);
            match face {
                Face::Inlet { vol } => inlet[vol] = Some(self.face_flux(face, &a, &b, lambda)?),
                Face::Outlet { vol } => outlet[vol] = Some(self.face_flux(face, &a, &b, lambda)?),
                Face::Coupling { up, down } => {
                    let f = self.face_flux(face, &a, &b, lambda)?;
                    let (gu, gd) = (
                        &self.unit.volumes[up].geometry,
                        &self.unit.volumes[down].geometry,
                    );
                    inlet[down] = Some(Flux {
                        n: f.n
                            .iter()
                            .map(|x| x * gu.fluid_area / gd.fluid_area)
                            .collect(),
                        e: f.e * gu.area / gd.area,
                        v: f.v,
                    });
                    outlet[up] = Some(f);
                }
                Face::Interior { .. } => {}
            }
        }
        let _ = n;
        Ok(BoundaryFluxes {
            inlet: inlet
                .into_iter()
                .map(|f| f.expect("every volume has an inlet"))
                .collect(),
            outlet: outlet
                .into_iter()
                .map(|f| f.expect("every volume has an outlet"))
                .collect(),
        })
    }

    /// Velocity at the downstream face of every cell of a volume.
    pub fn face_velocities(
        &self,
        w: &[f64],
        vol: usize,
        lambda: f64,
    ) -> Result<Vec<f64>, FvmError> {
        let n = self.n_cells();
        let mut v = vec![0.0; n];
        for &term in &self.terms {
            let Term::Face(face) = term else { continue };
            let (cells, _) = self.term_cells(term);
            let k = match face {
                Face::Interior { vol: fv, k } if fv == vol => k,
                Face::Outlet { vol: fv } if fv == vol => n - 1,
                Face::Coupling { up, .. } if up == vol => n - 1,
                _ => continue,
            };
            let a = self.load::<f64>(w, cells[0].0, cells[0].1, |x, _| x);
            let b = self.load::<f64>(w, cells[1].0, cells[1].1, |x, _| x);
            v[k] = self.face_flux(face, &a, &b, lambda)?.v;
        }
        Ok(v)
    }

    /// Hydrogen conversion between the fresh feed and the product outlet.
    pub fn h2_conversion(&self, w: &[f64], lambda: f64) -> Result<f64, FvmError> {
        let fl = self.boundary_fluxes(w, lambda)?;
        let h2 = self
            .unit
            .fluid
            .index_of("H2")
            .ok_or_else(|| FvmError::Setup("no H2 component".into()))?;
        let (feed, prod) = (self.unit.feed_volume, self.unit.product_volume);
        crate::reactor::h2_conversion(
            fl.inlet[feed].n[h2],
            self.unit.volumes[feed].geometry.fluid_area,
            fl.outlet[prod].n[h2],
            self.unit.volumes[prod].geometry.fluid_area,
        )
        .map_err(|e| FvmError::Setup(e.to_string()))
    }

    pub fn cell_value(&self, w: &[f64], vol: usize, cell: usize, var: Var) -> f64 {
        w[self.layout.index(vol, cell, var)]
    }

    /// Temperature of the product outlet cell.
    pub fn outlet_temperature(&self, w: &[f64]) -> f64 {
        self.cell_value(w, self.unit.product_volume, self.n_cells() - 1, Var::T)
    }

    /// For a counter-current unit, the temperature of the tube outlet cell
    /// where the preheated feed turns into the bed; otherwise the product
    /// outlet temperature.
    pub fn top_temperature(&self, w: &[f64]) -> f64 {
        match self.unit.volumes[self.unit.product_volume].inlet {
            BoundarySpec::Coupled { upstream, .. } => {
                self.cell_value(w, upstream, self.n_cells() - 1, Var::T)
            }
            _ => self.outlet_temperature(w),
        }
    }

    /// Constant temperatures, linear pressures, feed composition at the
    /// local molar density and the matching internal energy.
    pub fn initial_guess(&self, lambda: f64) -> Result<Vec<f64>, FvmError> {
        let fluid = &self.unit.fluid;
        let feed = self.unit.feed_volume;
        let (x, t_in, p_in) = self
            .reservoir(feed, lambda)
            .ok_or_else(|| FvmError::Setup("initial guess needs a pressure-driven feed".into()))?;
        let p_out = self
            .outlet_pressure(self.unit.product_volume, lambda)
            .ok_or_else(|| FvmError::Setup("product volume has no outlet pressure".into()))?;
        // walk the flow path from the feed, splitting the drop by length
        let mut path = vec![feed];
        while let OutletSpec::Coupled { downstream } =
            self.unit.volumes[*path.last().unwrap()].outlet
        {
            path.push(downstream);
        }
        let total_length: f64 = path.iter().map(|&v| self.grids[v].length).sum();
        let mut w = vec![0.0; self.dim()];
        let n = self.n_cells();
        let mut p_start = p_in;
        for &vol in &path {
            let spec = &self.unit.volumes[vol];
            let grid = &self.grids[vol];
            let dp = (p_in - p_out) * grid.length / total_length;
            for k in 0..n {
                let p = p_start - dp * grid.midpoint(k) / grid.length;
                let c = inlet_concentration(fluid, x, t_in, p).map_err(Self::thermo_err(
                    vol,
                    k,
                    "initial guess",
                ))?;
                let state = crate::thermo::ThermoState::new(t_in, p, c);
                let u = match &spec.solid {
                    Some(solid) if spec.geometry.epsilon < 1.0 => {
                        fluid.volume_internal_energy_density(&state, spec.geometry.epsilon, solid)
                    }
                    _ => fluid.fluid_internal_energy_density(&state),
                }
                .map_err(Self::thermo_err(vol, k, "initial guess"))?;
                for (i, ci) in state.c.iter().enumerate() {
                    w[self.layout.index(vol, k, Var::C(i))] = *ci;
                }
                w[self.layout.index(vol, k, Var::U)] = u;
                w[self.layout.index(vol, k, Var::T)] = t_in;
                w[self.layout.index(vol, k, Var::P)] = p;
            }
            p_start -= dp;
        }
        Ok(w)
    }

    /// Row weights that turn each balance row into a relative rate of
    /// change of its own unknown (1/s) and each constraint row into a
    /// dimensionless defect.
    pub fn residual_scales(&self, var_scales: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.dim()];
        for vol in 0..self.unit.volumes.len() {
            for k in 0..self.n_cells() {
                for i in 0..self.layout.n_components {
                    let j = self.layout.index(vol, k, Var::C(i));
                    r[j] = 1.0 / var_scales[j];
                }
                let ju = self.layout.index(vol, k, Var::U);
                r[ju] = 1.0 / var_scales[ju];
                r[self.layout.index(vol, k, Var::T)] = 1.0;
                r[self.layout.index(vol, k, Var::P)] = 1.0 / var_scales[ju];
            }
        }
        r
    }

    /// Characteristic magnitude of every unknown: concentrations by the
    /// feed molar density, `u` by its magnitude in `w_ref`, T by 100 K and
    /// P by 1 bar.
    pub fn variable_scales(&self, w_ref: &[f64], lambda: f64) -> Vec<f64> {
        let c_scale = self
            .reservoir(self.unit.feed_volume, lambda)
            .and_then(|(x, t, p)| inlet_concentration(&self.unit.fluid, x, t, p).ok())
            .map(|c| c.iter().sum::<f64>())
            .unwrap_or(1.0);
        let nv = self.unit.volumes.len();
        let n = self.n_cells();
        let mut u_scale = vec![0.0f64; nv];
        for vol in 0..nv {
            for k in 0..n {
                u_scale[vol] = u_scale[vol].max(w_ref[self.layout.index(vol, k, Var::U)].abs());
            }
            if u_scale[vol] == 0.0 {
                u_scale[vol] = 1.0;
            }
        }
        let mut s = vec![0.0; self.dim()];
        for vol in 0..nv {
            for k in 0..n {
                for i in 0..self.layout.n_components {
                    s[self.layout.index(vol, k, Var::C(i))] = c_scale;
                }
                s[self.layout.index(vol, k, Var::U)] = u_scale[vol];
                s[self.layout.index(vol, k, Var::T)] = 100.0;
                s[self.layout.index(vol, k, Var::P)] = 1e5;
            }
        }
        s
    }
}

fn mix_volume<S: Scalar>(mix: &crate::thermo::Mixture<S>) -> S {
    mix.volume()
}
