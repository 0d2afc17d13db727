//! One-dimensional fixed-bed reactor simulation.
//!
//! Each reactor volume carries transport balances for the concentrations
//! `c` and the internal energy density `u`, closed by two thermodynamic
//! constraints that determine temperature and pressure:
//!
//! ```text
//! dc/dt = -dN/dz + R        V(T, P, c) = 1
//! du/dt = -dE/dz + Q        U(T, P, c) = u
//! ```
//!
//! The crate discretizes these with a first-order upwind finite-volume
//! scheme and provides Newton, pseudo-arclength continuation and ESDIRK
//! drivers for the resulting semi-explicit DAE.

pub mod experiments;
pub mod fvm;
pub mod linalg;
pub mod reactor;
pub mod scalar;
pub mod solvers;
pub mod submodels;
pub mod thermo;
