//! Concentrated traveling vortex pairs on the half-plane.
//!
//! Vortex pairs are computed as maximizers of the penalized kinetic energy
//! `E - qI` over a discrete rearrangement class of a scaled profile
//! `rho_eps(x) = eps^-2 rho(x / eps)`. The crate provides the half-plane
//! Green operator, the ascent solver, an eps-sweep harness that measures the
//! concentration estimates, and a semi-Lagrangian Euler integrator used to
//! check that maximizers travel at speed `q`.

// `!(x > 0.0)` style guards are kept so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod bessel;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod io;
pub mod kernel;
mod lattice;
pub mod profile;
pub mod rearrange;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{CellSet, FieldKind, Grid, Point, ScalarField};
