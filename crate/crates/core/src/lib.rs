//! Numerical laboratory for the one-dimensional strong-coupling polaron.
//!
//! * [`grid`]: uniform grid, quadrature, derivatives.
//! * [`pekar`]: the Pekar functional, its minimizer and multiplier.
//! * [`branch`]: the positive solution branch of `−u'' − 2u³ − Vu = λu` by shooting.
//! * [`perturb`]: perturbed Pekar energies and their Hellmann–Feynman derivative.
//! * [`froehlich`]: truncated Fröhlich Hamiltonian, Lanczos ground states, densities.
//! * [`budget`]: exact-rational order arithmetic of the strong-coupling error budget.
//! * [`cli`]: configuration-driven runs with file outputs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod branch;
pub mod budget;
pub mod cli;
pub mod error;
pub mod froehlich;
pub mod grid;
pub mod linalg;
pub mod measure;
pub mod ode;
pub mod pekar;
pub mod perturb;
pub mod potential;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction};
pub use measure::TestMeasure;
pub use pekar::{PekarOptions, PekarResult};
pub use potential::Potential;
