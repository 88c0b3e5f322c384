//! Minimizing-movement flows of shapes and capacitary measures on Cartesian grids.
//!
//! The crate is organized bottom-up:
//!
//! * [`grid`]: domains, shape masks, set metrics and morphology;
//! * [`pde`]: relaxed Dirichlet problems, torsion functions and Dirichlet eigenvalues;
//! * [`capmeasure`]: capacitary measures, the measure/torsion bijection and the γ-distance;
//! * [`flow_measure`]: projection onto the torsion cone, proximal steps and measure flows;
//! * [`flow_shape`]: set flows driven by spectral and energy functionals;
//! * [`io`] and [`cli`]: file formats and the command line front end.

// index loops mirror the stencil formulas; `!(x > 0.0)` deliberately rejects NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod capmeasure;
pub mod cli;
pub mod error;
pub mod flow_measure;
pub mod flow_shape;
pub mod grid;
pub mod io;
pub mod pde;

pub use error::{Error, Result};
