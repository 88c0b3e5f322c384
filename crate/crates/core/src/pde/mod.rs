//! Elliptic solvers on masked grids.
//!
//! Every problem is discretized with the five-point (three-point in 1D)
//! stencil. Cells outside the mask, or where the measure is infinite, are
//! eliminated and carry the value zero; the boundary ring is always
//! eliminated. The resulting operator is symmetric positive definite, so
//! linear solves use conjugate gradients and eigenvalues use inverse
//! iteration.

mod eigen;
mod operator;
mod radial;

pub use eigen::{
    boundary_normal_derivative, eigen_solve, eigenvalues, principal_eigenpair, rayleigh_quotient, BoundaryFace,
    EigenOptions, EigenResult,
};
pub use operator::Coefficient;
pub use radial::{radial_reference, RadialConfig, RadialReference};

pub(crate) use operator::{conjugate_gradient, Operator};

use crate::capmeasure::{TorsionField, EPS_X};
use crate::error::{Error, Result};
use crate::grid::{Primitive, ScalarGridField};

/// Default relative residual for linear solves.
pub const CG_TOLERANCE: f64 = 1e-10;
/// Relative residual used for torsion functions, tight enough that the
/// per-cell residual stays well below the X-membership tolerance.
pub const TORSION_TOLERANCE: f64 = 1e-11;
/// Default iteration cap for linear solves.
pub const CG_MAX_ITERATIONS: usize = 10_000;

/// Right-hand side of `-Δu + μu = f`.
#[derive(Clone, Copy, Debug)]
pub enum Rhs<'a> {
    Constant(f64),
    Field(&'a ScalarGridField),
}

/// A relaxed Dirichlet problem `-Δu + μu = f` with `u = 0` where `μ = ∞`.
#[derive(Clone, Copy, Debug)]
pub struct DirichletProblemSpec<'a> {
    pub coefficient: Coefficient<'a>,
    pub rhs: Rhs<'a>,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Analytic boundary used for cut-cell stencils next to eliminated cells.
    pub fit: Option<&'a Primitive>,
    pub initial_guess: Option<&'a ScalarGridField>,
}

impl<'a> DirichletProblemSpec<'a> {
    pub fn new(coefficient: Coefficient<'a>) -> Self {
        DirichletProblemSpec {
            coefficient,
            rhs: Rhs::Constant(1.0),
            tolerance: CG_TOLERANCE,
            max_iterations: CG_MAX_ITERATIONS,
            fit: None,
            initial_guess: None,
        }
    }

    pub fn rhs(mut self, rhs: Rhs<'a>) -> Self {
        self.rhs = rhs;
        self
    }

    pub fn tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn fit(mut self, p: &'a Primitive) -> Self {
        self.fit = Some(p);
        self
    }

    pub fn initial_guess(mut self, g: &'a ScalarGridField) -> Self {
        self.initial_guess = Some(g);
        self
    }
}

/// Solves the relaxed Dirichlet problem; the solution is zero on eliminated cells.
pub fn solve_dirichlet(spec: &DirichletProblemSpec<'_>) -> Result<ScalarGridField> {
    if !(spec.tolerance > 0.0) {
        return Err(Error::invalid(format!(
            "solver tolerance {} must be positive",
            spec.tolerance
        )));
    }
    let domain = *spec.coefficient.domain();
    let op = Operator::new(spec.coefficient, spec.fit)?;
    let b: Vec<f64> = match spec.rhs {
        Rhs::Constant(c) => {
            if !c.is_finite() {
                return Err(Error::invalid("right-hand side must be finite"));
            }
            vec![c; domain.len()]
        }
        Rhs::Field(f) => {
            domain.check_same(f.domain())?;
            f.values().to_vec()
        }
    };
    let mut x = match spec.initial_guess {
        Some(g) => {
            domain.check_same(g.domain())?;
            g.values().to_vec()
        }
        None => vec![0.0; domain.len()],
    };
    conjugate_gradient(&op, &b, &mut x, spec.tolerance, spec.max_iterations)?;
    op.restrict(&mut x);
    ScalarGridField::new(domain, x)
}

/// Torsion function `w = R_μ(1)`.
pub fn torsion(coef: Coefficient<'_>) -> Result<TorsionField> {
    torsion_with(&DirichletProblemSpec::new(coef).tolerance(TORSION_TOLERANCE))
}

/// Torsion function with the solver settings of `spec` (its right-hand side
/// is ignored and replaced by `1`).
pub fn torsion_with(spec: &DirichletProblemSpec<'_>) -> Result<TorsionField> {
    let spec = spec.rhs(Rhs::Constant(1.0));
    let u = solve_dirichlet(&spec)?;
    into_torsion(u)
}

/// Clamps round-off negatives and checks the X invariants.
pub(crate) fn into_torsion(u: ScalarGridField) -> Result<TorsionField> {
    let domain = *u.domain();
    let scale = u.max_abs().max(f64::MIN_POSITIVE);
    let mut vals = u.into_values();
    for v in vals.iter_mut() {
        if *v < 0.0 {
            if *v < -1e-8 * scale {
                return Err(Error::Invariant(format!(
                    "torsion solve produced a negative value {v:.3e}"
                )));
            }
            *v = 0.0;
        }
    }
    TorsionField::new(ScalarGridField::new(domain, vals)?, EPS_X)
}
