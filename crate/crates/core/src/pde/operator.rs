//! Matrix-free `-Δ_h + μ` on the active cells of a grid.

use rayon::prelude::*;

use crate::capmeasure::CapacitaryMeasure;
use crate::error::{Error, Result};
use crate::grid::{GridDomain, Primitive, ShapeMask};

/// Smallest admissible boundary fraction in the cut-cell stencil.
const MIN_THETA: f64 = 1e-3;

const PAR_THRESHOLD: usize = 1 << 15;

/// What the Dirichlet problem is posed on.
#[derive(Clone, Copy, Debug)]
pub enum Coefficient<'a> {
    /// Homogeneous Dirichlet condition outside the mask (`μ = ∞_{D \ Ω}`).
    Mask(&'a ShapeMask),
    /// General capacitary measure.
    Measure(&'a CapacitaryMeasure),
}

impl<'a> Coefficient<'a> {
    pub fn domain(&self) -> &GridDomain {
        match self {
            Coefficient::Mask(m) => m.domain(),
            Coefficient::Measure(m) => m.domain(),
        }
    }
}

/// Symmetric positive definite five-point operator. Vectors are full-grid
/// length; entries at inactive cells are ignored and returned as zero.
#[derive(Clone, Debug)]
pub(crate) struct Operator {
    pub domain: GridDomain,
    pub active: Vec<bool>,
    pub diag: Vec<f64>,
    inv_h2: f64,
}

impl Operator {
    /// Builds the operator. With `fit`, each face between an active cell and an
    /// inactive one uses the distance to the primitive's boundary along that
    /// axis instead of the full spacing (symmetric cut-cell stencil).
    pub fn new(coef: Coefficient<'_>, fit: Option<&Primitive>) -> Result<Self> {
        let domain = *coef.domain();
        let n = domain.len();
        let (active, extra): (Vec<bool>, Vec<f64>) = match coef {
            Coefficient::Mask(m) => (m.cells().to_vec(), vec![0.0; n]),
            Coefficient::Measure(mu) => (0..n)
                .map(|k| match mu.get(k) {
                    Some(v) => (true, v),
                    None => (false, 0.0),
                })
                .unzip(),
        };
        if let Some(p) = fit {
            p.validate(domain.dim())?;
        }
        let h = domain.h();
        let inv_h2 = 1.0 / (h * h);
        let mut diag = vec![0.0; n];
        for k in 0..n {
            if !active[k] {
                continue;
            }
            let mut s = extra[k];
            let ck = domain.center(k);
            for nb in domain.neighbors(k).iter().take(domain.directions()) {
                let nb = nb.ok_or_else(|| Error::Invariant(format!("active cell {k} on the grid edge")))?;
                if active[nb] {
                    s += inv_h2;
                } else {
                    let theta = fit
                        .and_then(|p| p.crossing(ck, domain.center(nb)))
                        .map_or(1.0, |t| t.max(MIN_THETA));
                    s += inv_h2 / theta;
                }
            }
            diag[k] = s;
        }
        Ok(Operator {
            domain,
            active,
            diag,
            inv_h2,
        })
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    #[inline]
    fn apply_cell(&self, x: &[f64], k: usize) -> f64 {
        if !self.active[k] {
            return 0.0;
        }
        let mut s = self.diag[k] * x[k];
        for n in self.domain.neighbors(k).iter().take(self.domain.directions()).flatten() {
            if self.active[*n] {
                s -= self.inv_h2 * x[*n];
            }
        }
        s
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        if y.len() >= PAR_THRESHOLD {
            y.par_iter_mut()
                .enumerate()
                .for_each(|(k, yk)| *yk = self.apply_cell(x, k));
        } else {
            for (k, yk) in y.iter_mut().enumerate() {
                *yk = self.apply_cell(x, k);
            }
        }
    }

    /// Zeroes entries at inactive cells.
    pub fn restrict(&self, x: &mut [f64]) {
        for (v, &a) in x.iter_mut().zip(&self.active) {
            if !a {
                *v = 0.0;
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradient for `A x = b` on the active cells.
/// `x` holds the initial guess and receives the solution; returns the final
/// relative residual.
pub(crate) fn conjugate_gradient(op: &Operator, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<f64> {
    let n = b.len();
    let mut rhs = b.to_vec();
    op.restrict(&mut rhs);
    op.restrict(x);
    let bnorm = dot(&rhs, &rhs).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0.0);
    }
    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    for k in 0..n {
        r[k] = rhs[k] - r[k];
    }
    let precond = |r: &[f64], z: &mut [f64]| {
        for k in 0..n {
            z[k] = if op.active[k] { r[k] / op.diag[k] } else { 0.0 };
        }
    };
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = dot(&r, &r).sqrt() / bnorm;
    for _ in 0..max_iter {
        if res <= tol {
            return Ok(res);
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        res = dot(&r, &r).sqrt() / bnorm;
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    if res <= tol {
        return Ok(res);
    }
    Err(Error::IterationLimit {
        solver: "conjugate gradient",
        iterations: max_iter,
        residual: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::rasterize;

    #[test]
    fn operator_is_symmetric() {
        let d = GridDomain::square(-1.0, 1.0, 12).unwrap();
        let p = Primitive::ball(&[0.1, 0.0], 0.8);
        let m = rasterize(&p, &d).unwrap();
        for fit in [None, Some(&p)] {
            let op = Operator::new(Coefficient::Mask(&m), fit).unwrap();
            let n = d.len();
            let mut e_i = vec![0.0; n];
            let mut e_j = vec![0.0; n];
            let mut col = vec![0.0; n];
            for i in m.iter_inside() {
                e_i.iter_mut().for_each(|v| *v = 0.0);
                e_i[i] = 1.0;
                op.apply(&e_i, &mut col);
                for j in m.iter_inside() {
                    e_j.iter_mut().for_each(|v| *v = 0.0);
                    e_j[j] = 1.0;
                    let mut col_j = vec![0.0; n];
                    op.apply(&e_j, &mut col_j);
                    assert!((col[j] - col_j[i]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn cg_solves_small_system() {
        let d = GridDomain::square(0.0, 1.0, 10).unwrap();
        let m = ShapeMask::full(d);
        let op = Operator::new(Coefficient::Mask(&m), None).unwrap();
        let b: Vec<f64> = (0..d.len()).map(|k| (k % 7) as f64).collect();
        let mut x = vec![0.0; d.len()];
        let out = conjugate_gradient(&op, &b, &mut x, 1e-12, 1000).unwrap();
        assert!(out <= 1e-12);
        let mut ax = vec![0.0; d.len()];
        op.apply(&x, &mut ax);
        for k in m.iter_inside() {
            assert!((ax[k] - b[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn cg_reports_iteration_limit() {
        let d = GridDomain::square(0.0, 1.0, 40).unwrap();
        let m = ShapeMask::full(d);
        let op = Operator::new(Coefficient::Mask(&m), None).unwrap();
        let b = vec![1.0; d.len()];
        let mut x = vec![0.0; d.len()];
        let err = conjugate_gradient(&op, &b, &mut x, 1e-14, 3).err().unwrap();
        assert!(err.is_solver_failure());
    }
}
