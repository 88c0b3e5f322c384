//! Dirichlet eigenpairs by block inverse iteration with Rayleigh-Ritz.
//!
//! A block of `k + extra` vectors is pushed through `A⁻¹` (inner conjugate
//! gradient solves) and re-diagonalized on its span every sweep. The
//! Rayleigh-Ritz step orthogonalizes each vector against the others, which
//! doubles as deflation against the lower modes, and keeps clustered or
//! repeated eigenvalues from stalling the iteration.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::operator::{conjugate_gradient, dot, Coefficient, Operator};
use crate::error::{Error, Result};
use crate::grid::{GridDomain, Primitive, ScalarGridField, ShapeMask};

#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Relative eigen-residual `‖Au − λu‖ / (λ‖u‖)`.
    pub tolerance: f64,
    /// Relative residual of the inner linear solves.
    pub cg_tolerance: f64,
    pub cg_max_iterations: usize,
    pub max_sweeps: usize,
    /// Guard vectors carried beyond the requested `k`.
    pub extra: usize,
    pub seed: u64,
    /// Starting guess for the first vector (e.g. the previous `u₁`).
    pub guess: Option<ScalarGridField>,
    pub fit: Option<Primitive>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tolerance: 1e-8,
            cg_tolerance: super::CG_TOLERANCE,
            cg_max_iterations: super::CG_MAX_ITERATIONS,
            max_sweeps: 2000,
            extra: 2,
            seed: 0x5eed,
            guess: None,
            fit: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Normalized to unit `L²(D)` norm; the first one is nonnegative.
    pub eigenfunctions: Vec<ScalarGridField>,
    pub residuals: Vec<f64>,
    pub sweeps: usize,
}

impl EigenResult {
    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// The `k` smallest eigenpairs of `-Δ_h + μ` with Dirichlet elimination.
pub fn eigen_solve(coef: Coefficient<'_>, k: usize, opts: &EigenOptions) -> Result<EigenResult> {
    let domain = *coef.domain();
    let op = Operator::new(coef, opts.fit.as_ref())?;
    let n_act = op.active_count();
    if n_act == 0 {
        return Err(Error::EmptyMask("eigenvalue problem"));
    }
    if k == 0 || k > n_act {
        return Err(Error::invalid(format!(
            "requested {k} eigenvalues of a problem with {n_act} unknowns"
        )));
    }
    if !(opts.tolerance > 0.0) {
        return Err(Error::invalid("eigen tolerance must be positive"));
    }
    let m = (k + opts.extra).min(n_act);
    let n = domain.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut block: Vec<Vec<f64>> = Vec::with_capacity(m);
    let first = match &opts.guess {
        Some(g) => {
            domain.check_same(g.domain())?;
            g.values().to_vec()
        }
        None => vec![1.0; n],
    };
    block.push(first);
    while block.len() < m {
        block.push((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    for v in block.iter_mut() {
        op.restrict(v);
    }

    let mut ritz = vec![0.0; m];
    let mut residuals = vec![f64::INFINITY; m];
    let mut av: Vec<Vec<f64>> = vec![vec![0.0; n]; m];
    for sweep in 0..opts.max_sweeps {
        orthonormalize(&mut block, &op, &mut rng);
        for (v, a) in block.iter().zip(av.iter_mut()) {
            op.apply(v, a);
        }
        let h = DMatrix::from_fn(m, m, |i, j| dot(&block[i], &av[j]));
        let h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let rotate = |vs: &[Vec<f64>]| -> Vec<Vec<f64>> {
            order
                .iter()
                .map(|&c| {
                    let mut out = vec![0.0; n];
                    for (r, v) in vs.iter().enumerate() {
                        let q = eig.eigenvectors[(r, c)];
                        out.iter_mut().zip(v).for_each(|(o, x)| *o += q * x);
                    }
                    out
                })
                .collect()
        };
        block = rotate(&block);
        av = rotate(&av);
        for (i, &c) in order.iter().enumerate() {
            ritz[i] = eig.eigenvalues[c];
            let v = &block[i];
            let r: f64 = av[i]
                .iter()
                .zip(v)
                .map(|(a, x)| (a - ritz[i] * x).powi(2))
                .sum::<f64>()
                .sqrt();
            residuals[i] = r / (ritz[i].abs() * dot(v, v).sqrt()).max(f64::MIN_POSITIVE);
        }
        if residuals[..k].iter().all(|&r| r <= opts.tolerance) {
            return Ok(finish(domain, block, ritz, residuals, k, sweep + 1));
        }
        for (i, v) in block.iter_mut().enumerate() {
            let mut x: Vec<f64> = v.iter().map(|x| x / ritz[i].max(f64::MIN_POSITIVE)).collect();
            conjugate_gradient(&op, v, &mut x, opts.cg_tolerance, opts.cg_max_iterations)?;
            *v = x;
        }
    }
    Err(Error::IterationLimit {
        solver: "inverse iteration",
        iterations: opts.max_sweeps,
        residual: residuals[..k].iter().cloned().fold(0.0, f64::max),
    })
}

/// Modified Gram-Schmidt in the Euclidean inner product on active cells;
/// collapsed vectors are replaced by fresh random ones.
fn orthonormalize(block: &mut [Vec<f64>], op: &Operator, rng: &mut ChaCha8Rng) {
    for i in 0..block.len() {
        for _ in 0..8 {
            let norm0 = dot(&block[i], &block[i]).sqrt();
            for j in 0..i {
                let (done, rest) = block.split_at_mut(i);
                for _ in 0..2 {
                    let c = dot(&rest[0], &done[j]);
                    rest[0].iter_mut().zip(&done[j]).for_each(|(x, q)| *x -= c * q);
                }
            }
            let norm = dot(&block[i], &block[i]).sqrt();
            if norm > 1e-10 * norm0 && norm > 0.0 {
                block[i].iter_mut().for_each(|x| *x /= norm);
                break;
            }
            block[i] = (0..block[i].len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            op.restrict(&mut block[i]);
        }
    }
}

fn finish(
    domain: GridDomain,
    block: Vec<Vec<f64>>,
    ritz: Vec<f64>,
    residuals: Vec<f64>,
    k: usize,
    sweeps: usize,
) -> EigenResult {
    let scale = domain.cell_volume().sqrt();
    let eigenfunctions = block
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, mut v)| {
            // unit Euclidean norm -> unit L²(D) norm
            v.iter_mut().for_each(|x| *x /= scale);
            if i == 0 {
                if v.iter().sum::<f64>() < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
                let peak = v.iter().cloned().fold(0.0, f64::max);
                for x in v.iter_mut() {
                    if *x < 0.0 && *x > -1e-6 * peak {
                        *x = 0.0;
                    }
                }
            }
            ScalarGridField::new(domain, v).expect("eigenvectors are finite")
        })
        .collect();
    EigenResult {
        eigenvalues: ritz[..k].to_vec(),
        eigenfunctions,
        residuals: residuals[..k].to_vec(),
        sweeps,
    }
}

/// `λ₁` and `u₁` of the Dirichlet Laplacian on a mask.
pub fn principal_eigenpair(mask: &ShapeMask) -> Result<EigenResult> {
    eigen_solve(Coefficient::Mask(mask), 1, &EigenOptions::default())
}

/// The `k` smallest Dirichlet eigenvalues of a mask.
pub fn eigenvalues(mask: &ShapeMask, k: usize) -> Result<EigenResult> {
    eigen_solve(Coefficient::Mask(mask), k, &EigenOptions::default())
}

/// Discrete Rayleigh quotient `⟨Au, u⟩ / ⟨u, u⟩` (staircase operator).
pub fn rayleigh_quotient(coef: Coefficient<'_>, u: &ScalarGridField) -> Result<f64> {
    coef.domain().check_same(u.domain())?;
    let op = Operator::new(coef, None)?;
    let mut x = u.values().to_vec();
    op.restrict(&mut x);
    let mut ax = vec![0.0; x.len()];
    op.apply(&x, &mut ax);
    let den = dot(&x, &x);
    if den == 0.0 {
        return Err(Error::invalid("Rayleigh quotient of the zero field"));
    }
    Ok(dot(&ax, &x) / den)
}

/// One inside/outside face of a mask with the outward normal derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryFace {
    /// Inside cell.
    pub cell: usize,
    /// Neighbor direction, in the order `-x, +x, -y, +y`.
    pub direction: usize,
    /// Face midpoint.
    pub position: [f64; 2],
    pub normal: [f64; 2],
    /// `|u(cell)| / h`.
    pub value: f64,
    /// `h^{d-1}`.
    pub length: f64,
}

/// One-sided normal derivatives `|u|/h` on every inside/outside face.
pub fn boundary_normal_derivative(u: &ScalarGridField, mask: &ShapeMask) -> Result<Vec<BoundaryFace>> {
    let d = mask.domain();
    d.check_same(u.domain())?;
    let h = d.h();
    let mut faces = Vec::new();
    for k in mask.iter_inside() {
        let c = d.center(k);
        for (dir, nb) in d.neighbors(k).iter().enumerate().take(d.directions()) {
            if matches!(nb, Some(n) if mask.contains(*n)) {
                continue;
            }
            let normal = GridDomain::direction_normal(dir);
            faces.push(BoundaryFace {
                cell: k,
                direction: dir,
                position: [c[0] + 0.5 * h * normal[0], c[1] + 0.5 * h * normal[1]],
                normal,
                value: u.get(k).abs() / h,
                length: d.face_area(),
            });
        }
    }
    Ok(faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::rasterize;
    use std::f64::consts::PI;

    fn square_pi(n: usize) -> ShapeMask {
        let d = GridDomain::vertex_aligned(0.0, PI, n, 2).unwrap();
        ShapeMask::full(d)
    }

    #[test]
    fn square_first_three() {
        let m = square_pi(64);
        let r = eigenvalues(&m, 3).unwrap();
        assert!((r.eigenvalues[0] - 2.0).abs() < 0.01 * 2.0);
        assert!((r.eigenvalues[1] - 5.0).abs() < 0.05);
        assert!((r.eigenvalues[2] - 5.0).abs() < 0.05);
        assert!(r.residuals.iter().all(|&x| x <= 1e-8));
        let p = principal_eigenpair(&m).unwrap();
        assert!((p.lambda1() - r.eigenvalues[0]).abs() < 1e-7);
        let u = &p.eigenfunctions[0];
        assert!((u.l2_norm() - 1.0).abs() < 1e-10);
        assert!(u.min() >= 0.0);
        let rq = rayleigh_quotient(Coefficient::Mask(&m), u).unwrap();
        assert!((rq - p.lambda1()).abs() < 1e-8 * p.lambda1());
    }

    #[test]
    fn matches_dense_oracle_on_small_masks() {
        let d = GridDomain::square(-1.0, 1.0, 14).unwrap();
        let m = rasterize(&Primitive::ball(&[0.1, -0.05], 0.8), &d).unwrap();
        let op = Operator::new(Coefficient::Mask(&m), None).unwrap();
        let idx: Vec<usize> = m.iter_inside().collect();
        let dense = DMatrix::from_fn(idx.len(), idx.len(), |a, b| {
            let mut e = vec![0.0; d.len()];
            e[idx[b]] = 1.0;
            let mut y = vec![0.0; d.len()];
            op.apply(&e, &mut y);
            y[idx[a]]
        });
        let mut exact: Vec<f64> = SymmetricEigen::new(dense).eigenvalues.iter().cloned().collect();
        exact.sort_by(f64::total_cmp);
        let r = eigenvalues(&m, 4).unwrap();
        for i in 0..4 {
            assert!((r.eigenvalues[i] - exact[i]).abs() < 1e-6 * exact[i], "{i}");
        }
    }

    #[test]
    fn disjoint_union_keeps_smaller_eigenvalue() {
        let d = GridDomain::square(-3.0, 3.0, 60).unwrap();
        let b = rasterize(&Primitive::ball(&[-1.5, 0.0], 1.0), &d).unwrap();
        let u = rasterize(&Primitive::ball(&[1.8, 1.8], 0.4), &d).unwrap();
        let lb = principal_eigenpair(&b).unwrap().lambda1();
        let both = principal_eigenpair(&b.union(&u).unwrap()).unwrap().lambda1();
        assert!((both - lb).abs() < 1e-7 * lb);
    }

    #[test]
    fn errors() {
        let d = GridDomain::square(0.0, 1.0, 6).unwrap();
        assert!(matches!(
            principal_eigenpair(&ShapeMask::empty(d)),
            Err(Error::EmptyMask(_))
        ));
        let one = ShapeMask::from_fn(d, |k| k == d.index(2, 2));
        assert!(eigenvalues(&one, 2).is_err());
        let r = principal_eigenpair(&one).unwrap();
        assert!((r.lambda1() - 4.0 / (d.h() * d.h())).abs() < 1e-6 * r.lambda1());
    }

    #[test]
    fn normal_derivative_on_square_side() {
        let m = square_pi(128);
        let d = *m.domain();
        let u = ScalarGridField::from_fn(d, |p| p[0].sin() * p[1].sin()).unwrap();
        let faces = boundary_normal_derivative(&u, &m).unwrap();
        let bottom: Vec<_> = faces.iter().filter(|f| f.direction == 2).collect();
        assert_eq!(bottom.len(), 127);
        let mut peak: f64 = 0.0;
        for f in &bottom {
            let x = d.center(f.cell)[0];
            assert!((f.value - x.sin()).abs() < 2.0 * d.h());
            peak = peak.max(f.value);
        }
        assert!((peak - 1.0).abs() < 2.0 * d.h());
        let zero = ScalarGridField::zeros(d);
        assert!(boundary_normal_derivative(&zero, &m)
            .unwrap()
            .iter()
            .all(|f| f.value == 0.0));
    }
}
