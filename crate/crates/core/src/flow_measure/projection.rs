//! Euclidean projection onto the discrete torsion cone X.
//!
//! The projection of `v` solves
//! `min ½‖w − v‖²` subject to `w ≥ 0` and `1 + Δ_h w ≥ 0` on interior cells.
//! Eliminating `w` gives the bound-constrained dual
//! `min_{β ≥ 0} φ(β) = ½‖(v + Δ_h β)⁺‖² + Σ β`, with primal `w = (v + Δ_h β)⁺`
//! and `∇φ = 1 + Δ_h w`. The dual is solved by projected Newton with an
//! ε-active set (Bertsekas); the generalized Hessian `Δ D Δ` is banded, so
//! each Newton system is factored directly.

use crate::capmeasure::{TorsionField, EPS_X};
use crate::error::{Error, Result};
use crate::grid::{GridDomain, ScalarGridField};

/// Default KKT tolerance of the projection.
pub const PROJECTION_TOLERANCE: f64 = 1e-10;

const MAX_NEWTON: usize = 500;
const ARMIJO: f64 = 1e-4;
const REGULARIZATION: f64 = 1e-10;

/// Interior cells, their neighbors in interior numbering, and `Δ_h` on them.
#[derive(Clone, Debug)]
struct Interior {
    domain: GridDomain,
    cells: Vec<usize>,
    /// Up to four interior neighbors, `usize::MAX` for ring neighbors.
    nbs: Vec<[usize; 4]>,
    dirs: usize,
    inv_h2: f64,
    bandwidth: usize,
}

impl Interior {
    fn new(domain: GridDomain) -> Self {
        let mut map = vec![usize::MAX; domain.len()];
        let mut cells = Vec::new();
        for k in 0..domain.len() {
            if !domain.is_ring(k) {
                map[k] = cells.len();
                cells.push(k);
            }
        }
        let dirs = domain.directions();
        let nbs = cells
            .iter()
            .map(|&k| {
                let mut out = [usize::MAX; 4];
                for (o, nb) in out.iter_mut().zip(domain.neighbors(k).iter().take(dirs)) {
                    if let Some(n) = nb {
                        *o = map[*n];
                    }
                }
                out
            })
            .collect();
        let stride = if domain.dim() == 2 { domain.cells()[0] - 2 } else { 1 };
        let h = domain.h();
        Interior {
            domain,
            cells,
            nbs,
            dirs,
            inv_h2: 1.0 / (h * h),
            bandwidth: 2 * stride,
        }
    }

    fn n(&self) -> usize {
        self.cells.len()
    }

    /// `y = Δ_h x` on interior vectors.
    fn laplacian(&self, x: &[f64], y: &mut [f64]) {
        for m in 0..self.n() {
            let mut s = -(self.dirs as f64) * x[m];
            for &q in &self.nbs[m][..self.dirs] {
                if q != usize::MAX {
                    s += x[q];
                }
            }
            y[m] = s * self.inv_h2;
        }
    }

    /// Stencil of `m` including itself, with `Δ_h` coefficients.
    fn stencil(&self, m: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        std::iter::once((m, -(self.dirs as f64) * self.inv_h2)).chain(
            self.nbs[m][..self.dirs]
                .iter()
                .filter(|&&q| q != usize::MAX)
                .map(move |&q| (q, self.inv_h2)),
        )
    }
}

/// Lower band of a symmetric matrix: row `i` stores columns `i - p ..= i`.
struct Band {
    n: usize,
    p: usize,
    a: Vec<f64>,
}

impl Band {
    fn zeros(n: usize, p: usize) -> Self {
        Band {
            n,
            p,
            a: vec![0.0; n * (p + 1)],
        }
    }

    #[inline]
    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        debug_assert!(j <= i && i - j <= self.p);
        &mut self.a[i * (self.p + 1) + (self.p - (i - j))]
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * (self.p + 1) + (self.p - (i - j))]
    }

    /// In-place Cholesky; `false` if a pivot is not positive.
    fn factor(&mut self) -> bool {
        let p = self.p;
        for i in 0..self.n {
            let lo = i.saturating_sub(p);
            for j in lo..=i {
                let klo = lo.max(j.saturating_sub(p));
                let mut s = self.get(i, j);
                let ri = i * (p + 1) + p - i;
                let rj = j * (p + 1) + p - j;
                for k in klo..j {
                    s -= self.a[ri + k] * self.a[rj + k];
                }
                if i == j {
                    if !(s > 0.0) {
                        return false;
                    }
                    *self.at(i, i) = s.sqrt();
                } else {
                    *self.at(i, j) = s / self.get(j, j);
                }
            }
        }
        true
    }

    fn solve(&self, b: &mut [f64]) {
        let p = self.p;
        for i in 0..self.n {
            let lo = i.saturating_sub(p);
            let mut s = b[i];
            for k in lo..i {
                s -= self.get(i, k) * b[k];
            }
            b[i] = s / self.get(i, i);
        }
        for i in (0..self.n).rev() {
            let hi = (i + p).min(self.n - 1);
            let mut s = b[i];
            for k in i + 1..=hi {
                s -= self.get(k, i) * b[k];
            }
            b[i] = s / self.get(i, i);
        }
    }
}

/// Outcome of one projection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionStats {
    pub iterations: usize,
    pub kkt_residual: f64,
}

/// Projection onto X with a dual warm start kept across calls.
#[derive(Clone, Debug)]
pub struct Projector {
    interior: Interior,
    beta: Vec<f64>,
    tolerance: f64,
    last: Option<ProjectionStats>,
}

struct State {
    w: Vec<f64>,
    g: Vec<f64>,
}

impl Projector {
    pub fn new(domain: GridDomain, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance <= EPS_X) {
            return Err(Error::invalid(format!(
                "projection tolerance {tolerance} must lie in (0, {EPS_X}]"
            )));
        }
        let interior = Interior::new(domain);
        let n = interior.n();
        Ok(Projector {
            interior,
            beta: vec![0.0; n],
            tolerance,
            last: None,
        })
    }

    pub fn domain(&self) -> &GridDomain {
        &self.interior.domain
    }

    pub fn last_stats(&self) -> Option<ProjectionStats> {
        self.last
    }

    /// Forgets the warm start.
    pub fn reset(&mut self) {
        self.beta.iter_mut().for_each(|b| *b = 0.0);
    }

    fn state(&self, v: &[f64], beta: &[f64], scratch: &mut [f64]) -> State {
        let it = &self.interior;
        let n = it.n();
        it.laplacian(beta, scratch);
        let w: Vec<f64> = (0..n).map(|m| (v[m] + scratch[m]).max(0.0)).collect();
        let mut g = vec![0.0; n];
        it.laplacian(&w, &mut g);
        g.iter_mut().for_each(|x| *x += 1.0);
        State { w, g }
    }

    fn residual(&self, beta: &[f64], g: &[f64]) -> f64 {
        let h2 = 1.0 / self.interior.inv_h2;
        beta.iter()
            .zip(g)
            .map(|(&b, &gi)| {
                let c = (b / h2).min(gi);
                c.abs().max(-gi)
            })
            .fold(0.0, f64::max)
    }

    /// `Δ D Δ` in band form, `D` the indicator of `v + Δβ > 0`, plus a small
    /// diagonal shift.
    fn hessian(&self, vi: &[f64], beta: &[f64], scratch: &mut [f64]) -> (Band, Vec<bool>) {
        let it = &self.interior;
        let n = it.n();
        it.laplacian(beta, scratch);
        let pos: Vec<bool> = (0..n).map(|m| vi[m] + scratch[m] > 0.0).collect();
        let mut band = Band::zeros(n, it.bandwidth);
        for m in 0..n {
            let mut ll = 0.0;
            for (q, lmq) in it.stencil(m) {
                ll += lmq * lmq;
                if !pos[q] {
                    continue;
                }
                for (p, lqp) in it.stencil(q) {
                    if p <= m {
                        *band.at(m, p) += lmq * lqp;
                    }
                }
            }
            *band.at(m, m) += REGULARIZATION * ll;
        }
        (band, pos)
    }

    /// Primal-dual active-set step: cells with `β ≤ h² g` are pinned to zero and
    /// the free cells solve `g = 0` by one Newton step. Returned only if it
    /// shrinks the KKT residual.
    fn active_set_step(
        &self,
        vi: &[f64],
        beta: &[f64],
        st: &State,
        res: f64,
        scratch: &mut [f64],
    ) -> Result<Option<(Vec<f64>, State, f64)>> {
        let it = &self.interior;
        let n = it.n();
        let h2 = 1.0 / it.inv_h2;
        let pinned: Vec<bool> = (0..n).map(|m| beta[m] <= h2 * st.g[m]).collect();
        let (mut band, pos) = self.hessian(vi, beta, scratch);
        // H_IA d_A with d_A = −β_A
        let mut da: Vec<f64> = (0..n).map(|m| if pinned[m] { -beta[m] } else { 0.0 }).collect();
        let mut t = vec![0.0; n];
        it.laplacian(&da, &mut t);
        for m in 0..n {
            if !pos[m] {
                t[m] = 0.0;
            }
        }
        let mut coupling = vec![0.0; n];
        it.laplacian(&t, &mut coupling);
        let mut rhs: Vec<f64> = (0..n)
            .map(|m| if pinned[m] { 0.0 } else { -st.g[m] - coupling[m] })
            .collect();
        for m in 0..n {
            let lo = m.saturating_sub(it.bandwidth);
            for p in lo..m {
                if pinned[m] || pinned[p] {
                    *band.at(m, p) = 0.0;
                }
            }
        }
        if !band.factor() {
            return Ok(None);
        }
        band.solve(&mut rhs);
        for m in 0..n {
            if !pinned[m] {
                da[m] = rhs[m];
            }
        }
        let trial: Vec<f64> = (0..n).map(|m| (beta[m] + da[m]).max(0.0)).collect();
        let ts = self.state(vi, &trial, scratch);
        let r = self.residual(&trial, &ts.g);
        Ok((r < 0.5 * res).then_some((trial, ts, r)))
    }

    /// Projects `v` (ring values are ignored) onto X.
    pub fn project(&mut self, v: &ScalarGridField) -> Result<TorsionField> {
        self.interior.domain.check_same(v.domain())?;
        let it = self.interior.clone();
        let n = it.n();
        let vi: Vec<f64> = it.cells.iter().map(|&k| v.get(k)).collect();
        let mut scratch = vec![0.0; n];
        let mut beta = std::mem::take(&mut self.beta);
        if beta.len() != n {
            beta = vec![0.0; n];
        }
        let mut st = self.state(&vi, &beta, &mut scratch);
        // a cold start is sometimes better than a stale warm start
        if beta.iter().any(|&b| b > 0.0) {
            let zero = vec![0.0; n];
            let cold = self.state(&vi, &zero, &mut scratch);
            if self.residual(&zero, &cold.g) <= self.residual(&beta, &st.g) {
                beta = zero;
                st = cold;
            }
        }
        let h2 = 1.0 / it.inv_h2;
        let diag_ll: Vec<f64> = (0..n).map(|m| it.stencil(m).map(|(_, c)| c * c).sum()).collect();
        let mut iterations = 0;
        let mut res = self.residual(&beta, &st.g);
        while res > self.tolerance {
            if iterations >= MAX_NEWTON {
                self.beta = beta;
                return Err(Error::IterationLimit {
                    solver: "projection onto X",
                    iterations,
                    residual: res,
                });
            }
            iterations += 1;
            if let Some((b, s, r)) = self.active_set_step(&vi, &beta, &st, res, &mut scratch)? {
                beta = b;
                st = s;
                res = r;
                continue;
            }
            let eps_k = res.min(1e-3);
            let active: Vec<bool> = (0..n).map(|m| beta[m] <= eps_k * h2 && st.g[m] > 0.0).collect();
            let pos: Vec<bool> = {
                it.laplacian(&beta, &mut scratch);
                (0..n).map(|m| vi[m] + scratch[m] > 0.0).collect()
            };
            // generalized Hessian Δ D Δ on the free set, identity-scaled on the active set
            let mut band = Band::zeros(n, it.bandwidth);
            let mut hdiag = vec![0.0; n];
            for m in 0..n {
                for (q, lmq) in it.stencil(m) {
                    if !pos[q] {
                        continue;
                    }
                    for (p, lqp) in it.stencil(q) {
                        if p <= m {
                            *band.at(m, p) += lmq * lqp;
                        }
                    }
                }
                hdiag[m] = band.get(m, m) + REGULARIZATION * diag_ll[m];
            }
            for m in 0..n {
                let lo = m.saturating_sub(it.bandwidth);
                for p in lo..m {
                    if active[m] || active[p] {
                        *band.at(m, p) = 0.0;
                    }
                }
                *band.at(m, m) = hdiag[m];
            }
            if !band.factor() {
                self.beta = beta;
                return Err(Error::Invariant("projection Hessian lost definiteness".into()));
            }
            let mut d: Vec<f64> = st.g.iter().map(|x| -x).collect();
            band.solve(&mut d);
            for m in 0..n {
                if active[m] {
                    d[m] = -st.g[m] / hdiag[m];
                }
            }
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<f64> = (0..n).map(|m| (beta[m] + alpha * d[m]).max(0.0)).collect();
                let ts = self.state(&vi, &trial, &mut scratch);
                let mut pred = 0.0;
                for m in 0..n {
                    pred += if active[m] {
                        st.g[m] * (beta[m] - trial[m])
                    } else {
                        -alpha * st.g[m] * d[m]
                    };
                }
                // φ(β) − φ(trial) from differences, free of cancellation
                let decrease: f64 =
                    st.w.iter()
                        .zip(&ts.w)
                        .map(|(a, b)| 0.5 * (a - b) * (a + b))
                        .sum::<f64>()
                        + beta.iter().zip(&trial).map(|(a, b)| a - b).sum::<f64>();
                // near the solution φ changes below rounding; a full step that
                // shrinks the KKT residual is accepted on that evidence alone
                if alpha == 1.0 && self.residual(&trial, &ts.g) <= 0.5 * res {
                    accepted = Some((trial, ts));
                    break;
                }
                if decrease >= ARMIJO * pred {
                    accepted = Some((trial, ts));
                    break;
                }
                alpha *= 0.5;
            }
            match accepted {
                Some((b, s)) => {
                    let r = self.residual(&b, &s.g);
                    if r >= res && alpha < 1e-12 {
                        self.beta = b;
                        return Err(Error::IterationLimit {
                            solver: "projection onto X",
                            iterations,
                            residual: r,
                        });
                    }
                    beta = b;
                    st = s;
                    res = r;
                }
                None => {
                    self.beta = beta;
                    return Err(Error::IterationLimit {
                        solver: "projection onto X",
                        iterations,
                        residual: res,
                    });
                }
            }
        }
        let mut out = vec![0.0; it.domain.len()];
        for (m, &k) in it.cells.iter().enumerate() {
            out[k] = st.w[m];
        }
        self.beta = beta;
        self.last = Some(ProjectionStats {
            iterations,
            kkt_residual: res,
        });
        TorsionField::new(ScalarGridField::new(it.domain, out)?, EPS_X)
    }
}

/// One-off projection onto X.
pub fn project_onto_x(v: &ScalarGridField, tol: f64) -> Result<TorsionField> {
    Projector::new(*v.domain(), tol)?.project(v)
}
