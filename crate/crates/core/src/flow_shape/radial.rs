//! Radially symmetric shapes and the exact one-parameter step on them.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::capmeasure::{FunctionalKind, FunctionalSpec, Integrand, SpectralPhi};
use crate::error::{Error, Result};
use crate::grid::{rasterize, GridDomain, Primitive, ShapeMask};
use crate::pde::{radial_reference, RadialConfig};

/// Radial resolution of the reference solves.
pub const RADIAL_RESOLUTION: usize = 4000;
/// Relative width at which golden-section searches stop.
pub const GOLDEN_TOLERANCE: f64 = 1e-12;

const QUADRATURE: usize = 2000;

/// `ω_d`, the volume of the unit ball.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => PI,
        _ => 4.0 * PI / 3.0,
    }
}

/// `λ₁(B(0, 1))` in dimension 1 or 2 from the radial solver, computed once.
pub fn unit_ball_lambda1(dim: usize) -> Result<f64> {
    static CACHE: [OnceLock<f64>; 2] = [OnceLock::new(), OnceLock::new()];
    if !(1..=2).contains(&dim) {
        return Err(Error::invalid(format!("ball flows need d in {{1, 2}}, got {dim}")));
    }
    let cell = &CACHE[dim - 1];
    if let Some(v) = cell.get() {
        return Ok(*v);
    }
    let v = radial_reference(&RadialConfig::Disk { radius: 1.0, dim }, RADIAL_RESOLUTION)?.lambda1;
    Ok(*cell.get_or_init(|| v))
}

/// `R(t) = (R₀^{2d+2} + 4(d+1)λ₁(B₁) t / (d²ω_d²))^{1/(2d+2)}`.
pub fn ball_flow_reference(r0: f64, dim: usize, t: f64) -> Result<f64> {
    if !(r0 > 0.0 && r0.is_finite() && t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!(
            "ball flow needs R0 > 0 and t >= 0, got {r0}, {t}"
        )));
    }
    let lam = unit_ball_lambda1(dim)?;
    let d = dim as f64;
    let w = unit_ball_volume(dim);
    let p = 2.0 * d + 2.0;
    Ok((r0.powf(p) + 4.0 * (d + 1.0) * lam * t / (d * d * w * w)).powf(1.0 / p))
}

/// `R' = 2λ₁(B₁) / (d²ω_d² R^{2d+1})`.
pub fn ball_flow_rhs(r: f64, dim: usize) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("radius {r} must be positive")));
    }
    let lam = unit_ball_lambda1(dim)?;
    let d = dim as f64;
    let w = unit_ball_volume(dim);
    Ok(2.0 * lam / (d * d * w * w * r.powi(2 * dim as i32 + 1)))
}

/// A union of concentric shells `{a < |x − c| < b}`; `a = 0` is a ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialShape {
    pub center: Vec<f64>,
    /// Sorted, pairwise disjoint `(a, b)` with `0 ≤ a < b`.
    pub shells: Vec<(f64, f64)>,
}

impl RadialShape {
    pub fn new(center: &[f64], mut shells: Vec<(f64, f64)>) -> Result<Self> {
        if !(1..=2).contains(&center.len()) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("radial center {center:?}")));
        }
        if shells.is_empty() {
            return Err(Error::EmptyMask("radial shape without shells"));
        }
        shells.sort_by(|x, y| x.0.total_cmp(&y.0));
        for (a, b) in &shells {
            if !(*a >= 0.0 && a < b && b.is_finite()) {
                return Err(Error::invalid(format!("shell ({a}, {b})")));
            }
        }
        if shells.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(Error::invalid("shells overlap"));
        }
        Ok(RadialShape {
            center: center.to_vec(),
            shells,
        })
    }

    pub fn ball(center: &[f64], r: f64) -> Result<Self> {
        Self::new(center, vec![(0.0, r)])
    }

    /// Recognizes balls, annuli and unions of concentric ones.
    pub fn from_primitive(p: &Primitive) -> Option<Self> {
        let (c, shells) = collect_shells(p)?;
        Self::new(&c, shells).ok()
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn outer_radius(&self) -> f64 {
        self.shells.last().map_or(0.0, |s| s.1)
    }

    pub fn to_primitive(&self) -> Primitive {
        let parts: Vec<Primitive> = self
            .shells
            .iter()
            .map(|&(a, b)| {
                if a == 0.0 {
                    Primitive::ball(&self.center, b)
                } else {
                    Primitive::annulus(&self.center, a, b)
                }
            })
            .collect();
        if parts.len() == 1 {
            parts.into_iter().next().unwrap()
        } else {
            Primitive::union(parts)
        }
    }

    pub fn rasterize(&self, domain: &GridDomain) -> Result<ShapeMask> {
        if domain.dim() != self.dim() {
            return Err(Error::invalid("radial shape and domain dimensions differ"));
        }
        rasterize(&self.to_primitive(), domain)
    }

    pub fn volume(&self) -> f64 {
        let d = self.dim() as i32;
        let w = unit_ball_volume(self.dim());
        self.shells.iter().map(|&(a, b)| w * (b.powi(d) - a.powi(d))).sum()
    }

    /// Isotropic perimeter (point count in 1D).
    pub fn perimeter(&self) -> f64 {
        self.shells
            .iter()
            .map(|&(a, b)| match self.dim() {
                1 => {
                    if a > 0.0 {
                        4.0
                    } else {
                        2.0
                    }
                }
                _ => 2.0 * PI * (a + b),
            })
            .sum()
    }

    /// Connected components (a 1D shell is two intervals).
    pub fn components(&self) -> usize {
        self.shells
            .iter()
            .map(|&(a, _)| if self.dim() == 1 && a > 0.0 { 2 } else { 1 })
            .sum()
    }

    /// `self ∪ {a < |x − c| < r}`, absorbing every shell that starts below `r`.
    fn grown(&self, front: usize, r: f64) -> RadialShape {
        let a = self.shells[front].0;
        let mut shells = Vec::with_capacity(self.shells.len());
        let mut top = r;
        for (i, &(sa, sb)) in self.shells.iter().enumerate() {
            if i >= front && sa < r {
                top = top.max(sb);
            } else {
                shells.push((sa, sb));
            }
        }
        shells.push((a, top));
        shells.sort_by(|x, y| x.0.total_cmp(&y.0));
        RadialShape {
            center: self.center.clone(),
            shells,
        }
    }
}

/// Center and shells of a radial primitive.
type Shells = (Vec<f64>, Vec<(f64, f64)>);

fn collect_shells(p: &Primitive) -> Option<Shells> {
    match p {
        Primitive::Ball { center, radius } => Some((center.clone(), vec![(0.0, *radius)])),
        Primitive::Annulus { center, inner, outer } => Some((center.clone(), vec![(*inner, *outer)])),
        Primitive::Union { parts } => {
            let mut c: Option<Vec<f64>> = None;
            let mut shells = Vec::new();
            for q in parts {
                let (qc, qs) = collect_shells(q)?;
                match &c {
                    Some(c0) if *c0 != qc => return None,
                    _ => c = Some(qc),
                }
                shells.extend(qs);
            }
            shells.sort_by(|x, y| x.0.total_cmp(&y.0));
            // merge overlaps
            let mut merged: Vec<(f64, f64)> = Vec::new();
            for s in shells {
                match merged.last_mut() {
                    Some(m) if s.0 < m.1 => m.1 = m.1.max(s.1),
                    _ => merged.push(s),
                }
            }
            Some((c?, merged))
        }
        _ => None,
    }
}

/// Evaluates catalog functionals on radial shapes, caching shell solves.
#[derive(Default)]
pub(crate) struct RadialEvaluator {
    shells: HashMap<(u64, u64, usize), ShellData>,
}

#[derive(Clone, Copy)]
struct ShellData {
    lambda1: f64,
    /// `∫ j(w)` for the last integrand asked for, keyed by its bits.
    integral: Option<(u64, f64)>,
}

impl RadialEvaluator {
    fn shell(&mut self, a: f64, b: f64, dim: usize) -> Result<ShellData> {
        let key = (a.to_bits(), b.to_bits(), dim);
        if let Some(s) = self.shells.get(&key) {
            return Ok(*s);
        }
        let lambda1 = if a == 0.0 {
            unit_ball_lambda1(dim)? / (b * b)
        } else {
            radial_reference(
                &RadialConfig::Annulus {
                    inner: a,
                    outer: b,
                    dim,
                },
                RADIAL_RESOLUTION,
            )?
            .lambda1
        };
        let s = ShellData {
            lambda1,
            integral: None,
        };
        self.shells.insert(key, s);
        Ok(s)
    }

    pub fn lambda1(&mut self, shape: &RadialShape) -> Result<f64> {
        let dim = shape.dim();
        let mut best = f64::INFINITY;
        for &(a, b) in &shape.shells {
            best = best.min(self.shell(a, b, dim)?.lambda1);
        }
        Ok(best)
    }

    /// Index of the shell carrying `λ₁`.
    pub fn principal_shell(&mut self, shape: &RadialShape) -> Result<usize> {
        let dim = shape.dim();
        let mut best = (f64::INFINITY, 0);
        for (i, &(a, b)) in shape.shells.iter().enumerate() {
            let l = self.shell(a, b, dim)?.lambda1;
            if l < best.0 {
                best = (l, i);
            }
        }
        Ok(best.1)
    }

    /// `∫ j(w_shell) dx` over the shell, `j(0)` excluded.
    fn shell_integral(&mut self, a: f64, b: f64, dim: usize, key: u64, j: &dyn Fn(f64) -> f64) -> Result<f64> {
        let s = self.shell(a, b, dim)?;
        if let Some((k, v)) = s.integral {
            if k == key {
                return Ok(v);
            }
        }
        let reference = if a == 0.0 {
            None
        } else {
            Some(radial_reference(
                &RadialConfig::Annulus {
                    inner: a,
                    outer: b,
                    dim,
                },
                QUADRATURE,
            )?)
        };
        let d = dim as f64;
        let w = |r: f64| match &reference {
            None => (b * b - r * r) / (2.0 * d),
            Some(rf) => rf.torsion_at(r),
        };
        // composite Simpson in r with weight d ω_d r^{d−1}
        let n = QUADRATURE;
        let dr = (b - a) / n as f64;
        let f = |r: f64| (j(w(r)) - j(0.0)) * r.powi(dim as i32 - 1);
        let mut sum = f(a) + f(b);
        for i in 1..n {
            sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + dr * i as f64);
        }
        let v = sum * dr / 3.0 * d * unit_ball_volume(dim);
        if let Some(entry) = self.shells.get_mut(&(a.to_bits(), b.to_bits(), dim)) {
            entry.integral = Some((key, v));
        }
        Ok(v)
    }

    /// `F̂(shape)`: the functional plus its set penalties. Integral kinds
    /// integrate `j(w) − j(0)`, which differs from the grid value by the
    /// constant `j(0)|D|`.
    pub fn evaluate(&mut self, spec: &FunctionalSpec, shape: &RadialShape) -> Result<f64> {
        let dim = shape.dim();
        let base = match spec.kind {
            FunctionalKind::Zero => 0.0,
            FunctionalKind::Volume => shape.volume(),
            FunctionalKind::Spectral {
                k: 1,
                phi: SpectralPhi::LambdaK | SpectralPhi::Sum,
            } => self.lambda1(shape)?,
            FunctionalKind::Spectral { .. } => {
                return Err(Error::Unsupported(
                    "radial strategy evaluates only the first eigenvalue".into(),
                ))
            }
            FunctionalKind::Energy => {
                let mut s = 0.0;
                for &(a, b) in &shape.shells {
                    s -= if a == 0.0 {
                        let d = dim as f64;
                        unit_ball_volume(dim) * b.powi(dim as i32 + 2) / (d * (d + 2.0))
                    } else {
                        self.shell_integral(a, b, dim, u64::MAX, &|x| x)?
                    };
                }
                s
            }
            FunctionalKind::Integral { integrand } => {
                let key = match integrand {
                    Integrand::Linear { slope } => slope.to_bits() ^ 1,
                    Integrand::HalfSquare => 2,
                    Integrand::ShiftedHalfSquare { target } => target.to_bits() ^ 3,
                    Integrand::Exponential { rate } => rate.to_bits() ^ 4,
                };
                let probe = FunctionalSpec::integral(integrand);
                let j = |x: f64| {
                    probe
                        .evaluate_values(&[x], 1.0)
                        .expect("integral kinds evaluate on raw values")
                };
                let mut s = 0.0;
                for &(a, b) in &shape.shells {
                    s += self.shell_integral(a, b, dim, key, &j)?;
                }
                s
            }
        };
        let p = spec.penalties;
        Ok(spec.scale * base + p.volume * shape.volume() + p.perimeter * shape.perimeter())
    }
}

/// Minimizes `f` on `[lo, hi]` by golden-section search; returns `(x, f(x))`.
pub(crate) fn golden_section(lo: f64, hi: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let tol = GOLDEN_TOLERANCE * (1.0 + lo.abs().max(hi.abs()));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x)?;
        if fx < best.1 {
            best = (x, fx);
        }
    }
    Ok(best)
}

/// Outcome of one radial step.
#[derive(Clone, Debug)]
pub struct RadialStep {
    pub shape: RadialShape,
    /// `F̂` at the new shape.
    pub value: f64,
    /// `|M_{n+1} \ M_n|`.
    pub distance: f64,
}

/// Exact step over the family `M_n ∪ {a < |x − c| < r}`, where the shell
/// `(a, b)` carries `λ₁` (the one a decreasing spectral functional wants to
/// grow) and `r` ranges over `[b, r_max]`. The family is split at the gaps
/// between shells and each piece is searched by golden section.
pub(crate) fn radial_step(
    eval: &mut RadialEvaluator,
    spec: &FunctionalSpec,
    shape: &RadialShape,
    eps: f64,
    r_max: f64,
) -> Result<RadialStep> {
    let stay = eval.evaluate(spec, shape)?;
    let front = eval.principal_shell(shape)?;
    let b = shape.shells[front].1;
    let v0 = shape.volume();
    let mut best = RadialStep {
        shape: shape.clone(),
        value: stay,
        distance: 0.0,
    };
    let mut best_obj = stay;
    if r_max <= b {
        return Ok(best);
    }
    // pieces of r between consecutive outer shells
    let mut pieces = Vec::new();
    let mut lo = b;
    for &(sa, sb) in &shape.shells[front + 1..] {
        if sa > lo {
            pieces.push((lo, sa.min(r_max)));
        }
        lo = lo.max(sb);
        if lo >= r_max {
            break;
        }
    }
    if lo < r_max {
        pieces.push((lo, r_max));
    }
    for (p_lo, p_hi) in pieces {
        if p_hi <= p_lo {
            continue;
        }
        let mut objective = |r: f64| -> Result<f64> {
            let m = shape.grown(front, r);
            let dv = m.volume() - v0;
            Ok(eval.evaluate(spec, &m)? + dv * dv / (2.0 * eps))
        };
        let (r, obj) = golden_section(p_lo, p_hi, &mut objective)?;
        if obj < best_obj {
            let m = shape.grown(front, r);
            best_obj = obj;
            best = RadialStep {
                value: eval.evaluate(spec, &m)?,
                distance: m.volume() - v0,
                shape: m,
            };
        }
    }
    Ok(best)
}
