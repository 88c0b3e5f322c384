//! One-dimensional radial reference solver.
//!
//! Vertex-centered finite volumes with weight `r^{d-1}` on a uniform radial
//! grid. The symmetry condition `u'(0) = 0` is built into the half control
//! volume at the origin. The discretization is exact for the quadratic disk
//! torsion and second order for the eigenvalue.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialConfig {
    /// `B(0, R)` in dimension `dim`.
    Disk { radius: f64, dim: usize },
    /// `A(inner, outer)` with Dirichlet conditions on both spheres.
    Annulus { inner: f64, outer: f64, dim: usize },
}

impl RadialConfig {
    pub fn disk(radius: f64) -> Self {
        RadialConfig::Disk { radius, dim: 2 }
    }

    pub fn annulus(inner: f64, outer: f64) -> Self {
        RadialConfig::Annulus { inner, outer, dim: 2 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadialReference {
    pub lambda1: f64,
    /// Grid radii, including both end points.
    pub radii: Vec<f64>,
    /// Torsion samples at `radii`.
    pub torsion: Vec<f64>,
}

impl RadialReference {
    /// Linear interpolation of the torsion profile; zero outside the support.
    pub fn torsion_at(&self, r: f64) -> f64 {
        let (a, b) = (self.radii[0], *self.radii.last().unwrap());
        if r < a || r > b {
            return 0.0;
        }
        let n = self.radii.len() - 1;
        let t = (r - a) / (b - a) * n as f64;
        let i = (t.floor() as usize).min(n - 1);
        let f = t - i as f64;
        self.torsion[i] * (1.0 - f) + self.torsion[i + 1] * f
    }
}

/// Assembled tridiagonal system over the unknown nodes.
struct Radial {
    radii: Vec<f64>,
    /// Index of the first unknown node in `radii`.
    first: usize,
    diag: Vec<f64>,
    off: Vec<f64>,
    mass: Vec<f64>,
}

fn assemble(config: &RadialConfig, n: usize) -> Result<Radial> {
    if n < 100 {
        return Err(Error::invalid(format!("radial resolution {n} below 100")));
    }
    let (a, b, dim, pinned_inner) = match *config {
        RadialConfig::Disk { radius, dim } => (0.0, radius, dim, false),
        RadialConfig::Annulus { inner, outer, dim } => {
            if !(inner > 0.0 && inner < outer) {
                return Err(Error::invalid(format!("annulus radii {inner}, {outer}")));
            }
            (inner, outer, dim, true)
        }
    };
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::invalid(format!("radius {b} must be positive")));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::invalid(format!("radial dimension {dim}")));
    }
    let dr = (b - a) / n as f64;
    let radii: Vec<f64> = (0..=n).map(|i| a + dr * i as f64).collect();
    let d = dim as f64;
    let w = |r: f64| r.powi(dim as i32 - 1);
    let first = if pinned_inner { 1 } else { 0 };
    let nodes: Vec<usize> = (first..n).collect();
    let mut diag = Vec::with_capacity(nodes.len());
    let mut off = Vec::with_capacity(nodes.len());
    let mut mass = Vec::with_capacity(nodes.len());
    for &i in &nodes {
        let r = radii[i];
        let right = r + 0.5 * dr;
        let (left, k_left) = if i == 0 {
            (0.0, 0.0)
        } else {
            let l = r - 0.5 * dr;
            (l, w(l) / dr)
        };
        let k_right = w(right) / dr;
        diag.push(k_left + k_right);
        off.push(-k_right);
        mass.push((right.powi(dim as i32) - left.powi(dim as i32)) / d);
    }
    Ok(Radial {
        radii,
        first,
        diag,
        off,
        mass,
    })
}

/// Number of eigenvalues of the symmetric tridiagonal `(a, b)` below `x`.
fn sturm_count(a: &[f64], b: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..a.len() {
        let bb = if i == 0 { 0.0 } else { b[i - 1] * b[i - 1] };
        q = a[i] - x - if i == 0 { 0.0 } else { bb / q };
        if q == 0.0 {
            q = -f64::EPSILON * (a[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// `λ₁` and the torsion profile of a radial domain at `n` radial intervals.
pub fn radial_reference(config: &RadialConfig, n: usize) -> Result<RadialReference> {
    let sys = assemble(config, n)?;
    let m = sys.diag.len();
    // symmetric form M^{-1/2} K M^{-1/2}
    let a: Vec<f64> = (0..m).map(|i| sys.diag[i] / sys.mass[i]).collect();
    let b: Vec<f64> = (0..m.saturating_sub(1))
        .map(|i| sys.off[i] / (sys.mass[i] * sys.mass[i + 1]).sqrt())
        .collect();
    let mut lo = 0.0;
    let mut hi = (0..m)
        .map(|i| a[i] + if i > 0 { b[i - 1].abs() } else { 0.0 } + if i + 1 < m { b[i].abs() } else { 0.0 })
        .fold(0.0, f64::max);
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if sturm_count(&a, &b, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lambda1 = 0.5 * (lo + hi);

    // Thomas solve of K u = M 1
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    for i in 0..m {
        let sub = if i == 0 { 0.0 } else { sys.off[i - 1] };
        let denom = sys.diag[i] - sub * if i == 0 { 0.0 } else { c[i - 1] };
        c[i] = if i + 1 < m { sys.off[i] / denom } else { 0.0 };
        d[i] = (sys.mass[i] - sub * if i == 0 { 0.0 } else { d[i - 1] }) / denom;
    }
    let mut u = vec![0.0; m];
    for i in (0..m).rev() {
        u[i] = d[i] - if i + 1 < m { c[i] * u[i + 1] } else { 0.0 };
    }
    let mut torsion = vec![0.0; sys.radii.len()];
    torsion[sys.first..sys.first + m].copy_from_slice(&u);
    Ok(RadialReference {
        lambda1,
        radii: sys.radii,
        torsion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// First zero of `J₀` by power series and bisection.
    fn bessel_j0_zero() -> f64 {
        let j0 = |x: f64| {
            let mut term = 1.0;
            let mut sum = 1.0;
            for k in 1..60 {
                term *= -(x * x / 4.0) / (k as f64 * k as f64);
                sum += term;
            }
            sum
        };
        let (mut a, mut b) = (2.0, 3.0);
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if j0(a) * j0(m) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn disk_eigenvalue_matches_bessel_zero() {
        let j = bessel_j0_zero();
        assert!((j - 2.404825557695773).abs() < 1e-12);
        let r = radial_reference(&RadialConfig::disk(1.0), 10_000).unwrap();
        assert!((r.lambda1 - j * j).abs() < 1e-3, "{}", r.lambda1);
        let coarse = radial_reference(&RadialConfig::disk(1.0), 200).unwrap();
        let fine = radial_reference(&RadialConfig::disk(1.0), 400).unwrap();
        let ratio = (coarse.lambda1 - j * j).abs() / (fine.lambda1 - j * j).abs();
        assert!(ratio > 3.5, "order ratio {ratio}");
    }

    #[test]
    fn scaling_and_torsion() {
        let one = radial_reference(&RadialConfig::disk(1.0), 1000).unwrap();
        let two = radial_reference(&RadialConfig::disk(2.0), 1000).unwrap();
        assert!((two.lambda1 - one.lambda1 / 4.0).abs() < 1e-10);
        for (r, u) in two.radii.iter().zip(&two.torsion) {
            assert!((u - (4.0 - r * r) / 4.0).abs() < 1e-9);
        }
        assert!((two.torsion_at(0.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn one_dimensional_interval() {
        // B(0, R) in 1D is (-R, R): λ₁ = (π / 2R)²
        let r = radial_reference(&RadialConfig::Disk { radius: 1.0, dim: 1 }, 2000).unwrap();
        let exact = (std::f64::consts::PI / 2.0).powi(2);
        assert!((r.lambda1 - exact).abs() < 1e-5);
    }

    #[test]
    fn annulus_torsion_matches_closed_form() {
        // -(r u')'/r = 1 on (a, b), u(a) = u(b) = 0
        let (a, b) = (1.0, 2.0);
        let r = radial_reference(&RadialConfig::annulus(a, b), 4000).unwrap();
        let c1 = (b * b - a * a) / (4.0 * (b / a).ln());
        let exact = |x: f64| (a * a - x * x) / 4.0 + c1 * (x / a).ln();
        for (x, u) in r.radii.iter().zip(&r.torsion) {
            assert!((u - exact(*x)).abs() < 1e-6);
        }
        assert!(r.lambda1 > 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(radial_reference(&RadialConfig::disk(1.0), 50).is_err());
        assert!(radial_reference(&RadialConfig::disk(-1.0), 500).is_err());
        assert!(radial_reference(&RadialConfig::annulus(2.0, 1.0), 500).is_err());
    }
}
