use serde::{Deserialize, Serialize};

use super::{GridDomain, ShapeMask};
use crate::error::{Error, Result};

/// Analytic set descriptions that can be rasterized onto a grid.
///
/// All primitives describe open sets: a cell is inside when its center lies
/// strictly inside the primitive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Primitive {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Annulus {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
    },
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Union {
        parts: Vec<Primitive>,
    },
    Difference {
        base: std::boxed::Box<Primitive>,
        minus: std::boxed::Box<Primitive>,
    },
}

impl Primitive {
    pub fn ball(center: &[f64], radius: f64) -> Self {
        Primitive::Ball {
            center: center.to_vec(),
            radius,
        }
    }

    pub fn annulus(center: &[f64], inner: f64, outer: f64) -> Self {
        Primitive::Annulus {
            center: center.to_vec(),
            inner,
            outer,
        }
    }

    pub fn rect(lower: &[f64], upper: &[f64]) -> Self {
        Primitive::Box {
            lower: lower.to_vec(),
            upper: upper.to_vec(),
        }
    }

    pub fn union(parts: Vec<Primitive>) -> Self {
        Primitive::Union { parts }
    }

    pub fn minus(self, other: Primitive) -> Self {
        Primitive::Difference {
            base: std::boxed::Box::new(self),
            minus: std::boxed::Box::new(other),
        }
    }

    /// Checks dimensions and parameter ranges.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let dim_ok = |v: &[f64], what: &str| -> Result<()> {
            if v.len() != dim || v.iter().any(|x| !x.is_finite()) {
                Err(Error::invalid(format!(
                    "{what} must have {dim} finite components, got {v:?}"
                )))
            } else {
                Ok(())
            }
        };
        match self {
            Primitive::Ball { center, radius } => {
                dim_ok(center, "ball center")?;
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::invalid(format!("ball radius {radius} must be positive")));
                }
            }
            Primitive::Annulus { center, inner, outer } => {
                dim_ok(center, "annulus center")?;
                if !(*inner >= 0.0 && inner < outer && outer.is_finite()) {
                    return Err(Error::invalid(format!(
                        "annulus radii must satisfy 0 <= inner < outer, got {inner}, {outer}"
                    )));
                }
            }
            Primitive::Box { lower, upper } => {
                dim_ok(lower, "box lower corner")?;
                dim_ok(upper, "box upper corner")?;
                if lower.iter().zip(upper).any(|(a, b)| a >= b) {
                    return Err(Error::invalid("box corners must satisfy lower < upper"));
                }
            }
            Primitive::Union { parts } => {
                if parts.is_empty() {
                    return Err(Error::invalid("union of zero parts"));
                }
                for p in parts {
                    p.validate(dim)?;
                }
            }
            Primitive::Difference { base, minus } => {
                base.validate(dim)?;
                minus.validate(dim)?;
            }
        }
        Ok(())
    }

    /// Signed level function, negative exactly on the open set. For balls it
    /// is the signed distance; for composites it is only sign-faithful.
    pub fn level(&self, p: [f64; 2]) -> f64 {
        match self {
            Primitive::Ball { center, radius } => dist(p, center) - radius,
            Primitive::Annulus { center, inner, outer } => {
                let r = dist(p, center);
                (inner - r).max(r - outer)
            }
            Primitive::Box { lower, upper } => (0..lower.len())
                .map(|a| (lower[a] - p[a]).max(p[a] - upper[a]))
                .fold(f64::NEG_INFINITY, f64::max),
            Primitive::Union { parts } => parts.iter().map(|q| q.level(p)).fold(f64::INFINITY, f64::min),
            Primitive::Difference { base, minus } => base.level(p).max(-minus.level(p)),
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.level(p) < 0.0
    }

    /// Axis-aligned bounding box `(lower, upper)`.
    pub fn bounds(&self, dim: usize) -> ([f64; 2], [f64; 2]) {
        match self {
            Primitive::Ball { center, radius } => sphere_bounds(center, *radius, dim),
            Primitive::Annulus { center, outer, .. } => sphere_bounds(center, *outer, dim),
            Primitive::Box { lower, upper } => {
                let mut lo = [0.0; 2];
                let mut hi = [0.0; 2];
                lo[..dim].copy_from_slice(&lower[..dim]);
                hi[..dim].copy_from_slice(&upper[..dim]);
                (lo, hi)
            }
            Primitive::Union { parts } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for q in parts {
                    let (a, b) = q.bounds(dim);
                    for k in 0..dim {
                        lo[k] = lo[k].min(a[k]);
                        hi[k] = hi[k].max(b[k]);
                    }
                }
                (lo, hi)
            }
            Primitive::Difference { base, .. } => base.bounds(dim),
        }
    }

    /// Fraction `t ∈ (0, 1]` of the segment from `inside` to `outside` at which
    /// the boundary is crossed, or `None` when `outside` is not outside the
    /// primitive.
    pub fn crossing(&self, inside: [f64; 2], outside: [f64; 2]) -> Option<f64> {
        if self.level(outside) < 0.0 || self.level(inside) >= 0.0 {
            return None;
        }
        let at = |t: f64| {
            [
                inside[0] + t * (outside[0] - inside[0]),
                inside[1] + t * (outside[1] - inside[1]),
            ]
        };
        let (mut a, mut b) = (0.0f64, 1.0f64);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if self.level(at(m)) < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        Some(0.5 * (a + b))
    }
}

fn dist(p: [f64; 2], c: &[f64]) -> f64 {
    let dx = p[0] - c[0];
    let dy = if c.len() > 1 { p[1] - c[1] } else { 0.0 };
    (dx * dx + dy * dy).sqrt()
}

fn sphere_bounds(c: &[f64], r: f64, dim: usize) -> ([f64; 2], [f64; 2]) {
    let mut lo = [0.0; 2];
    let mut hi = [0.0; 2];
    for a in 0..dim {
        lo[a] = c[a] - r;
        hi[a] = c[a] + r;
    }
    (lo, hi)
}

/// Marks every cell whose center lies in the primitive.
pub fn rasterize(primitive: &Primitive, domain: &GridDomain) -> Result<ShapeMask> {
    let dim = domain.dim();
    primitive.validate(dim)?;
    let (lo, hi) = primitive.bounds(dim);
    let tol = 1e-12 * (1.0 + domain.upper()[0].abs().max(domain.lower()[0].abs()));
    for a in 0..dim {
        if lo[a] < domain.lower()[a] - tol || hi[a] > domain.upper()[a] + tol {
            return Err(Error::DomainViolation(format!(
                "axis {a}: primitive spans [{}, {}], domain spans [{}, {}]",
                lo[a],
                hi[a],
                domain.lower()[a],
                domain.upper()[a]
            )));
        }
    }
    Ok(ShapeMask::from_fn(*domain, |k| primitive.contains(domain.center(k))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn full_disk_on_its_bounding_box() {
        let d = GridDomain::square(-2.0, 2.0, 64).unwrap();
        let m = rasterize(&Primitive::ball(&[0.0, 0.0], 2.0), &d).unwrap();
        for k in 0..d.len() {
            let c = d.center(k);
            let expect = !d.is_ring(k) && c[0] * c[0] + c[1] * c[1] < 4.0;
            assert_eq!(m.contains(k), expect);
        }
    }

    #[test]
    fn box_equal_to_domain_fills_interior() {
        let d = GridDomain::square(0.0, 1.0, 10).unwrap();
        let m = rasterize(&Primitive::rect(&[0.0, 0.0], &[1.0, 1.0]), &d).unwrap();
        assert_eq!(m.count(), 64);
    }

    #[test]
    fn annulus_area_converges() {
        // exact area π(2² − 1²); the error of a center-sampled rasterization is O(h)
        let d = GridDomain::square(-2.0, 2.0, 256).unwrap();
        let m = rasterize(&Primitive::annulus(&[0.0, 0.0], 1.0, 2.0), &d).unwrap();
        let exact = PI * 3.0;
        assert!((m.volume() - exact).abs() < 6.0 * PI * d.h(), "{}", m.volume());
    }

    #[test]
    fn primitive_outside_domain_is_rejected() {
        let d = GridDomain::square(-1.0, 1.0, 16).unwrap();
        let r = rasterize(&Primitive::ball(&[0.5, 0.0], 0.8), &d);
        assert!(matches!(r, Err(Error::DomainViolation(_))));
    }

    #[test]
    fn difference_and_union() {
        let d = GridDomain::square(-2.0, 2.0, 40).unwrap();
        let ring = Primitive::annulus(&[0.0, 0.0], 0.5, 1.5);
        let cut = ring.clone().minus(Primitive::rect(&[0.0, -0.05], &[2.0, 0.05]));
        let a = rasterize(&ring, &d).unwrap();
        let b = rasterize(&cut, &d).unwrap();
        assert!(b.is_subset_of(&a).unwrap());
        assert!(b.count() < a.count());
        let u = Primitive::union(vec![
            Primitive::ball(&[-1.0, 0.0], 0.5),
            Primitive::ball(&[1.0, 0.0], 0.5),
        ]);
        let mu = rasterize(&u, &d).unwrap();
        let l = rasterize(&Primitive::ball(&[-1.0, 0.0], 0.5), &d).unwrap();
        assert!(l.is_subset_of(&mu).unwrap());
    }

    #[test]
    fn crossing_of_a_ball_is_exact() {
        let b = Primitive::ball(&[0.0, 0.0], 1.0);
        let t = b.crossing([0.5, 0.0], [1.5, 0.0]).unwrap();
        assert!((t - 0.5).abs() < 1e-12);
        assert!(b.crossing([0.5, 0.0], [0.7, 0.0]).is_none());
    }

    #[test]
    fn primitive_json_is_strict() {
        let p: Primitive = serde_json::from_str(r#"{"type":"ball","center":[0,0],"radius":1}"#).unwrap();
        assert_eq!(p, Primitive::ball(&[0.0, 0.0], 1.0));
        assert!(serde_json::from_str::<Primitive>(r#"{"type":"ball","center":[0,0],"radius":1,"x":2}"#).is_err());
    }

    #[test]
    fn one_dimensional_interval() {
        let d = GridDomain::interval(-2.0, 2.0, 40).unwrap();
        let m = rasterize(&Primitive::ball(&[0.0], 1.0), &d).unwrap();
        assert!((m.volume() - 2.0).abs() <= 2.0 * d.h());
    }
}
