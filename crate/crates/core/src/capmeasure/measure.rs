use crate::error::{Error, Result};
use crate::grid::{GridDomain, ScalarGridField, ShapeMask};

/// Default X-membership tolerance on `1 + Δ_h w`.
pub const EPS_X: f64 = 1e-8;

/// A nonnegative, possibly infinite density per cell.
///
/// Infinity is a flag, never a large float. The boundary ring is always
/// infinite, which is how the Dirichlet condition on `∂D` enters.
#[derive(Clone, Debug, PartialEq)]
pub struct CapacitaryMeasure {
    domain: GridDomain,
    density: Vec<f64>,
    infinite: Vec<bool>,
}

impl CapacitaryMeasure {
    pub fn new(domain: GridDomain, density: Vec<f64>, infinite: Vec<bool>) -> Result<Self> {
        if density.len() != domain.len() || infinite.len() != domain.len() {
            return Err(Error::invalid("measure arrays do not match the domain"));
        }
        for k in 0..domain.len() {
            if infinite[k] {
                continue;
            }
            let v = density[k];
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Invariant(format!("measure density {v} at cell {k}")));
            }
            if domain.is_ring(k) {
                return Err(Error::Invariant(format!("ring cell {k} has a finite measure")));
            }
        }
        let density = density
            .into_iter()
            .zip(&infinite)
            .map(|(v, &inf)| if inf { 0.0 } else { v })
            .collect();
        Ok(CapacitaryMeasure {
            domain,
            density,
            infinite,
        })
    }

    /// Per-cell constructor: `None` means `+∞`. Ring cells are forced infinite.
    pub fn from_fn(domain: GridDomain, f: impl Fn(usize) -> Option<f64>) -> Result<Self> {
        let mut density = vec![0.0; domain.len()];
        let mut infinite = vec![true; domain.len()];
        for k in 0..domain.len() {
            if domain.is_ring(k) {
                continue;
            }
            if let Some(v) = f(k) {
                density[k] = v;
                infinite[k] = false;
            }
        }
        Self::new(domain, density, infinite)
    }

    /// `∞_{D \ Ω}`: zero on the mask, infinite elsewhere.
    pub fn from_mask(mask: &ShapeMask) -> Self {
        let d = *mask.domain();
        let infinite = mask.cells().iter().map(|&b| !b).collect();
        CapacitaryMeasure {
            domain: d,
            density: vec![0.0; d.len()],
            infinite,
        }
    }

    /// The constant density `c` on every interior cell.
    pub fn constant(domain: GridDomain, c: f64) -> Result<Self> {
        Self::from_fn(domain, |_| Some(c))
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    /// Density at a cell, `None` for `+∞`.
    #[inline]
    pub fn get(&self, k: usize) -> Option<f64> {
        if self.infinite[k] {
            None
        } else {
            Some(self.density[k])
        }
    }

    pub fn is_infinite(&self, k: usize) -> bool {
        self.infinite[k]
    }

    /// Cells where the measure is finite.
    pub fn finite_set(&self) -> ShapeMask {
        ShapeMask::from_fn(self.domain, |k| !self.infinite[k])
    }

    /// Cell-wise `self ≤ other` in the extended reals.
    pub fn le(&self, other: &CapacitaryMeasure) -> Result<Vec<bool>> {
        self.domain.check_same(&other.domain)?;
        Ok((0..self.domain.len())
            .map(|k| match (self.get(k), other.get(k)) {
                (_, None) => true,
                (None, Some(_)) => false,
                (Some(a), Some(b)) => a <= b,
            })
            .collect())
    }
}

/// `Δ_h w` with the five-point stencil; values beyond the grid are zero.
pub(crate) fn discrete_laplacian(values: &[f64], domain: &GridDomain) -> Vec<f64> {
    let h2 = domain.h() * domain.h();
    (0..domain.len())
        .map(|k| {
            let mut s = -(domain.directions() as f64) * values[k];
            for n in domain.neighbors(k).iter().take(domain.directions()).flatten() {
                s += values[*n];
            }
            s / h2
        })
        .collect()
}

/// A point of the discrete torsion cone
/// `X = { w ≥ 0, w = 0 on the ring, 1 + Δ_h w ≥ 0 }`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorsionField {
    field: ScalarGridField,
}

impl TorsionField {
    /// Validates membership in X up to `eps_x` on the Laplacian constraint.
    pub fn new(field: ScalarGridField, eps_x: f64) -> Result<Self> {
        let d = *field.domain();
        let v = field.values();
        for k in 0..d.len() {
            if d.is_ring(k) {
                if v[k] != 0.0 {
                    return Err(Error::Invariant(format!(
                        "torsion field nonzero ({}) on ring cell {k}",
                        v[k]
                    )));
                }
            } else if v[k] < 0.0 {
                return Err(Error::Invariant(format!(
                    "torsion field negative ({}) at cell {k}",
                    v[k]
                )));
            }
        }
        let t = TorsionField { field };
        let viol = t.x_violation();
        if viol > eps_x {
            return Err(Error::Invariant(format!(
                "1 + Δw violated by {viol:.3e} (tolerance {eps_x:.1e})"
            )));
        }
        Ok(t)
    }

    pub fn zero(domain: GridDomain) -> Self {
        TorsionField {
            field: ScalarGridField::zeros(domain),
        }
    }

    pub fn field(&self) -> &ScalarGridField {
        &self.field
    }

    pub fn into_field(self) -> ScalarGridField {
        self.field
    }

    pub fn domain(&self) -> &GridDomain {
        self.field.domain()
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    /// `1 + Δ_h w` at every cell (meaningful at interior cells).
    pub fn subharmonic_slack(&self) -> Vec<f64> {
        discrete_laplacian(self.values(), self.domain())
            .into_iter()
            .map(|l| 1.0 + l)
            .collect()
    }

    /// `max(0, -(1 + Δ_h w))` over interior cells.
    pub fn x_violation(&self) -> f64 {
        let d = self.domain();
        self.subharmonic_slack()
            .into_iter()
            .enumerate()
            .filter(|(k, _)| !d.is_ring(*k))
            .fold(0.0, |m, (_, s)| m.max(-s))
    }

    pub fn l2_distance(&self, other: &TorsionField) -> Result<f64> {
        self.field.l2_distance(&other.field)
    }

    /// Positivity set `{w > 0}`.
    pub fn support(&self) -> ShapeMask {
        ShapeMask::from_fn(*self.domain(), |k| self.values()[k] > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_is_always_infinite() {
        let d = GridDomain::square(0.0, 1.0, 6).unwrap();
        let mu = CapacitaryMeasure::constant(d, 2.0).unwrap();
        assert!(mu.is_infinite(0));
        assert_eq!(mu.get(d.index(2, 2)), Some(2.0));
        let mut dens = vec![1.0; d.len()];
        let inf = vec![false; d.len()];
        assert!(CapacitaryMeasure::new(d, dens.clone(), inf.clone()).is_err());
        dens[d.index(2, 2)] = -1.0;
        let inf: Vec<bool> = (0..d.len()).map(|k| d.is_ring(k)).collect();
        assert!(CapacitaryMeasure::new(d, dens, inf).is_err());
    }

    #[test]
    fn torsion_field_checks() {
        let d = GridDomain::square(0.0, 1.0, 6).unwrap();
        assert!(TorsionField::new(ScalarGridField::zeros(d), EPS_X).is_ok());
        let bump = ScalarGridField::from_fn(d, |_| 1.0).unwrap();
        assert!(TorsionField::new(bump, EPS_X).is_err());
        let spike = ScalarGridField::new(
            d,
            (0..d.len())
                .map(|k| if k == d.index(2, 2) { 1.0 } else { 0.0 })
                .collect(),
        )
        .unwrap();
        // a tall spike is strongly superharmonic at its peak
        assert!(TorsionField::new(spike, EPS_X).is_err());
    }

    #[test]
    fn measure_order() {
        let d = GridDomain::square(0.0, 1.0, 6).unwrap();
        let a = CapacitaryMeasure::constant(d, 1.0).unwrap();
        let b = CapacitaryMeasure::from_mask(&ShapeMask::empty(d));
        assert!(a.le(&b).unwrap().iter().all(|&x| x));
        assert!(!b.le(&a).unwrap().iter().all(|&x| x));
    }
}
