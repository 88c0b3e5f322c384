//! Capacitary measures, their torsion functions, and the metric `d_γ`.
//!
//! The torsion map `μ ↦ w_μ` is a bijection onto the convex cone
//! `X = { w ≥ 0, 1 + Δw ≥ 0 }` with inverse `μ = (1 + Δw)/w`, and the
//! `γ`-distance is the `L²` distance of torsions. Geodesics are therefore
//! straight segments in `w`.

mod functional;
mod measure;

use serde::Serialize;

pub use functional::{FunctionalKind, FunctionalSpec, Integrand, Penalties, SpectralPhi};
pub use measure::{CapacitaryMeasure, TorsionField, EPS_X};

pub(crate) use functional::apply_phi;

use crate::error::{Error, Result};
use crate::grid::GridDomain;
use crate::pde::{torsion, Coefficient};

/// Relative floor below which `w` counts as zero.
pub const W_FLOOR_RELATIVE: f64 = 1e-9;

/// Default `w_floor = 1e-9 · max w`.
pub fn default_floor(w: &TorsionField) -> f64 {
    W_FLOOR_RELATIVE * w.field().max()
}

/// `μ = (1 + Δ_h w)/w` where `w > w_floor`, `+∞` elsewhere.
pub fn measure_of_torsion(w: &TorsionField, w_floor: Option<f64>) -> Result<CapacitaryMeasure> {
    let floor = w_floor.unwrap_or_else(|| default_floor(w));
    if !(floor >= 0.0 && floor.is_finite()) {
        return Err(Error::invalid(format!(
            "w_floor {floor} must be finite and nonnegative"
        )));
    }
    let viol = w.x_violation();
    if viol > EPS_X {
        return Err(Error::Invariant(format!(
            "field leaves X by {viol:.3e} (tolerance {EPS_X:.1e})"
        )));
    }
    let slack = w.subharmonic_slack();
    let v = w.values();
    CapacitaryMeasure::from_fn(*w.domain(), |k| {
        if v[k] > floor {
            Some(slack[k].max(0.0) / v[k])
        } else {
            None
        }
    })
}

/// `d_γ(a, b) = ‖w_a − w_b‖_{L²(D)}`.
pub fn gamma_distance(a: Coefficient<'_>, b: Coefficient<'_>) -> Result<f64> {
    a.domain().check_same(b.domain())?;
    let wa = torsion(a)?;
    let wb = torsion(b)?;
    wa.l2_distance(&wb)
}

/// The point `(1 − t) w₀ + t w₁` of the segment in `X`.
pub fn geodesic_torsion(w0: &TorsionField, w1: &TorsionField, t: f64) -> Result<TorsionField> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("geodesic parameter {t} outside [0, 1]")));
    }
    let f = w0.field().combine(1.0 - t, w1.field(), t)?;
    TorsionField::new(f, EPS_X)
}

/// `μ(t)`: the measure whose torsion is `(1 − t) w_{μ₀} + t w_{μ₁}`.
pub fn geodesic_interpolate(mu0: &CapacitaryMeasure, mu1: &CapacitaryMeasure, t: f64) -> Result<CapacitaryMeasure> {
    mu0.domain().check_same(mu1.domain())?;
    let w0 = torsion(Coefficient::Measure(mu0))?;
    let w1 = torsion(Coefficient::Measure(mu1))?;
    measure_of_torsion(&geodesic_torsion(&w0, &w1, t)?, None)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvexityReport {
    pub t: Vec<f64>,
    /// `F(μ(t))`, evaluated on the reconstructed measure.
    pub values: Vec<f64>,
    /// `J(w(t))`, evaluated directly on the segment.
    pub segment_values: Vec<f64>,
    pub distance: f64,
    /// `max_t F(μ(t)) − [(1 − t)F(μ₀) + tF(μ₁)]`.
    pub chord_defect: f64,
    /// Largest `λ` with `F(μ(t)) ≤ chord − λ t(1 − t) d² / 2` at every sample.
    pub lambda: f64,
    /// `max |F(μ(t)) − J(w(t))|`.
    pub bijection_gap: f64,
}

/// Samples `F` along the geodesic from `μ₀` to `μ₁`.
pub fn convexity_probe(
    spec: &FunctionalSpec,
    mu0: &CapacitaryMeasure,
    mu1: &CapacitaryMeasure,
    samples: usize,
) -> Result<ConvexityReport> {
    spec.validate()?;
    mu0.domain().check_same(mu1.domain())?;
    if samples < 3 {
        return Err(Error::invalid("convexity probe needs at least 3 samples"));
    }
    let w0 = torsion(Coefficient::Measure(mu0))?;
    let w1 = torsion(Coefficient::Measure(mu1))?;
    let dist = w0.l2_distance(&w1)?;
    let mut rep = ConvexityReport {
        t: Vec::with_capacity(samples),
        values: Vec::with_capacity(samples),
        segment_values: Vec::with_capacity(samples),
        distance: dist,
        chord_defect: f64::NEG_INFINITY,
        lambda: f64::INFINITY,
        bijection_gap: 0.0,
    };
    for i in 0..samples {
        let t = i as f64 / (samples - 1) as f64;
        let wt = geodesic_torsion(&w0, &w1, t)?;
        let mu_t = measure_of_torsion(&wt, None)?;
        let back = torsion(Coefficient::Measure(&mu_t))?;
        let f = spec.evaluate(&back)?;
        let j = spec.evaluate(&wt)?;
        rep.t.push(t);
        rep.values.push(f);
        rep.segment_values.push(j);
        rep.bijection_gap = rep.bijection_gap.max((f - j).abs());
    }
    let (f0, f1) = (rep.values[0], rep.values[samples - 1]);
    for (t, f) in rep.t.iter().zip(&rep.values) {
        let chord = (1.0 - t) * f0 + t * f1;
        rep.chord_defect = rep.chord_defect.max(f - chord);
        let q = t * (1.0 - t) * dist * dist;
        if q > 0.0 {
            rep.lambda = rep.lambda.min(2.0 * (chord - f) / q);
        }
    }
    Ok(rep)
}

/// Cell-wise comparison of two measures and their torsions.
#[derive(Clone, Debug, Serialize)]
pub struct OrderingReport {
    /// `μ₁ ≤ μ₂` at every cell.
    pub measures_ordered: bool,
    /// Cells where `μ₁ ≤ μ₂` fails.
    pub measure_violations: usize,
    /// `w₂ ≥ w₁ − tol` at every cell.
    pub torsions_ordered: bool,
    /// `min (w₂ − w₁)`.
    pub min_gap: f64,
    pub tolerance: f64,
    #[serde(skip)]
    pub w1: Option<TorsionField>,
    #[serde(skip)]
    pub w2: Option<TorsionField>,
}

/// Tolerance of torsion comparisons, above CG noise.
pub const ORDER_TOLERANCE: f64 = 1e-9;

pub fn compare_measures(mu1: &CapacitaryMeasure, mu2: &CapacitaryMeasure) -> Result<OrderingReport> {
    let le = mu1.le(mu2)?;
    let w1 = torsion(Coefficient::Measure(mu1))?;
    let w2 = torsion(Coefficient::Measure(mu2))?;
    let min_gap = w2
        .values()
        .iter()
        .zip(w1.values())
        .map(|(b, a)| b - a)
        .fold(f64::INFINITY, f64::min);
    let violations = le.iter().filter(|&&x| !x).count();
    Ok(OrderingReport {
        measures_ordered: violations == 0,
        measure_violations: violations,
        torsions_ordered: min_gap >= -ORDER_TOLERANCE,
        min_gap,
        tolerance: ORDER_TOLERANCE,
        w1: Some(w1),
        w2: Some(w2),
    })
}

/// The pair `μ₁ = ∞` off `B(0,1)` and `μ₂ = 1` on `B(0,1)`, `0` on
/// `B(0,R) \ B(0,1)`, `∞` off `B(0,R)`.
pub fn remark_measures(domain: &GridDomain, r: f64) -> Result<(CapacitaryMeasure, CapacitaryMeasure)> {
    let inr = domain.inradius_at([0.0, 0.0]);
    if !(r > 1.0 && r <= inr) {
        return Err(Error::invalid(format!(
            "R = {r} must lie in (1, {inr}] for this domain"
        )));
    }
    let dist = |k: usize| {
        let c = domain.center(k);
        c[0].hypot(c[1])
    };
    let mu1 = CapacitaryMeasure::from_fn(*domain, |k| (dist(k) < 1.0).then_some(0.0))?;
    let mu2 = CapacitaryMeasure::from_fn(*domain, |k| {
        let d = dist(k);
        if d < 1.0 {
            Some(1.0)
        } else if d < r {
            Some(0.0)
        } else {
            None
        }
    })?;
    Ok((mu1, mu2))
}

/// Torsion ordering need not follow measure ordering: for large `R` the
/// torsions are ordered although the measures are not.
pub fn remark_case_ordering(domain: &GridDomain, r: f64) -> Result<OrderingReport> {
    let (mu1, mu2) = remark_measures(domain, r)?;
    compare_measures(&mu1, &mu2)
}

/// Smallest `R` in `[lo, hi]` (to `tol`) from which the torsions are ordered,
/// by bisection. `None` if not even `hi` orders them.
pub fn ordering_threshold(domain: &GridDomain, lo: f64, hi: f64, tol: f64) -> Result<Option<f64>> {
    if !remark_case_ordering(domain, hi)?.torsions_ordered {
        return Ok(None);
    }
    let (mut a, mut b) = (lo, hi);
    if remark_case_ordering(domain, a)?.torsions_ordered {
        return Ok(Some(a));
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        if remark_case_ordering(domain, m)?.torsions_ordered {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(Some(b))
}
