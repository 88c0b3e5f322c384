//! The closed catalog of functionals driving the flows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::{eigen_solve, Coefficient, EigenOptions};

use super::{measure_of_torsion, TorsionField};

/// Pointwise integrand `j(w)` of `J(w) = ∫ j(w) dx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Integrand {
    /// `slope · w`
    Linear { slope: f64 },
    /// `w² / 2`
    HalfSquare,
    /// `(w - target)² / 2`
    ShiftedHalfSquare { target: f64 },
    /// `exp(-rate · w)`
    Exponential { rate: f64 },
}

impl Integrand {
    fn value(&self, w: f64) -> f64 {
        match *self {
            Integrand::Linear { slope } => slope * w,
            Integrand::HalfSquare => 0.5 * w * w,
            Integrand::ShiftedHalfSquare { target } => 0.5 * (w - target) * (w - target),
            Integrand::Exponential { rate } => (-rate * w).exp(),
        }
    }

    fn derivative(&self, w: f64) -> f64 {
        match *self {
            Integrand::Linear { slope } => slope,
            Integrand::HalfSquare => w,
            Integrand::ShiftedHalfSquare { target } => w - target,
            Integrand::Exponential { rate } => -rate * (-rate * w).exp(),
        }
    }

    /// Bound on `j''` over `w ≥ 0`.
    fn curvature_bound(&self) -> f64 {
        match *self {
            Integrand::Linear { .. } => 0.0,
            Integrand::HalfSquare | Integrand::ShiftedHalfSquare { .. } => 1.0,
            Integrand::Exponential { rate } => rate * rate,
        }
    }

    /// Infimum of `j''` over `w ≥ 0`.
    fn curvature_floor(&self) -> f64 {
        match self {
            Integrand::Linear { .. } | Integrand::Exponential { .. } => 0.0,
            Integrand::HalfSquare | Integrand::ShiftedHalfSquare { .. } => 1.0,
        }
    }

    /// `Some(true)` if `j` is nonincreasing on `w ≥ 0`, `Some(false)` if
    /// nondecreasing, `None` otherwise.
    fn decreasing(&self) -> Option<bool> {
        match *self {
            Integrand::Linear { slope } => Some(slope <= 0.0),
            Integrand::HalfSquare => Some(false),
            Integrand::ShiftedHalfSquare { target } => {
                if target <= 0.0 {
                    Some(false)
                } else {
                    None
                }
            }
            Integrand::Exponential { rate } => Some(rate >= 0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Integrand::Linear { slope } => slope.is_finite(),
            Integrand::HalfSquare => true,
            Integrand::ShiftedHalfSquare { target } => target.is_finite(),
            Integrand::Exponential { rate } => rate.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("integrand parameters {self:?}")))
        }
    }
}

/// Symmetric function of the first `k` eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralPhi {
    /// `λ_k`
    LambdaK,
    /// `λ₁ + … + λ_k`
    Sum,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalKind {
    Zero,
    /// `-∫ w dx`, the torsion energy.
    Energy,
    Integral {
        integrand: Integrand,
    },
    Spectral {
        phi: SpectralPhi,
        k: usize,
    },
    /// Lebesgue measure of the set (`{w > 0}` for torsion fields).
    Volume,
}

/// Extra set-flow terms `volume · |M| + perimeter · P(M)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Penalties {
    pub volume: f64,
    pub perimeter: f64,
}

impl Penalties {
    pub fn is_zero(&self) -> bool {
        self.volume == 0.0 && self.perimeter == 0.0
    }
}

/// A catalog functional `scale · kind`, with optional set penalties and a
/// declared convexity modulus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalSpec {
    pub kind: FunctionalKind,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub penalties: Penalties,
    /// Declared `λ`; must not exceed what the catalog can certify.
    #[serde(default)]
    pub lambda_convexity: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl FunctionalSpec {
    pub fn new(kind: FunctionalKind) -> Self {
        FunctionalSpec {
            kind,
            scale: 1.0,
            penalties: Penalties::default(),
            lambda_convexity: None,
        }
    }

    pub fn zero() -> Self {
        Self::new(FunctionalKind::Zero)
    }

    pub fn energy() -> Self {
        Self::new(FunctionalKind::Energy)
    }

    pub fn integral(integrand: Integrand) -> Self {
        Self::new(FunctionalKind::Integral { integrand })
    }

    pub fn half_square() -> Self {
        Self::integral(Integrand::HalfSquare)
    }

    pub fn lambda(k: usize) -> Self {
        Self::new(FunctionalKind::Spectral {
            phi: SpectralPhi::LambdaK,
            k,
        })
    }

    pub fn volume() -> Self {
        Self::new(FunctionalKind::Volume)
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.scale = s;
        self
    }

    pub fn with_penalties(mut self, volume: f64, perimeter: f64) -> Self {
        self.penalties = Penalties { volume, perimeter };
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda_convexity = Some(lambda);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.scale.is_finite() {
            return Err(Error::invalid("functional scale must be finite"));
        }
        let p = self.penalties;
        if !(p.volume >= 0.0 && p.volume.is_finite() && p.perimeter >= 0.0 && p.perimeter.is_finite()) {
            return Err(Error::invalid("penalty coefficients must be finite and nonnegative"));
        }
        match self.kind {
            FunctionalKind::Integral { integrand } => integrand.validate()?,
            FunctionalKind::Spectral { k: 0, .. } => return Err(Error::invalid("spectral functionals need k ≥ 1")),
            _ => {}
        }
        if let Some(l) = self.lambda_convexity {
            match self.catalog_modulus() {
                Some(c) if l <= c + 1e-12 => {}
                Some(c) => {
                    return Err(Error::invalid(format!(
                        "declared convexity {l} exceeds the catalog modulus {c}"
                    )))
                }
                None => {
                    return Err(Error::invalid(
                        "convexity cannot be declared for a non-convex catalog entry",
                    ))
                }
            }
        }
        Ok(())
    }

    /// Largest `λ` for which `J` is `λ`-convex on `X`, when the catalog knows it.
    pub fn catalog_modulus(&self) -> Option<f64> {
        let s = self.scale;
        match self.kind {
            FunctionalKind::Zero | FunctionalKind::Energy => Some(0.0),
            FunctionalKind::Integral { integrand } => {
                if s >= 0.0 {
                    Some(s * integrand.curvature_floor())
                } else {
                    Some(s * integrand.curvature_bound())
                }
            }
            FunctionalKind::Spectral { .. } | FunctionalKind::Volume => None,
        }
    }

    /// The modulus used by contraction checks: declared if present.
    pub fn convexity(&self) -> Option<f64> {
        self.lambda_convexity.or(self.catalog_modulus())
    }

    /// `w₁ ≤ w₂ ⇒ J(w₁) ≥ J(w₂)`; for set functionals, decreasing under
    /// inclusion. Penalties are ignored here.
    pub fn is_decreasing(&self) -> bool {
        let s = self.scale;
        match self.kind {
            FunctionalKind::Zero => true,
            FunctionalKind::Energy | FunctionalKind::Spectral { .. } => s >= 0.0,
            FunctionalKind::Volume => s <= 0.0,
            FunctionalKind::Integral { integrand } => match integrand.decreasing() {
                Some(dec) => (dec && s >= 0.0) || (!dec && s <= 0.0),
                None => s == 0.0,
            },
        }
    }

    /// Increasing under inclusion (the Hausdorff flow requirement).
    pub fn is_increasing(&self) -> bool {
        match self.kind {
            FunctionalKind::Zero => true,
            _ => self.scale == 0.0 || self.scaled(-self.scale).is_decreasing(),
        }
    }

    pub fn is_spectral(&self) -> bool {
        matches!(self.kind, FunctionalKind::Spectral { .. })
    }

    /// Whether `J` has a Lipschitz gradient on `X` (prox-step eligibility).
    pub fn is_smooth(&self) -> bool {
        matches!(
            self.kind,
            FunctionalKind::Zero | FunctionalKind::Energy | FunctionalKind::Integral { .. }
        )
    }

    /// Lipschitz constant of the `L²` gradient on `w ≥ 0`.
    pub fn gradient_lipschitz(&self) -> Option<f64> {
        match self.kind {
            FunctionalKind::Zero | FunctionalKind::Energy => Some(0.0),
            FunctionalKind::Integral { integrand } => Some(self.scale.abs() * integrand.curvature_bound()),
            _ => None,
        }
    }

    /// `L²(D)` gradient of a smooth `J`, cell by cell.
    pub fn gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        let s = self.scale;
        match self.kind {
            FunctionalKind::Zero => Ok(vec![0.0; w.len()]),
            FunctionalKind::Energy => Ok(vec![-s; w.len()]),
            FunctionalKind::Integral { integrand } => Ok(w.iter().map(|&x| s * integrand.derivative(x)).collect()),
            _ => Err(Error::Unsupported(format!("{:?} has no gradient", self.kind))),
        }
    }

    /// Smooth part evaluated on raw cell values (ring cells must be zero).
    pub(crate) fn evaluate_values(&self, w: &[f64], cell_volume: f64) -> Result<f64> {
        let s = self.scale;
        let v = match self.kind {
            FunctionalKind::Zero => 0.0,
            FunctionalKind::Energy => -w.iter().sum::<f64>() * cell_volume,
            FunctionalKind::Integral { integrand } => w.iter().map(|&x| integrand.value(x)).sum::<f64>() * cell_volume,
            _ => return Err(Error::Unsupported(format!("{:?} on raw values", self.kind))),
        };
        Ok(s * v)
    }

    /// `J(w) = F(μ_w)`. Penalties do not apply to measures.
    pub fn evaluate(&self, w: &TorsionField) -> Result<f64> {
        let d = *w.domain();
        match self.kind {
            FunctionalKind::Spectral { phi, k } => {
                let mu = measure_of_torsion(w, None)?;
                let r = eigen_solve(Coefficient::Measure(&mu), k, &EigenOptions::default())?;
                Ok(self.scale * apply_phi(phi, &r.eigenvalues))
            }
            FunctionalKind::Volume => Ok(self.scale * w.support().count() as f64 * d.cell_volume()),
            _ => self.evaluate_values(w.values(), d.cell_volume()),
        }
    }
}

pub(crate) fn apply_phi(phi: SpectralPhi, eigenvalues: &[f64]) -> f64 {
    match phi {
        SpectralPhi::LambdaK => *eigenvalues.last().expect("k ≥ 1"),
        SpectralPhi::Sum => eigenvalues.iter().sum(),
    }
}
