//! Boundary perturbations of the square `[0, π]²` for `λ₁`.
//!
//! A normal perturbation with density `v ≥ 0` moves `λ₁` at the rate
//! `−I_v`, `I_v = ∫ |∂u₁/∂n|² v ds`, so along the ray the one-step problem
//! `λ₁ − t I_v + t²/2ε` is minimized at `t_v = ε I_v` with value
//! `G_v = λ₁ − ε I_v² / 2`. Concentrated densities at the side midpoints,
//! where `|∂u₁/∂n|` peaks, beat the uniform one.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridDomain, ShapeMask};
use crate::pde::{boundary_normal_derivative, eigen_solve, Coefficient, EigenOptions};

/// Arc-length samples used to normalize densities and for the analytic profile.
const ARC_SAMPLES: usize = 200_000;
const PERIMETER: f64 = 4.0 * PI;

/// Density on `∂[0, π]²` in the arc-length parameter `s ∈ [0, 4π)`, starting
/// at the origin and running counter-clockwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryDensity {
    Uniform,
    /// `(1 + cos(π δ / width)) / 2` for arc-length offsets `|δ| < width`,
    /// wrapping around the corners.
    Bump {
        center: f64,
        width: f64,
    },
}

impl BoundaryDensity {
    /// Uniform, a bump at the bottom midpoint, and a bump at the origin corner.
    pub fn default_candidates() -> Vec<(String, BoundaryDensity)> {
        vec![
            ("uniform".into(), BoundaryDensity::Uniform),
            (
                "midpoint_bump".into(),
                BoundaryDensity::Bump {
                    center: 0.5 * PI,
                    width: 0.2,
                },
            ),
            (
                "corner_bump".into(),
                BoundaryDensity::Bump {
                    center: 0.0,
                    width: 0.2,
                },
            ),
        ]
    }

    fn validate(&self) -> Result<()> {
        if let BoundaryDensity::Bump { center, width } = *self {
            if !(center.is_finite() && width > 0.0 && width <= 2.0 * PI) {
                return Err(Error::invalid(format!("bump at {center} with width {width}")));
            }
        }
        Ok(())
    }

    /// Unnormalized profile.
    fn raw(&self, s: f64) -> f64 {
        match *self {
            BoundaryDensity::Uniform => 1.0,
            BoundaryDensity::Bump { center, width } => {
                let delta = (s - center + 0.5 * PERIMETER).rem_euclid(PERIMETER) - 0.5 * PERIMETER;
                if delta.abs() < width {
                    0.5 * (1.0 + (PI * delta / width).cos())
                } else {
                    0.0
                }
            }
        }
    }

    /// Midpoint rule on the arc-length circle.
    fn arc_integral(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let ds = PERIMETER / ARC_SAMPLES as f64;
        (0..ARC_SAMPLES)
            .map(|i| {
                let s = (i as f64 + 0.5) * ds;
                self.raw(s) * weight(s)
            })
            .sum::<f64>()
            * ds
    }
}

/// `s ↦` position along its side, `s mod π`; the exact `|∂u₁/∂n|` there is
/// `sin` of it for `u₁ = sin x sin y`.
fn side_parameter(s: f64) -> f64 {
    s.rem_euclid(PI)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SquareCandidate {
    pub name: String,
    pub density: BoundaryDensity,
    /// `∫ |∂u₁/∂n|² v ds` from the grid eigenfunction.
    pub integral: f64,
    /// The same with the exact profile `sin`.
    pub analytic_integral: f64,
    /// `t_v = ε I_v`.
    pub step: f64,
    /// `G_v(t_v) = λ₁ − ε I_v² / 2`.
    pub value: f64,
    /// 1 is best (smallest `G`).
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SquareStudyReport {
    pub epsilon: f64,
    pub intervals: usize,
    pub lambda1: f64,
    pub candidates: Vec<SquareCandidate>,
    /// `max |∂u₁/∂n − sin|` over boundary faces, `u₁` scaled to peak 1.
    pub profile_error: f64,
    /// `max |∂u₁/∂n|²` on the boundary (reported, not asserted).
    pub max_normal_derivative_sq: f64,
    /// Whether the best candidate is a bump.
    pub bump_preferred: bool,
}

/// Runs the study on a vertex-aligned grid with `intervals` cells per side.
pub fn square_perturbation_study(
    epsilon: f64,
    candidates: &[(String, BoundaryDensity)],
    intervals: usize,
) -> Result<SquareStudyReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("epsilon {epsilon} must be positive")));
    }
    if candidates.is_empty() {
        return Err(Error::invalid("no candidate densities"));
    }
    for (_, c) in candidates {
        c.validate()?;
    }
    let domain = GridDomain::vertex_aligned(0.0, PI, intervals, 2)?;
    let mask = ShapeMask::full(domain);
    let eig = eigen_solve(Coefficient::Mask(&mask), 1, &EigenOptions::default())?;
    let lambda1 = eig.lambda1();
    let u = &eig.eigenfunctions[0];
    let peak = u.max_abs();
    if peak <= 0.0 {
        return Err(Error::Invariant("vanishing eigenfunction".into()));
    }
    let faces = boundary_normal_derivative(u, &mask)?;
    // (arc length, |∂u₁/∂n| scaled to peak 1, face length)
    let samples: Vec<(f64, f64, f64)> = faces
        .iter()
        .map(|f| {
            let [x, y] = domain.center(f.cell);
            let s = match f.direction {
                2 => x,
                1 => PI + y,
                3 => 2.0 * PI + (PI - x),
                _ => 3.0 * PI + (PI - y),
            };
            (s, f.value / peak, f.length)
        })
        .collect();
    let profile_error = samples
        .iter()
        .map(|&(s, g, _)| (g - side_parameter(s).sin()).abs())
        .fold(0.0, f64::max);
    let max_normal_derivative_sq = samples.iter().map(|&(_, g, _)| g * g).fold(0.0, f64::max);

    let mut out: Vec<SquareCandidate> = candidates
        .iter()
        .map(|(name, c)| {
            let mass = c.arc_integral(|_| 1.0);
            let integral = samples.iter().map(|&(s, g, len)| g * g * c.raw(s) * len).sum::<f64>() / mass;
            let analytic_integral = c.arc_integral(|s| side_parameter(s).sin().powi(2)) / mass;
            SquareCandidate {
                name: name.clone(),
                density: *c,
                integral,
                analytic_integral,
                step: epsilon * integral,
                value: lambda1 - 0.5 * epsilon * integral * integral,
                rank: 0,
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..out.len()).collect();
    order.sort_by(|&a, &b| out[a].value.total_cmp(&out[b].value).then(a.cmp(&b)));
    for (r, &i) in order.iter().enumerate() {
        out[i].rank = r + 1;
    }
    let bump_preferred = matches!(out[order[0]].density, BoundaryDensity::Bump { .. });
    Ok(SquareStudyReport {
        epsilon,
        intervals,
        lambda1,
        candidates: out,
        profile_error,
        max_normal_derivative_sq,
        bump_preferred,
    })
}
