//! First step of the energy flow from the slit disk `B(0,2) \ ∂B(0,1)`.
//!
//! Everything is radial, so the comparison between the relaxed competitor
//! `w̃ = ε f + u₀` and the classical competitors `u_s` (torsions of
//! `B(0,s) ∪ A(s,2)`) is done by one-dimensional trapezoid quadrature.

use serde::Serialize;

use crate::error::{Error, Result};

/// Comparison threshold for "nonpositive" and "zero".
pub const ANNULUS_ZERO: f64 = 1e-8;
/// Number of sampled `s` values in `(0, 2)`.
pub const ANNULUS_SAMPLES: usize = 200;

#[derive(Clone, Debug, Serialize)]
pub struct AnnulusReport {
    pub epsilon: f64,
    pub quadrature_points: usize,
    pub s: Vec<f64>,
    /// `∫ (u_s − u₀) r dr`.
    pub first_integral: Vec<f64>,
    /// `∫ (u_s − u₀) r dr − (1/2ε) ∫ (u_s − u₀)² r dr`.
    pub lhs: Vec<f64>,
    /// `ε ∫ (f − f²/2) r dr`.
    pub rhs: f64,
    /// `∫₀² (f − f²/2) r dr`.
    pub f_integral: f64,
    /// First integral at `s = 1`.
    pub first_integral_at_one: f64,
    pub lhs_max: f64,
    pub lhs_argmax: f64,
    /// `J_ε(w̃)`.
    pub j_relaxed: f64,
    /// `J_ε(u_s)` per sample.
    pub j_sets: Vec<f64>,
    pub j_sets_min: f64,
    /// `LHS(s) ≤ 1e-8` at every sample.
    pub lhs_nonpositive: bool,
    /// `LHS(s) < −1e-8` whenever `|s − 1| > 1e-2`.
    pub lhs_zero_only_near_one: bool,
    /// `LHS(s) < RHS` at every sample.
    pub inequality_holds: bool,
    /// `J_ε(w̃) < min_s J_ε(u_s)`.
    pub relaxation_at_first_step: bool,
}

/// Torsion of `B(0,s) ∪ A(s,2)` at radius `r`.
pub fn u_s(s: f64, r: f64) -> f64 {
    if r <= s || s >= 2.0 {
        ((s * s - r * r) / 4.0).max(0.0)
    } else {
        (4.0 - r * r + (s * s - 4.0) * (r / 2.0).ln() / (s / 2.0).ln()) / 4.0
    }
}

/// `f(r) = min{1, log(r/2)/log(1/2)}`.
pub fn f_profile(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else {
        (r / 2.0).ln() / 0.5f64.ln()
    }
}

/// Trapezoid rule on `[0, 2]` for `g(r) r`, split at the kinks.
fn radial_integral(g: impl Fn(f64) -> f64, kinks: &[f64], n: usize) -> f64 {
    let mut pts: Vec<f64> = vec![0.0, 2.0];
    pts.extend(kinks.iter().copied().filter(|&k| k > 0.0 && k < 2.0));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let m = ((n as f64 * (b - a) / 2.0).ceil() as usize).max(1);
        let h = (b - a) / m as f64;
        let f = |r: f64| g(r) * r;
        let mut s = 0.5 * (f(a) + f(b));
        for i in 1..m {
            s += f(a + h * i as f64);
        }
        total += s * h;
    }
    total
}

pub fn annulus_case_study(epsilon: f64, n: usize) -> Result<AnnulusReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("epsilon {epsilon} must be positive")));
    }
    if n < 1000 {
        return Err(Error::invalid(format!("quadrature resolution {n} below 1000")));
    }
    let pi = std::f64::consts::PI;
    let u0 = |r: f64| u_s(1.0, r);
    let f_integral = radial_integral(
        |r| {
            let f = f_profile(r);
            f - 0.5 * f * f
        },
        &[1.0],
        n,
    );
    let int_u0 = radial_integral(u0, &[1.0], n);
    let int_f = radial_integral(f_profile, &[1.0], n);
    let int_f2 = radial_integral(|r| f_profile(r).powi(2), &[1.0], n);
    let j_relaxed = -2.0 * pi * int_u0 - 2.0 * pi * epsilon * int_f + pi * epsilon * int_f2;
    let rhs = epsilon * f_integral;

    let s: Vec<f64> = (1..=ANNULUS_SAMPLES)
        .map(|i| 2.0 * i as f64 / (ANNULUS_SAMPLES + 1) as f64)
        .collect();
    let mut first = Vec::with_capacity(s.len());
    let mut lhs = Vec::with_capacity(s.len());
    let mut j_sets = Vec::with_capacity(s.len());
    for &si in &s {
        let i1 = radial_integral(|r| u_s(si, r) - u0(r), &[si, 1.0], n);
        let i2 = radial_integral(|r| (u_s(si, r) - u0(r)).powi(2), &[si, 1.0], n);
        let int_us = radial_integral(|r| u_s(si, r), &[si, 1.0], n);
        first.push(i1);
        lhs.push(i1 - i2 / (2.0 * epsilon));
        j_sets.push(-2.0 * pi * int_us + pi / epsilon * i2);
    }
    let first_integral_at_one = radial_integral(|r| u_s(1.0, r) - u0(r), &[1.0], n);
    let (imax, lhs_max) =
        lhs.iter().copied().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
        );
    let j_sets_min = j_sets.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(AnnulusReport {
        epsilon,
        quadrature_points: n,
        lhs_nonpositive: lhs.iter().all(|&v| v <= ANNULUS_ZERO),
        lhs_zero_only_near_one: s
            .iter()
            .zip(&lhs)
            .all(|(&si, &v)| (si - 1.0).abs() <= 1e-2 || v < -ANNULUS_ZERO),
        inequality_holds: lhs.iter().all(|&v| v < rhs),
        relaxation_at_first_step: j_relaxed < j_sets_min,
        lhs_argmax: s[imax],
        lhs_max,
        s,
        first_integral: first,
        lhs,
        rhs,
        f_integral,
        first_integral_at_one,
        j_relaxed,
        j_sets,
        j_sets_min,
    })
}
