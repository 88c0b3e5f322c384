//! Erosion flow for functionals that increase under inclusion.
//!
//! With the complementary Hausdorff distance every step minimizer is an
//! erosion `D \ (Ω_nᶜ + B̄_h)`, so a step reduces to the scalar problem
//! `min_h F̂(erode(Ω_n, h)) + h²/2ε`. On the grid the eroded set only changes
//! at the distinct distance values, so the map is increasing on each plateau
//! and its minimum sits at a plateau's left end.

use std::collections::HashMap;

use serde::Serialize;

use crate::capmeasure::FunctionalSpec;
use crate::error::{Error, Result};
use crate::grid::{component_count, distance_transform, erode_complement, measure_stats, DistanceTarget, ShapeMask};

use super::greedy::evaluate_mask;
use super::radial::golden_section;
use super::{detect_jumps, ShapeTrajectory, Strategy};

const BRACKET_SAMPLES: usize = 64;
const SNAP_NEIGHBOURS: usize = 3;

/// Scalar step problem on one state.
struct ErosionProblem<'a> {
    spec: &'a FunctionalSpec,
    mask: &'a ShapeMask,
    eps: f64,
    /// Sorted distinct distances of inside cells to the complement.
    breaks: Vec<f64>,
    /// Largest admissible `h` (the empty set is excluded for spectral kinds).
    h_max: f64,
    /// `F̂` per plateau: index `i` is the set `{dist > breaks[i-1]}`, `0` is the state.
    memo: HashMap<usize, f64>,
}

impl<'a> ErosionProblem<'a> {
    fn new(spec: &'a FunctionalSpec, mask: &'a ShapeMask, eps: f64) -> Result<Self> {
        let dist = distance_transform(mask, DistanceTarget::Complement)?;
        let mut breaks: Vec<f64> = mask.iter_inside().map(|k| dist.get(k)).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let h_max = if spec.is_spectral() {
            // the last break empties the set
            if breaks.len() >= 2 {
                breaks[breaks.len() - 2]
            } else {
                0.0
            }
        } else {
            breaks.last().copied().unwrap_or(0.0)
        };
        Ok(ErosionProblem {
            spec,
            mask,
            eps,
            breaks,
            h_max,
            memo: HashMap::new(),
        })
    }

    /// Plateau index of `h`: the number of breaks `≤ h`.
    fn plateau(&self, h: f64) -> usize {
        self.breaks.partition_point(|&b| b <= h)
    }

    fn plateau_left(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.breaks[i - 1]
        }
    }

    fn value(&mut self, h: f64) -> Result<f64> {
        let i = self.plateau(h);
        if let Some(v) = self.memo.get(&i) {
            return Ok(*v);
        }
        let m = erode_complement(self.mask, self.plateau_left(i))?;
        let v = evaluate_mask(&m, self.spec, None, false)?.value;
        self.memo.insert(i, v);
        Ok(v)
    }

    fn objective(&mut self, h: f64) -> Result<f64> {
        Ok(self.value(h)? + h * h / (2.0 * self.eps))
    }

    /// Coarse scan, golden section around the best sample, then the best
    /// plateau left end near the result.
    fn minimize(&mut self) -> Result<(f64, f64)> {
        let stay = self.objective(0.0)?;
        if self.h_max <= 0.0 {
            return Ok((0.0, stay));
        }
        let dh = self.h_max / BRACKET_SAMPLES as f64;
        let mut best = (0.0, stay);
        for i in 1..=BRACKET_SAMPLES {
            let h = dh * i as f64;
            let v = self.objective(h)?;
            if v < best.1 {
                best = (h, v);
            }
        }
        let lo = (best.0 - dh).max(0.0);
        let hi = (best.0 + dh).min(self.h_max);
        let (hg, _) = golden_section(lo, hi, |h| self.objective(h))?;
        let p = self.plateau(hg);
        let mut out = (0.0, stay);
        let first = p.saturating_sub(SNAP_NEIGHBOURS);
        for i in first..=p + SNAP_NEIGHBOURS {
            if i > self.breaks.len() {
                break;
            }
            let h = self.plateau_left(i);
            if h > self.h_max {
                break;
            }
            let v = self.objective(h)?;
            if v < out.1 {
                out = (h, v);
            }
        }
        if best.1 < out.1 {
            // a sampled point beat the local search: take its plateau's left end
            let h = self.plateau_left(self.plateau(best.0));
            out = (h, self.objective(h)?);
        }
        Ok(out)
    }
}

/// `h ↦ F̂(erode(Ω, h)) + h²/2ε` for brute-force comparisons.
pub fn hausdorff_objective(spec: &FunctionalSpec, mask: &ShapeMask, epsilon: f64, h: f64) -> Result<f64> {
    let m = erode_complement(mask, h)?;
    Ok(evaluate_mask(&m, spec, None, false)?.value + h * h / (2.0 * epsilon))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HausdorffStep {
    /// Erosion radius `h*`.
    pub radius: f64,
    /// Largest radius searched.
    pub radius_max: f64,
    pub objective: f64,
}

#[derive(Clone, Debug)]
pub struct HausdorffRun {
    /// States, values and step distances `h*`.
    pub trajectory: ShapeTrajectory,
    pub steps: Vec<HausdorffStep>,
    /// `f(t_n) = Σ h*`, so that `Ω_n = D \ (Ω₀ᶜ + B̄_{f(t_n)})` in the continuum.
    pub cumulative: Vec<f64>,
    /// Each state equals the erosion of its predecessor by `h*`, cell by cell.
    pub exact_erosions: bool,
}

/// Erosion flow `⌊T/ε⌋` steps from `omega0`.
pub fn hausdorff_flow_run(
    spec: &FunctionalSpec,
    omega0: &ShapeMask,
    epsilon: f64,
    horizon: f64,
) -> Result<HausdorffRun> {
    if !(epsilon > 0.0 && epsilon.is_finite() && horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::invalid(format!("epsilon {epsilon} and horizon {horizon}")));
    }
    spec.validate()?;
    if !spec.is_increasing() {
        return Err(Error::invalid(
            "the erosion flow needs a functional that increases under inclusion",
        ));
    }
    let eval0 = evaluate_mask(omega0, spec, None, true)?;
    let mut traj = ShapeTrajectory::new(epsilon, Strategy::Erosion, spec, omega0.clone(), eval0.value, None);
    let stats = measure_stats(omega0);
    traj.record(
        eval0.lambdas,
        stats.volume,
        stats.perimeter,
        component_count(omega0),
        None,
    );
    let mut steps = Vec::new();
    let mut cumulative = vec![0.0];
    let mut exact = true;
    let n = (horizon / epsilon + 1e-9).floor() as usize;
    for _ in 0..n {
        let cur = traj.flow.last().clone();
        let step = (|| {
            let mut prob = ErosionProblem::new(spec, &cur, epsilon)?;
            let (h, obj) = prob.minimize()?;
            let next = erode_complement(&cur, h)?;
            let eval = evaluate_mask(&next, spec, None, true)?;
            Ok::<_, Error>((h, obj, prob.h_max, next, eval))
        })();
        match step {
            Ok((h, obj, h_max, next, eval)) => {
                exact &= next == erode_complement(&cur, h)? && next.is_subset_of(&cur)?;
                let stats = measure_stats(&next);
                traj.flow.push(next.clone(), eval.value, h, None);
                traj.record(
                    eval.lambdas,
                    stats.volume,
                    stats.perimeter,
                    component_count(&next),
                    None,
                );
                steps.push(HausdorffStep {
                    radius: h,
                    radius_max: h_max,
                    objective: obj,
                });
                cumulative.push(cumulative.last().unwrap() + h);
            }
            Err(e) => {
                traj.flow.fail(&e);
                break;
            }
        }
    }
    traj.jumps = detect_jumps(&traj.lambda1_series(), &traj.flow.times);
    Ok(HausdorffRun {
        trajectory: traj,
        steps,
        cumulative,
        exact_erosions: exact,
    })
}
