//! Minimizing movements of sets.
//!
//! The incremental problem `min F̂(M) + |M Δ M_n|² / 2ε` over supersets of
//! `M_n` is solved either exactly on families of concentric shells or by a
//! greedy descent on grid masks. The erosion flow for functionals that
//! increase under inclusion and the square perturbation study live in
//! submodules.

mod greedy;
mod hausdorff;
mod radial;
mod square;
#[cfg(test)]
mod tests;

pub use greedy::{GreedyParams, GreedyStep, ShapeEvaluation};
pub use hausdorff::{hausdorff_flow_run, hausdorff_objective, HausdorffRun, HausdorffStep};
pub use radial::{
    ball_flow_reference, ball_flow_rhs, unit_ball_lambda1, unit_ball_volume, RadialShape, RadialStep, GOLDEN_TOLERANCE,
    RADIAL_RESOLUTION,
};
pub use square::{square_perturbation_study, BoundaryDensity, SquareCandidate, SquareStudyReport};

use serde::{Deserialize, Serialize};

use crate::capmeasure::{FunctionalKind, FunctionalSpec, SpectralPhi};
use crate::error::{Error, Result};
use crate::flow_measure::FlowTrajectory;
use crate::grid::{component_count, measure_stats, GridDomain, ShapeMask};
use crate::pde::boundary_normal_derivative;

use greedy::{evaluate_mask, greedy_step};
use radial::{radial_step, RadialEvaluator};

/// Relative eigenvalue accuracy used to separate jumps from solver noise.
pub const JUMP_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Exact search over concentric shells.
    Radial,
    /// Hadamard-ranked batch growth on grid masks.
    #[default]
    Greedy,
    /// Erosions of the previous state (functionals increasing under
    /// inclusion, complementary Hausdorff distance).
    Erosion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeFlowConfig {
    pub epsilon: f64,
    pub horizon: f64,
    /// Must decrease under inclusion; volume and perimeter penalties are
    /// part of the spec.
    pub functional: FunctionalSpec,
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default)]
    pub greedy: GreedyParams,
    /// Largest radius the radial strategy may reach; defaults to the
    /// inradius of the grid domain at the center.
    #[serde(default)]
    pub radial_bound: Option<f64>,
}

impl ShapeFlowConfig {
    pub fn new(functional: FunctionalSpec, epsilon: f64, horizon: f64, strategy: Strategy) -> Self {
        ShapeFlowConfig {
            epsilon,
            horizon,
            functional,
            strategy,
            greedy: GreedyParams::default(),
            radial_bound: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon {} must be positive", self.epsilon)));
        }
        if !(self.horizon >= self.epsilon && self.horizon.is_finite()) {
            return Err(Error::invalid(format!(
                "horizon {} must be finite and at least epsilon",
                self.horizon
            )));
        }
        self.functional.validate()?;
        if !self.functional.is_decreasing() {
            return Err(Error::invalid(
                "set flows need a functional that decreases under inclusion",
            ));
        }
        let p = self.functional.penalties;
        if p.volume < 0.0 || p.perimeter < 0.0 {
            return Err(Error::invalid("penalty coefficients must be nonnegative"));
        }
        if let Some(r) = self.radial_bound {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!("radial bound {r} must be positive")));
            }
        }
        self.greedy.validate()
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.epsilon + 1e-9).floor() as usize
    }
}

/// Starting shape: a grid mask, or an exact radial shape with the grid used
/// for exported masks.
#[derive(Clone, Debug)]
pub enum ShapeStart {
    Mask(ShapeMask),
    Radial { shape: RadialShape, domain: GridDomain },
}

impl From<ShapeMask> for ShapeStart {
    fn from(m: ShapeMask) -> Self {
        ShapeStart::Mask(m)
    }
}

/// A discontinuity of the `λ₁` series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Jump {
    /// Index of the state after the jump.
    pub state: usize,
    pub time: f64,
    pub before: f64,
    pub after: f64,
}

/// Post hoc checks of the structural properties of a set flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ShapeInvariants {
    /// States form a chain under inclusion.
    pub chain: bool,
    /// Not a property of erosion flows, which may split components.
    pub components_nonincreasing: bool,
    /// Every step satisfies `F̂(new) + d²/2ε ≤ F̂(old) + 1e-10`.
    pub energy: bool,
}

impl ShapeInvariants {
    pub fn all(&self) -> bool {
        self.chain && self.components_nonincreasing && self.energy
    }
}

#[derive(Clone, Debug)]
pub struct ShapeTrajectory {
    /// Grid states (rasterized for the radial strategy), `F̂` values and
    /// per-step distances `|M_{n+1} Δ M_n|`.
    pub flow: FlowTrajectory<ShapeMask>,
    pub strategy: Strategy,
    /// Computed eigenvalues per state (`λ₁` at least).
    pub lambdas: Vec<Vec<f64>>,
    pub volumes: Vec<f64>,
    pub perimeters: Vec<f64>,
    pub components: Vec<usize>,
    /// Exact states of the radial strategy.
    pub radial: Option<Vec<RadialShape>>,
    pub jumps: Vec<Jump>,
    /// Set when penalties are active: the superset restriction is then a
    /// modelling choice rather than a property of the minimizers.
    pub superset_restriction_with_penalty: bool,
    /// `max |∂u₁/∂n|²` per state, when available.
    pub max_normal_derivative_sq: Vec<Option<f64>>,
}

impl ShapeTrajectory {
    fn new(
        epsilon: f64,
        strategy: Strategy,
        spec: &FunctionalSpec,
        mask: ShapeMask,
        value: f64,
        radial: Option<RadialShape>,
    ) -> Self {
        ShapeTrajectory {
            flow: FlowTrajectory::start(epsilon, mask, value),
            strategy,
            lambdas: Vec::new(),
            volumes: Vec::new(),
            perimeters: Vec::new(),
            components: Vec::new(),
            radial: radial.map(|r| vec![r]),
            jumps: Vec::new(),
            superset_restriction_with_penalty: !spec.penalties.is_zero(),
            max_normal_derivative_sq: Vec::new(),
        }
    }

    fn record(&mut self, lambdas: Vec<f64>, volume: f64, perimeter: f64, components: usize, slope: Option<f64>) {
        self.lambdas.push(lambdas);
        self.volumes.push(volume);
        self.perimeters.push(perimeter);
        self.components.push(components);
        self.max_normal_derivative_sq.push(slope);
    }

    pub fn len(&self) -> usize {
        self.flow.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flow.is_empty()
    }

    pub fn lambda1_series(&self) -> Vec<f64> {
        self.lambdas
            .iter()
            .map(|l| l.first().copied().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn invariants(&self) -> Result<ShapeInvariants> {
        // erosion flows shrink; every other strategy grows
        let shrinking = self.strategy == Strategy::Erosion;
        let mut chain = true;
        for w in self.flow.states.windows(2) {
            chain &= if shrinking {
                w[1].is_subset_of(&w[0])?
            } else {
                w[0].is_subset_of(&w[1])?
            };
        }
        if let Some(r) = &self.radial {
            chain &= r.windows(2).all(|w| radial_subset(&w[0], &w[1]));
        }
        Ok(ShapeInvariants {
            chain,
            components_nonincreasing: shrinking || self.components.windows(2).all(|w| w[1] <= w[0]),
            energy: self.flow.steps.iter().all(|s| s.energy_residual <= 1e-10),
        })
    }

    fn finish(&mut self) {
        self.jumps = detect_jumps(&self.lambda1_series(), &self.flow.times);
    }
}

fn radial_subset(a: &RadialShape, b: &RadialShape) -> bool {
    a.shells
        .iter()
        .all(|&(lo, hi)| b.shells.iter().any(|&(blo, bhi)| blo <= lo && hi <= bhi))
}

/// Jumps of a `λ₁` series: steps whose change exceeds the solver noise and
/// dominates both neighbouring changes fourfold.
pub fn detect_jumps(lambda: &[f64], times: &[f64]) -> Vec<Jump> {
    let deltas: Vec<f64> = lambda.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let mut jumps = Vec::new();
    for (i, &dl) in deltas.iter().enumerate() {
        if !dl.is_finite() {
            continue;
        }
        let scale = 1.0 + lambda[i].abs().max(lambda[i + 1].abs());
        let prev = if i > 0 { deltas[i - 1] } else { 0.0 };
        let next = deltas.get(i + 1).copied().unwrap_or(0.0);
        if dl > 10.0 * JUMP_TOLERANCE * scale && dl > 4.0 * prev.max(next) {
            jumps.push(Jump {
                state: i + 1,
                time: times.get(i + 1).copied().unwrap_or(f64::NAN),
                before: lambda[i],
                after: lambda[i + 1],
            });
        }
    }
    jumps
}

/// `F̂(M)`: the functional on the mask plus its penalties.
pub fn evaluate_shape_functional(mask: &ShapeMask, spec: &FunctionalSpec) -> Result<f64> {
    Ok(evaluate_mask(mask, spec, None, false)?.value)
}

/// One greedy step of the incremental scheme from `mn`.
pub fn mm_step_shape(spec: &FunctionalSpec, mn: &ShapeMask, epsilon: f64, params: &GreedyParams) -> Result<GreedyStep> {
    check_step(spec, epsilon)?;
    params.validate()?;
    let base = evaluate_mask(mn, spec, None, false)?;
    greedy_step(spec, mn, &base, epsilon, params)
}

/// One exact step on the radial family of `shape`, radii capped at `r_max`.
pub fn mm_step_radial(spec: &FunctionalSpec, shape: &RadialShape, epsilon: f64, r_max: f64) -> Result<RadialStep> {
    check_step(spec, epsilon)?;
    radial_step(&mut RadialEvaluator::default(), spec, shape, epsilon, r_max)
}

fn check_step(spec: &FunctionalSpec, epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon {epsilon} must be positive")));
    }
    if !spec.is_decreasing() {
        return Err(Error::invalid(
            "set flows need a functional that decreases under inclusion",
        ));
    }
    Ok(())
}

fn is_first_eigenvalue(spec: &FunctionalSpec) -> bool {
    matches!(
        spec.kind,
        FunctionalKind::Spectral {
            k: 1,
            phi: SpectralPhi::LambdaK | SpectralPhi::Sum
        }
    )
}

/// Iterates the incremental scheme `⌊T/ε⌋` times.
pub fn run_shape_flow(config: &ShapeFlowConfig, start: impl Into<ShapeStart>) -> Result<ShapeTrajectory> {
    config.validate()?;
    match (config.strategy, start.into()) {
        (Strategy::Greedy, ShapeStart::Mask(m)) => run_greedy(config, m),
        (Strategy::Greedy, ShapeStart::Radial { shape, domain }) => run_greedy(config, shape.rasterize(&domain)?),
        (Strategy::Radial, ShapeStart::Radial { shape, domain }) => run_radial(config, shape, domain),
        (Strategy::Radial, ShapeStart::Mask(_)) => Err(Error::invalid(
            "the radial strategy needs an exact radial starting shape",
        )),
        (Strategy::Erosion, _) => Err(Error::invalid(
            "erosion flows run through hausdorff_flow_run with an increasing functional",
        )),
    }
}

fn mask_record(
    traj: &mut ShapeTrajectory,
    mask: &ShapeMask,
    eval: &ShapeEvaluation,
    spec: &FunctionalSpec,
) -> Result<()> {
    let stats = measure_stats(mask);
    let slope = if is_first_eigenvalue(spec) && !mask.is_empty() {
        let u = &eval.potentials[0];
        let faces = boundary_normal_derivative(u, mask)?;
        faces.iter().map(|f| f.value * f.value).reduce(f64::max)
    } else {
        None
    };
    traj.record(
        eval.lambdas.clone(),
        stats.volume,
        stats.perimeter,
        component_count(mask),
        slope,
    );
    Ok(())
}

fn with_lambda(mask: &ShapeMask, mut eval: ShapeEvaluation) -> Result<ShapeEvaluation> {
    if eval.lambdas.is_empty() {
        eval.lambdas = evaluate_mask(mask, &FunctionalSpec::zero(), None, true)?.lambdas;
    }
    Ok(eval)
}

fn run_greedy(config: &ShapeFlowConfig, m0: ShapeMask) -> Result<ShapeTrajectory> {
    let spec = &config.functional;
    let eval0 = evaluate_mask(&m0, spec, None, true)?;
    let mut traj = ShapeTrajectory::new(config.epsilon, Strategy::Greedy, spec, m0.clone(), eval0.value, None);
    mask_record(&mut traj, &m0, &eval0, spec)?;
    let mut cur_eval = eval0;
    for _ in 0..config.steps() {
        let step = greedy_step(spec, traj.flow.last(), &cur_eval, config.epsilon, &config.greedy).and_then(|s| {
            let eval = with_lambda(&s.mask, s.evaluation)?;
            Ok((s.mask, eval, s.distance))
        });
        match step {
            Ok((mask, eval, distance)) => {
                traj.flow.push(mask.clone(), eval.value, distance, None);
                mask_record(&mut traj, &mask, &eval, spec)?;
                cur_eval = eval;
            }
            Err(e) => {
                traj.flow.fail(&e);
                break;
            }
        }
    }
    traj.finish();
    Ok(traj)
}

fn run_radial(config: &ShapeFlowConfig, shape: RadialShape, domain: GridDomain) -> Result<ShapeTrajectory> {
    let spec = &config.functional;
    if shape.dim() != domain.dim() {
        return Err(Error::invalid("radial shape and domain dimensions differ"));
    }
    let r_max = match config.radial_bound {
        Some(r) => r,
        None => {
            let mut c = [0.0; 2];
            c[..shape.dim()].copy_from_slice(&shape.center);
            domain.inradius_at(c)
        }
    };
    if shape.outer_radius() > r_max {
        return Err(Error::DomainViolation(format!(
            "radius {} exceeds the bound {r_max}",
            shape.outer_radius()
        )));
    }
    let mut eval = RadialEvaluator::default();
    let v0 = eval.evaluate(spec, &shape)?;
    let mut traj = ShapeTrajectory::new(
        config.epsilon,
        Strategy::Radial,
        spec,
        shape.rasterize(&domain)?,
        v0,
        Some(shape.clone()),
    );
    radial_record(&mut traj, &mut eval, &shape)?;
    let mut cur = shape;
    for _ in 0..config.steps() {
        let step = radial_step(&mut eval, spec, &cur, config.epsilon, r_max)
            .and_then(|s| Ok((s.shape.rasterize(&domain)?, s)));
        match step {
            Ok((mask, s)) => {
                traj.flow.push(mask, s.value, s.distance, None);
                radial_record(&mut traj, &mut eval, &s.shape)?;
                if let Some(r) = traj.radial.as_mut() {
                    r.push(s.shape.clone());
                }
                cur = s.shape;
            }
            Err(e) => {
                traj.flow.fail(&e);
                break;
            }
        }
    }
    traj.finish();
    Ok(traj)
}

fn radial_record(traj: &mut ShapeTrajectory, eval: &mut RadialEvaluator, shape: &RadialShape) -> Result<()> {
    let lambda = eval.lambda1(shape)?;
    // on a ball, |∂u₁/∂n|² is constant and Rellich's identity gives it
    let slope = match shape.shells.as_slice() {
        [(a, r)] if *a == 0.0 => {
            let d = shape.dim() as f64;
            Some(2.0 * lambda / (d * unit_ball_volume(shape.dim()) * r.powi(shape.dim() as i32)))
        }
        _ => None,
    };
    traj.record(
        vec![lambda],
        shape.volume(),
        shape.perimeter(),
        shape.components(),
        slope,
    );
    Ok(())
}
