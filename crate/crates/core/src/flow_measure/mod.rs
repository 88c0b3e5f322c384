//! Gradient flows of capacitary measures, run in torsion coordinates.
//!
//! A measure flow is the implicit Euler scheme for `J(w) = F(μ_w)` on the
//! convex set X with the `L²` distance, which is the `γ`-distance on the
//! measure side. Each step is a proximal problem solved by accelerated
//! projected gradient; the projection onto X is the workhorse.

mod annulus;
mod projection;
mod prox;

pub use annulus::{annulus_case_study, AnnulusReport, ANNULUS_SAMPLES, ANNULUS_ZERO};
pub use projection::{project_onto_x, ProjectionStats, Projector, PROJECTION_TOLERANCE};
pub use prox::{prox_step, prox_step_with, ProxStats, PROX_RELATIVE_TOLERANCE};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::capmeasure::{FunctionalSpec, TorsionField};
use crate::error::{Error, Result};
use crate::grid::ScalarGridField;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureFlowConfig {
    pub epsilon: f64,
    pub horizon: f64,
    pub functional: FunctionalSpec,
    #[serde(default = "default_projection_tolerance")]
    pub projection_tolerance: f64,
    /// Record local-slope estimates (costly: extra projections per step).
    #[serde(default)]
    pub diagnostics: bool,
    #[serde(default = "default_slope_samples")]
    pub slope_samples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_projection_tolerance() -> f64 {
    PROJECTION_TOLERANCE
}

fn default_slope_samples() -> usize {
    8
}

impl MeasureFlowConfig {
    pub fn new(functional: FunctionalSpec, epsilon: f64, horizon: f64) -> Self {
        MeasureFlowConfig {
            epsilon,
            horizon,
            functional,
            projection_tolerance: PROJECTION_TOLERANCE,
            diagnostics: false,
            slope_samples: default_slope_samples(),
            seed: 0,
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
        self.functional.validate()
    }

    /// `⌊T/ε⌋`, robust to representation error.
    pub fn steps(&self) -> usize {
        (self.horizon / self.epsilon + 1e-9).floor() as usize
    }
}

/// Per-step record `n → n + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    /// `d(u_n, u_{n+1})`.
    pub distance: f64,
    /// `d(u_n, u_{n+1}) / ε`.
    pub metric_derivative: f64,
    /// `J(u_{n+1}) + d²/2ε − J(u_n)`, nonpositive for an exact step.
    pub energy_residual: f64,
    /// Local slope lower bound at `u_{n+1}`, when requested.
    pub slope: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StepFailure {
    pub step: usize,
    pub message: String,
    pub solver: bool,
}

/// Discrete curve `u_ε(t) = w_{⌊t/ε⌋}`.
#[derive(Clone, Debug)]
pub struct FlowTrajectory<S> {
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub values: Vec<f64>,
    pub steps: Vec<StepRecord>,
    /// Set when the run stopped early; states up to the failure are kept.
    pub failure: Option<StepFailure>,
}

impl<S> FlowTrajectory<S> {
    pub(crate) fn start(epsilon: f64, state: S, value: f64) -> Self {
        FlowTrajectory {
            epsilon,
            times: vec![0.0],
            states: vec![state],
            values: vec![value],
            steps: Vec::new(),
            failure: None,
        }
    }

    pub(crate) fn push(&mut self, state: S, value: f64, distance: f64, slope: Option<f64>) {
        let n = self.states.len();
        let prev = *self.values.last().unwrap();
        self.times.push(n as f64 * self.epsilon);
        self.states.push(state);
        self.values.push(value);
        self.steps.push(StepRecord {
            distance,
            metric_derivative: distance / self.epsilon,
            energy_residual: value + distance * distance / (2.0 * self.epsilon) - prev,
            slope,
        });
    }

    pub(crate) fn fail(&mut self, err: &Error) {
        self.failure = Some(StepFailure {
            step: self.states.len(),
            message: err.to_string(),
            solver: err.is_solver_failure(),
        });
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &S {
        self.states.last().expect("trajectories start with a state")
    }

    pub fn max_energy_residual(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.energy_residual)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub type MeasureTrajectory = FlowTrajectory<TorsionField>;

/// Iterates the prox step `⌊T/ε⌋` times from `w0`.
pub fn run_measure_flow(config: &MeasureFlowConfig, w0: &TorsionField) -> Result<MeasureTrajectory> {
    config.validate()?;
    let spec = &config.functional;
    let mut projector = Projector::new(*w0.domain(), config.projection_tolerance)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut traj = FlowTrajectory::start(config.epsilon, w0.clone(), spec.evaluate(w0)?);
    for _ in 0..config.steps() {
        let step = prox_step_with(spec, traj.last(), config.epsilon, &mut projector).and_then(|(w, _)| {
            let value = spec.evaluate(&w)?;
            let dist = w.l2_distance(traj.last())?;
            let slope = if config.diagnostics {
                let radius = dist.max(1e-6);
                Some(slope_estimate(
                    spec,
                    &w,
                    radius,
                    config.slope_samples,
                    &mut rng,
                    &mut projector,
                )?)
            } else {
                None
            };
            Ok((w, value, dist, slope))
        });
        match step {
            Ok((w, value, dist, slope)) => traj.push(w, value, dist, slope),
            Err(e) => {
                traj.fail(&e);
                break;
            }
        }
    }
    Ok(traj)
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowDiagnostics {
    pub metric_derivative: Vec<f64>,
    pub energy_residuals: Vec<f64>,
    pub max_energy_residual: f64,
    /// `|−(J_{n+1} − J_n)/ε − (d/ε)²|` per step.
    pub slope_balance_defect: Vec<f64>,
    /// `d(u_n, v_n)` against the partner trajectory.
    pub partner_distances: Option<Vec<f64>>,
    /// `max_n d(u_n, v_n) − e^{−λ t_n} d(u_0, v_0)`, for `λ`-convex `J`.
    pub contraction_excess: Option<f64>,
    /// Same against the implicit Euler factor `(1 + λε)^{−n}`, the rate the
    /// discrete scheme itself guarantees (`None` if `1 + λε ≤ 0`).
    pub discrete_contraction_excess: Option<f64>,
}

/// Metric-theory diagnostics of a trajectory, optionally against a partner.
pub fn flow_diagnostics(
    traj: &MeasureTrajectory,
    spec: &FunctionalSpec,
    partner: Option<&MeasureTrajectory>,
) -> Result<FlowDiagnostics> {
    let eps = traj.epsilon;
    let mut out = FlowDiagnostics {
        metric_derivative: traj.steps.iter().map(|s| s.metric_derivative).collect(),
        energy_residuals: traj.steps.iter().map(|s| s.energy_residual).collect(),
        max_energy_residual: traj.max_energy_residual().max(0.0),
        slope_balance_defect: traj
            .steps
            .iter()
            .zip(traj.values.windows(2))
            .map(|(s, v)| (-(v[1] - v[0]) / eps - s.metric_derivative.powi(2)).abs())
            .collect(),
        partner_distances: None,
        contraction_excess: None,
        discrete_contraction_excess: None,
    };
    if traj.steps.is_empty() {
        out.max_energy_residual = 0.0;
    }
    if let Some(p) = partner {
        if p.len() != traj.len() || (p.epsilon - eps).abs() > 1e-15 * eps {
            return Err(Error::invalid(format!(
                "partner trajectory has {} states at step {}, expected {} at {}",
                p.len(),
                p.epsilon,
                traj.len(),
                eps
            )));
        }
        let dists = traj
            .states
            .iter()
            .zip(&p.states)
            .map(|(a, b)| a.l2_distance(b))
            .collect::<Result<Vec<_>>>()?;
        if let Some(lambda) = spec.convexity() {
            let d0 = dists[0];
            out.contraction_excess = Some(
                dists
                    .iter()
                    .zip(&traj.times)
                    .map(|(d, t)| d - (-lambda * t).exp() * d0)
                    .fold(f64::NEG_INFINITY, f64::max),
            );
            let base = 1.0 + lambda * eps;
            if base > 0.0 {
                out.discrete_contraction_excess = Some(
                    dists
                        .iter()
                        .enumerate()
                        .map(|(n, d)| d - base.powi(-(n as i32)) * d0)
                        .fold(f64::NEG_INFINITY, f64::max),
                );
            }
        }
        out.partner_distances = Some(dists);
    }
    Ok(out)
}

fn slope_estimate(
    spec: &FunctionalSpec,
    w: &TorsionField,
    radius: f64,
    samples: usize,
    rng: &mut ChaCha8Rng,
    projector: &mut Projector,
) -> Result<f64> {
    let d = *w.domain();
    let vol = d.cell_volume();
    let jw = spec.evaluate(w)?;
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(samples + 1);
    if spec.is_smooth() {
        dirs.push(spec.gradient(w.values())?.iter().map(|g| -g).collect());
    }
    for _ in 0..samples {
        dirs.push((0..d.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    let mut best: f64 = 0.0;
    for mut dir in dirs {
        for (k, x) in dir.iter_mut().enumerate() {
            if d.is_ring(k) {
                *x = 0.0;
            }
        }
        let norm = (dir.iter().map(|x| x * x).sum::<f64>() * vol).sqrt();
        if norm == 0.0 {
            continue;
        }
        let v: Vec<f64> = w
            .values()
            .iter()
            .zip(&dir)
            .map(|(a, b)| a + radius * b / norm)
            .collect();
        let pv = projector.project(&ScalarGridField::new(d, v)?)?;
        let dist = pv.l2_distance(w)?;
        if dist > 0.0 {
            best = best.max((jw - spec.evaluate(&pv)?).max(0.0) / dist);
        }
    }
    Ok(best)
}

/// Lower bound on the local slope `|∂J|(w)` from feasible points within
/// `radius`: projections of random perturbations and of the steepest
/// descent direction.
pub fn local_slope_estimate(
    spec: &FunctionalSpec,
    w: &TorsionField,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("slope radius {radius} must be positive")));
    }
    let mut projector = Projector::new(*w.domain(), PROJECTION_TOLERANCE)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    slope_estimate(spec, w, radius, samples, &mut rng, &mut projector)
}
