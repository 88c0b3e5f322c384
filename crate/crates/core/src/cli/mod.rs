//! Configuration-driven front end: one JSON config per run, artifacts in an
//! output directory, and an exit status.
//!
//! Every config carries `"schema": 1` and a `"command"` tag; unknown keys are
//! rejected. Each run writes `summary.json` echoing the resolved config and
//! the table of numerical defaults, plus command-specific CSV, PGM and raw
//! files. Output is deterministic for a given config and seed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::capmeasure::{gamma_distance, ordering_threshold, remark_case_ordering, FunctionalSpec, TorsionField};
use crate::error::{Error, Result};
use crate::flow_measure::{
    annulus_case_study, flow_diagnostics, project_onto_x, run_measure_flow, MeasureFlowConfig, MeasureTrajectory,
    ANNULUS_SAMPLES, PROJECTION_TOLERANCE, PROX_RELATIVE_TOLERANCE,
};
use crate::flow_shape::{
    ball_flow_reference, run_shape_flow, square_perturbation_study, unit_ball_lambda1, BoundaryDensity, GreedyParams,
    RadialShape, ShapeFlowConfig, ShapeStart, ShapeTrajectory, Strategy, GOLDEN_TOLERANCE, JUMP_TOLERANCE,
    RADIAL_RESOLUTION,
};
use crate::grid::{rasterize, set_distances, GridDomain, Primitive};
use crate::io::{field_to_raw, mask_to_pgm, write_file, MaskDescriptor};
use crate::pde::{torsion, Coefficient, EigenOptions, CG_MAX_ITERATIONS, CG_TOLERANCE, TORSION_TOLERANCE};

pub const SCHEMA_VERSION: u64 = 1;

/// Process exit statuses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Success,
    Validation,
    Solver,
    Invariant,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::Validation => 2,
            ExitStatus::Solver => 3,
            ExitStatus::Invariant => 4,
        }
    }

    /// Status for an error that aborted a run.
    pub fn of_error(e: &Error) -> Self {
        match e {
            Error::IterationLimit { .. } => ExitStatus::Solver,
            Error::Invariant(_) => ExitStatus::Invariant,
            _ => ExitStatus::Validation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    MeasureFlow(MeasureFlowRun),
    ShapeFlow(ShapeFlowRun),
    BallBenchmark(BallBenchmarkRun),
    AnnulusCase(AnnulusRun),
    SquareCase(SquareRun),
    Remark32Case(Remark32Run),
    Distance(DistanceRun),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::MeasureFlow(_) => "measure-flow",
            Command::ShapeFlow(_) => "shape-flow",
            Command::BallBenchmark(_) => "ball-benchmark",
            Command::AnnulusCase(_) => "annulus-case",
            Command::SquareCase(_) => "square-case",
            Command::Remark32Case(_) => "remark32-case",
            Command::Distance(_) => "distance",
        }
    }

    pub const NAMES: [&'static str; 7] = [
        "measure-flow",
        "shape-flow",
        "ball-benchmark",
        "annulus-case",
        "square-case",
        "remark32-case",
        "distance",
    ];
}

fn one() -> f64 {
    1.0
}

fn every() -> usize {
    1
}

/// Measure flow from the torsion function of a shape, scaled and projected
/// into X, optionally with a partner flow for contraction diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureFlowRun {
    pub domain: GridDomain,
    pub initial: Primitive,
    #[serde(default = "one")]
    pub initial_scale: f64,
    /// Scale of a second starting point run alongside.
    #[serde(default)]
    pub partner_scale: Option<f64>,
    pub flow: MeasureFlowConfig,
    /// Write every `k`-th state as a raw block.
    #[serde(default = "every")]
    pub export_every: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeFlowRun {
    pub domain: GridDomain,
    pub initial: Primitive,
    pub flow: ShapeFlowConfig,
    #[serde(default = "every")]
    pub export_every: usize,
}

fn default_dim() -> usize {
    2
}

fn default_export_cells() -> usize {
    64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallBenchmarkRun {
    #[serde(default = "one")]
    pub r0: f64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub epsilon: f64,
    pub horizon: f64,
    /// Radius of the design region `D = B(0, bound)`; defaults to `2 R₀`.
    #[serde(default)]
    pub bound: Option<f64>,
    /// Cells per axis of the grid used for exported masks.
    #[serde(default = "default_export_cells")]
    pub export_cells: usize,
}

fn default_quadrature() -> usize {
    10_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnulusRun {
    pub epsilon: f64,
    #[serde(default = "default_quadrature")]
    pub quadrature: usize,
}

fn default_square_intervals() -> usize {
    128
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedDensity {
    pub name: String,
    pub density: BoundaryDensity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SquareRun {
    pub epsilon: f64,
    #[serde(default = "default_square_intervals")]
    pub intervals: usize,
    /// Defaults to uniform, side-midpoint bump and corner bump.
    #[serde(default)]
    pub candidates: Option<Vec<NamedDensity>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSearch {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Remark32Run {
    pub domain: GridDomain,
    /// Outer radius `R` of the second measure.
    pub radius: f64,
    #[serde(default)]
    pub threshold: Option<ThresholdSearch>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceRun {
    pub domain: GridDomain,
    pub a: Primitive,
    pub b: Primitive,
}

/// A parsed, versioned run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
}

impl RunConfig {
    /// Parses a config. `expected` is the command named on the command line;
    /// the config may omit its `command` tag but must not contradict it.
    pub fn parse(text: &str, expected: Option<&str>) -> Result<Self> {
        let mut v: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let obj = v
            .as_object_mut()
            .ok_or_else(|| Error::Config("config must be a JSON object".into()))?;
        match obj.remove("schema") {
            Some(Value::Number(n)) if n.as_u64() == Some(SCHEMA_VERSION) => {}
            Some(other) => {
                return Err(Error::Config(format!(
                    "unsupported schema {other}, expected {SCHEMA_VERSION}"
                )))
            }
            None => return Err(Error::Config("missing \"schema\" field".into())),
        }
        if let Some(cmd) = expected {
            if !Command::NAMES.contains(&cmd) {
                return Err(Error::Config(format!("unknown command {cmd:?}")));
            }
            match obj.get("command") {
                None => {
                    obj.insert("command".into(), Value::String(cmd.into()));
                }
                Some(Value::String(c)) if c == cmd => {}
                Some(c) => return Err(Error::Config(format!("config is for command {c}, invoked as {cmd:?}"))),
            }
        }
        let command: Command = serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))?;
        let cfg = RunConfig { command };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64, what: &str| -> Result<()> {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} must be positive, got {x}")))
            }
        };
        match &self.command {
            Command::MeasureFlow(r) => {
                r.flow.validate()?;
                positive(r.initial_scale, "initial_scale")?;
                if let Some(s) = r.partner_scale {
                    positive(s, "partner_scale")?;
                }
                if r.export_every == 0 {
                    return Err(Error::Config("export_every must be positive".into()));
                }
                rasterize(&r.initial, &r.domain).map(|_| ())
            }
            Command::ShapeFlow(r) => {
                r.flow.validate()?;
                if r.export_every == 0 {
                    return Err(Error::Config("export_every must be positive".into()));
                }
                if r.flow.strategy == Strategy::Radial && RadialShape::from_primitive(&r.initial).is_none() {
                    return Err(Error::Config(
                        "the radial strategy needs a ball, annulus or concentric union".into(),
                    ));
                }
                rasterize(&r.initial, &r.domain).map(|_| ())
            }
            Command::BallBenchmark(r) => {
                positive(r.r0, "r0")?;
                positive(r.epsilon, "epsilon")?;
                if !(r.horizon >= r.epsilon && r.horizon.is_finite()) {
                    return Err(Error::Config("horizon must be finite and at least epsilon".into()));
                }
                if !(1..=2).contains(&r.dim) {
                    return Err(Error::Config(format!("dim must be 1 or 2, got {}", r.dim)));
                }
                if let Some(b) = r.bound {
                    if !(b > r.r0) {
                        return Err(Error::Config("bound must exceed r0".into()));
                    }
                }
                if r.export_cells < 3 {
                    return Err(Error::Config("export_cells must be at least 3".into()));
                }
                Ok(())
            }
            Command::AnnulusCase(r) => {
                positive(r.epsilon, "epsilon")?;
                if r.quadrature < 100 {
                    return Err(Error::Config("quadrature must be at least 100".into()));
                }
                Ok(())
            }
            Command::SquareCase(r) => {
                positive(r.epsilon, "epsilon")?;
                if r.intervals < 4 {
                    return Err(Error::Config("intervals must be at least 4".into()));
                }
                if matches!(&r.candidates, Some(c) if c.is_empty()) {
                    return Err(Error::Config("candidate list is empty".into()));
                }
                Ok(())
            }
            Command::Remark32Case(r) => {
                if r.domain.dim() != 2 {
                    return Err(Error::Config("remark32-case needs a 2D domain".into()));
                }
                if let Some(t) = &r.threshold {
                    if !(t.lo < t.hi && t.tol > 0.0) {
                        return Err(Error::Config("threshold search needs lo < hi and tol > 0".into()));
                    }
                }
                Ok(())
            }
            Command::Distance(r) => {
                rasterize(&r.a, &r.domain)?;
                rasterize(&r.b, &r.domain).map(|_| ())
            }
        }
    }

    /// The resolved config, defaults filled in.
    pub fn resolved(&self) -> Value {
        let mut v = serde_json::to_value(&self.command).expect("configs serialize");
        if let Some(o) = v.as_object_mut() {
            o.insert("schema".into(), json!(SCHEMA_VERSION));
        }
        v
    }
}

/// Numerical defaults shared by every command.
pub fn defaults_table() -> Value {
    let eig = EigenOptions::default();
    let g = GreedyParams::default();
    json!([
        {"name": "cg_tolerance", "value": CG_TOLERANCE, "meaning": "relative residual of linear solves"},
        {"name": "cg_max_iterations", "value": CG_MAX_ITERATIONS, "meaning": "iteration cap of linear solves"},
        {"name": "torsion_tolerance", "value": TORSION_TOLERANCE, "meaning": "relative residual of torsion solves"},
        {"name": "eigen_tolerance", "value": eig.tolerance, "meaning": "relative eigen-residual"},
        {"name": "eigen_guard_vectors", "value": eig.extra, "meaning": "extra block vectors in inverse iteration"},
        {"name": "projection_tolerance", "value": PROJECTION_TOLERANCE, "meaning": "KKT residual of the projection onto X"},
        {"name": "prox_relative_tolerance", "value": PROX_RELATIVE_TOLERANCE, "meaning": "gradient-mapping norm of prox steps"},
        {"name": "radial_resolution", "value": RADIAL_RESOLUTION, "meaning": "radial cells of reference solves"},
        {"name": "golden_tolerance", "value": GOLDEN_TOLERANCE, "meaning": "relative bracket width of golden-section searches"},
        {"name": "jump_tolerance", "value": JUMP_TOLERANCE, "meaning": "relative eigenvalue noise below which no jump is reported"},
        {"name": "greedy_batch_size", "value": g.batch_size, "meaning": "initial greedy batch"},
        {"name": "greedy_ring_width", "value": g.ring_width, "meaning": "candidate band thickness in cells"},
        {"name": "greedy_scan_limit", "value": g.scan_limit, "meaning": "single cells tried after batches fail"},
        {"name": "annulus_samples", "value": ANNULUS_SAMPLES, "meaning": "s samples of the annulus study"},
        {"name": "energy_inequality_slack", "value": 1e-10, "meaning": "allowed excess in F(new) + d^2/2eps <= F(old)"},
        {"name": "monotonicity_slack", "value": 1e-8, "meaning": "allowed decrease of w between measure-flow steps"}
    ])
}

/// Result of one run.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub status: ExitStatus,
    pub summary: Value,
    pub files: Vec<PathBuf>,
}

struct Artifacts {
    out: PathBuf,
    files: Vec<PathBuf>,
}

impl Artifacts {
    fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let p = self.out.join(name);
        write_file(&p, bytes)?;
        self.files.push(p);
        Ok(())
    }
}

/// Runs a config, writing artifacts into `out`. `seed` overrides the seed
/// of randomized probes.
pub fn execute(config: &RunConfig, out: &Path, seed: Option<u64>) -> Result<Outcome> {
    let mut art = Artifacts {
        out: out.to_path_buf(),
        files: Vec::new(),
    };
    let mut command = config.command.clone();
    if let (Some(s), Command::MeasureFlow(r)) = (seed, &mut command) {
        r.flow.seed = s;
    }
    let resolved = RunConfig {
        command: command.clone(),
    };
    let (status, report) = match &command {
        Command::MeasureFlow(r) => measure_flow(r, &mut art)?,
        Command::ShapeFlow(r) => shape_flow(r, &mut art)?,
        Command::BallBenchmark(r) => ball_benchmark(r, &mut art)?,
        Command::AnnulusCase(r) => {
            let rep = annulus_case_study(r.epsilon, r.quadrature)?;
            (ExitStatus::Success, serde_json::to_value(&rep)?)
        }
        Command::SquareCase(r) => square_case(r, &mut art)?,
        Command::Remark32Case(r) => {
            let rep = remark_case_ordering(&r.domain, r.radius)?;
            let threshold = match &r.threshold {
                Some(t) => ordering_threshold(&r.domain, t.lo, t.hi, t.tol)?,
                None => None,
            };
            (ExitStatus::Success, json!({"ordering": rep, "threshold": threshold}))
        }
        Command::Distance(r) => {
            let a = rasterize(&r.a, &r.domain)?;
            let b = rasterize(&r.b, &r.domain)?;
            let sd = set_distances(&a, &b)?;
            let gamma = gamma_distance(Coefficient::Mask(&a), Coefficient::Mask(&b))?;
            (ExitStatus::Success, json!({"distances": sd, "gamma": gamma}))
        }
    };
    let summary = json!({
        "command": command.name(),
        "status": status,
        "exit_code": status.code(),
        "config": resolved.resolved(),
        "defaults": defaults_table(),
        "report": report,
    });
    art.write("summary.json", serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(Outcome {
        status,
        summary,
        files: art.files,
    })
}

fn initial_torsion(domain: &GridDomain, p: &Primitive, scale: f64) -> Result<TorsionField> {
    let mask = rasterize(p, domain)?;
    let w = torsion(Coefficient::Mask(&mask))?;
    let scaled = w.field().map(|x| scale * x)?;
    project_onto_x(&scaled, PROJECTION_TOLERANCE)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn measure_csv(traj: &MeasureTrajectory) -> String {
    let mut s = String::from("n,t,J,step_distance,metric_derivative,energy_residual,slope_estimate\n");
    for n in 0..traj.len() {
        let _ = write!(s, "{n},{},{}", traj.times[n], traj.values[n]);
        match n.checked_sub(1).map(|i| traj.steps[i]) {
            Some(st) => {
                let _ = writeln!(
                    s,
                    ",{},{},{},{}",
                    st.distance,
                    st.metric_derivative,
                    st.energy_residual,
                    opt(st.slope)
                );
            }
            None => s.push_str(",,,,\n"),
        }
    }
    s
}

fn failure_status(failure: bool, invariants_ok: bool) -> ExitStatus {
    if failure {
        ExitStatus::Solver
    } else if !invariants_ok {
        ExitStatus::Invariant
    } else {
        ExitStatus::Success
    }
}

fn measure_flow(r: &MeasureFlowRun, art: &mut Artifacts) -> Result<(ExitStatus, Value)> {
    let w0 = initial_torsion(&r.domain, &r.initial, r.initial_scale)?;
    let traj = run_measure_flow(&r.flow, &w0)?;
    let partner = match r.partner_scale {
        Some(s) => Some(run_measure_flow(&r.flow, &initial_torsion(&r.domain, &r.initial, s)?)?),
        None => None,
    };
    let diag = flow_diagnostics(&traj, &r.flow.functional, partner.as_ref())?;
    art.write("trajectory.csv", measure_csv(&traj))?;
    for (n, w) in traj.states.iter().enumerate() {
        if n % r.export_every == 0 || n + 1 == traj.len() {
            art.write(&format!("states/w_{n:05}.raw"), field_to_raw(w.field()))?;
        }
    }
    let energy = traj.steps.iter().all(|s| s.energy_residual <= 1e-10);
    let min_increment = traj
        .states
        .windows(2)
        .flat_map(|w| {
            w[1].values()
                .iter()
                .zip(w[0].values())
                .map(|(b, a)| b - a)
                .collect::<Vec<_>>()
        })
        .fold(f64::INFINITY, f64::min);
    let monotone = !r.flow.functional.is_decreasing() || traj.len() < 2 || min_increment >= -1e-8;
    let in_x = traj.states.iter().map(|w| w.x_violation()).fold(0.0, f64::max);
    let failure = traj.failure.is_some() || partner.as_ref().is_some_and(|p| p.failure.is_some());
    let ok = energy && monotone;
    Ok((
        failure_status(failure, ok),
        json!({
            "steps": traj.steps.len(),
            "failure": traj.failure,
            "partner_failure": partner.as_ref().and_then(|p| p.failure.clone()),
            "final_value": traj.values.last(),
            "diagnostics": diag,
            "invariants": {
                "energy_inequality": energy,
                "monotone_torsions": monotone,
                "min_torsion_increment": if min_increment.is_finite() { Some(min_increment) } else { None },
                "max_x_violation": in_x,
            },
        }),
    ))
}

fn shape_csv(t: &ShapeTrajectory) -> String {
    let k = t.lambdas.iter().map(Vec::len).max().unwrap_or(0);
    let mut s = String::from("n,t");
    for i in 1..=k {
        let _ = write!(s, ",lambda_{i}");
    }
    s.push_str(",volume,perimeter,step_sym_diff,objective\n");
    for n in 0..t.len() {
        let _ = write!(s, "{n},{}", t.flow.times[n]);
        for i in 0..k {
            let _ = write!(
                s,
                ",{}",
                t.lambdas[n].get(i).map_or_else(String::new, |v| v.to_string())
            );
        }
        let dist = n.checked_sub(1).map(|i| t.flow.steps[i].distance);
        let _ = writeln!(
            s,
            ",{},{},{},{}",
            t.volumes[n],
            t.perimeters[n],
            opt(dist),
            t.flow.values[n]
        );
    }
    s
}

fn shape_report(t: &ShapeTrajectory) -> Result<(bool, Value)> {
    let inv = t.invariants()?;
    Ok((
        inv.all(),
        json!({
            "strategy": t.strategy,
            "steps": t.flow.steps.len(),
            "failure": t.flow.failure,
            "jumps": t.jumps,
            "superset_restriction_with_penalty": t.superset_restriction_with_penalty,
            "components": t.components,
            "max_normal_derivative_sq": t.max_normal_derivative_sq,
            "radial_states": t.radial,
            "final_mask": MaskDescriptor::from_mask(t.flow.last()),
            "invariants": inv,
        }),
    ))
}

fn shape_exports(t: &ShapeTrajectory, every: usize, art: &mut Artifacts) -> Result<()> {
    art.write("series.csv", shape_csv(t))?;
    for (n, m) in t.flow.states.iter().enumerate() {
        if n % every == 0 || n + 1 == t.len() {
            art.write(&format!("masks/state_{n:05}.pgm"), mask_to_pgm(m))?;
        }
    }
    Ok(())
}

fn shape_flow(r: &ShapeFlowRun, art: &mut Artifacts) -> Result<(ExitStatus, Value)> {
    let start = match r.flow.strategy {
        Strategy::Radial => ShapeStart::Radial {
            shape: RadialShape::from_primitive(&r.initial)
                .ok_or_else(|| Error::Config("initial shape is not radial".into()))?,
            domain: r.domain,
        },
        _ => ShapeStart::Mask(rasterize(&r.initial, &r.domain)?),
    };
    let t = run_shape_flow(&r.flow, start)?;
    shape_exports(&t, r.export_every, art)?;
    let (ok, rep) = shape_report(&t)?;
    Ok((failure_status(t.flow.failure.is_some(), ok), rep))
}

fn ball_benchmark(r: &BallBenchmarkRun, art: &mut Artifacts) -> Result<(ExitStatus, Value)> {
    let bound = r.bound.unwrap_or(2.0 * r.r0);
    let center = vec![0.0; r.dim];
    let domain = if r.dim == 2 {
        GridDomain::square(-bound, bound, r.export_cells)?
    } else {
        GridDomain::interval(-bound, bound, r.export_cells)?
    };
    let mut cfg = ShapeFlowConfig::new(FunctionalSpec::lambda(1), r.epsilon, r.horizon, Strategy::Radial);
    cfg.radial_bound = Some(bound);
    let start = ShapeStart::Radial {
        shape: RadialShape::ball(&center, r.r0)?,
        domain,
    };
    let t = run_shape_flow(&cfg, start)?;
    let radii: Vec<f64> = t
        .radial
        .as_ref()
        .map(|v| v.iter().map(RadialShape::outer_radius).collect())
        .unwrap_or_default();
    let mut csv = String::from("t,R_numeric,R_closed_form,relative_error\n");
    let mut max_err: f64 = 0.0;
    for (&tt, &rn) in t.flow.times.iter().zip(&radii) {
        let exact = ball_flow_reference(r.r0, r.dim, tt)?;
        let err = (rn - exact).abs() / exact;
        max_err = max_err.max(err);
        let _ = writeln!(csv, "{tt},{rn},{exact},{err}");
    }
    art.write("ball.csv", csv)?;
    shape_exports(&t, usize::MAX, art)?;
    let (ok, rep) = shape_report(&t)?;
    Ok((
        failure_status(t.flow.failure.is_some(), ok),
        json!({
            "lambda1_unit_ball": unit_ball_lambda1(r.dim)?,
            "max_relative_error": max_err,
            "flow": rep,
        }),
    ))
}

fn square_case(r: &SquareRun, art: &mut Artifacts) -> Result<(ExitStatus, Value)> {
    let candidates: Vec<(String, BoundaryDensity)> = match &r.candidates {
        Some(c) => c.iter().map(|n| (n.name.clone(), n.density)).collect(),
        None => BoundaryDensity::default_candidates(),
    };
    let rep = square_perturbation_study(r.epsilon, &candidates, r.intervals)?;
    let mut csv = String::from("name,integral,analytic_integral,step,value,rank\n");
    for c in &rep.candidates {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            c.name, c.integral, c.analytic_integral, c.step, c.value, c.rank
        );
    }
    art.write("candidates.csv", csv)?;
    Ok((ExitStatus::Success, serde_json::to_value(&rep)?))
}

/// Command-line entry: returns the process exit code and prints a one-line
/// status to stderr on failure.
pub fn run_cli(command: &str, config: &Path, out: &Path, seed: Option<u64>) -> i32 {
    let text = match std::fs::read_to_string(config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}", Error::io(config, e));
            return ExitStatus::Validation.code();
        }
    };
    let cfg = match RunConfig::parse(&text, Some(command)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitStatus::Validation.code();
        }
    };
    match execute(&cfg, out, seed) {
        Ok(o) => {
            if o.status != ExitStatus::Success {
                eprintln!(
                    "run finished with status {:?}; see {}",
                    o.status,
                    out.join("summary.json").display()
                );
            }
            o.status.code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitStatus::of_error(&e).code()
        }
    }
}
