//! Seeded instances for the three benchmark families and the comparison
//! harness that runs algorithm grids over them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::bregman::half_squared_norm;
use crate::geometry::{ConvexSet, ProximableFunction};
use crate::operators::{dense_linear, least_squares_objective, sine_multiplier};
use crate::solvers::{
    feasibility_gap, solve_algorithm1, solve_algorithm2, solve_cq, solve_inertial_cq,
    solve_proximal_gradient, AnchorMode, ProblemInstance, SolveResult, SolveStatus, SolverConfig,
};
use crate::space::{unit_grid, InnerProductSpace, Point};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Algorithm1,
    Algorithm2,
    Cq,
    InertialCq,
    ProximalGradient,
}

impl Algorithm {
    pub fn all() -> [Algorithm; 5] {
        [
            Self::Algorithm1,
            Self::Algorithm2,
            Self::Cq,
            Self::InertialCq,
            Self::ProximalGradient,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Algorithm1 => "alg1",
            Self::Algorithm2 => "alg2",
            Self::Cq => "cq",
            Self::InertialCq => "icq",
            Self::ProximalGradient => "proxgrad",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alg1" => Ok(Self::Algorithm1),
            "alg2" => Ok(Self::Algorithm2),
            "cq" => Ok(Self::Cq),
            "icq" => Ok(Self::InertialCq),
            "proxgrad" => Ok(Self::ProximalGradient),
            other => Err(Error::InvalidConfig(format!(
                "unknown algorithm '{other}' (expected alg1, alg2, cq, icq, proxgrad)"
            ))),
        }
    }
}

pub fn run_algorithm(
    alg: Algorithm,
    inst: &ProblemInstance,
    cfg: &SolverConfig,
    zeta0: &[f64],
) -> Result<SolveResult> {
    match alg {
        Algorithm::Algorithm1 => solve_algorithm1(inst, cfg, zeta0),
        Algorithm::Algorithm2 => solve_algorithm2(inst, cfg, zeta0),
        Algorithm::Cq => solve_cq(inst, cfg, zeta0),
        Algorithm::InertialCq => solve_inertial_cq(inst, cfg, zeta0),
        Algorithm::ProximalGradient => solve_proximal_gradient(inst, cfg, zeta0),
    }
}

/// A ready-to-run problem: instance, starting point, and the solver settings
/// the instance was tuned for (examples carry instance-derived step sizes).
#[derive(Debug, Clone)]
pub struct ExampleBundle {
    pub instance: ProblemInstance,
    pub zeta0: Point,
    pub config: SolverConfig,
}

/// Random ball-and-hyperplane feasibility instance: dense Gaussian matrix
/// rescaled to unit operator norm, C = unit ball, Q = zero-mean hyperplane,
/// ζ₀ uniform in [−1,1]ⁿ. The rescaling keeps the two projection residuals
/// on a common curvature scale, so the line search is not pinned to the
/// smaller of two very different stable step ranges; C, Q, and the solution
/// set are unchanged up to the cone scaling of Q.
pub fn make_example1(n: usize, seed: u64) -> Result<ExampleBundle> {
    if n < 2 {
        return Err(Error::InvalidConfig("example 1 needs n >= 2".into()));
    }
    let space = InnerProductSpace::uniform(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut matrix: Vec<f64> = (0..n * n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let raw = dense_linear(matrix.clone(), space.clone(), space.clone())?;
    let scale = 1.0 / raw.lipschitz();
    for a in &mut matrix {
        *a *= scale;
    }
    let op = dense_linear(matrix, space.clone(), space.clone())?;
    let zeta0: Point = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();

    Ok(ExampleBundle {
        instance: ProblemInstance {
            set_c: ConvexSet::ball(1.0, vec![0.0; n], space.clone())?,
            set_q: ConvexSet::zero_mean(space.clone()),
            op_a: op,
            f1: half_squared_norm(space.clone()),
            f2: half_squared_norm(space),
            regularizer: ProximableFunction::Zero,
            smooth_objective: None,
        },
        zeta0,
        config: SolverConfig::default(),
    })
}

/// Nonlinear L²[0,1] instance on a trapezoid grid: A(ζ)(t) = sin ζ(t) + tζ(t),
/// C = unit ball, Q = functions with zero weighted mean. ζ₀(t) = cos(2πt) + ½:
/// the plain cosine is annihilated by the quadrature pairing with the constant
/// weight (the rule is exact there), so it starts exactly feasible; the shift
/// gives the documented infeasible start with ⟨A(ζ₀), 1⟩ ≈ 0.617 while keeping
/// ζ₀ inside C.
pub fn make_example2(grid_points: usize) -> Result<ExampleBundle> {
    if grid_points < 16 {
        return Err(Error::InvalidConfig("example 2 needs at least 16 grid points".into()));
    }
    let space = InnerProductSpace::trapezoid(grid_points);
    let op = sine_multiplier(space.clone());
    let grid = unit_grid(grid_points);
    let zeta0: Point = grid
        .iter()
        .map(|t| (2.0 * std::f64::consts::PI * t).cos() + 0.5)
        .collect();

    Ok(ExampleBundle {
        instance: ProblemInstance {
            set_c: ConvexSet::ball(1.0, vec![0.0; grid_points], space.clone())?,
            set_q: ConvexSet::zero_mean(space.clone()),
            op_a: op,
            f1: half_squared_norm(space.clone()),
            f2: half_squared_norm(space),
            regularizer: ProximableFunction::Zero,
            smooth_objective: None,
        },
        zeta0,
        config: SolverConfig::default(),
    })
}

/// Box-constrained lasso: minimize ‖Aζ − b‖² + μ‖ζ‖₁ over the unit box,
/// encoded as C = Box(−1,1), Q = whole space, with the least-squares term as
/// the smooth objective. ζ₀ = 0. The forward step length is 1/L_g; the
/// iteration budget covers the slow tail ISTA needs at tol 1e−6 on
/// ill-conditioned draws.
pub fn make_example3(m: usize, n: usize, mu: f64, seed: u64) -> Result<ExampleBundle> {
    if m < 2 || n < 2 {
        return Err(Error::InvalidConfig("example 3 needs m, n >= 2".into()));
    }
    let in_space = InnerProductSpace::uniform(n);
    let out_space = InnerProductSpace::uniform(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let matrix: Vec<f64> = (0..m * n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let b: Point = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let op = dense_linear(matrix, in_space.clone(), out_space.clone())?;
    let objective = least_squares_objective(op.clone(), b)?;
    let eta = 1.0 / objective.gradient_lipschitz();

    let config = SolverConfig {
        eta,
        max_iter: 200_000,
        ..SolverConfig::default()
    };
    Ok(ExampleBundle {
        instance: ProblemInstance {
            set_c: ConvexSet::boxed(vec![-1.0; n], vec![1.0; n], in_space.clone())?,
            set_q: ConvexSet::whole_space(out_space),
            op_a: op,
            f1: half_squared_norm(in_space.clone()),
            f2: half_squared_norm(InnerProductSpace::uniform(m)),
            regularizer: ProximableFunction::l1(mu)?,
            smooth_objective: Some(objective),
        },
        zeta0: vec![0.0; n],
        config,
    })
}

#[derive(Debug, Clone)]
pub enum ExampleChoice {
    Example1 { n: usize },
    Example2 { grid_points: usize },
    Example3 { m: usize, n: usize, mu: f64 },
    Custom(Box<ExampleBundle>),
}

impl ExampleChoice {
    pub fn id(&self) -> &'static str {
        match self {
            Self::Example1 { .. } => "example1",
            Self::Example2 { .. } => "example2",
            Self::Example3 { .. } => "example3",
            Self::Custom(_) => "custom",
        }
    }

    /// Primary problem dimension, for reporting.
    pub fn dim(&self) -> usize {
        match self {
            Self::Example1 { n } => *n,
            Self::Example2 { grid_points } => *grid_points,
            Self::Example3 { n, .. } => *n,
            Self::Custom(b) => b.zeta0.len(),
        }
    }
}

pub fn make_bundle(choice: &ExampleChoice, seed: u64) -> Result<ExampleBundle> {
    match choice {
        ExampleChoice::Example1 { n } => make_example1(*n, seed),
        // the grid instance is deterministic; the seed only labels the run
        ExampleChoice::Example2 { grid_points } => make_example2(*grid_points),
        ExampleChoice::Example3 { m, n, mu } => make_example3(*m, *n, *mu, seed),
        ExampleChoice::Custom(b) => Ok((**b).clone()),
    }
}

/// Optional knobs layered over an example's tuned defaults; `None` keeps the
/// default. This is what the CLI flags and config-file keys map onto.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub beta: Option<f64>,
    pub tau: Option<f64>,
    pub iota0: Option<f64>,
    pub eta: Option<f64>,
    pub mu_const: Option<f64>,
    pub anchor: Option<AnchorMode>,
}

impl ConfigOverrides {
    pub fn apply(&self, cfg: &mut SolverConfig) {
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.max_iter {
            cfg.max_iter = v;
        }
        if let Some(v) = self.beta {
            cfg.beta = crate::solvers::BetaSchedule::Constant(v);
        }
        if let Some(v) = self.tau {
            cfg.tau = v;
        }
        if let Some(v) = self.iota0 {
            cfg.linesearch.iota0 = v;
        }
        if let Some(v) = self.eta {
            cfg.eta = v;
        }
        if let Some(v) = self.mu_const {
            cfg.mu = crate::solvers::MuSchedule::Constant(v);
        }
        if let Some(v) = self.anchor {
            cfg.anchor = v;
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub example: ExampleChoice,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub overrides: ConfigOverrides,
    /// Repeated runs of the identical cell, for wall-clock statistics; every
    /// repetition is bit-identical in its iterates.
    pub repetitions: usize,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig("no algorithms requested".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be at least 1".into()));
        }
        match &self.example {
            ExampleChoice::Example1 { n } if *n < 2 => {
                Err(Error::InvalidConfig("example 1 needs n >= 2".into()))
            }
            ExampleChoice::Example2 { grid_points } if *grid_points < 16 => {
                Err(Error::InvalidConfig("example 2 needs at least 16 grid points".into()))
            }
            ExampleChoice::Example3 { m, n, .. } if *m < 2 || *n < 2 => {
                Err(Error::InvalidConfig("example 3 needs m, n >= 2".into()))
            }
            _ => Ok(()),
        }
    }
}

/// One completed solver run plus the derived end-point metrics.
#[derive(Debug, Clone)]
pub struct CellSolve {
    pub result: SolveResult,
    pub final_dist_c: f64,
    pub final_gap_q: f64,
    /// Composite objective at the final point, when the instance has one.
    pub final_objective: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CellRun {
    pub algorithm: Algorithm,
    pub repetition: usize,
    pub outcome: std::result::Result<CellSolve, String>,
}

#[derive(Debug, Clone)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub runs: usize,
    pub converged: usize,
    pub median_iterations: Option<f64>,
    pub mean_iterations: Option<f64>,
    pub median_elapsed: Option<f64>,
    pub mean_elapsed: Option<f64>,
    pub max_final_dist_c: Option<f64>,
    pub max_final_gap_q: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EnvironmentInfo {
    pub package: String,
    pub version: String,
    pub os: String,
    pub threads: usize,
}

impl EnvironmentInfo {
    pub fn current() -> Self {
        Self {
            package: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            threads: rayon::current_num_threads(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub cells: Vec<CellRun>,
    pub summaries: Vec<AlgorithmSummary>,
    pub environment: EnvironmentInfo,
    /// Example defaults with the spec's overrides applied; what every cell ran.
    pub resolved_config: SolverConfig,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { 0.5 * (v[mid - 1] + v[mid]) })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

fn summarize(alg: Algorithm, runs: &[&CellRun]) -> AlgorithmSummary {
    let ok: Vec<&CellSolve> = runs.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let iters: Vec<f64> = ok.iter().map(|c| c.result.iterations as f64).collect();
    let elapsed: Vec<f64> = ok.iter().map(|c| c.result.elapsed).collect();
    AlgorithmSummary {
        algorithm: alg,
        runs: runs.len(),
        converged: ok
            .iter()
            .filter(|c| c.result.status == SolveStatus::Converged)
            .count(),
        median_iterations: median(&iters),
        mean_iterations: mean(&iters),
        median_elapsed: median(&elapsed),
        mean_elapsed: mean(&elapsed),
        max_final_dist_c: ok.iter().map(|c| c.final_dist_c).reduce(f64::max),
        max_final_gap_q: ok.iter().map(|c| c.final_gap_q).reduce(f64::max),
    }
}

/// Run every (algorithm, repetition) cell of the spec on one shared instance.
/// Cells run in parallel and fail independently; a cell error is recorded in
/// its row instead of aborting the grid.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let bundle = make_bundle(&spec.example, spec.seed)?;
    let mut cfg = bundle.config.clone();
    spec.overrides.apply(&mut cfg);
    cfg.validate()?;

    let grid: Vec<(Algorithm, usize)> = spec
        .algorithms
        .iter()
        .flat_map(|&a| (0..spec.repetitions).map(move |r| (a, r)))
        .collect();

    let cells: Vec<CellRun> = grid
        .par_iter()
        .map(|&(alg, rep)| {
            let outcome = run_algorithm(alg, &bundle.instance, &cfg, &bundle.zeta0)
                .and_then(|result| {
                    let (final_dist_c, final_gap_q) =
                        feasibility_gap(&bundle.instance, &result.final_point)?;
                    let final_objective =
                        bundle.instance.composite_objective(&result.final_point)?;
                    Ok(CellSolve { result, final_dist_c, final_gap_q, final_objective })
                })
                .map_err(|e| e.to_string());
            CellRun { algorithm: alg, repetition: rep, outcome }
        })
        .collect();

    let summaries = spec
        .algorithms
        .iter()
        .map(|&alg| {
            let rows: Vec<&CellRun> = cells.iter().filter(|c| c.algorithm == alg).collect();
            summarize(alg, &rows)
        })
        .collect();

    Ok(ExperimentReport {
        cells,
        summaries,
        environment: EnvironmentInfo::current(),
        resolved_config: cfg,
    })
}
