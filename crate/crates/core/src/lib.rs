//! Bregman projection methods for (possibly nonlinear) split feasibility
//! problems: two inertial anchored solvers with Armijo line search, classical
//! baselines (CQ, inertial CQ, proximal gradient), and a seeded benchmark
//! harness with three built-in problem families.

pub mod bench;
pub mod bregman;
pub mod geometry;
pub mod operators;
pub mod solvers;
pub mod space;

pub use bregman::{bregman_distance, three_point_gap, LegendreFunction};
pub use geometry::{bregman_project, metric_project, prox, pythagoras_gap, ConvexSet, ProximableFunction, SetKind};
pub use operators::{ForwardOperator, LeastSquaresObjective};
pub use bench::{
    make_bundle, make_example1, make_example2, make_example3, run_algorithm, run_experiment,
    Algorithm, AlgorithmSummary, CellRun, CellSolve, ConfigOverrides, EnvironmentInfo,
    ExampleBundle, ExampleChoice, ExperimentReport, ExperimentSpec,
};
pub use solvers::{
    armijo_step, feasibility_gap, solve_algorithm1, solve_algorithm2, solve_cq,
    solve_inertial_cq, solve_proximal_gradient, AnchorMode, ArmijoStep, BetaSchedule,
    ForwardStepMode, IterationRecord, LineSearch, MuSchedule, ProblemInstance, SolveResult,
    SolveStatus, SolverConfig,
};
pub use space::{InnerProductSpace, Point};

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported set/function combination: {0}")]
    UnsupportedCombination(String),
    #[error("solver requires a linear forward operator")]
    RequiresLinearOperator,
    #[error("missing smooth objective: {0}")]
    MissingObjective(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("line search failed: {0}")]
    LineSearchFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
