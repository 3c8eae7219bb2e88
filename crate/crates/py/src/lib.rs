//! Python bindings: the solvers on the built-in examples plus the geometric
//! primitives (Bregman distances, projections, the L1 prox), all returning
//! plain Python values. Errors surface as ValueError.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bregsfp::bregman::{half_squared_norm, negative_entropy};
use bregsfp::{
    feasibility_gap, make_bundle, metric_project, run_algorithm, Algorithm, BetaSchedule,
    ConvexSet, ExampleChoice, InnerProductSpace, LegendreFunction, ProximableFunction,
};

fn value_err(e: bregsfp::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn space_for(weights: Option<Vec<f64>>, dim: usize) -> PyResult<InnerProductSpace> {
    match weights {
        None => Ok(InnerProductSpace::uniform(dim)),
        Some(w) => {
            if w.len() != dim {
                return Err(PyValueError::new_err(format!(
                    "weights have length {}, expected {dim}",
                    w.len()
                )));
            }
            InnerProductSpace::with_weights(w).map_err(value_err)
        }
    }
}

fn geometry_for(name: &str, space: InnerProductSpace) -> PyResult<LegendreFunction> {
    match name {
        "half-squared" => Ok(half_squared_norm(space)),
        "entropy" => Ok(negative_entropy(space)),
        other => Err(PyValueError::new_err(format!(
            "unknown geometry '{other}' (expected half-squared or entropy)"
        ))),
    }
}

/// Run one algorithm on a built-in example at its quick default sizes.
/// Returns a dict with the final status, iteration count, feasibility gaps,
/// per-iteration residuals, and the final point.
#[pyfunction]
#[pyo3(signature = (example, algorithm, seed=0, n=None, m=None, grid=None, mu=None,
                    tol=None, max_iter=None, beta=None))]
#[allow(clippy::too_many_arguments)]
fn solve_example(
    py: Python<'_>,
    example: u8,
    algorithm: &str,
    seed: u64,
    n: Option<usize>,
    m: Option<usize>,
    grid: Option<usize>,
    mu: Option<f64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    beta: Option<f64>,
) -> PyResult<Py<PyDict>> {
    let choice = match example {
        1 => ExampleChoice::Example1 { n: n.unwrap_or(100) },
        2 => ExampleChoice::Example2 { grid_points: grid.unwrap_or(128) },
        3 => ExampleChoice::Example3 {
            m: m.unwrap_or(50),
            n: n.unwrap_or(100),
            mu: mu.unwrap_or(0.1),
        },
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown example '{other}' (expected 1, 2, or 3)"
            )))
        }
    };
    let alg: Algorithm = algorithm.parse().map_err(value_err)?;
    let bundle = make_bundle(&choice, seed).map_err(value_err)?;
    let mut cfg = bundle.config.clone();
    if let Some(t) = tol {
        cfg.tol = t;
    }
    if let Some(k) = max_iter {
        cfg.max_iter = k;
    }
    if let Some(b) = beta {
        cfg.beta = BetaSchedule::Constant(b);
    }

    let out = run_algorithm(alg, &bundle.instance, &cfg, &bundle.zeta0).map_err(value_err)?;
    let (dist_c, gap_q) = feasibility_gap(&bundle.instance, &out.final_point).map_err(value_err)?;
    let objective =
        bundle.instance.composite_objective(&out.final_point).map_err(value_err)?;
    let residuals: Vec<f64> = out.history.iter().map(|r| r.residual).collect();

    let d = PyDict::new(py);
    d.set_item("status", out.status.to_string())?;
    d.set_item("iterations", out.iterations)?;
    d.set_item("elapsed_seconds", out.elapsed)?;
    d.set_item("final_dist_C", dist_c)?;
    d.set_item("final_gap_Q", gap_q)?;
    d.set_item("objective", objective)?;
    d.set_item("residuals", residuals)?;
    d.set_item("final_point", out.final_point)?;
    Ok(d.unbind())
}

/// D(x, y) for the chosen geometry; `weights` scales the inner product.
#[pyfunction]
#[pyo3(signature = (x, y, geometry="half-squared", weights=None))]
fn bregman_distance(
    x: Vec<f64>,
    y: Vec<f64>,
    geometry: &str,
    weights: Option<Vec<f64>>,
) -> PyResult<f64> {
    let f = geometry_for(geometry, space_for(weights, x.len())?)?;
    bregsfp::bregman_distance(&f, &x, &y).map_err(value_err)
}

/// Soft thresholding: the prox of mu * l1 with step eta.
#[pyfunction]
#[pyo3(signature = (x, eta, mu, weights=None))]
fn prox_l1(x: Vec<f64>, eta: f64, mu: f64, weights: Option<Vec<f64>>) -> PyResult<Vec<f64>> {
    let space = space_for(weights, x.len())?;
    let g = ProximableFunction::l1(mu).map_err(value_err)?;
    bregsfp::prox(&g, eta, &x, &space).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (x, radius, center=None, weights=None))]
fn project_ball(
    x: Vec<f64>,
    radius: f64,
    center: Option<Vec<f64>>,
    weights: Option<Vec<f64>>,
) -> PyResult<Vec<f64>> {
    let space = space_for(weights, x.len())?;
    let center = center.unwrap_or_else(|| vec![0.0; x.len()]);
    let set = ConvexSet::ball(radius, center, space).map_err(value_err)?;
    metric_project(&set, &x).map_err(value_err)
}

#[pyfunction]
fn project_box(x: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> PyResult<Vec<f64>> {
    let space = InnerProductSpace::uniform(x.len());
    let set = ConvexSet::boxed(lower, upper, space).map_err(value_err)?;
    metric_project(&set, &x).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (x, normal, offset, weights=None))]
fn project_hyperplane(
    x: Vec<f64>,
    normal: Vec<f64>,
    offset: f64,
    weights: Option<Vec<f64>>,
) -> PyResult<Vec<f64>> {
    let space = space_for(weights, x.len())?;
    let set = ConvexSet::hyperplane(normal, offset, space).map_err(value_err)?;
    metric_project(&set, &x).map_err(value_err)
}

/// Bregman projection under the entropy geometry; x must be positive.
#[pyfunction]
#[pyo3(signature = (x, normal, offset, weights=None))]
fn entropy_project_hyperplane(
    x: Vec<f64>,
    normal: Vec<f64>,
    offset: f64,
    weights: Option<Vec<f64>>,
) -> PyResult<Vec<f64>> {
    let space = space_for(weights, x.len())?;
    let f = negative_entropy(space.clone());
    let set = ConvexSet::hyperplane(normal, offset, space).map_err(value_err)?;
    bregsfp::bregman_project(&set, &f, &x).map_err(value_err)
}

#[pymodule]
fn bregsfp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(solve_example, m)?)?;
    m.add_function(wrap_pyfunction!(bregman_distance, m)?)?;
    m.add_function(wrap_pyfunction!(prox_l1, m)?)?;
    m.add_function(wrap_pyfunction!(project_ball, m)?)?;
    m.add_function(wrap_pyfunction!(project_box, m)?)?;
    m.add_function(wrap_pyfunction!(project_hyperplane, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_project_hyperplane, m)?)?;
    Ok(())
}
