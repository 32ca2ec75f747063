//! Python bindings for the bregmax solvers: generators, problems, runs, and
//! the inequality checkers, with plain lists crossing the boundary.

use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use bregmax::bregman::{BregmanGenerator, DualPair};
use bregmax::diagnostics::{
    check_beg_distance_bound, check_beg_regret, check_beg_telescoped, check_bep_distance_bound,
    check_bep_per_iteration, check_bep_telescoped, check_weighted_gap, gap_bound_series,
    gap_records_to_reports, InequalityReport,
};
use bregmax::linalg::Matrix;
use bregmax::operators::{lipschitz_from_blocks, saddle_operator, SaddleProblem};
use bregmax::problems::{make_bilinear, make_quadratic, random_instance, ProblemKind};
use bregmax::solvers::{constant_beg_schedule, constant_bep_schedule, run, Method, StoppingRule};

fn to_py_err(e: bregmax::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix_from_rows(rows: Vec<Vec<f64>>, what: &str) -> PyResult<Matrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(PyValueError::new_err(format!("{what} has ragged rows")));
    }
    Matrix::new(r, c, rows.into_iter().flatten().collect()).map_err(to_py_err)
}

fn parse_method(name: &str) -> PyResult<Method> {
    match name {
        "beg" => Ok(Method::Beg),
        "bep" => Ok(Method::Bep),
        other => Err(PyValueError::new_err(format!(
            "method must be 'beg' or 'bep', got '{other}'"
        ))),
    }
}

/// A Bregman distance generator: the strongly convex ω, its mirror map, and
/// the canonical subgradient selector.
#[pyclass(name = "Generator", frozen)]
struct PyGenerator {
    inner: Arc<BregmanGenerator>,
}

#[pymethods]
impl PyGenerator {
    /// ω(u) = ½|u|²; mirror map is the identity.
    #[staticmethod]
    fn euclidean(dimension: usize) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(BregmanGenerator::euclidean(dimension).map_err(to_py_err)?),
        })
    }

    /// ω(u) = γ|u|₁ + ½|u|²; mirror map is soft-thresholding, so solver
    /// iterates can be exactly sparse.
    #[staticmethod]
    fn augmented_l1(dimension: usize, gamma: f64) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(BregmanGenerator::augmented_l1(dimension, gamma).map_err(to_py_err)?),
        })
    }

    fn eval(&self, u: Vec<f64>) -> f64 {
        self.inner.eval(&u)
    }

    fn mirror(&self, u_star: Vec<f64>) -> Vec<f64> {
        self.inner.mirror(&u_star)
    }

    fn subgrad(&self, u: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.subgrad(&u).map_err(to_py_err)
    }

    /// D(u, v; v*) = ω(u) - ω(v) - ⟨v*, u - v⟩ for v* a subgradient at v.
    fn distance(&self, u: Vec<f64>, v: Vec<f64>, v_star: Vec<f64>) -> PyResult<f64> {
        self.inner.distance(&u, &v, &v_star).map_err(to_py_err)
    }

    fn conjugate_eval(&self, u_star: Vec<f64>) -> f64 {
        self.inner.conjugate_eval(&u_star)
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn modulus(&self) -> f64 {
        self.inner.modulus()
    }
}

/// A convex-concave saddle problem with an exact saddle oracle.
#[pyclass(name = "Problem", frozen)]
struct PyProblem {
    inner: Arc<SaddleProblem>,
}

#[pymethods]
impl PyProblem {
    /// f(x, y) = xᵀA y + bᵀx + cᵀy; rejects instances without a saddle point.
    #[staticmethod]
    fn bilinear(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>) -> PyResult<Self> {
        let a = matrix_from_rows(a, "A")?;
        Ok(Self {
            inner: make_bilinear(a, b, c).map_err(to_py_err)?,
        })
    }

    /// f = ½xᵀPx + xᵀAy - ½yᵀQy + bᵀx + cᵀy with P, Q symmetric PSD.
    #[staticmethod]
    fn quadratic(
        p: Vec<Vec<f64>>,
        q: Vec<Vec<f64>>,
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        c: Vec<f64>,
    ) -> PyResult<Self> {
        let p = matrix_from_rows(p, "P")?;
        let q = matrix_from_rows(q, "Q")?;
        let a = matrix_from_rows(a, "A")?;
        Ok(Self {
            inner: make_quadratic(p, q, a, b, c).map_err(to_py_err)?,
        })
    }

    /// Seeded random instance ('bilinear' or 'quadratic') with a saddle
    /// point known by construction.
    #[staticmethod]
    #[pyo3(signature = (kind, m, n, seed, scale = 1.0))]
    fn random(kind: &str, m: usize, n: usize, seed: u64, scale: f64) -> PyResult<Self> {
        let kind = match kind {
            "bilinear" => ProblemKind::Bilinear,
            "quadratic" => ProblemKind::Quadratic,
            other => {
                return Err(PyValueError::new_err(format!(
                    "kind must be 'bilinear' or 'quadratic', got '{other}'"
                )))
            }
        };
        if m == 0 || n == 0 {
            return Err(PyValueError::new_err("dims must be at least 1x1"));
        }
        Ok(Self {
            inner: random_instance(kind, (m, n), seed, scale),
        })
    }

    fn value(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        let (m, n) = self.inner.dims();
        if x.len() != m || y.len() != n {
            return Err(PyValueError::new_err("x or y has the wrong length"));
        }
        Ok(self.inner.value(&x, &y))
    }

    /// F(z) = [∇ₓf; -∇ᵧf] at a stacked point z = [x; y].
    fn operator(&self, z: Vec<f64>) -> PyResult<Vec<f64>> {
        saddle_operator(&self.inner).apply(&z).map_err(to_py_err)
    }

    fn saddle(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        self.inner.saddle().map(|(x, y)| (x.to_vec(), y.to_vec()))
    }

    #[getter]
    fn dims(&self) -> (usize, usize) {
        self.inner.dims()
    }

    /// Global Lipschitz constant 2·max of the block constants.
    #[getter]
    fn lipschitz(&self) -> f64 {
        lipschitz_from_blocks(&self.inner.blocks()).expect("validated at construction")
    }
}

/// The record of a finished run.
#[pyclass(name = "Trace", frozen)]
struct PyTrace {
    inner: bregmax::solvers::Trace,
    problem: Arc<SaddleProblem>,
    generator: Arc<BregmanGenerator>,
    lambda: f64,
}

#[pymethods]
impl PyTrace {
    /// Iterates u_0 .. u_T.
    fn iterates(&self) -> Vec<Vec<f64>> {
        self.inner
            .iterates
            .iter()
            .map(|p| p.primal.clone())
            .collect()
    }

    fn duals(&self) -> Vec<Vec<f64>> {
        self.inner.iterates.iter().map(|p| p.dual.clone()).collect()
    }

    /// Midpoints ū_k (BEG only; empty for BEP).
    fn midpoints(&self) -> Vec<Vec<f64>> {
        self.inner
            .steps
            .iter()
            .filter_map(|s| s.midpoint.clone())
            .collect()
    }

    /// Ergodic averages ẑ_k.
    fn averaged(&self) -> Vec<Vec<f64>> {
        self.inner
            .steps
            .iter()
            .map(|s| s.averaged.clone())
            .collect()
    }

    fn weight_sums(&self) -> Vec<f64> {
        self.inner.steps.iter().map(|s| s.weight_sum).collect()
    }

    fn residual_norms(&self) -> Vec<f64> {
        self.inner.steps.iter().map(|s| s.residual_norm).collect()
    }

    /// |f(x̂_k, ŷ_k) - f(x̄, ȳ)| per step.
    fn value_errors(&self) -> PyResult<Vec<f64>> {
        let f_star = self
            .problem
            .saddle_value()
            .ok_or_else(|| PyValueError::new_err("problem has no saddle oracle"))?;
        self.inner
            .steps
            .iter()
            .map(|s| {
                let (x_hat, y_hat) = self.problem.split(&s.averaged).map_err(to_py_err)?;
                Ok((self.problem.value(x_hat, y_hat) - f_star).abs())
            })
            .collect()
    }

    /// Runs every inequality check that applies to the method and returns
    /// (name, k, lhs, rhs, residual, pass) tuples.
    fn run_checks(&self) -> PyResult<Vec<(String, usize, f64, f64, f64, bool)>> {
        let gen = &self.generator;
        let op = saddle_operator(&self.problem);
        let z_bar = self
            .problem
            .saddle_joint()
            .ok_or_else(|| PyValueError::new_err("problem has no saddle oracle"))?;
        let z_star = gen.subgrad(&z_bar).map_err(to_py_err)?;
        let mut reports: Vec<InequalityReport> = Vec::new();
        match self.inner.method {
            Method::Beg => {
                reports.extend(
                    check_beg_regret(gen, &op, &self.inner, &z_bar, &z_star).map_err(to_py_err)?,
                );
                reports.extend(
                    check_beg_telescoped(gen, &op, &self.inner, &z_bar, &z_star)
                        .map_err(to_py_err)?,
                );
                reports.extend(
                    check_beg_distance_bound(gen, &self.inner, &z_bar, &z_star)
                        .map_err(to_py_err)?,
                );
            }
            Method::Bep => {
                reports.extend(
                    check_bep_per_iteration(gen, &op, &self.inner, &z_bar, &z_star, self.lambda)
                        .map_err(to_py_err)?,
                );
                reports.extend(
                    check_bep_telescoped(gen, &op, &self.inner, &z_bar, &z_star, self.lambda)
                        .map_err(to_py_err)?,
                );
                reports.extend(
                    check_bep_distance_bound(gen, &self.inner, &z_bar, &z_star, self.lambda)
                        .map_err(to_py_err)?,
                );
            }
            _ => {}
        }
        let gaps = gap_bound_series(gen, &self.problem, &self.inner).map_err(to_py_err)?;
        reports.extend(gap_records_to_reports(&gaps));
        reports.extend(check_weighted_gap(&self.problem, &self.inner).map_err(to_py_err)?);
        Ok(reports
            .into_iter()
            .map(|r| (r.name.to_string(), r.k, r.lhs, r.rhs, r.residual, r.pass))
            .collect())
    }

    #[getter]
    fn method(&self) -> String {
        self.inner.method.to_string()
    }

    #[getter]
    fn operator_calls(&self) -> usize {
        self.inner.operator_calls
    }

    #[getter]
    fn total_steps(&self) -> usize {
        self.inner.total_steps
    }

    #[getter]
    fn stopped_at(&self) -> Option<usize> {
        self.inner.stopped_at
    }

    #[getter]
    fn final_residual(&self) -> Option<f64> {
        self.inner.final_residual()
    }

    /// Relative Lipschitz constant λ = L/μ the run was configured with.
    /// (Named with a trailing underscore because `lambda` is a Python
    /// keyword.)
    #[getter]
    fn lambda_(&self) -> f64 {
        self.lambda
    }
}

/// Componentwise soft-thresholding sign(u)·max(|u|-γ, 0); zeros are
/// bit-exact.
#[pyfunction]
fn shrinkage(gamma: f64, u: Vec<f64>) -> PyResult<Vec<f64>> {
    if gamma < 0.0 {
        return Err(PyValueError::new_err("gamma must be nonnegative"));
    }
    Ok(bregmax::bregman::shrinkage(gamma, &u))
}

/// Runs BEG or BEP on a problem with a constant feasible schedule.
///
/// `safety` scales the step size: BEG uses α = safety/λ (safety in (0, 1]),
/// BEP uses α = safety/(2λ), β = 1 (safety in (0, 1)), with λ = L/μ.
#[pyfunction]
#[pyo3(signature = (problem, generator = None, method = "beg", safety = 0.9, max_iters = 1000, stop_tolerance = 0.0, u0 = None))]
fn solve(
    problem: &PyProblem,
    generator: Option<&PyGenerator>,
    method: &str,
    safety: f64,
    max_iters: usize,
    stop_tolerance: f64,
    u0: Option<Vec<f64>>,
) -> PyResult<PyTrace> {
    let method = parse_method(method)?;
    let dim = problem.inner.joint_dimension();
    let gen: Arc<BregmanGenerator> = match generator {
        Some(g) => {
            if g.inner.dimension() != dim {
                return Err(PyValueError::new_err(format!(
                    "generator dimension {} does not match problem dimension {dim}",
                    g.inner.dimension()
                )));
            }
            g.inner.clone()
        }
        None => Arc::new(BregmanGenerator::euclidean(dim).map_err(to_py_err)?),
    };
    let op = saddle_operator(&problem.inner);
    let lipschitz = lipschitz_from_blocks(&problem.inner.blocks()).map_err(to_py_err)?;
    let lambda = lipschitz / gen.modulus();
    let schedule = match method {
        Method::Beg => constant_beg_schedule(lambda, safety).map_err(to_py_err)?,
        Method::Bep => constant_bep_schedule(lambda, safety).map_err(to_py_err)?,
        _ => unreachable!(),
    };
    let start = u0.unwrap_or_else(|| vec![1.0; dim]);
    if start.len() != dim {
        return Err(PyValueError::new_err(format!(
            "u0 has length {}, problem dimension is {dim}",
            start.len()
        )));
    }
    let init = DualPair::from_primal(&gen, &start).map_err(to_py_err)?;
    let trace = run(
        method,
        &gen,
        &op,
        &schedule,
        init,
        max_iters,
        StoppingRule::residual(stop_tolerance),
        1,
    )
    .map_err(to_py_err)?;
    Ok(PyTrace {
        inner: trace,
        problem: problem.inner.clone(),
        generator: gen,
        lambda,
    })
}

#[pymodule]
fn pybregmax(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGenerator>()?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PyTrace>()?;
    m.add_function(wrap_pyfunction!(shrinkage, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    Ok(())
}
