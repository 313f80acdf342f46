//! Python bindings: designs, the exhaustive oracle, the finite-k and
//! asymptotic functionals, and region curves as CSV text.

use defect_designs::asymptotic;
use defect_designs::oracle::{self, SearchLimits, DEFAULT_BUDGET};
use defect_designs::rational;
use defect_designs::regions;
use defect_designs::subset_eval::{self, SizeDistribution};
use defect_designs::{BipartiteDesign, Error};
use num_rational::BigRational;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(defect_designs_py, BudgetExceeded, PyRuntimeError);
create_exception!(defect_designs_py, RegionUnknown, PyRuntimeError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::BudgetExceeded { .. } => BudgetExceeded::new_err(e.to_string()),
        Error::RegionUnknown(_) => RegionUnknown::new_err(e.to_string()),
        Error::InvalidArgument(_) | Error::Parse(_) | Error::Json(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn ratio(x: &BigRational) -> String {
    rational::format(x)
}

/// Degree distribution from parallel lists; masses are strings such as
/// `"3/7"` or `"0.25"` and must total one.
fn distribution(support: Vec<usize>, probs: Vec<String>) -> PyResult<SizeDistribution> {
    let probs = probs
        .iter()
        .map(|p| rational::parse(p))
        .collect::<Result<Vec<_>, _>>()
        .map_err(to_py)?;
    SizeDistribution::new(support, probs).map_err(to_py)
}

/// A bipartite design: `k` primary nodes and one neighbor list per
/// redundant node.
#[pyclass(name = "Design", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDesign {
    inner: BipartiteDesign,
}

#[pymethods]
impl PyDesign {
    #[new]
    fn new(k: usize, redundant: Vec<Vec<usize>>) -> PyResult<Self> {
        Ok(PyDesign {
            inner: BipartiteDesign::new(k, redundant).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyDesign {
            inner: BipartiteDesign::from_json(text).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn edges(&self) -> usize {
        self.inner.edges()
    }

    #[getter]
    fn redundant(&self) -> Vec<Vec<usize>> {
        self.inner.redundant().to_vec()
    }

    /// Largest number of defects corrected over `q` symbols.
    #[pyo3(signature = (q, budget = DEFAULT_BUDGET))]
    fn max_t(&self, py: Python<'_>, q: usize, budget: u64) -> PyResult<usize> {
        py.detach(|| oracle::design_t(&self.inner, q, budget)).map_err(to_py)
    }

    #[pyo3(signature = (q, t, budget = DEFAULT_BUDGET))]
    fn is_t_correcting(&self, py: Python<'_>, q: usize, t: usize, budget: u64) -> PyResult<bool> {
        py.detach(|| oracle::is_t_correcting(&self.inner, q, t, budget)).map_err(to_py)
    }

    /// `(epsilon, rho)` as exact `"p/q"` strings.
    fn metrics(&self, t: usize) -> PyResult<(String, String)> {
        let p = defect_designs::metrics_exact(&self.inner, t).map_err(to_py)?;
        Ok((ratio(&p.epsilon), ratio(&p.rho)))
    }

    /// Smallest-label-preserving canonical form; equal for isomorphic designs.
    fn canonical_form(&self) -> PyResult<Vec<u16>> {
        oracle::canonical_form(&self.inner).map_err(to_py)
    }

    fn permuted(&self, perm: Vec<usize>) -> PyResult<Self> {
        Ok(PyDesign {
            inner: self.inner.permute_primaries(&perm).map_err(to_py)?,
        })
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Design({})", self.inner.to_json())
    }
}

fn wrap(inner: BipartiteDesign) -> PyDesign {
    PyDesign { inner }
}

fn unwrap_all(designs: Vec<PyRef<'_, PyDesign>>) -> Vec<BipartiteDesign> {
    designs.iter().map(|d| d.inner.clone()).collect()
}

#[pyfunction]
fn repetition(k: usize, t: usize) -> PyResult<PyDesign> {
    defect_designs::make_repetition(k, t).map(wrap).map_err(to_py)
}

#[pyfunction]
fn complete(k: usize, r: usize) -> PyResult<PyDesign> {
    defect_designs::make_complete(k, r).map(wrap).map_err(to_py)
}

#[pyfunction]
fn subset(k: usize, sizes: Vec<usize>) -> PyResult<PyDesign> {
    defect_designs::make_subset(k, &sizes).map(wrap).map_err(to_py)
}

#[pyfunction]
fn hamming_block() -> PyDesign {
    wrap(defect_designs::hamming_block())
}

#[pyfunction]
fn copy(designs: Vec<PyRef<'_, PyDesign>>) -> PyResult<PyDesign> {
    defect_designs::copy_designs(&unwrap_all(designs)).map(wrap).map_err(to_py)
}

#[pyfunction]
fn merge(designs: Vec<PyRef<'_, PyDesign>>) -> PyResult<PyDesign> {
    defect_designs::merge_designs(&unwrap_all(designs)).map(wrap).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (design, max_k = defect_designs::design::DEFAULT_SYMMETRIZE_MAX_K))]
fn symmetrize(design: PyRef<'_, PyDesign>, max_k: usize) -> PyResult<PyDesign> {
    defect_designs::symmetrize(&design.inner, max_k).map(wrap).map_err(to_py)
}

/// `(e_min, witnesses)`: one optimal design per isomorphism class.
#[pyfunction]
#[pyo3(signature = (k, m, t, q, budget = DEFAULT_BUDGET))]
fn search_min_edges(
    py: Python<'_>,
    k: usize,
    m: usize,
    t: usize,
    q: usize,
    budget: u64,
) -> PyResult<(usize, Vec<PyDesign>)> {
    let limits = SearchLimits {
        budget,
        ..SearchLimits::default()
    };
    let found = py
        .detach(|| oracle::search_min_edges(k, m, t, q, &limits))
        .map_err(to_py)?;
    Ok((found.e_min, found.all_witnesses.into_iter().map(wrap).collect()))
}

/// Finite-k functional as an exact `"p/q"` string.
#[pyfunction]
fn f_k(support: Vec<usize>, probs: Vec<String>, k: usize, q: usize) -> PyResult<String> {
    let ps = distribution(support, probs)?;
    subset_eval::f_k(&ps, k, q).map(|v| ratio(&v)).map_err(to_py)
}

/// `(value, exact)` for the version restricted to `n` copies.
#[pyfunction]
fn f_kn(
    support: Vec<usize>,
    probs: Vec<String>,
    k: usize,
    n: usize,
    q: usize,
) -> PyResult<(String, bool)> {
    let ps = distribution(support, probs)?;
    let v = subset_eval::f_kn(&ps, k, n, q).map_err(to_py)?;
    Ok((ratio(&v.value), v.exact))
}

/// `(lower, upper)` bounds on the defects corrected by `n` merged copies
/// of a subset design.
#[pyfunction]
fn subset_t_bounds(k: usize, sizes: Vec<usize>, n: usize, q: usize) -> PyResult<(String, String)> {
    let s = subset_eval::subset_t_sandwich(k, &sizes, n, q).map_err(to_py)?;
    Ok((ratio(&s.lower), ratio(&s.upper)))
}

/// The asymptotic functional with its minimizing frequency and relabeling
/// rule (binary), or minimizing label frequencies (larger alphabets).
#[pyfunction]
#[pyo3(signature = (support, probs, q = 2, tol = None))]
fn f_asymptotic<'py>(
    py: Python<'py>,
    support: Vec<usize>,
    probs: Vec<String>,
    q: usize,
    tol: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let ps = distribution(support, probs)?;
    let mean = rational::to_f64(&ps.mean());
    let out = PyDict::new(py);
    if q == 2 {
        let f = py
            .detach(|| asymptotic::f_binary(&ps, tol.unwrap_or(asymptotic::DEFAULT_LAMBDA_TOL)))
            .map_err(to_py)?;
        out.set_item("value", f.value)?;
        out.set_item("lambda", f.lambda)?;
        out.set_item("gamma", f.policy.gamma)?;
        out.set_item("mu", f.policy.mu.clone())?;
        out.set_item("resolution", f.resolution)?;
        out.set_item("point", (mean / f.value, 1.0 / f.value))?;
    } else {
        let f = py
            .detach(|| asymptotic::f_general(&ps, q, tol.unwrap_or(asymptotic::DEFAULT_PX_GRID)))
            .map_err(to_py)?;
        out.set_item("value", f.value)?;
        out.set_item("px", f.px.clone())?;
        out.set_item("resolution", f.resolution)?;
        out.set_item("point", (mean / f.value, 1.0 / f.value))?;
    }
    Ok(out)
}

#[pyfunction]
fn psi(s: usize, lam: f64) -> f64 {
    asymptotic::psi(s, lam)
}

#[pyfunction]
fn phi(s: usize, lam: f64) -> f64 {
    asymptotic::phi(s, lam)
}

/// Dual certificate for mean `c` as a dict with keys `c, pi, eta, mu, Z, n, s0`.
#[pyfunction]
#[pyo3(signature = (c, n = 10, s0 = None))]
fn dual_certificate<'py>(
    py: Python<'py>,
    c: f64,
    n: usize,
    s0: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let cert = py
        .detach(|| asymptotic::dual_certificate(c, n, s0))
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("c", cert.c)?;
    out.set_item("pi", cert.pis.clone())?;
    out.set_item("eta", cert.eta)?;
    out.set_item("mu", cert.mu)?;
    out.set_item("Z", cert.z)?;
    out.set_item("n", cert.n)?;
    out.set_item("s0", cert.s0)?;
    out.set_item("audited", cert.audit(4 * cert.s0) && cert.tail_holds())?;
    Ok(out)
}

/// `(support, masses, (epsilon, rho))` of the best distribution found.
#[pyfunction]
#[pyo3(signature = (c, support_width = 2, restarts = 2, seed = 0))]
#[allow(clippy::type_complexity)]
fn achievable_search(
    py: Python<'_>,
    c: f64,
    support_width: usize,
    restarts: usize,
    seed: u64,
) -> PyResult<(Vec<usize>, Vec<f64>, (f64, f64))> {
    let found = py
        .detach(|| asymptotic::achievable_search(c, support_width, restarts, seed))
        .map_err(to_py)?;
    Ok((
        found.ps.support().to_vec(),
        found.ps.probs_f64(),
        (found.point.epsilon, found.point.rho),
    ))
}

#[pyfunction]
fn covering_bound(q: usize, t: usize, rho: f64) -> PyResult<f64> {
    regions::covering_bound(q, t, rho).map_err(to_py)
}

/// Region boundary as CSV text. `kind` is one of `interp`, `finite-t`,
/// `q3t1`, `covering`, `rinfty-k`, `scenarios`.
#[pyfunction]
#[pyo3(signature = (kind, q = 2, t = 1, k = 3, grid = 84))]
fn region_csv(
    py: Python<'_>,
    kind: &str,
    q: usize,
    t: usize,
    k: usize,
    grid: usize,
) -> PyResult<String> {
    let curves = py
        .detach(|| -> Result<Vec<regions::RegionCurve>, Error> {
            Ok(match kind {
                "interp" => vec![regions::region_interp(q)?],
                "finite-t" => vec![regions::region_finite_t_binary(t)?],
                "q3t1" => vec![regions::region_q3_t1()],
                "covering" => vec![regions::covering_curve(q, t, 1.5, 200)?],
                "rinfty-k" => vec![regions::region_rinfty_k(k, q, grid, DEFAULT_BUDGET)?],
                "scenarios" => regions::region_scenarios(q)?,
                other => return Err(Error::InvalidArgument(format!("unknown region {other:?}"))),
            })
        })
        .map_err(to_py)?;
    Ok(regions::csv_string(&curves))
}

#[pymodule]
fn defect_designs_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BudgetExceeded", m.py().get_type::<BudgetExceeded>())?;
    m.add("RegionUnknown", m.py().get_type::<RegionUnknown>())?;
    m.add_class::<PyDesign>()?;
    m.add_function(wrap_pyfunction!(repetition, m)?)?;
    m.add_function(wrap_pyfunction!(complete, m)?)?;
    m.add_function(wrap_pyfunction!(subset, m)?)?;
    m.add_function(wrap_pyfunction!(hamming_block, m)?)?;
    m.add_function(wrap_pyfunction!(copy, m)?)?;
    m.add_function(wrap_pyfunction!(merge, m)?)?;
    m.add_function(wrap_pyfunction!(symmetrize, m)?)?;
    m.add_function(wrap_pyfunction!(search_min_edges, m)?)?;
    m.add_function(wrap_pyfunction!(f_k, m)?)?;
    m.add_function(wrap_pyfunction!(f_kn, m)?)?;
    m.add_function(wrap_pyfunction!(subset_t_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(f_asymptotic, m)?)?;
    m.add_function(wrap_pyfunction!(psi, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(dual_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(achievable_search, m)?)?;
    m.add_function(wrap_pyfunction!(covering_bound, m)?)?;
    m.add_function(wrap_pyfunction!(region_csv, m)?)?;
    Ok(())
}
