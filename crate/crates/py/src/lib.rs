//! Python bindings for the core crate: words, cylinder functions and
//! measures, eventually periodic tail points, and the headline computations
//! (seminorm, transfer-matrix radius, word-graph distances, Wasserstein,
//! Connes bracket, Kantorovich duality).

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rklab_core::connes;
use rklab_core::function::CylinderFunction;
use rklab_core::measure::CylinderMeasure;
use rklab_core::seminorm as core_seminorm;
use rklab_core::spectral as core_spectral;
use rklab_core::tailpoint::TailPoint;
use rklab_core::transport;
use rklab_core::word::Word as CoreWord;
use rklab_core::wordgraph::{self, WordGraph};
use rklab_core::{Error, Exp, Exponents};

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_p(p: &str) -> PyResult<Exponents> {
    Exponents::parse(p).map_err(err)
}

fn exp_to_py(e: Exp) -> f64 {
    match e {
        Exp::Finite(v) => v,
        Exp::Infinity => f64::INFINITY,
    }
}

/// A finite binary word, most significant letter first.
#[pyclass(name = "Word", frozen)]
#[derive(Clone)]
struct PyWord {
    inner: CoreWord,
}

#[pymethods]
impl PyWord {
    #[new]
    fn new(s: &str) -> PyResult<Self> {
        Ok(PyWord {
            inner: CoreWord::parse(s).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_index(index: usize, len: usize) -> PyResult<Self> {
        Ok(PyWord {
            inner: CoreWord::from_index(index, len).map_err(err)?,
        })
    }

    #[getter]
    fn index(&self) -> usize {
        self.inner.index()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Word('{}')", self.inner)
    }

    fn ones(&self) -> usize {
        self.inner.ones()
    }

    fn dyadic(&self) -> f64 {
        self.inner.dyadic()
    }
}

/// A function determined by its first `depth` coordinates, stored as a
/// table over all depth-length words in index order.
#[pyclass(name = "CylinderFunction")]
#[derive(Clone)]
struct PyFunction {
    inner: CylinderFunction,
}

#[pymethods]
impl PyFunction {
    #[new]
    fn new(depth: usize, values: Vec<f64>) -> PyResult<Self> {
        Ok(PyFunction {
            inner: CylinderFunction::new(depth, values).map_err(err)?,
        })
    }

    #[staticmethod]
    fn indicator(w: &PyWord) -> Self {
        PyFunction {
            inner: CylinderFunction::indicator(&w.inner),
        }
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("CylinderFunction(depth={})", self.inner.depth())
    }

    /// f o sigma, one level deeper.
    fn koopman(&self) -> PyResult<Self> {
        Ok(PyFunction {
            inner: self.inner.koopman().map_err(err)?,
        })
    }

    /// Lf: average over the removed first letter, one level shallower.
    fn ruelle(&self) -> Self {
        PyFunction {
            inner: self.inner.ruelle(),
        }
    }

    /// f o sigma - f.
    fn derivative(&self) -> PyResult<Self> {
        Ok(PyFunction {
            inner: self.inner.derivative().map_err(err)?,
        })
    }

    fn lift(&self, depth: usize) -> PyResult<Self> {
        Ok(PyFunction {
            inner: self.inner.lift(depth).map_err(err)?,
        })
    }

    fn sup_norm(&self) -> f64 {
        self.inner.sup_norm()
    }

    fn integrate(&self, mu: &PyMeasure) -> f64 {
        self.inner.integrate(&mu.inner)
    }

    fn eval(&self, w: &PyWord) -> f64 {
        self.inner.eval_word(&w.inner)
    }
}

/// A probability measure determined by cylinder weights at a fixed depth.
#[pyclass(name = "CylinderMeasure")]
#[derive(Clone)]
struct PyMeasure {
    inner: CylinderMeasure,
}

#[pymethods]
impl PyMeasure {
    #[new]
    fn new(depth: usize, weights: Vec<f64>) -> PyResult<Self> {
        Ok(PyMeasure {
            inner: CylinderMeasure::new(depth, weights).map_err(err)?,
        })
    }

    #[staticmethod]
    fn max_entropy(depth: usize) -> PyResult<Self> {
        Ok(PyMeasure {
            inner: CylinderMeasure::max_entropy(depth).map_err(err)?,
        })
    }

    #[staticmethod]
    fn bernoulli(depth: usize, q: f64) -> PyResult<Self> {
        Ok(PyMeasure {
            inner: CylinderMeasure::bernoulli(depth, q).map_err(err)?,
        })
    }

    #[staticmethod]
    fn dirac(x: &PyTailPoint, depth: usize) -> PyResult<Self> {
        Ok(PyMeasure {
            inner: CylinderMeasure::dirac(&x.inner, depth).map_err(err)?,
        })
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("CylinderMeasure(depth={})", self.inner.depth())
    }

    fn refine(&self, depth: usize) -> PyResult<Self> {
        Ok(PyMeasure {
            inner: self.inner.refine(depth).map_err(err)?,
        })
    }

    fn coarsen(&self, depth: usize) -> PyResult<Self> {
        Ok(PyMeasure {
            inner: self.inner.coarsen(depth).map_err(err)?,
        })
    }
}

/// An eventually periodic point `prefix (period)^inf` of the full 2-shift.
#[pyclass(name = "TailPoint", frozen)]
#[derive(Clone)]
struct PyTailPoint {
    inner: TailPoint,
}

#[pymethods]
impl PyTailPoint {
    #[new]
    fn new(prefix: &str, period: &str) -> PyResult<Self> {
        Ok(PyTailPoint {
            inner: TailPoint::parse(prefix, period).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "TailPoint('{}', '{}')",
            self.inner.prefix(),
            self.inner.period()
        )
    }

    fn coordinate(&self, i: usize) -> u8 {
        self.inner.coordinate(i)
    }

    fn truncate(&self, k: usize) -> PyWord {
        PyWord {
            inner: self.inner.truncate(k),
        }
    }
}

/// Commutator seminorm of `f` at exponent `p` (a number or "inf"), with the
/// mean chain and the sup-norm sandwich.
#[pyfunction]
fn seminorm<'py>(py: Python<'py>, f: &PyFunction, p: &str) -> PyResult<Bound<'py, PyDict>> {
    let p = parse_p(p)?;
    let b = core_seminorm::seminorm_bounds(&f.inner, &p);
    let d = PyDict::new(py);
    d.set_item("value", b.seminorm)?;
    d.set_item("upper", b.upper)?;
    d.set_item("lower", b.lower)?;
    d.set_item("lambda", exp_to_py(p.lambda))?;
    d.set_item(
        "chain",
        [
            b.chain.min,
            b.chain.harmonic,
            b.chain.geometric,
            b.chain.arithmetic,
            b.chain.quadratic,
        ],
    )?;
    Ok(d)
}

/// Spectral radius of the weighted transfer matrix for `w = f o sigma - f`,
/// with the variational lower bound in both normalizations.
#[pyfunction]
fn spectral_radius<'py>(py: Python<'py>, f: &PyFunction, p: &str) -> PyResult<Bound<'py, PyDict>> {
    let p = parse_p(p)?;
    let w = f.inner.derivative().map_err(err)?;
    let bound = core_spectral::variational_bound(&w, &p, core_spectral::DEFAULT_TOL).map_err(err)?;
    let radius = match p.lambda {
        Exp::Infinity => core_spectral::tropical_radius(&w),
        Exp::Finite(_) => core_spectral::weighted_radius(&w, &p, core_spectral::DEFAULT_TOL).map_err(err)?,
    };
    let d = PyDict::new(py);
    d.set_item("radius", radius)?;
    d.set_item("printed", bound.printed)?;
    d.set_item("normalized", bound.normalized)?;
    d.set_item("lambda", exp_to_py(p.lambda))?;
    Ok(d)
}

/// BFS distance between two same-length words in the word graph, plus the
/// closed-form candidate and its lower bound.
#[pyfunction]
fn graph_distance<'py>(py: Python<'py>, u: &PyWord, v: &PyWord) -> PyResult<Bound<'py, PyDict>> {
    let g = WordGraph::new(u.inner.len()).map_err(err)?;
    let bfs = g.bfs_distance(&u.inner, &v.inner).map_err(err)?;
    let rep = g.lcs_distance_formula(&u.inner, &v.inner).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("distance", bfs)?;
    d.set_item("formula", rep.value)?;
    d.set_item("lower_bound", rep.lower_bound)?;
    d.set_item("common_length", rep.length)?;
    Ok(d)
}

/// Orbit distance between two tail points, or None across orbit classes.
#[pyfunction]
fn orbit_distance(x: &PyTailPoint, y: &PyTailPoint) -> Option<usize> {
    wordgraph::d_infty(&x.inner, &y.inner)
}

/// W_{d_k} between two cylinder measures with its dual potential.
#[pyfunction]
fn wasserstein<'py>(
    py: Python<'py>,
    mu: &PyMeasure,
    nu: &PyMeasure,
    depth: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let rep = transport::wasserstein_graph(&mu.inner, &nu.inner, depth).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("value", rep.value)?;
    d.set_item("depth", rep.depth)?;
    d.set_item("potential", rep.potential)?;
    Ok(d)
}

/// Certified bracket for the depth-k noncommutative distance.
#[pyfunction]
#[pyo3(signature = (mu, nu, p, depth, budget = 2000))]
fn connes_bracket<'py>(
    py: Python<'py>,
    mu: &PyMeasure,
    nu: &PyMeasure,
    p: &str,
    depth: usize,
    budget: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let p = parse_p(p)?;
    let b = connes::connes_depth(&mu.inner, &nu.inner, &p, depth, budget).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("lower", b.lower)?;
    d.set_item("upper", b.upper)?;
    d.set_item("wasserstein", b.wasserstein)?;
    d.set_item("depth", b.depth)?;
    d.set_item("budget_exhausted", b.budget_exhausted)?;
    d.set_item(
        "witness",
        PyFunction {
            inner: b.witness,
        },
    )?;
    Ok(d)
}

/// Dense transportation LP with Kantorovich dual certificate.
#[pyfunction]
fn duality<'py>(
    py: Python<'py>,
    cost: Vec<Vec<f64>>,
    mu: Vec<f64>,
    nu: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let inst = transport::TransportInstance::new(cost, mu, nu).map_err(err)?;
    let primal = transport::transport_lp(&inst).map_err(err)?;
    let dual = transport::kantorovich_dual(&inst).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("value", primal.value)?;
    d.set_item("plan", primal.plan)?;
    d.set_item("a", dual.a)?;
    d.set_item("b", dual.b)?;
    d.set_item("gap", dual.gap)?;
    Ok(d)
}

#[pymodule]
fn rklab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWord>()?;
    m.add_class::<PyFunction>()?;
    m.add_class::<PyMeasure>()?;
    m.add_class::<PyTailPoint>()?;
    m.add_function(wrap_pyfunction!(seminorm, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_radius, m)?)?;
    m.add_function(wrap_pyfunction!(graph_distance, m)?)?;
    m.add_function(wrap_pyfunction!(orbit_distance, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein, m)?)?;
    m.add_function(wrap_pyfunction!(connes_bracket, m)?)?;
    m.add_function(wrap_pyfunction!(duality, m)?)?;
    Ok(())
}
