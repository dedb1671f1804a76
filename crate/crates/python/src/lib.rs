//! Python bindings for `stein_verify`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use stein_verify::config::ExperimentConfig;
use stein_verify::harness::{self, ConcentrationEstimate, SetFamily};
use stein_verify::rng::{tags, StreamKey};
use stein_verify::{report, runner, stein, DistributionFamily, HalfSpace, Polytope, Tolerances};

fn err(e: stein_verify::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A closed convex set in R^k.
#[pyclass(name = "ConvexSet", frozen)]
#[derive(Clone)]
struct PyConvexSet {
    inner: stein_verify::ConvexSet,
}

#[pymethods]
impl PyConvexSet {
    #[staticmethod]
    fn half_space(normal: Vec<f64>, offset: f64) -> PyResult<Self> {
        let inner = HalfSpace::from_direction(&normal, offset).map_err(err)?.into();
        Ok(Self { inner })
    }

    #[staticmethod]
    fn ball(center: Vec<f64>, radius: f64) -> PyResult<Self> {
        let inner = stein_verify::ConvexSet::ball(center, radius).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn polytope(normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> PyResult<Self> {
        if normals.len() != offsets.len() {
            return Err(PyValueError::new_err("normals and offsets differ in length"));
        }
        let faces = normals
            .iter()
            .zip(&offsets)
            .map(|(a, &b)| HalfSpace::from_direction(a, b))
            .collect::<stein_verify::Result<Vec<_>>>()
            .map_err(err)?;
        let inner = Polytope::new(faces).map_err(err)?.into();
        Ok(Self { inner })
    }

    #[staticmethod]
    fn random_polytope(k: usize, faces: usize, seed: u64) -> PyResult<Self> {
        let mut rng = StreamKey::new(seed, tags::RANDOM_SET).rng(0);
        let inner = Polytope::random(k, faces, &mut rng).map_err(err)?.into();
        Ok(Self { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind()
    }

    fn contains(&self, x: Vec<f64>) -> PyResult<bool> {
        self.inner.contains(&x, &Tolerances::default()).map_err(err)
    }

    /// Returns `(nearest, distance)`.
    fn project(&self, x: Vec<f64>) -> PyResult<(Vec<f64>, f64)> {
        let p = self.inner.project(&x, &Tolerances::default()).map_err(err)?;
        Ok((p.nearest.into_vec(), p.distance))
    }

    fn distance(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.distance(&x, &Tolerances::default()).map_err(err)
    }

    fn in_dilation(&self, x: Vec<f64>, eps: f64) -> PyResult<bool> {
        self.inner.in_dilation(&x, eps, &Tolerances::default()).map_err(err)
    }

    fn in_erosion(&self, x: Vec<f64>, eps: f64) -> PyResult<bool> {
        self.inner.in_erosion(&x, eps).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("ConvexSet(kind={}, dim={})", self.inner.kind(), self.inner.dim())
    }
}

/// The field `f(A, eps)`.
#[pyclass(name = "SteinField", frozen)]
struct PySteinField {
    inner: stein_verify::SteinField,
}

#[pymethods]
impl PySteinField {
    #[new]
    fn new(set: &PyConvexSet, eps: f64) -> PyResult<Self> {
        let inner = stein_verify::SteinField::new(set.inner.clone(), eps).map_err(err)?;
        Ok(Self { inner })
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.eval(&x).map_err(err)?.into_vec())
    }
}

fn family(name: &str, k: usize, n: usize, p: f64) -> PyResult<DistributionFamily> {
    match name {
        "rademacher" => DistributionFamily::rademacher(k, n),
        "gaussian" => DistributionFamily::gaussian(k, n),
        "centered-exponential" => DistributionFamily::centered_exponential(k, n),
        "heterogeneous-bernoulli" => DistributionFamily::heterogeneous_bernoulli(k, n, p),
        other => return Err(PyValueError::new_err(format!("unknown family `{other}`"))),
    }
    .map_err(err)
}

fn estimate_dict<'py>(py: Python<'py>, e: &ConcentrationEstimate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("p_hat", e.p_hat)?;
    d.set_item("ci_low", e.ci_low)?;
    d.set_item("ci_high", e.ci_high)?;
    d.set_item("bound", e.bound)?;
    d.set_item("successes", e.successes)?;
    d.set_item("samples", e.samples)?;
    d.set_item("verdict", e.verdict.as_str())?;
    Ok(d)
}

#[pyfunction]
fn psi(x: f64) -> f64 {
    stein::psi(x)
}

#[pyfunction]
fn lemma33_linear(x: Vec<f64>) -> f64 {
    stein::lemma33_linear(&x)
}

#[pyfunction]
fn lemma33_cubic_constant() -> f64 {
    stein::lemma33_cubic_constant()
}

#[pyfunction]
fn lemma34_mixed(u: Vec<f64>, v: Vec<f64>) -> PyResult<f64> {
    stein::lemma34_mixed(&u, &v).map_err(err)
}

#[pyfunction]
fn lemma34_bound(u: Vec<f64>, v: Vec<f64>) -> f64 {
    stein::lemma34_bound(&u, &v)
}

/// `sum_i E|X_i|^3` for a named family.
#[pyfunction]
#[pyo3(signature = (name, k, n, p = 0.5))]
fn gamma(name: &str, k: usize, n: usize, p: f64) -> PyResult<f64> {
    Ok(family(name, k, n, p)?.gamma().gamma)
}

#[pyfunction]
fn gaussian_concentration<'py>(
    py: Python<'py>,
    set: &PyConvexSet,
    eps1: f64,
    eps2: f64,
    samples: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let e = py
        .allow_threads(|| harness::gaussian_concentration(&set.inner, eps1, eps2, samples, seed, &Tolerances::default()))
        .map_err(err)?;
    estimate_dict(py, &e)
}

/// Discrepancy over `"halfspaces"` or `"balls"` on their default grids.
#[pyfunction]
#[pyo3(signature = (name, k, n, set_family, samples, seed, p = 0.5))]
#[allow(clippy::too_many_arguments)]
fn discrepancy<'py>(
    py: Python<'py>,
    name: &str,
    k: usize,
    n: usize,
    set_family: &str,
    samples: u64,
    seed: u64,
    p: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let fam = family(name, k, n, p)?;
    let sets = match set_family {
        "halfspaces" => SetFamily::half_spaces(),
        "balls" => SetFamily::balls(),
        other => return Err(PyValueError::new_err(format!("unknown set family `{other}`"))),
    };
    let d = py
        .allow_threads(|| harness::discrepancy(&fam, &sets, samples, seed))
        .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("gamma", d.gamma)?;
    out.set_item("bound", d.bound)?;
    out.set_item("sup_hat", d.sup_hat)?;
    out.set_item("argmax", d.argmax)?;
    out.set_item("se", d.se)?;
    out.set_item("verdict", d.verdict.as_str())?;
    Ok(out)
}

/// Runs an experiment from TOML text and returns the result record as JSON.
#[pyfunction]
fn run_config(py: Python<'_>, toml_text: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_toml(toml_text).map_err(err)?;
    let record = py.allow_threads(|| runner::run(&cfg)).map_err(err)?;
    report::to_json(&record).map_err(err)
}

#[pymodule]
fn stein_verify_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", stein_verify::VERSION)?;
    m.add_class::<PyConvexSet>()?;
    m.add_class::<PySteinField>()?;
    m.add_function(wrap_pyfunction!(psi, m)?)?;
    m.add_function(wrap_pyfunction!(lemma33_linear, m)?)?;
    m.add_function(wrap_pyfunction!(lemma33_cubic_constant, m)?)?;
    m.add_function(wrap_pyfunction!(lemma34_mixed, m)?)?;
    m.add_function(wrap_pyfunction!(lemma34_bound, m)?)?;
    m.add_function(wrap_pyfunction!(gamma, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_concentration, m)?)?;
    m.add_function(wrap_pyfunction!(discrepancy, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
