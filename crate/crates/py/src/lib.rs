//! Python bindings: the measure, the L-function and the combinatorial checks.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cantor_lab::combinatorics as comb;
use cantor_lab::error::LabError;
use cantor_lab::measure;
use cantor_lab::moments;
use cantor_lab::profiler;
use cantor_lab::special::{self, AfeOptions, ComplexPoint, Method};

fn err(e: LabError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "CantorSpec", module = "cantor_lab_py")]
#[derive(Clone)]
struct PySpec {
    inner: measure::CantorSpec,
}

#[pymethods]
impl PySpec {
    #[new]
    #[pyo3(signature = (theta0 = 0.5, theta1 = 2.0, level = 12, keep_count = 2, base = 3))]
    fn new(theta0: f64, theta1: f64, level: u32, keep_count: u32, base: u32) -> PyResult<Self> {
        let inner = measure::CantorSpec::new(theta0, theta1, level, keep_count, base).map_err(err)?;
        Ok(PySpec { inner })
    }

    #[getter]
    fn theta0(&self) -> f64 {
        self.inner.theta0
    }

    #[getter]
    fn theta1(&self) -> f64 {
        self.inner.theta1
    }

    #[getter]
    fn level(&self) -> u32 {
        self.inner.level
    }

    fn dimension(&self) -> f64 {
        self.inner.dimension()
    }

    fn nu_hat(&self, n: u64) -> Complex64 {
        self.inner.nu_hat(n)
    }

    /// Coefficients `0..=n`; `level` truncates the product.
    #[pyo3(signature = (n, level = None))]
    fn coefficient_table(&self, n: usize, level: Option<u32>) -> Vec<Complex64> {
        self.inner.coefficient_table(n, level)
    }

    fn wick_constants<'py>(&self, py: Python<'py>, n: usize) -> PyResult<Bound<'py, PyDict>> {
        let w = measure::wick_constants(&self.inner, n);
        let d = PyDict::new_bound(py);
        d.set_item("c_nu", w.c_nu)?;
        d.set_item("c4", w.c4)?;
        d.set_item("c6", w.c6)?;
        d.set_item("wick4", w.wick4())?;
        d.set_item("wick6", w.wick6())?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        let s = &self.inner;
        format!(
            "CantorSpec(theta0={}, theta1={}, level={}, keep_count={}, base={})",
            s.theta0, s.theta1, s.level, s.keep_count, s.base
        )
    }
}

#[pyclass(name = "LFunction", module = "cantor_lab_py")]
struct PyLFunction {
    inner: special::LFunction,
}

#[pymethods]
impl PyLFunction {
    #[new]
    fn new(spec: &PySpec) -> PyResult<Self> {
        Ok(PyLFunction { inner: special::LFunction::new(spec.inner).map_err(err)? })
    }

    /// `method`: "direct", "average", "afe" or "afe-smooth".
    #[pyo3(signature = (sigma, t, method = "average"))]
    fn eval(&self, py: Python<'_>, sigma: f64, t: f64, method: &str) -> PyResult<Complex64> {
        let m = match method {
            "direct" => Method::Direct,
            "average" => Method::MeasureAverage,
            "afe" => Method::Afe(AfeOptions::default()),
            "afe-smooth" => Method::Afe(AfeOptions::smooth()),
            other => return Err(PyValueError::new_err(format!("unknown method {other}"))),
        };
        py.allow_threads(|| self.inner.eval(ComplexPoint::new(sigma, t), m)).map_err(err)
    }

    fn od<'py>(&self, py: Python<'py>, t: f64) -> PyResult<Bound<'py, PyDict>> {
        let r = py.allow_threads(|| moments::od_t(t, &self.inner.unit)).map_err(err)?;
        let d = PyDict::new_bound(py);
        d.set_item("t", r.t)?;
        d.set_item("terms", r.terms)?;
        d.set_item("od", r.od)?;
        d.set_item("diagonal", r.diagonal)?;
        d.set_item("ratio", r.ratio())?;
        Ok(d)
    }

    fn atom_count(&self) -> usize {
        self.inner.native.len()
    }
}

#[pyfunction]
fn hurwitz_zeta(sigma: f64, t: f64, alpha: f64) -> PyResult<Complex64> {
    special::hurwitz_zeta(ComplexPoint::new(sigma, t), alpha).map_err(err)
}

#[pyfunction]
fn d2k(spec: &PySpec, k: u32, n: u64) -> PyResult<f64> {
    comb::d2k(&spec.inner, k, n).map_err(err)
}

#[pyfunction]
fn vo_2k(spec: &PySpec, k: usize, n: u64) -> PyResult<f64> {
    comb::vo_2k(&spec.inner, k, n).map_err(err)
}

/// Groups as `(sum, product, [multiset, ...])`.
#[pyfunction]
fn multiset_collisions(k: usize, max_element: u64) -> PyResult<Vec<(u64, u128, Vec<Vec<u64>>)>> {
    let g = comb::multiset_collisions(k, max_element).map_err(err)?;
    Ok(g.into_iter().map(|c| (c.sum, c.product, c.multisets)).collect())
}

/// `(h, p, alpha_num, alpha_den)` for a 4-tuple.
#[pyfunction]
fn collision_record(m1: u64, m2: u64, m3: u64, m4: u64) -> PyResult<(i64, i64, i64, i64)> {
    let r = comb::CollisionRecord::new([m1, m2, m3, m4]).map_err(err)?;
    Ok((r.h, r.p, r.alpha_num, r.alpha_den))
}

/// Number of in-support shifts with `h <= 3` among tuples below `bound`.
#[pyfunction]
fn void_hits(bound: u64) -> PyResult<usize> {
    Ok(comb::collision_atlas(bound, 0).map_err(err)?.void_hits.len())
}

#[pyfunction]
fn tau(n: u64) -> PyResult<u64> {
    if n == 0 {
        return Err(PyValueError::new_err("tau needs n >= 1"));
    }
    Ok(comb::tau(n))
}

#[pyfunction]
#[pyo3(signature = (d, mu_zeta = 13.0 / 84.0, eta = 0.0))]
fn exponent_formulas<'py>(py: Python<'py>, d: f64, mu_zeta: f64, eta: f64) -> PyResult<Bound<'py, PyDict>> {
    let f = profiler::exponent_formulas(d, mu_zeta, eta).map_err(err)?;
    let out = PyDict::new_bound(py);
    out.set_item("d_star", f.d_star)?;
    out.set_item("subconvex", f.subconvex)?;
    out.set_item("rajchman", f.rajchman)?;
    out.set_item("d_crit", f.d_crit)?;
    Ok(out)
}

#[pyfunction]
fn slope_level(s: f64) -> PyResult<f64> {
    profiler::slope_level(s).map_err(err)
}

/// Best convex integer-slope profile: `(slopes, breakpoints, intercept, rms)`.
#[pyfunction]
fn fit_profile(sigmas: Vec<f64>, mu_hat: Vec<f64>) -> PyResult<(Vec<i32>, Vec<f64>, f64, f64)> {
    let p = profiler::fit_profile(&sigmas, &mu_hat).map_err(err)?;
    Ok((p.fit_slopes, p.breakpoints, p.fit_intercept, p.rms))
}

#[pymodule]
fn cantor_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpec>()?;
    m.add_class::<PyLFunction>()?;
    m.add_function(wrap_pyfunction!(hurwitz_zeta, m)?)?;
    m.add_function(wrap_pyfunction!(d2k, m)?)?;
    m.add_function(wrap_pyfunction!(vo_2k, m)?)?;
    m.add_function(wrap_pyfunction!(multiset_collisions, m)?)?;
    m.add_function(wrap_pyfunction!(collision_record, m)?)?;
    m.add_function(wrap_pyfunction!(void_hits, m)?)?;
    m.add_function(wrap_pyfunction!(tau, m)?)?;
    m.add_function(wrap_pyfunction!(exponent_formulas, m)?)?;
    m.add_function(wrap_pyfunction!(slope_level, m)?)?;
    m.add_function(wrap_pyfunction!(fit_profile, m)?)?;
    Ok(())
}
