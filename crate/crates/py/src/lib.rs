//! Python bindings: compile problems, inspect and evaluate their bounds.

use std::collections::BTreeMap;

use causalbound::oracle::DistributionFile;
use causalbound::problem::{builtin, check_problem, verify_query, CompileOptions};
use causalbound::rational::{format_rational, parse_rational, to_f64};
use causalbound::simulation::{run_study, study_bounds};
use causalbound::symbolic::{complete_distribution, evaluate_bound};
use causalbound::{parse_problem, Rational, SymbolicBound, Tightness};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Symbolic lower and upper bounds for one query.
#[pyclass(name = "Bound", frozen)]
struct PyBound {
    inner: SymbolicBound,
}

#[pymethods]
impl PyBound {
    #[getter]
    fn query(&self) -> String {
        self.inner.query.clone()
    }

    /// The lower bound is the maximum of these expressions.
    #[getter]
    fn lower(&self) -> Vec<String> {
        self.inner.lower.iter().map(|e| e.render(&self.inner.legend)).collect()
    }

    /// The upper bound is the minimum of these expressions.
    #[getter]
    fn upper(&self) -> Vec<String> {
        self.inner.upper.iter().map(|e| e.render(&self.inner.legend)).collect()
    }

    #[getter]
    fn symbols(&self) -> Vec<String> {
        self.inner.legend.symbols()
    }

    #[getter]
    fn tight(&self) -> bool {
        self.inner.tightness == Tightness::Tight
    }

    #[getter]
    fn conditional(&self) -> bool {
        self.inner.conditional
    }

    #[getter]
    fn vertex_counts(&self) -> (usize, usize) {
        (self.inner.lower_vertex_count, self.inner.upper_vertex_count)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyBound { inner: SymbolicBound::from_json(text).map_err(value_error)? })
    }

    /// Exact `(lower, upper)` as fraction strings. Probabilities map each
    /// symbol to a string such as "3/10" or "0.25", or to an int.
    fn evaluate(&self, probabilities: &Bound<'_, PyDict>) -> PyResult<(String, String)> {
        let (lo, hi) = self.exact(probabilities)?;
        Ok((format_rational(&lo), format_rational(&hi)))
    }

    fn evaluate_float(&self, probabilities: &Bound<'_, PyDict>) -> PyResult<(f64, f64)> {
        let (lo, hi) = self.exact(probabilities)?;
        Ok((to_f64(&lo), to_f64(&hi)))
    }

    fn __repr__(&self) -> String {
        format!("Bound({:?}, {} lower, {} upper)", self.inner.query, self.inner.lower.len(), self.inner.upper.len())
    }
}

impl PyBound {
    fn exact(&self, probabilities: &Bound<'_, PyDict>) -> PyResult<(Rational, Rational)> {
        let mut entries = BTreeMap::new();
        for (k, v) in probabilities.iter() {
            let key: String = k.extract()?;
            let text = match v.extract::<String>() {
                Ok(s) => s,
                Err(_) => v.str()?.to_string(),
            };
            let value = parse_rational(&text).ok_or_else(|| value_error(format!("bad probability for {key}: {text}")))?;
            entries.insert(key, value);
        }
        let dist = complete_distribution(&self.inner.legend, &DistributionFile { legend: None, entries })
            .map_err(value_error)?;
        evaluate_bound(&self.inner, &dist).map_err(value_error)
    }
}

/// Compiles a problem file's text into one bound per query.
#[pyfunction]
fn compile(text: &str) -> PyResult<Vec<PyBound>> {
    let compiled = causalbound::compile_text(text, &CompileOptions::default()).map_err(value_error)?;
    Ok(compiled.bounds.into_iter().map(|inner| PyBound { inner }).collect())
}

/// Validation report as a dict with keys passed, tight, errors, findings, warnings.
#[pyfunction]
fn validate<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyDict>> {
    let problem = parse_problem(text).map_err(value_error)?;
    let report = check_problem(&problem).map_err(value_error)?;
    let v = &report.validation;
    let d = PyDict::new(py);
    d.set_item("passed", v.passed())?;
    d.set_item("tight", v.tightness() == Tightness::Tight)?;
    d.set_item("errors", v.errors.iter().map(|e| e.to_string()).collect::<Vec<_>>())?;
    d.set_item("findings", v.findings.iter().map(|f| f.to_string()).collect::<Vec<_>>())?;
    d.set_item("warnings", report.lint.warnings.iter().map(|w| w.message.clone()).collect::<Vec<_>>())?;
    Ok(d)
}

/// Number of mismatching trials per query against the exact LP optimum.
#[pyfunction]
#[pyo3(signature = (text, trials = 100, seed = 0))]
fn verify(text: &str, trials: usize, seed: u64) -> PyResult<Vec<usize>> {
    let compiled = causalbound::compile_text(text, &CompileOptions::default()).map_err(value_error)?;
    let pp = &compiled.prepared;
    compiled
        .bounds
        .iter()
        .zip(&pp.queries)
        .map(|(b, q)| Ok(verify_query(b, q, &pp.system, trials, seed).map_err(value_error)?.failures.len()))
        .collect()
}

/// The instrument comparison study as CSV text.
#[pyfunction]
#[pyo3(signature = (reps = 1000, seed = 0))]
fn simulate(reps: usize, seed: u64) -> PyResult<String> {
    let bounds = study_bounds(&CompileOptions::default()).map_err(value_error)?;
    Ok(run_study(&bounds, reps, seed).map_err(value_error)?.to_csv())
}

/// Built-in example problems keyed by file name.
#[pyfunction]
fn builtin_problems() -> BTreeMap<&'static str, &'static str> {
    builtin::ALL.into_iter().collect()
}

#[pymodule]
fn causalbound_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBound>()?;
    m.add_function(wrap_pyfunction!(compile, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_problems, m)?)?;
    Ok(())
}
