//! Python bindings: run experiments and drive the command line from Python.
//!
//! Rationals cross the boundary as strings such as `"-3/2"`; reports as the
//! JSON document the `json` format renders.

use std::collections::HashMap;

use mgame::error::Error;
use mgame::experiments::{self, EXPERIMENTS};
use mgame::report::{Format, Report};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::Eval { .. } | Error::CoinsExhausted(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn overrides(params: Option<HashMap<String, String>>) -> Vec<(String, String)> {
    let mut v: Vec<(String, String)> = params.unwrap_or_default().into_iter().collect();
    v.sort();
    v
}

fn report(name: &str, params: Option<HashMap<String, String>>) -> PyResult<Report> {
    experiments::run_experiment(name, &overrides(params)).map_err(to_py)
}

/// `[(name, summary, [(param, default), ...]), ...]`
#[pyfunction]
fn list_experiments() -> Vec<(String, String, Vec<(String, String)>)> {
    EXPERIMENTS
        .iter()
        .map(|e| {
            let params = e.params.iter().map(|p| (p.name.to_string(), p.default.to_string())).collect();
            (e.name.to_string(), e.summary.to_string(), params)
        })
        .collect()
}

/// Runs an experiment and renders its report as `json`, `md` or `csv`.
#[pyfunction]
#[pyo3(signature = (name, params=None, format="json"))]
fn run_experiment(name: &str, params: Option<HashMap<String, String>>, format: &str) -> PyResult<String> {
    let format: Format = format.parse().map_err(to_py)?;
    report(name, params)?.render(format).map_err(to_py)
}

/// Named findings of an experiment and whether each holds.
#[pyfunction]
#[pyo3(signature = (name, params=None))]
fn findings(name: &str, params: Option<HashMap<String, String>>) -> PyResult<HashMap<String, bool>> {
    Ok(report(name, params)?.evaluate_findings().map_err(to_py)?.into_iter().collect())
}

/// Runs the `mgame` command line on `args` (without the program name) and
/// returns `(exit_code, stdout, stderr)`.
#[pyfunction]
fn cli(args: Vec<String>) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("mgame".to_string()).chain(args);
    let code = mgame::cli::run_cli_with(argv, &mut out, &mut err);
    (code, String::from_utf8_lossy(&out).into_owned(), String::from_utf8_lossy(&err).into_owned())
}

#[pymodule]
fn mgame_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(list_experiments, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(findings, m)?)?;
    m.add_function(wrap_pyfunction!(cli, m)?)?;
    Ok(())
}
