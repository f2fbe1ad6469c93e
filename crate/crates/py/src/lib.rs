//! Python bindings: sessions, the terminal dispatcher and the bundled
//! evaluations.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde::Serialize;
use sparse_wm::corpus::data::bundled_suite;
use sparse_wm::corpus::harness::{crossvalidate, suite_config};
use sparse_wm::interface::snapshot::{from_bytes, to_bytes};
use sparse_wm::interface::Console;
use sparse_wm::{Config, Error, Session};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(m) => PyIOError::new_err(m),
        Error::Config(_) | Error::Parse { .. } | Error::Protocol(_) | Error::Length { .. } => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Converts through JSON so Python sees plain dicts and lists.
fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn make_config(config_json: Option<&str>, seed: Option<u64>, base: Config) -> PyResult<Config> {
    let mut c = match config_json {
        Some(text) => Config::from_json(text).map_err(py_err)?,
        None => base,
    };
    if let Some(s) = seed {
        c.seed = s;
    }
    Ok(c)
}

/// A learning session behind the same dispatcher as the terminal.
#[pyclass(name = "Session", unsendable)]
struct PySession {
    console: Console,
}

#[pymethods]
impl PySession {
    #[new]
    #[pyo3(signature = (config_json=None, seed=None))]
    fn new(config_json: Option<&str>, seed: Option<u64>) -> PyResult<Self> {
        let base = Config {
            auto_exploit: true,
            ..Config::default()
        };
        let config = make_config(config_json, seed, base)?;
        Ok(PySession {
            console: Console::new(Session::new(config).map_err(py_err)?),
        })
    }

    /// Submits one line; returns the printed output lines.
    fn submit(&mut self, line: &str) -> PyResult<Vec<String>> {
        Ok(self.console.submit(line).map_err(py_err)?.output)
    }

    /// Submits one line; returns the structured reply, or None for
    /// interface commands.
    fn submit_reply<'py>(&mut self, py: Python<'py>, line: &str) -> PyResult<Bound<'py, PyAny>> {
        let r = self.console.submit(line).map_err(py_err)?;
        to_py(py, &r.reply)
    }

    /// Answers the loaded question with the learned policy.
    fn exploit(&mut self) -> PyResult<String> {
        Ok(self.console.session_mut().exploit().map_err(py_err)?.text())
    }

    fn buffers<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.console.session().buffers())
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.console.session().stats())
    }

    /// Active neurons and decoded content of every state component.
    fn state<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &sparse_wm::interface::console::components(self.console.session()))
    }

    fn to_bytes(&self) -> PyResult<Vec<u8>> {
        to_bytes(self.console.session()).map_err(py_err)
    }

    #[staticmethod]
    fn from_bytes(data: Vec<u8>) -> PyResult<Self> {
        Ok(PySession {
            console: Console::new(from_bytes(&data).map_err(py_err)?),
        })
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.console.session())
    }
}

/// Cross-validation over the bundled question banks; returns the report as
/// tab-separated text.
#[pyfunction]
#[pyo3(signature = (rounds=4, config_json=None, seed=None))]
fn crossvalidate_bundled(rounds: usize, config_json: Option<&str>, seed: Option<u64>) -> PyResult<String> {
    let config = make_config(config_json, seed, suite_config())?;
    Ok(crossvalidate(&config, &bundled_suite(), rounds).map_err(py_err)?.to_string())
}

#[pymodule]
fn sparse_wm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySession>()?;
    m.add_function(wrap_pyfunction!(crossvalidate_bundled, m)?)?;
    Ok(())
}
