//! Python bindings: analyze, simulate and verify `.scop.dsl` sources.
//! Reports are returned as plain dicts with the same layout as the CLI's
//! JSON output.

use std::collections::HashMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde::Serialize;

use stackdist::cli;
use stackdist::frontend::{load, ErrorKind, Program};
use stackdist::model::{analyze_full, AnalysisOptions, CacheConfig, ModelError};
use stackdist::simulator::{compare, run};

const DEFAULT_LEVELS: [u64; 2] = [32 << 10, 1 << 20];

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn model_err(e: ModelError) -> PyErr {
    match e {
        ModelError::Config(c) => PyValueError::new_err(c.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn setup(
    source: &str,
    line_size: u64,
    caches: Option<Vec<u64>>,
    defines: Option<HashMap<String, i64>>,
) -> PyResult<(Program, CacheConfig)> {
    let cfg = CacheConfig::new(line_size, caches.unwrap_or_else(|| DEFAULT_LEVELS.to_vec()))
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let line = i64::try_from(line_size).map_err(|_| PyValueError::new_err("line size is too large"))?;
    let program = load(source, &defines.unwrap_or_default(), line).map_err(|e| {
        if e.kind == ErrorKind::Internal {
            PyRuntimeError::new_err(e.to_string())
        } else {
            PyValueError::new_err(e.to_string())
        }
    })?;
    Ok((program, cfg))
}

/// Model report: counts per statement and level, piece counts, timings.
#[pyfunction]
#[pyo3(signature = (source, line_size=64, caches=None, defines=None, equalization=true, rasterization=true, partial_enumeration=true))]
#[allow(clippy::too_many_arguments)]
fn analyze<'py>(
    py: Python<'py>,
    source: &str,
    line_size: u64,
    caches: Option<Vec<u64>>,
    defines: Option<HashMap<String, i64>>,
    equalization: bool,
    rasterization: bool,
    partial_enumeration: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let (program, cfg) = setup(source, line_size, caches, defines)?;
    let opts = AnalysisOptions { equalization, rasterization, partial_enumeration };
    let a = analyze_full(&program, &cfg, opts).map_err(model_err)?;
    to_py(py, &a.report)
}

/// Simulated counts with the same layout as the model's `counts`.
#[pyfunction]
#[pyo3(signature = (source, line_size=64, caches=None, defines=None))]
fn simulate<'py>(
    py: Python<'py>,
    source: &str,
    line_size: u64,
    caches: Option<Vec<u64>>,
    defines: Option<HashMap<String, i64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let (program, cfg) = setup(source, line_size, caches, defines)?;
    let (_, sim) = run(&program, &cfg).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &sim.counts)
}

/// Differences between model and simulator; an empty list means agreement.
#[pyfunction]
#[pyo3(signature = (source, line_size=64, caches=None, defines=None))]
fn verify<'py>(
    py: Python<'py>,
    source: &str,
    line_size: u64,
    caches: Option<Vec<u64>>,
    defines: Option<HashMap<String, i64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let (program, cfg) = setup(source, line_size, caches, defines)?;
    let a = analyze_full(&program, &cfg, AnalysisOptions::default()).map_err(model_err)?;
    let (_, sim) = run(&program, &cfg).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let diff = compare(&a.report.counts, &sim.counts).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &diff.entries)
}

#[derive(Serialize)]
struct AccessPieces<'a> {
    statement: &'a str,
    access: usize,
    array: &'a str,
    pieces: Vec<String>,
}

/// Stack distance pieces per access after the rewrites, as text.
#[pyfunction]
#[pyo3(signature = (source, line_size=64, defines=None))]
fn distances<'py>(
    py: Python<'py>,
    source: &str,
    line_size: u64,
    defines: Option<HashMap<String, i64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let (program, cfg) = setup(source, line_size, Some(vec![line_size]), defines)?;
    let a = analyze_full(&program, &cfg, AnalysisOptions::default()).map_err(model_err)?;
    let rows: Vec<AccessPieces> = a
        .distances
        .accesses
        .iter()
        .map(|d| AccessPieces {
            statement: &d.statement,
            access: d.access,
            array: &d.array,
            pieces: d.pieces.iter().map(|p| p.fmt_with_space()).collect(),
        })
        .collect();
    to_py(py, &rows)
}

/// Byte count from text such as `32K` or `1MiB`.
#[pyfunction]
fn parse_size(text: &str) -> PyResult<u64> {
    cli::parse_size(text).map_err(PyValueError::new_err)
}

#[pymodule]
fn stackdist_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(distances, m)?)?;
    m.add_function(wrap_pyfunction!(parse_size, m)?)?;
    Ok(())
}
