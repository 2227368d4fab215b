//! Python bindings. Structured results cross the boundary as JSON strings;
//! scalars and rankings come back as native Python values.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use witness_core::complexity::{analyze as analyze_ast, VariablePolicy};
use witness_core::harness::CoverageSpectrum;
use witness_core::orchestrator::{self, RunConfig, RunError};
use witness_core::program::SourceProgram;
use witness_core::sbfl;
use witness_core::spectra;
use witness_core::validation;

/// `{file: [line, ...]}` as Python passes it.
type Lines = BTreeMap<String, Vec<u32>>;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn run_err(e: RunError) -> PyErr {
    if e.is_setup() {
        value_err(e)
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn to_json(v: &impl serde::Serialize) -> String {
    serde_json::to_string(v).expect("serializable")
}

fn program(name: &str, source: &str) -> PyResult<SourceProgram> {
    SourceProgram::new(name, source.to_string()).map_err(value_err)
}

fn spectrum(lines: Lines) -> CoverageSpectrum {
    let mut s = CoverageSpectrum::new();
    for (file, ls) in &lines {
        for l in ls {
            s.insert(file, *l);
        }
    }
    s
}

/// Def-use table, variable ranking, regions and mutation target as JSON.
#[pyfunction]
fn analyze(source: &str) -> PyResult<String> {
    let ast = program("input", source)?.parse().map_err(value_err)?;
    let a = analyze_ast(&ast, VariablePolicy::Auto).map_err(value_err)?;
    Ok(to_json(&a))
}

/// Validation report as JSON. With `failing`, the oracle check runs too.
#[pyfunction]
#[pyo3(signature = (source, failing=None))]
fn check(source: &str, failing: Option<&str>) -> PyResult<String> {
    let candidate = program("candidate", source)?;
    let report = match failing {
        Some(f) => validation::validate(&candidate, &program("failing", f)?, None),
        None => validation::semantic_validate(&candidate, None),
    }
    .map_err(value_err)?;
    Ok(to_json(&report))
}

/// Ochiai score of a statement covered by the failing program and `ep`
/// passing programs.
#[pyfunction]
fn ochiai(ep: usize) -> f64 {
    sbfl::statement_score(ep)
}

/// Jaccard distance between two `{file: [line, ...]}` spectra.
#[pyfunction]
fn jaccard_distance(a: Lines, b: Lines) -> f64 {
    spectra::jaccard_dist(&spectrum(a), &spectrum(b))
}

/// `(file, score, rank)` triples for a failing spectrum and passing spectra.
#[pyfunction]
fn localize(failing: Lines, passing: Vec<Lines>) -> PyResult<Vec<(String, f64, usize)>> {
    let set = spectra::SpectrumSet {
        failing: spectrum(failing),
        passing: passing.into_iter().map(spectrum).collect(),
    };
    let ranking = sbfl::localize(&set).map_err(value_err)?;
    Ok(ranking
        .entries
        .into_iter()
        .map(|e| (e.file, e.score, e.rank))
        .collect())
}

/// Runs an isolation from a config file and returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (config, seed=None, out_dir=None))]
fn run(
    py: Python<'_>,
    config: PathBuf,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
) -> PyResult<String> {
    let mut c = RunConfig::load(&config).map_err(run_err)?;
    if seed.is_some() {
        c.seed = seed;
    }
    if let Some(o) = out_dir {
        c.out_dir = o;
    }
    let report = py.detach(|| orchestrator::run(&c)).map_err(run_err)?;
    Ok(report.to_json())
}

#[pymodule]
fn witness(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(ochiai, m)?)?;
    m.add_function(wrap_pyfunction!(jaccard_distance, m)?)?;
    m.add_function(wrap_pyfunction!(localize, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
