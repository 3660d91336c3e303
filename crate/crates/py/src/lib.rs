//! Python bindings: URL keys, CDX parsing, fixture stores and the pipeline commands.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;
use tempex::change::CategoryCounts;
use tempex::fixture::{scenarios, FixtureStore};
use tempex::pipeline::{
    read_seeds, run_analyze, run_assemble, run_crawl, run_provenance, AssembleInputs, Context, PipelineError,
    RunConfig,
};
use tempex::url_keys::ScopeRule;

create_exception!(_tempex, TempexError, PyException);
create_exception!(_tempex, ConfigError, TempexError);
create_exception!(_tempex, BackendError, TempexError);
create_exception!(_tempex, OutputError, TempexError);

fn pipeline_err(e: PipelineError) -> PyErr {
    let msg = e.to_string();
    match e {
        PipelineError::Config(_) => ConfigError::new_err(msg),
        PipelineError::Backend(_) => BackendError::new_err(msg),
        PipelineError::Output(_) => OutputError::new_err(msg),
    }
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Serializes through JSON so Python gets plain dicts and lists.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Canonical lookup key for a URL.
#[pyclass(frozen, get_all, skip_from_py_object, module = "tempex")]
#[derive(Clone)]
struct SurtKey {
    key: String,
    source_url: String,
}

#[pymethods]
impl SurtKey {
    fn host_part(&self) -> &str {
        self.key.split(')').next().unwrap_or("")
    }

    fn __repr__(&self) -> String {
        format!("SurtKey({:?})", self.key)
    }

    fn __str__(&self) -> &str {
        &self.key
    }
}

#[pyfunction]
fn canonicalize(url: &str) -> PyResult<SurtKey> {
    let k = tempex::url_keys::canonicalize(url).map_err(value_err)?;
    Ok(SurtKey {
        key: k.key,
        source_url: k.source_url,
    })
}

/// `"high"` or `"deep"`.
#[pyfunction]
#[pyo3(signature = (url, high_threshold = tempex::url_keys::DEFAULT_HIGH_THRESHOLD))]
fn classify_depth(url: &str, high_threshold: usize) -> PyResult<&'static str> {
    let class = tempex::url_keys::classify_depth(url, high_threshold).map_err(value_err)?;
    Ok(class.class.as_str())
}

#[pyfunction]
fn in_scope(url: &str, suffixes: Vec<String>) -> PyResult<bool> {
    tempex::url_keys::in_scope(url, &ScopeRule::suffixes(suffixes)).map_err(value_err)
}

/// Parses one 7-field CDX row into a dict.
#[pyfunction]
fn parse_cdx_line<'py>(py: Python<'py>, line: &str) -> PyResult<Bound<'py, PyAny>> {
    let record = tempex::cdx::parse_cdx_line(line).map_err(value_err)?;
    to_py(py, &record)
}

/// Shape name of a three-point series.
#[pyfunction]
fn shape_of<'py>(py: Python<'py>, a: usize, b: usize, c: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &tempex::provenance::shape_of(a, b, c))
}

/// Category percentages from page counts; zero denominators give `None`.
#[pyfunction]
fn category_percentages<'py>(
    py: Python<'py>,
    total_pages: usize,
    changed: usize,
    with_deletions: usize,
    deleted_both: usize,
    deleted_middle_only: usize,
    deleted_prior_only: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let counts = CategoryCounts {
        total_pages,
        changed,
        with_deletions,
        deleted_both,
        deleted_middle_only,
        deleted_prior_only,
    };
    to_py(py, &counts.percentages())
}

/// Writes every built-in fixture scenario under `out`; returns their names.
#[pyfunction]
fn generate_fixtures(py: Python<'_>, out: PathBuf) -> PyResult<Vec<&'static str>> {
    py.detach(|| scenarios::generate_all(&out))
        .map_err(|e| OutputError::new_err(format!("{}: {e}", out.display())))?;
    Ok(scenarios::all().iter().map(|s| s.name).collect())
}

/// A loaded fixture directory.
#[pyclass(frozen, module = "tempex")]
struct Fixture {
    store: FixtureStore,
    root: PathBuf,
}

#[pymethods]
impl Fixture {
    #[new]
    fn new(py: Python<'_>, root: PathBuf) -> PyResult<Self> {
        let store = py
            .detach(|| FixtureStore::load(&root))
            .map_err(|e| BackendError::new_err(e.to_string()))?;
        Ok(Fixture { store, root })
    }

    fn __len__(&self) -> usize {
        self.store.len()
    }

    /// Every stored capture as a CDX row dict, sorted by key and time.
    fn cdx_dump<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.store.cdx_dump())
    }

    fn __repr__(&self) -> String {
        format!("Fixture({:?}, keys={})", self.root.display().to_string(), self.store.len())
    }
}

/// An opened run configuration; each method is one pipeline command.
#[pyclass(frozen, module = "tempex")]
struct Pipeline {
    ctx: Context,
}

#[pymethods]
impl Pipeline {
    /// Loads a JSON run config. Keyword overrides: quota, seed, workers.
    #[new]
    #[pyo3(signature = (config, quota = None, seed = None, workers = None))]
    fn new(
        py: Python<'_>,
        config: PathBuf,
        quota: Option<usize>,
        seed: Option<u64>,
        workers: Option<usize>,
    ) -> PyResult<Self> {
        let mut run = RunConfig::load(&config).map_err(pipeline_err)?;
        if let Some(q) = quota {
            run.quota = q;
        }
        if let Some(s) = seed {
            run.seed = s;
        }
        if workers.is_some() {
            run.workers = workers;
        }
        let ctx = py.detach(|| Context::new(run)).map_err(pipeline_err)?;
        Ok(Pipeline { ctx })
    }

    #[getter]
    fn epochs(&self) -> Vec<String> {
        self.ctx.epochs.iter().map(|e| e.name.clone()).collect()
    }

    /// Crawls from `seeds` (a list, or the config's seed file) into `out`.
    #[pyo3(signature = (out, seeds = None))]
    fn crawl<'py>(&self, py: Python<'py>, out: PathBuf, seeds: Option<Vec<String>>) -> PyResult<Bound<'py, PyAny>> {
        let seeds = match seeds {
            Some(s) => s,
            None => {
                let path = self.ctx.config.inputs.seeds.clone().ok_or_else(|| ConfigError::new_err("no seeds"))?;
                read_seeds(&path).map_err(pipeline_err)?
            }
        };
        let (_, summary) = py.detach(|| run_crawl(&self.ctx, &seeds, &out)).map_err(pipeline_err)?;
        to_py(py, &summary)
    }

    /// Assembles tuples into `out`; `sources` are extra input files.
    #[pyo3(signature = (out, sources = Vec::new()))]
    fn assemble<'py>(&self, py: Python<'py>, out: PathBuf, sources: Vec<PathBuf>) -> PyResult<Bound<'py, PyAny>> {
        let mut inputs = AssembleInputs::from_config(&self.ctx.config);
        for s in &sources {
            inputs.add_sniffed(s).map_err(pipeline_err)?;
        }
        let assembly = py.detach(|| run_assemble(&self.ctx, &inputs, &out)).map_err(pipeline_err)?;
        to_py(py, &assembly.report)
    }

    fn provenance<'py>(&self, py: Python<'py>, triplets: PathBuf, out: PathBuf) -> PyResult<Bound<'py, PyAny>> {
        let report = py.detach(|| run_provenance(&self.ctx, &triplets, &out)).map_err(pipeline_err)?;
        to_py(py, &report)
    }

    fn analyze<'py>(&self, py: Python<'py>, triplets: PathBuf, out: PathBuf) -> PyResult<Bound<'py, PyAny>> {
        let report = py.detach(|| run_analyze(&self.ctx, &triplets, &out)).map_err(pipeline_err)?;
        to_py(py, &report)
    }
}

#[pymodule]
fn _tempex(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("TempexError", py.get_type::<TempexError>())?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("BackendError", py.get_type::<BackendError>())?;
    m.add("OutputError", py.get_type::<OutputError>())?;
    m.add_class::<SurtKey>()?;
    m.add_class::<Fixture>()?;
    m.add_class::<Pipeline>()?;
    m.add_function(wrap_pyfunction!(canonicalize, m)?)?;
    m.add_function(wrap_pyfunction!(classify_depth, m)?)?;
    m.add_function(wrap_pyfunction!(in_scope, m)?)?;
    m.add_function(wrap_pyfunction!(parse_cdx_line, m)?)?;
    m.add_function(wrap_pyfunction!(shape_of, m)?)?;
    m.add_function(wrap_pyfunction!(category_percentages, m)?)?;
    m.add_function(wrap_pyfunction!(generate_fixtures, m)?)?;
    m.add(
        "__all__",
        vec![
            "TempexError",
            "ConfigError",
            "BackendError",
            "OutputError",
            "SurtKey",
            "Fixture",
            "Pipeline",
            "canonicalize",
            "classify_depth",
            "in_scope",
            "parse_cdx_line",
            "shape_of",
            "category_percentages",
            "generate_fixtures",
        ],
    )?;
    Ok(())
}
