//! Python bindings: maps, dataset generation, training, grounding and planning.

use std::path::PathBuf;

use beliefnav::datagen::{read_dataset, write_dataset};
use beliefnav::{
    build_adjacency, evaluate, generate_dataset, ground, load_map, EvalReport, GenConfig, GroundError,
    LanguageConfig, Lexicon, ModelFile, PlanError, Search, TrainConfig, UpdateType,
};
use pyo3::exceptions::{PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn ground_error(e: GroundError) -> PyErr {
    match e {
        GroundError::Parse(p) => PyValueError::new_err(p.to_string()),
        step => PyRuntimeError::new_err(step.to_string()),
    }
}

#[pyclass(name = "AreaMap", module = "beliefnav", frozen)]
pub struct PyAreaMap {
    inner: beliefnav::AreaMap,
}

#[pymethods]
impl PyAreaMap {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        load_map(text.as_bytes()).map(|inner| Self { inner }).map_err(value_error)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let bytes = std::fs::read(&path).map_err(value_error)?;
        load_map(&bytes).map(|inner| Self { inner }).map_err(value_error)
    }

    fn area_ids(&self) -> Vec<String> {
        self.inner.areas().iter().map(|a| a.id.clone()).collect()
    }

    fn area<'py>(&self, py: Python<'py>, id: &str) -> PyResult<Bound<'py, PyDict>> {
        let a = self.inner.area(id).map_err(|e| PyKeyError::new_err(e.to_string()))?;
        let d = PyDict::new(py);
        let c = a.centroid();
        d.set_item("id", &a.id)?;
        d.set_item("category", &a.category)?;
        d.set_item("subcategory", &a.subcategory)?;
        d.set_item("name", &a.name)?;
        d.set_item("centroid", (c.x, c.y))?;
        d.set_item("size", a.size())?;
        Ok(d)
    }

    /// (width, height) of the belief grid.
    #[getter]
    fn grid_shape(&self) -> (usize, usize) {
        let g = self.inner.grid();
        (g.width, g.height)
    }

    fn __len__(&self) -> usize {
        self.inner.area_count()
    }

    fn __repr__(&self) -> String {
        let (w, h) = self.grid_shape();
        format!("AreaMap({} areas, {w}x{h} cells)", self.inner.area_count())
    }
}

#[pyfunction]
fn office_map() -> PyAreaMap {
    PyAreaMap { inner: beliefnav::office_map() }
}

#[pyclass(name = "Dataset", module = "beliefnav", frozen)]
pub struct PyDataset {
    inner: beliefnav::Dataset,
}

#[pymethods]
impl PyDataset {
    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        read_dataset(&dir).map(|inner| Self { inner }).map_err(value_error)
    }

    #[pyo3(signature = (dir, inline = false))]
    fn save(&self, dir: PathBuf, inline: bool) -> PyResult<()> {
        write_dataset(&self.inner, &dir, inline).map(|_| ()).map_err(value_error)
    }

    /// Sample count per update type.
    fn counts(&self) -> Vec<(&'static str, usize)> {
        UpdateType::ALL
            .iter()
            .map(|t| (t.name(), self.inner.samples.iter().filter(|s| s.update == *t).count()))
            .collect()
    }

    fn modifiers(&self) -> Vec<String> {
        self.inner.samples.iter().map(|s| s.modifier.clone()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.samples.len()
    }
}

#[pyfunction]
#[pyo3(signature = (map, k = 10, seed = 0))]
fn generate(map: &PyAreaMap, k: usize, seed: u64) -> PyResult<PyDataset> {
    let config = GenConfig { k, seed, ..GenConfig::default() };
    generate_dataset(&map.inner, &LanguageConfig::default().dictionary, &config)
        .map(|inner| PyDataset { inner })
        .map_err(value_error)
}

fn report_dict<'py>(py: Python<'py>, r: &EvalReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("samples", r.samples)?;
    d.set_item("type_accuracy", r.type_accuracy)?;
    d.set_item("area_accuracy", r.area_accuracy)?;
    d.set_item("direction_accuracy", r.direction_accuracy)?;
    d.set_item("kappa_accuracy", r.kappa_accuracy)?;
    Ok(d)
}

#[pyclass(name = "Trace", module = "beliefnav", frozen)]
pub struct PyTrace {
    inner: beliefnav::BeliefTrace,
}

#[pymethods]
impl PyTrace {
    /// (modifier, update type) per step.
    #[getter]
    fn steps(&self) -> Vec<(String, &'static str)> {
        self.inner.steps.iter().map(|s| (s.modifier.clone(), s.update.name())).collect()
    }

    #[pyo3(signature = (k = 5))]
    fn ranked(&self, k: usize) -> Vec<(String, f64)> {
        self.inner.ranked.iter().take(k).map(|r| (r.id.clone(), r.weight)).collect()
    }

    #[getter]
    fn goal(&self) -> Option<String> {
        self.inner.ranked.first().map(|r| r.id.clone())
    }

    /// Posterior after `step`, row-major with the southernmost row first.
    fn belief(&self, step: usize) -> PyResult<Vec<f64>> {
        self.inner
            .steps
            .get(step)
            .map(|s| s.posterior.cells().to_vec())
            .ok_or_else(|| PyKeyError::new_err(format!("trace has {} steps", self.inner.steps.len())))
    }

    fn __len__(&self) -> usize {
        self.inner.steps.len()
    }
}

#[pyclass(name = "Model", module = "beliefnav", frozen)]
pub struct PyModel {
    inner: ModelFile,
    report: Option<EvalReport>,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        ModelFile::load(&path)
            .map(|inner| Self { inner, report: None })
            .map_err(value_error)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(value_error)
    }

    /// Holdout metrics from training; `None` for loaded models.
    #[getter]
    fn report<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyDict>>> {
        self.report.as_ref().map(|r| report_dict(py, r)).transpose()
    }

    fn evaluate<'py>(&self, py: Python<'py>, map: &PyAreaMap, data: &PyDataset) -> PyResult<Bound<'py, PyDict>> {
        let r = evaluate(&self.inner.params, &data.inner.samples, &map.inner).map_err(value_error)?;
        report_dict(py, &r)
    }

    fn ground(&self, py: Python<'_>, map: &PyAreaMap, instruction: &str) -> PyResult<PyTrace> {
        py.detach(|| ground(instruction, &map.inner, &self.inner.params))
            .map(|inner| PyTrace { inner })
            .map_err(ground_error)
    }

    /// Modifier chain of an instruction, destination head last.
    fn parse(&self, instruction: &str) -> PyResult<Vec<String>> {
        self.inner
            .params
            .lexicon
            .parse_instruction(instruction)
            .map(|chain| chain.into_iter().rev().map(|m| m.raw).collect())
            .map_err(value_error)
    }
}

#[pyfunction]
#[pyo3(signature = (map, data, epochs = 10, seed = 0, learning_rate = None))]
fn train(py: Python<'_>, map: &PyAreaMap, data: &PyDataset, epochs: usize, seed: u64, learning_rate: Option<f64>) -> PyResult<PyModel> {
    let mut config = TrainConfig { epochs, seed, ..TrainConfig::default() };
    if let Some(lr) = learning_rate {
        config.learning_rate = lr;
    }
    let lexicon = Lexicon::build(&map.inner, &LanguageConfig::default(), config.hyper.match_width, seed);
    let outcome = py
        .detach(|| beliefnav::train(&data.inner.samples, &map.inner, lexicon, &config))
        .map_err(value_error)?;
    Ok(PyModel { report: Some(outcome.report), inner: ModelFile::new(outcome.params, config) })
}

#[pyfunction]
#[pyo3(signature = (map, start, goal, search = "dfs", tolerance = None))]
fn plan(map: &PyAreaMap, start: &str, goal: &str, search: &str, tolerance: Option<f64>) -> PyResult<Vec<String>> {
    let search = match search {
        "dfs" => Search::Dfs,
        "bfs" => Search::Bfs,
        other => return Err(PyValueError::new_err(format!("search must be 'dfs' or 'bfs', got {other:?}"))),
    };
    let graph = build_adjacency(&map.inner, tolerance.unwrap_or(map.inner.grid().resolution));
    graph.plan(start, goal, search).map_err(|e| match e {
        PlanError::UnknownArea(_) => PyKeyError::new_err(e.to_string()),
        PlanError::Unreachable { .. } => PyRuntimeError::new_err(e.to_string()),
    })
}

#[pymodule]
#[pyo3(name = "beliefnav")]
fn beliefnav_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAreaMap>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyTrace>()?;
    m.add_function(wrap_pyfunction!(office_map, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    Ok(())
}
