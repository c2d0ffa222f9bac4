//! Python bindings: `import vfkit`.

use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::{PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use vfkit_core::corpus::{run_corpus, Profile};
use vfkit_core::fixtures;
use vfkit_core::folding::{subgroup_graph, BlockGraph, FoldError};
use vfkit_core::formats::{parse_word, InstanceDocument};
use vfkit_core::graph_of_groups::{GWord, GraphOfGroups as CoreGog};
use vfkit_core::intersection::fiber_product;
use vfkit_core::tree_oracle::corroborate;

create_exception!(vfkit, FreeActionViolation, PyValueError);

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn fold_err(e: FoldError) -> PyErr {
    match e {
        FoldError::FreeActionViolation { .. } => FreeActionViolation::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A finite graph of finite groups with a base vertex.
#[pyclass(frozen, module = "vfkit")]
struct GraphOfGroups {
    inner: Arc<CoreGog>,
    subgroups: std::collections::BTreeMap<String, Vec<String>>,
}

impl GraphOfGroups {
    fn word(&self, text: &str) -> PyResult<GWord> {
        parse_word(&self.inner, text).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn words(&self, gens: Vec<String>) -> PyResult<Vec<GWord>> {
        gens.iter().map(|g| self.word(g)).collect()
    }

    fn show(&self, w: &GWord) -> String {
        self.inner.to_spres(w).to_string()
    }
}

#[pymethods]
impl GraphOfGroups {
    /// Parses and validates an instance document.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inst = InstanceDocument::parse(text)
            .and_then(|d| d.validate())
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(GraphOfGroups {
            inner: inst.gog,
            subgroups: inst.document.subgroups,
        })
    }

    /// One of the bundled fixtures.
    #[staticmethod]
    fn fixture(name: &str) -> PyResult<Self> {
        let f = fixtures::by_name(name).ok_or_else(|| PyKeyError::new_err(name.to_string()))?;
        Ok(GraphOfGroups {
            inner: f.gog,
            subgroups: f.subgroups,
        })
    }

    fn to_json(&self) -> String {
        InstanceDocument::from_gog(&self.inner, self.subgroups.clone()).canonical()
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.graph().num_vertices()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.graph().num_positive_edges()
    }

    /// Named generator lists carried by the document.
    #[getter]
    fn subgroups(&self) -> std::collections::BTreeMap<String, Vec<String>> {
        self.subgroups.clone()
    }

    fn normal_form(&self, word: &str) -> PyResult<String> {
        Ok(self.show(&self.inner.normal_form(&self.word(word)?)))
    }

    fn multiply(&self, a: &str, b: &str) -> PyResult<String> {
        let p = self
            .inner
            .multiply(&self.word(a)?, &self.word(b)?)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(self.show(&p))
    }

    fn inverse(&self, word: &str) -> PyResult<String> {
        Ok(self.show(&self.inner.invert(&self.word(word)?)))
    }

    fn equal(&self, a: &str, b: &str) -> PyResult<bool> {
        Ok(self.inner.equal(&self.word(a)?, &self.word(b)?))
    }

    /// A uniformly random loop with at most `max_edges` edges.
    fn random_element(&self, max_edges: usize, seed: u64) -> String {
        self.show(&self.inner.random_element(max_edges, seed))
    }

    /// Folds the subgroup generated by `gens`.
    fn fold(&self, gens: Vec<String>) -> PyResult<SubgroupGraph> {
        let d = subgroup_graph(&self.inner, &self.words(gens)?).map_err(fold_err)?;
        Ok(SubgroupGraph { inner: d })
    }

    /// Bound report for the intersection of two subgroups, as a dict.
    fn intersect<'py>(&self, py: Python<'py>, h: Vec<String>, k: Vec<String>) -> PyResult<Bound<'py, PyAny>> {
        let dh = subgroup_graph(&self.inner, &self.words(h)?).map_err(fold_err)?;
        let dk = subgroup_graph(&self.inner, &self.words(k)?).map_err(fold_err)?;
        let fp = fiber_product(&dh, &dk).map_err(|e| PyValueError::new_err(e.to_string()))?;
        to_py(py, &fp.bound_report())
    }

    /// Compares folding with a quotient of the radius-`radius` ball.
    #[pyo3(signature = (gens, radius = 8, length = 6))]
    fn oracle<'py>(&self, py: Python<'py>, gens: Vec<String>, radius: usize, length: usize) -> PyResult<Bound<'py, PyAny>> {
        let gens = self.words(gens)?;
        let inner = self.inner.clone();
        let report = py
            .detach(move || corroborate(&inner, &gens, radius, length))
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?
            .map_err(fold_err)?;
        to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        format!(
            "GraphOfGroups(vertices={}, edges={})",
            self.num_vertices(),
            self.num_edges()
        )
    }
}

/// A folded subgroup graph.
#[pyclass(frozen, module = "vfkit")]
struct SubgroupGraph {
    inner: BlockGraph,
}

#[pymethods]
impl SubgroupGraph {
    #[getter]
    fn rank(&self) -> usize {
        self.inner.core().rank
    }

    #[getter]
    fn reduced_rank(&self) -> usize {
        self.inner.core().reduced_rank
    }

    #[getter]
    fn num_blocks(&self) -> usize {
        self.inner.num_blocks()
    }

    fn member(&self, word: &str) -> PyResult<bool> {
        let w = parse_word(self.inner.gog(), word).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(self.inner.member(&w))
    }

    fn free_generators(&self) -> Vec<String> {
        let gog = self.inner.gog();
        self.inner
            .free_generators()
            .iter()
            .map(|g| gog.to_spres(g).to_string())
            .collect()
    }

    #[pyo3(signature = (name = "subgroup"))]
    fn to_dot(&self, name: &str) -> String {
        self.inner.to_dot(name)
    }

    fn __repr__(&self) -> String {
        format!("SubgroupGraph(rank={}, blocks={})", self.rank(), self.num_blocks())
    }
}

#[pyfunction]
fn fixture_names() -> Vec<&'static str> {
    fixtures::all().iter().map(|f| f.name).collect()
}

/// Runs a seeded corpus and returns the report as a JSON string.
#[pyfunction]
#[pyo3(signature = (profile = "mixed", count = 100, seed = 1, oracle = true))]
fn corpus(py: Python<'_>, profile: &str, count: usize, seed: u64, oracle: bool) -> PyResult<String> {
    let profile: Profile = profile.parse().map_err(PyValueError::new_err)?;
    Ok(py.detach(move || run_corpus(profile, seed, count, oracle).to_json()))
}

#[pymodule]
fn vfkit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<GraphOfGroups>()?;
    m.add_class::<SubgroupGraph>()?;
    m.add_function(wrap_pyfunction!(fixture_names, m)?)?;
    m.add_function(wrap_pyfunction!(corpus, m)?)?;
    m.add("FreeActionViolation", m.py().get_type::<FreeActionViolation>())?;
    Ok(())
}
