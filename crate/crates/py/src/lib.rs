//! Python bindings: build with `cargo build -p groupies-py`, then import
//! the produced cdylib as `groupies_rs` (rename `libgroupies_rs.so` to
//! `groupies_rs.so` on the import path).

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use groupies_core::groupie::{degree_profile, groupie_report, Convention};
use groupies_core::model::{graph_from_str, graph_to_string, MultipartiteGraph, PartitionSpec};
use groupies_core::montecarlo::{self, ExperimentConfig};
use groupies_core::oracle::exact_groupie_distribution;
use groupies_core::rng::Seed;
use groupies_core::theory::{expected_degree, heuristic_prediction, hoeffding_tail_bound};

fn parse_convention(name: &str) -> PyResult<Convention> {
    name.parse().map_err(|e| PyValueError::new_err(format!("{e}")))
}

/// Partition spec: part sizes plus a uniform cross-part edge probability
/// or a full symmetric matrix with zero diagonal.
#[pyclass(frozen)]
struct Spec {
    inner: PartitionSpec,
}

#[pymethods]
impl Spec {
    #[new]
    #[pyo3(signature = (parts, p=None, matrix=None))]
    fn new(parts: Vec<usize>, p: Option<f64>, matrix: Option<Vec<Vec<f64>>>) -> PyResult<Self> {
        let inner = match (p, matrix) {
            (Some(p), None) => PartitionSpec::uniform(parts, p),
            (None, Some(m)) => PartitionSpec::with_matrix(parts, m),
            _ => {
                return Err(PyValueError::new_err(
                    "give exactly one of p= or matrix=",
                ))
            }
        }
        .map_err(|e| PyValueError::new_err(format!("{e}")))?;
        Ok(Spec { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn part_sizes(&self) -> Vec<usize> {
        self.inner.part_sizes().to_vec()
    }

    fn expected_edges(&self) -> f64 {
        self.inner.expected_edges()
    }

    fn expected_degree(&self, part: usize) -> PyResult<f64> {
        if part >= self.inner.k() {
            return Err(PyValueError::new_err("part index out of range"));
        }
        Ok(expected_degree(&self.inner, part))
    }

    /// Deterministic sample: the same seed always gives the same graph.
    fn sample(&self, seed: u64) -> Graph {
        Graph {
            inner: groupies_core::model::sample(&self.inner, Seed::new(seed)),
        }
    }

    /// Predicted limiting groupie fraction per part: "0", "1/2", or "1".
    fn heuristic(&self) -> Vec<String> {
        heuristic_prediction(&self.inner)
            .iter()
            .map(|p| p.prediction.to_string())
            .collect()
    }

    /// Exact distribution of the groupie count by exhaustive enumeration
    /// (specs with at most 24 cross pairs). Returns a dict with keys
    /// "mean", "variance", "n_dist", and "per_part".
    #[pyo3(signature = (convention="strict"))]
    fn exact_distribution<'py>(
        &self,
        py: Python<'py>,
        convention: &str,
    ) -> PyResult<Bound<'py, PyDict>> {
        let convention = parse_convention(convention)?;
        let dist = exact_groupie_distribution(&self.inner, convention)
            .map_err(|e| PyValueError::new_err(format!("{e}")))?;
        let out = PyDict::new(py);
        out.set_item("mean", dist.mean_n())?;
        out.set_item("variance", dist.var_n())?;
        out.set_item("n_dist", dist.n_dist.clone())?;
        out.set_item("per_part", dist.part_dists.clone())?;
        Ok(out)
    }

    /// Monte Carlo campaign. Returns a dict with keys "mean_N",
    /// "variance_N", "per_part_means", and "fraction_means".
    #[pyo3(signature = (trials, seed=0, convention="strict"))]
    fn experiment<'py>(
        &self,
        py: Python<'py>,
        trials: u64,
        seed: u64,
        convention: &str,
    ) -> PyResult<Bound<'py, PyDict>> {
        if trials == 0 {
            return Err(PyValueError::new_err("trials must be at least 1"));
        }
        let mut config = ExperimentConfig::new(self.inner.clone(), trials, Seed::new(seed));
        config.convention = parse_convention(convention)?;
        let result = montecarlo::run(&config);
        let out = PyDict::new(py);
        out.set_item("mean_N", result.n_summary.mean)?;
        out.set_item("variance_N", result.n_summary.variance)?;
        out.set_item(
            "per_part_means",
            result
                .part_summaries
                .iter()
                .map(|s| s.mean)
                .collect::<Vec<_>>(),
        )?;
        out.set_item("fraction_means", result.fraction_means.clone())?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!(
            "Spec(parts={:?}, p={:?})",
            self.inner.part_sizes(),
            self.inner.uniform_p()
        )
    }
}

/// A sampled multipartite graph.
#[pyclass(frozen)]
struct Graph {
    inner: MultipartiteGraph,
}

#[pymethods]
impl Graph {
    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn part_sizes(&self) -> Vec<usize> {
        self.inner.part_sizes().to_vec()
    }

    fn edge_count(&self) -> u64 {
        self.inner.edge_count() as u64
    }

    fn edges(&self) -> Vec<(u32, u32)> {
        self.inner.edges().collect()
    }

    fn degree(&self, v: usize) -> PyResult<u32> {
        if v >= self.inner.n() {
            return Err(PyValueError::new_err("vertex out of range"));
        }
        Ok(self.inner.degree(v))
    }

    /// Groupie report: dict with "total", "per_part", and "fractions".
    #[pyo3(signature = (convention="strict"))]
    fn report<'py>(&self, py: Python<'py>, convention: &str) -> PyResult<Bound<'py, PyDict>> {
        let convention = parse_convention(convention)?;
        let profile = degree_profile(&self.inner);
        let report = groupie_report(&self.inner, &profile, convention);
        let out = PyDict::new(py);
        out.set_item("total", report.total)?;
        out.set_item("per_part", report.per_part.clone())?;
        let fractions: Vec<f64> = (0..report.part_sizes.len())
            .map(|i| report.fraction(i))
            .collect();
        out.set_item("fractions", fractions)?;
        Ok(out)
    }

    /// Per-vertex (degree, neighbor-degree-sum) pairs.
    fn degree_profile<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        let profile = degree_profile(&self.inner);
        let pairs: Vec<(u32, u64)> = profile.d.into_iter().zip(profile.s).collect();
        PyList::new(py, pairs)
    }

    /// Serialize in multipartite-v1 format.
    fn to_text(&self) -> String {
        graph_to_string(&self.inner)
    }

    /// Parse a multipartite-v1 document.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Graph> {
        graph_from_str(text)
            .map(|inner| Graph { inner })
            .map_err(|e| PyValueError::new_err(format!("{e}")))
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(parts={:?}, edges={})",
            self.inner.part_sizes(),
            self.inner.edge_count()
        )
    }
}

/// min(1, 2 exp(-2 t^2 / m)): two-sided tail bound for Bin(m, 1/2)
/// deviations of at least t from the mean.
#[pyfunction]
fn hoeffding_bound(m: u64, t: f64) -> f64 {
    hoeffding_tail_bound(m, t)
}

#[pymodule]
fn groupies_rs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Spec>()?;
    m.add_class::<Graph>()?;
    m.add_function(wrap_pyfunction!(hoeffding_bound, m)?)?;
    Ok(())
}
