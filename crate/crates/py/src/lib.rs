//! Python bindings: query conversion, phrase normalization, embeddings,
//! clustering and validity metrics, value scoring, evaluation metrics,
//! the synthetic corpus generator and the CLI entry point.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use actpred::cluster::{self, KMeansParams};
use actpred::embed::{self, PhraseEncoder};
use actpred::eval::{self, ScoredUser};
use actpred::lexicon::VerbLexicon;
use actpred::values::ValueDimension;

fn py_err(e: actpred::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Event phrase to the ordered substrings of its activity query.
#[pyfunction]
fn convert_event(event: &str) -> PyResult<Vec<String>> {
    actpred::querygen::convert_event(event, &VerbLexicon::builtin())
        .map(|q| q.substrings)
        .map_err(py_err)
}

#[pyfunction]
fn convert_survey(activity: &str) -> PyResult<String> {
    actpred::querygen::convert_survey(activity, &VerbLexicon::builtin())
        .map(|q| q.text())
        .map_err(py_err)
}

#[pyfunction]
fn past_tense(lemma: &str) -> String {
    VerbLexicon::builtin().past_tense(lemma)
}

#[pyfunction]
fn normalize(phrase: &str) -> String {
    actpred::extract::normalize(phrase, &VerbLexicon::builtin())
}

/// Activity phrases extracted from one additional post.
#[pyfunction]
fn extract_additional(text: &str) -> Vec<String> {
    let doc = actpred::corpus::Document {
        id: "doc".into(),
        text: text.into(),
        kind: actpred::corpus::DocKind::Additional,
    };
    let filter = actpred::extract::NegationFilter::default();
    actpred::extract::extract_additional(&doc, "user", &VerbLexicon::builtin(), &filter)
        .into_iter()
        .map(|i| i.normalized)
        .collect()
}

#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    actpred::tokenize::glove_preprocess(text)
}

#[pyclass(name = "EmbeddingTable", frozen)]
struct PyEmbeddingTable {
    inner: embed::EmbeddingTable,
}

#[pymethods]
impl PyEmbeddingTable {
    /// Parses "token v1 ... vd" lines; malformed lines are skipped.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let loaded = embed::parse_embeddings(text, std::path::Path::new("<python>")).map_err(py_err)?;
        Ok(PyEmbeddingTable { inner: loaded.table })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let loaded = embed::load_embeddings(&path).map_err(py_err)?;
        Ok(PyEmbeddingTable { inner: loaded.table })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn get(&self, token: &str) -> Option<Vec<f64>> {
        self.inner.get(token).map(|v| v.iter().map(|&x| f64::from(x)).collect())
    }

    /// Mean-pooled phrase vector and the share of tokens found.
    fn encode(&self, phrase: &str) -> (Vec<f64>, f64) {
        let v = self.inner.encode(phrase);
        (v.vector, v.covered)
    }

    fn ddr_score(&self, profile: &str, terms: Vec<String>) -> PyResult<f64> {
        let dim = ValueDimension { name: "value".into(), terms };
        actpred::values::ddr_score(profile, &dim, &self.inner).map_err(py_err)
    }
}

#[pyfunction]
fn cosine_distance(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    embed::cosine_distance(&a, &b).map_err(py_err)
}

#[pyclass(name = "ClusterModel", frozen, get_all)]
struct PyClusterModel {
    k: usize,
    centroids: Vec<Vec<f64>>,
    assignments: Vec<Option<usize>>,
    objective: f64,
    trace: Vec<f64>,
    iterations: usize,
}

/// Spherical k-means; zero vectors are left unassigned.
#[pyfunction]
#[pyo3(signature = (vectors, k, seed = 0, max_iter = 100, tol = 1e-6))]
fn kmeans(vectors: Vec<Vec<f64>>, k: usize, seed: u64, max_iter: usize, tol: f64) -> PyResult<PyClusterModel> {
    let m = cluster::kmeans(&vectors, KMeansParams { k, seed, max_iter, tol }).map_err(py_err)?;
    Ok(PyClusterModel {
        k: m.k,
        centroids: m.centroids,
        assignments: m.assignments,
        objective: m.objective,
        trace: m.trace,
        iterations: m.iterations,
    })
}

#[pyfunction]
fn silhouette(points: Vec<Vec<f64>>, labels: Vec<usize>) -> PyResult<f64> {
    actpred::metrics::silhouette(&points, &labels).map_err(py_err)
}

#[pyfunction]
fn calinski_harabasz(points: Vec<Vec<f64>>, labels: Vec<usize>) -> PyResult<f64> {
    actpred::metrics::calinski_harabasz(&points, &labels).map_err(py_err)
}

#[pyfunction]
fn davies_bouldin(points: Vec<Vec<f64>>, labels: Vec<usize>) -> PyResult<f64> {
    actpred::metrics::davies_bouldin(&points, &labels).map_err(py_err)
}

#[pyfunction]
fn adjusted_rand_index(a: Vec<usize>, b: Vec<usize>) -> PyResult<f64> {
    actpred::metrics::adjusted_rand_index(&a, &b).map_err(py_err)
}

#[pyfunction]
fn sample_weight(count: usize, n: usize, dim_o: usize) -> PyResult<f64> {
    let counts = [(0usize, count)].into();
    actpred::predict::sample_weight(0, &counts, n, dim_o).map_err(py_err)
}

fn scored(user_ids: Vec<String>, targets: Vec<usize>, probs: Vec<Vec<f64>>) -> PyResult<Vec<ScoredUser>> {
    if user_ids.len() != targets.len() || targets.len() != probs.len() {
        return Err(PyValueError::new_err("user_ids, targets and probs must have equal length"));
    }
    Ok(user_ids
        .into_iter()
        .zip(targets)
        .zip(probs)
        .map(|((user_id, target), probs)| ScoredUser { user_id, target, probs })
        .collect())
}

/// Per-class accuracy@k in percent; user i has target `targets[i]`.
#[pyfunction]
fn per_class_accuracy(targets: Vec<usize>, probs: Vec<Vec<f64>>, k: usize) -> PyResult<f64> {
    let ids = (0..targets.len()).map(|i| i.to_string()).collect();
    eval::per_class_accuracy(&scored(ids, targets, probs)?, k).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (user_ids, targets, probs, n, seed = 0))]
fn acr(user_ids: Vec<String>, targets: Vec<usize>, probs: Vec<Vec<f64>>, n: usize, seed: u64) -> PyResult<f64> {
    eval::acr(&scored(user_ids, targets, probs)?, n, seed).map_err(py_err)
}

/// Analytic random baseline: (accuracy per k, ACR).
#[pyfunction]
fn random_baseline(classes: usize, ks: Vec<usize>) -> PyResult<(Vec<f64>, f64)> {
    let r = eval::random_baseline(classes, &ks).map_err(py_err)?;
    Ok((r.accuracy, r.acr))
}

/// Writes a synthetic corpus into `out`; returns the number of users.
#[pyfunction]
#[pyo3(signature = (out, users = 200, clusters = 8, seed = 0))]
fn synth(out: PathBuf, users: usize, clusters: usize, seed: u64) -> PyResult<usize> {
    let params = actpred::synth::SynthParams::new(users, clusters, seed);
    let corpus = actpred::synth::generate(params, &VerbLexicon::builtin()).map_err(py_err)?;
    corpus.write_to(&out).map_err(py_err)?;
    Ok(corpus.users.len())
}

/// Runs the command line with `args` (without the program name) and
/// returns its exit code.
#[pyfunction]
fn run_cli(args: Vec<String>) -> i32 {
    actpred::cli::run(std::iter::once("actpred".to_string()).chain(args))
}

#[pymodule]
fn pyactpred(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEmbeddingTable>()?;
    m.add_class::<PyClusterModel>()?;
    m.add_function(wrap_pyfunction!(convert_event, m)?)?;
    m.add_function(wrap_pyfunction!(convert_survey, m)?)?;
    m.add_function(wrap_pyfunction!(past_tense, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(extract_additional, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(cosine_distance, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans, m)?)?;
    m.add_function(wrap_pyfunction!(silhouette, m)?)?;
    m.add_function(wrap_pyfunction!(calinski_harabasz, m)?)?;
    m.add_function(wrap_pyfunction!(davies_bouldin, m)?)?;
    m.add_function(wrap_pyfunction!(adjusted_rand_index, m)?)?;
    m.add_function(wrap_pyfunction!(sample_weight, m)?)?;
    m.add_function(wrap_pyfunction!(per_class_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(acr, m)?)?;
    m.add_function(wrap_pyfunction!(random_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_wrappers() {
        assert_eq!(convert_event("PersonX teaches PersonX's son").unwrap(), ["I taught my son"]);
        assert_eq!(normalize("I went home!"), "go home");
        assert_eq!(sample_weight(25, 100, 4).unwrap(), 1.0);
        let (acc, a) = random_baseline(50, vec![1, 10]).unwrap();
        assert_eq!(acc, vec![2.0, 20.0]);
        assert_eq!(a, 50.0);
    }

    #[test]
    fn kmeans_wrapper_splits_two_directions() {
        let v = vec![vec![1.0, 0.0], vec![1.0, 0.1], vec![0.0, 1.0], vec![0.1, 1.0]];
        let m = kmeans(v, 2, 0, 100, 1e-6).unwrap();
        assert_eq!(m.assignments[0], m.assignments[1]);
        assert_ne!(m.assignments[0], m.assignments[2]);
    }

    #[test]
    fn module_registers() {
        Python::initialize();
        Python::attach(|py| {
            let m = PyModule::new(py, "pyactpred").unwrap();
            pyactpred(&m).unwrap();
            assert!(m.getattr("kmeans").is_ok());
            assert!(m.getattr("EmbeddingTable").is_ok());
        });
    }
}
