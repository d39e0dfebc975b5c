//! Spherical K-means over phrase vectors, the k = 2^n validity sweep and
//! centroid-level distances.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{cosine_distance, norm};
use crate::error::{Error, Result};
use crate::io;
use crate::metrics;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once no centroid moves more than this (Euclidean).
    pub tol: f64,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansParams {
            k,
            seed,
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub dim: usize,
    /// Unit-norm centroid per cluster.
    pub centroids: Vec<Vec<f64>>,
    /// Cluster per input vector; `None` for zero vectors, which are left out.
    pub assignments: Vec<Option<usize>>,
    /// Sum of squared distances from each normalized vector to its centroid.
    pub objective: f64,
    /// Objective after every assignment and every update step.
    pub trace: Vec<f64>,
    pub iterations: usize,
}

fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    (n > 0.0).then(|| v.iter().map(|x| x / n).collect())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid by squared Euclidean distance, lowest id on ties.
fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(p, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn objective(points: &[Vec<f64>], labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p, &centroids[l]))
        .sum()
}

/// Greedy farthest-point seeding from a seed-chosen first point.
fn farthest_point_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let first = rng.gen_range(0..points.len());
    let mut centroids = vec![points[first].clone()];
    let mut closest: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    while centroids.len() < k {
        let mut pick = 0;
        for (i, &d) in closest.iter().enumerate() {
            if d > closest[pick] {
                pick = i;
            }
        }
        let chosen = points[pick].clone();
        for (c, p) in closest.iter_mut().zip(points) {
            *c = c.min(sq_dist(p, &chosen));
        }
        centroids.push(chosen);
    }
    centroids
}

fn assign_all(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<usize> {
    points.par_iter().map(|p| nearest(p, centroids).0).collect()
}

/// Moves points into empty clusters: each empty cluster takes the point
/// farthest from its current centroid among clusters with spare members.
fn reseed_empty(points: &[Vec<f64>], labels: &mut [usize], centroids: &mut [Vec<f64>]) {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let mut pick: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            let l = labels[i];
            if sizes[l] < 2 {
                continue;
            }
            let d = sq_dist(p, &centroids[l]);
            if pick.is_none_or(|(_, best)| d > best) {
                pick = Some((i, d));
            }
        }
        let Some((i, _)) = pick else { break };
        log::debug!("kmeans: reseeding empty cluster {c} with point {i}");
        sizes[labels[i]] -= 1;
        labels[i] = c;
        sizes[c] = 1;
        centroids[c] = points[i].clone();
    }
}

/// Normalized member sums, accumulated in point order. A cluster whose
/// members sum to zero keeps its centroid.
fn update_centroids(points: &[Vec<f64>], labels: &[usize], centroids: &mut [Vec<f64>]) -> f64 {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; centroids.len()];
    for (p, &l) in points.iter().zip(labels) {
        for (s, x) in sums[l].iter_mut().zip(p) {
            *s += x;
        }
    }
    let mut moved: f64 = 0.0;
    for (c, sum) in centroids.iter_mut().zip(sums) {
        if let Some(next) = normalized(&sum) {
            moved = moved.max(sq_dist(c, &next).sqrt());
            *c = next;
        }
    }
    moved
}

/// Lloyd iterations on L2-normalized vectors with renormalized centroids.
pub fn kmeans<V: AsRef<[f64]>>(vectors: &[V], params: KMeansParams) -> Result<ClusterModel> {
    let dim = vectors.first().map_or(0, |v| v.as_ref().len());
    let mut usable = Vec::new();
    let mut points = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        let v = v.as_ref();
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        match normalized(v) {
            Some(p) => {
                usable.push(i);
                points.push(p);
            }
            None => log::warn!("kmeans: vector {i} has zero norm and is left out"),
        }
    }
    if params.k == 0 || points.len() < params.k {
        return Err(Error::TooFewVectors {
            k: params.k,
            usable: points.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centroids = farthest_point_init(&points, params.k, &mut rng);
    let mut trace = Vec::new();
    let mut iterations = 0;
    for _ in 0..params.max_iter {
        iterations += 1;
        let mut labels = assign_all(&points, &centroids);
        reseed_empty(&points, &mut labels, &mut centroids);
        trace.push(objective(&points, &labels, &centroids));
        let moved = update_centroids(&points, &labels, &mut centroids);
        trace.push(objective(&points, &labels, &centroids));
        if moved < params.tol {
            break;
        }
    }
    // Final assignment so every label is the argmin for the returned
    // centroids.
    let labels = assign_all(&points, &centroids);
    let objective = objective(&points, &labels, &centroids);
    trace.push(objective);

    let mut assignments = vec![None; vectors.len()];
    for (&i, &l) in usable.iter().zip(&labels) {
        assignments[i] = Some(l);
    }
    Ok(ClusterModel {
        k: params.k,
        dim,
        centroids,
        assignments,
        objective,
        trace,
        iterations,
    })
}

/// Nearest centroid by cosine distance; lowest id on ties.
pub fn assign(model: &ClusterModel, v: &[f64]) -> Result<usize> {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in model.centroids.iter().enumerate() {
        let d = cosine_distance(v, centroid)?;
        if d < best.1 {
            best = (c, d);
        }
    }
    Ok(best.0)
}

pub fn cluster_distance(model: &ClusterModel, i: usize, j: usize) -> Result<f64> {
    let check = |c: usize| {
        if c < model.k {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("cluster id {c} out of range 0..{}", model.k)))
        }
    };
    check(i)?;
    check(j)?;
    if i == j {
        return Ok(0.0);
    }
    cosine_distance(&model.centroids[i], &model.centroids[j])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityScores {
    pub k: usize,
    pub within_variance: f64,
    pub silhouette: f64,
    pub calinski_harabasz: f64,
    pub davies_bouldin: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub entries: Vec<ValidityScores>,
}

impl ValidityReport {
    pub fn get(&self, k: usize) -> Option<&ValidityScores> {
        self.entries.iter().find(|e| e.k == k)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,within_variance,silhouette,calinski_harabasz,davies_bouldin\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.k, e.within_variance, e.silhouette, e.calinski_harabasz, e.davies_bouldin
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub n_min: u32,
    pub n_max: u32,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    /// Silhouette is quadratic; above this many points it is computed on a
    /// seeded subsample.
    pub silhouette_sample: usize,
}

impl SweepParams {
    pub fn new(n_min: u32, n_max: u32, seed: u64) -> Self {
        SweepParams {
            n_min,
            n_max,
            seed,
            max_iter: 100,
            tol: 1e-6,
            silhouette_sample: 5000,
        }
    }
}

/// The four validity indices for one clustering of `vectors`.
pub fn validity_scores<V: AsRef<[f64]>>(vectors: &[V], model: &ClusterModel, silhouette_sample: usize, seed: u64) -> Result<ValidityScores> {
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (v, a) in vectors.iter().zip(&model.assignments) {
        if let (Some(l), Some(p)) = (a, normalized(v.as_ref())) {
            points.push(p);
            labels.push(*l);
        }
    }
    let silhouette = if points.len() > silhouette_sample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let idx = rand::seq::index::sample(&mut rng, points.len(), silhouette_sample).into_vec();
        let mut idx = idx;
        idx.sort_unstable();
        let sp: Vec<&Vec<f64>> = idx.iter().map(|&i| &points[i]).collect();
        let sl: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
        metrics::silhouette(&sp, &sl)?
    } else {
        metrics::silhouette(&points, &labels)?
    };
    Ok(ValidityScores {
        k: model.k,
        within_variance: model.objective,
        silhouette,
        calinski_harabasz: metrics::calinski_harabasz(&points, &labels)?,
        davies_bouldin: metrics::davies_bouldin(&points, &labels)?,
    })
}

/// Clusters with k = 2^n for every n in `n_min..=n_max` and scores each.
pub fn sweep_k<V: AsRef<[f64]>>(vectors: &[V], params: SweepParams) -> Result<ValidityReport> {
    if params.n_min > params.n_max {
        return Err(Error::InvalidInput(format!(
            "empty exponent range {}..={}",
            params.n_min, params.n_max
        )));
    }
    let mut entries = Vec::new();
    for n in params.n_min..=params.n_max {
        let k = 1usize << n;
        let model = kmeans(
            vectors,
            KMeansParams {
                k,
                seed: params.seed,
                max_iter: params.max_iter,
                tol: params.tol,
            },
        )?;
        entries.push(validity_scores(vectors, &model, params.silhouette_sample, params.seed)?);
    }
    Ok(ValidityReport { entries })
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelHeader {
    k: usize,
    dim: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct AssignmentRow {
    phrase_idx: usize,
    cluster: usize,
}

/// Header line `{"k":..,"dim":..}` followed by one centroid per line.
pub fn write_model(path: &Path, model: &ClusterModel) -> Result<()> {
    let mut out = serde_json::to_string(&ModelHeader {
        k: model.k,
        dim: model.dim,
    })?;
    out.push('\n');
    for c in &model.centroids {
        out.push_str(&io::format_vector(c));
        out.push('\n');
    }
    io::write_atomic(path, out.as_bytes())
}

/// Reads centroids back. Assignments live in their own file.
pub fn read_model(path: &Path) -> Result<ClusterModel> {
    let text = io::read_to_string(path)?;
    let mut lines = text.lines();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let header: ModelHeader = serde_json::from_str(lines.next().unwrap_or(""))
        .map_err(|e| parse_err(1, e.to_string()))?;
    let mut centroids = Vec::with_capacity(header.k);
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v = io::parse_vector(line).map_err(|m| parse_err(i + 2, m))?;
        if v.len() != header.dim {
            return Err(parse_err(i + 2, format!("expected {} values", header.dim)));
        }
        centroids.push(v);
    }
    if centroids.len() != header.k {
        return Err(parse_err(1, format!("header says k={} but found {} centroids", header.k, centroids.len())));
    }
    Ok(ClusterModel {
        k: header.k,
        dim: header.dim,
        centroids,
        assignments: Vec::new(),
        objective: 0.0,
        trace: Vec::new(),
        iterations: 0,
    })
}

pub fn write_assignments(path: &Path, model: &ClusterModel) -> Result<()> {
    let rows = model
        .assignments
        .iter()
        .enumerate()
        .filter_map(|(i, a)| a.map(|cluster| AssignmentRow { phrase_idx: i, cluster }));
    io::write_jsonl(path, rows)
}

pub fn read_assignments(path: &Path) -> Result<Vec<(usize, usize)>> {
    let rows: Vec<AssignmentRow> = io::read_jsonl(path)?;
    Ok(rows.into_iter().map(|r| (r.phrase_idx, r.cluster)).collect())
}
