//! Internal cluster-validity indices and partition agreement.
//!
//! All indices use Euclidean distance on the vectors as given; the
//! clustering stage passes unit-normalized vectors, where Euclidean
//! distance is a monotone function of cosine distance.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Maps arbitrary labels to 0..k in first-seen order.
fn compact(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids = BTreeMap::new();
    let dense = labels
        .iter()
        .map(|l| {
            let next = ids.len();
            *ids.entry(*l).or_insert(next)
        })
        .collect();
    (dense, ids.len())
}

fn check<V: AsRef<[f64]>>(points: &[V], labels: &[usize]) -> Result<(Vec<usize>, usize)> {
    if points.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} points but {} labels",
            points.len(),
            labels.len()
        )));
    }
    let (dense, k) = compact(labels);
    if k < 2 {
        return Err(Error::SingleCluster(k));
    }
    Ok((dense, k))
}

fn means<V: AsRef<[f64]>>(points: &[V], labels: &[usize], k: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let dim = points[0].as_ref().len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p.as_ref()) {
            *s += x;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        s.iter_mut().for_each(|x| *x /= c as f64);
    }
    (sums, counts)
}

/// Mean silhouette coefficient. Members of singleton clusters score 0.
pub fn silhouette<V: AsRef<[f64]> + Sync>(points: &[V], labels: &[usize]) -> Result<f64> {
    use rayon::prelude::*;
    let (labels, k) = check(points, labels)?;
    let mut sizes = vec![0usize; k];
    for &l in &labels {
        sizes[l] += 1;
    }
    let total: f64 = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let own = labels[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for (j, p) in points.iter().enumerate() {
                if j != i {
                    sums[labels[j]] += dist(points[i].as_ref(), p.as_ref());
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m == 0.0 {
                0.0
            } else {
                (b - a) / m
            }
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok(total / points.len() as f64)
}

/// Between- over within-cluster dispersion, scaled by (N-k)/(k-1).
/// Zero within-cluster dispersion gives +inf (or 1 when everything
/// coincides).
pub fn calinski_harabasz<V: AsRef<[f64]>>(points: &[V], labels: &[usize]) -> Result<f64> {
    let (labels, k) = check(points, labels)?;
    let n = points.len();
    let (centers, counts) = means(points, &labels, k);
    let dim = centers[0].len();
    let mut overall = vec![0.0; dim];
    for p in points {
        for (o, x) in overall.iter_mut().zip(p.as_ref()) {
            *o += x;
        }
    }
    overall.iter_mut().for_each(|x| *x /= n as f64);
    let between: f64 = centers
        .iter()
        .zip(&counts)
        .map(|(c, &m)| m as f64 * sq_dist(c, &overall))
        .sum();
    let within: f64 = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| sq_dist(p.as_ref(), &centers[l]))
        .sum();
    if within == 0.0 {
        if between == 0.0 {
            return Ok(1.0);
        }
        log::warn!("calinski-harabasz: zero within-cluster dispersion");
        return Ok(f64::INFINITY);
    }
    Ok(between * (n - k) as f64 / (within * (k - 1) as f64))
}

/// Mean over clusters of the worst (s_i + s_j) / d_ij ratio, where s is
/// the mean member distance to the cluster mean. Pairs of coincident
/// centers are skipped.
pub fn davies_bouldin<V: AsRef<[f64]>>(points: &[V], labels: &[usize]) -> Result<f64> {
    let (labels, k) = check(points, labels)?;
    let (centers, counts) = means(points, &labels, k);
    let mut scatter = vec![0.0; k];
    for (p, &l) in points.iter().zip(&labels) {
        scatter[l] += dist(p.as_ref(), &centers[l]);
    }
    for (s, &c) in scatter.iter_mut().zip(&counts) {
        *s /= c as f64;
    }
    let mut total = 0.0;
    for i in 0..k {
        let mut worst: f64 = 0.0;
        for j in 0..k {
            if i == j {
                continue;
            }
            let d = dist(&centers[i], &centers[j]);
            if d == 0.0 {
                log::warn!("davies-bouldin: clusters {i} and {j} share a center");
                continue;
            }
            worst = worst.max((scatter[i] + scatter[j]) / d);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

fn choose2(n: usize) -> f64 {
    (n as f64) * (n as f64 - 1.0) / 2.0
}

/// Adjusted Rand index between two labelings of the same points.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput("labelings differ in length".into()));
    }
    let mut table: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut rows: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cols: BTreeMap<usize, usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&n| choose2(n)).sum();
    let sum_a: f64 = rows.values().map(|&n| choose2(n)).sum();
    let sum_b: f64 = cols.values().map(|&n| choose2(n)).sum();
    let total = choose2(a.len());
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_a * sum_b / total;
    let max = (sum_a + sum_b) / 2.0;
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Direct translations of the textbook definitions, kept independent of
    // the implementations above.
    fn oracle_silhouette(p: &[Vec<f64>], l: &[usize]) -> f64 {
        let n = p.len();
        let mut total = 0.0;
        for i in 0..n {
            let same: Vec<usize> = (0..n).filter(|&j| j != i && l[j] == l[i]).collect();
            if same.is_empty() {
                continue;
            }
            let a = same.iter().map(|&j| dist(&p[i], &p[j])).sum::<f64>() / same.len() as f64;
            let mut others: Vec<usize> = l.iter().copied().filter(|&c| c != l[i]).collect();
            others.sort();
            others.dedup();
            let b = others
                .iter()
                .map(|&c| {
                    let m: Vec<usize> = (0..n).filter(|&j| l[j] == c).collect();
                    m.iter().map(|&j| dist(&p[i], &p[j])).sum::<f64>() / m.len() as f64
                })
                .fold(f64::INFINITY, f64::min);
            total += (b - a) / a.max(b);
        }
        total / n as f64
    }

    #[test]
    fn hand_computed_four_point_case() {
        // Clusters {(0,0),(0,2)} and {(4,0),(4,2)}.
        let p = vec![vec![0.0, 0.0], vec![0.0, 2.0], vec![4.0, 0.0], vec![4.0, 2.0]];
        let l = [0, 0, 1, 1];
        // a = 2, b = (4 + sqrt(20)) / 2 for every point.
        let b = (4.0 + 20f64.sqrt()) / 2.0;
        let expected = (b - 2.0) / b;
        assert!((silhouette(&p, &l).unwrap() - expected).abs() < 1e-12);
        assert!((oracle_silhouette(&p, &l) - expected).abs() < 1e-12);
        // means (0,1),(4,1), overall (2,1): B = 2*4 + 2*4 = 16, W = 4 * 1 = 4
        // CH = 16 * (4-2) / (4 * 1) = 8
        assert!((calinski_harabasz(&p, &l).unwrap() - 8.0).abs() < 1e-12);
        // s = 1 for both, d = 4: DB = 0.5
        assert!((davies_bouldin(&p, &l).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tight_far_pairs_score_near_one() {
        let p = vec![vec![0.0, 0.0], vec![0.0, 0.01], vec![10.0, 0.0], vec![10.0, 0.01]];
        let s = silhouette(&p, &[0, 0, 1, 1]).unwrap();
        assert!((s - 1.0).abs() < 0.05);
    }

    #[test]
    fn degenerate_cases() {
        let same = vec![vec![1.0, 1.0]; 4];
        assert_eq!(silhouette(&same, &[0, 0, 1, 1]).unwrap(), 0.0);
        assert!(matches!(silhouette(&same, &[3, 3, 3, 3]), Err(Error::SingleCluster(1))));
        assert!(calinski_harabasz(&same, &[0, 0, 0, 0]).is_err());
        assert!(davies_bouldin(&same, &[0, 0, 0, 0]).is_err());

        let dup = vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![5.0, 5.0], vec![5.0, 5.0]];
        assert_eq!(davies_bouldin(&dup, &[0, 0, 1, 1]).unwrap(), 0.0);
        let singles = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(calinski_harabasz(&singles, &[0, 1, 2]).unwrap(), f64::INFINITY);
        assert_eq!(silhouette(&singles, &[0, 1, 2]).unwrap(), 0.0);
    }

    #[test]
    fn ari_properties() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[5, 5, 2, 2]).unwrap(), 1.0);
        let ari = adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert!(ari < 0.0);
    }
}
