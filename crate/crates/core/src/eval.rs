//! Per-class accuracy@k, average comparison rank, and random baselines.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredUser {
    pub user_id: String,
    pub target: usize,
    pub probs: Vec<f64>,
}

/// Whether `target` is among the `k` highest entries, ties broken by class
/// id ascending.
pub fn in_top_k(probs: &[f64], target: usize, k: usize) -> bool {
    let p = probs[target];
    let ahead = probs
        .iter()
        .enumerate()
        .filter(|&(j, &q)| q > p || (q == p && j < target))
        .count();
    ahead < k
}

fn num_classes(scored: &[ScoredUser]) -> Result<usize> {
    let c = scored
        .first()
        .map(|s| s.probs.len())
        .ok_or_else(|| Error::InvalidInput("no scored users".into()))?;
    for s in scored {
        if s.probs.len() != c {
            return Err(Error::DimensionMismatch { expected: c, got: s.probs.len() });
        }
        if s.target >= c {
            return Err(Error::InvalidInput(format!("target {} out of range for {c} classes", s.target)));
        }
    }
    Ok(c)
}

/// Per target class: (users, hits@k).
pub fn per_class_hits(scored: &[ScoredUser], k: usize) -> Result<BTreeMap<usize, (usize, usize)>> {
    let c = num_classes(scored)?;
    if k == 0 || k > c {
        return Err(Error::KTooLarge { k, classes: c });
    }
    let mut out: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for s in scored {
        let e = out.entry(s.target).or_default();
        e.0 += 1;
        e.1 += usize::from(in_top_k(&s.probs, s.target, k));
    }
    Ok(out)
}

/// Unweighted mean over target classes of the fraction of users whose
/// target is in the top `k`, in percent.
pub fn per_class_accuracy(scored: &[ScoredUser], k: usize) -> Result<f64> {
    let hits = per_class_hits(scored, k)?;
    let sum: f64 = hits.values().map(|&(n, h)| h as f64 / n as f64).sum();
    Ok(100.0 * sum / hits.len() as f64)
}

/// Average comparison rank: for each scored user, the percentage of `n`
/// sampled competitors (users without the target in their label set) whose
/// probability for the target is at least the user's own.
pub fn acr(scored: &[ScoredUser], n: usize, seed: u64) -> Result<f64> {
    Ok(comparison_ranks(scored, n, seed)?.iter().sum::<f64>() / scored.len() as f64)
}

/// Per-user comparison ranks, in input order.
pub fn comparison_ranks(scored: &[ScoredUser], n: usize, seed: u64) -> Result<Vec<f64>> {
    num_classes(scored)?;
    if n == 0 {
        return Err(Error::InvalidInput("comparison sample size must be positive".into()));
    }
    let mut labels: HashMap<&str, BTreeSet<usize>> = HashMap::new();
    for s in scored {
        labels.entry(&s.user_id).or_default().insert(s.target);
    }
    // One representative entry per user id, first occurrence.
    let mut seen = BTreeSet::new();
    let users: Vec<&ScoredUser> = scored.iter().filter(|s| seen.insert(s.user_id.as_str())).collect();
    // Competitor pool per target class; a user never competes with itself
    // since its own label set contains the target.
    let targets: BTreeSet<usize> = scored.iter().map(|s| s.target).collect();
    let pools: BTreeMap<usize, Vec<&ScoredUser>> = targets
        .into_iter()
        .map(|c| {
            let pool = users
                .iter()
                .copied()
                .filter(|v| !labels[v.user_id.as_str()].contains(&c))
                .collect();
            (c, pool)
        })
        .collect();

    scored
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let c = u.target;
            let pool = &pools[&c];
            if pool.len() < n {
                return Err(Error::InsufficientCompetitors {
                    user: u.user_id.clone(),
                    available: pool.len(),
                    needed: n,
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let p = u.probs[c];
            let ahead = sample(&mut rng, pool.len(), n)
                .into_iter()
                .filter(|&j| pool[j].probs[c] >= p)
                .count();
            Ok(100.0 * ahead as f64 / n as f64)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassBreakdown {
    pub class: usize,
    pub users: usize,
    /// Hits at each k, aligned with the report's `ks`.
    pub hits: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub num_classes: usize,
    pub ks: Vec<usize>,
    /// Per-class accuracy (%) at each k, aligned with `ks`.
    pub accuracy: Vec<f64>,
    pub acr: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_class: Vec<ClassBreakdown>,
}

impl EvalReport {
    pub fn accuracy_at(&self, k: usize) -> Option<f64> {
        self.ks.iter().position(|&x| x == k).map(|i| self.accuracy[i])
    }
}

/// Accuracy at every k plus ACR over `n` sampled competitors.
pub fn evaluate(scored: &[ScoredUser], ks: &[usize], n: usize, seed: u64) -> Result<EvalReport> {
    let num_classes = num_classes(scored)?;
    let mut accuracy = Vec::with_capacity(ks.len());
    let mut per_class: BTreeMap<usize, ClassBreakdown> = BTreeMap::new();
    for &k in ks {
        let hits = per_class_hits(scored, k)?;
        let sum: f64 = hits.values().map(|&(n, h)| h as f64 / n as f64).sum();
        accuracy.push(100.0 * sum / hits.len() as f64);
        for (class, (users, h)) in hits {
            per_class
                .entry(class)
                .or_insert_with(|| ClassBreakdown { class, users, hits: Vec::new() })
                .hits
                .push(h);
        }
    }
    Ok(EvalReport {
        num_classes,
        ks: ks.to_vec(),
        accuracy,
        acr: acr(scored, n, seed)?,
        per_class: per_class.into_values().collect(),
    })
}

/// Largest comparison sample size every scored user supports.
pub fn max_comparison_size(scored: &[ScoredUser]) -> usize {
    let mut labels: HashMap<&str, BTreeSet<usize>> = HashMap::new();
    for s in scored {
        labels.entry(&s.user_id).or_default().insert(s.target);
    }
    let targets: BTreeSet<usize> = scored.iter().map(|s| s.target).collect();
    targets
        .into_iter()
        .map(|c| labels.values().filter(|l| !l.contains(&c)).count())
        .min()
        .unwrap_or(0)
}

/// Expected scores of a uniformly random ranking: `100 k / C`, ACR 50.
pub fn random_baseline(classes: usize, ks: &[usize]) -> Result<EvalReport> {
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > classes) {
        return Err(Error::KTooLarge { k, classes });
    }
    Ok(EvalReport {
        num_classes: classes,
        ks: ks.to_vec(),
        accuracy: ks.iter().map(|&k| 100.0 * k as f64 / classes as f64).collect(),
        acr: 50.0,
        per_class: Vec::new(),
    })
}

/// Random scorer on `users` synthetic users with uniform targets, scored
/// through the regular metrics.
pub fn simulate_random(classes: usize, ks: &[usize], users: usize, n: usize, seed: u64) -> Result<EvalReport> {
    if classes < 2 {
        return Err(Error::InvalidInput("need at least 2 classes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scored: Vec<ScoredUser> = (0..users)
        .map(|i| ScoredUser {
            user_id: format!("sim{i}"),
            target: rng.gen_range(0..classes),
            probs: (0..classes).map(|_| rng.gen::<f64>()).collect(),
        })
        .collect();
    let n = n.min(max_comparison_size(&scored));
    let mut report = evaluate(&scored, ks, n, seed)?;
    report.per_class.clear();
    Ok(report)
}

/// Rows of named variants, columns k values then ACR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub ks: Vec<usize>,
    pub rows: Vec<(String, EvalReport)>,
}

impl ReportTable {
    pub fn new(ks: &[usize]) -> Self {
        ReportTable { ks: ks.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, name: &str, report: EvalReport) -> Result<()> {
        if report.ks != self.ks {
            return Err(Error::InvalidInput(format!("report for {name:?} has different k values")));
        }
        self.rows.push((name.to_string(), report));
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("variant");
        for k in &self.ks {
            out.push_str(&format!(",acc@{k}"));
        }
        out.push_str(",acr\n");
        for (name, r) in &self.rows {
            out.push_str(name);
            for a in &r.accuracy {
                out.push_str(&format!(",{a:.2}"));
            }
            out.push_str(&format!(",{:.2}\n", r.acr));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|(name, r)| {
                let acc: serde_json::Map<String, serde_json::Value> = self
                    .ks
                    .iter()
                    .zip(&r.accuracy)
                    .map(|(k, a)| (k.to_string(), serde_json::json!(a)))
                    .collect();
                serde_json::json!({
                    "variant": name,
                    "num_classes": r.num_classes,
                    "accuracy": acc,
                    "acr": r.acr,
                    "per_class": r.per_class,
                })
            })
            .collect();
        Ok(serde_json::to_string_pretty(&serde_json::json!({ "ks": self.ks, "rows": rows }))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn su(id: &str, target: usize, probs: &[f64]) -> ScoredUser {
        ScoredUser { user_id: id.into(), target, probs: probs.to_vec() }
    }

    #[test]
    fn fifty_class_random_row() {
        let r = random_baseline(50, &[1, 2, 3, 5, 10, 25]).unwrap();
        let mut t = ReportTable::new(&r.ks);
        t.push("rand", r).unwrap();
        assert_eq!(
            t.to_csv(),
            "variant,acc@1,acc@2,acc@3,acc@5,acc@10,acc@25,acr\nrand,2.00,4.00,6.00,10.00,20.00,50.00,50.00\n"
        );
        let r = random_baseline(806, &[100]).unwrap();
        assert!((r.accuracy[0] - 10000.0 / 806.0).abs() < 1e-9);
        assert_eq!(random_baseline(10, &[10]).unwrap().accuracy[0], 100.0);
        assert!(random_baseline(10, &[11]).is_err());
    }

    #[test]
    fn hand_fixture_accuracy() {
        // class 0: u1 hit@1, u2 miss@1 hit@2; class 2: u3 miss@1 (tie with 0, lower id wins), hit@2
        let s = vec![
            su("u1", 0, &[0.6, 0.3, 0.1]),
            su("u2", 0, &[0.3, 0.6, 0.1]),
            su("u3", 2, &[0.4, 0.2, 0.4]),
            su("u4", 1, &[0.2, 0.5, 0.3]),
        ];
        // @1: class0 1/2, class1 1/1, class2 0/1 -> 50%
        assert!((per_class_accuracy(&s, 1).unwrap() - 50.0).abs() < 1e-12);
        // @2: all hit -> 100
        assert!((per_class_accuracy(&s, 2).unwrap() - 100.0).abs() < 1e-12);
        assert!(per_class_accuracy(&s, 4).is_err());
    }

    #[test]
    fn three_user_acr() {
        let s = vec![
            su("a", 0, &[0.5, 0.5]),
            su("b", 1, &[0.7, 0.3]),
            su("c", 1, &[0.2, 0.8]),
        ];
        // a vs {b,c}: b has 0.7 >= 0.5 -> 1 of 2 = 50
        // b vs {a}: a has 0.5 >= 0.3 -> 100 (n=1)
        // c vs {a}: 0.5 < 0.8 -> 0
        let r = comparison_ranks(&s, 1, 0).unwrap();
        assert_eq!(r[1], 100.0);
        assert_eq!(r[2], 0.0);
        assert!(r[0] == 0.0 || r[0] == 100.0);
        assert!(acr(&s, 2, 0).is_err());
    }

    #[test]
    fn perfect_scorer_has_zero_acr() {
        let s: Vec<ScoredUser> = (0..20)
            .map(|i| {
                let mut p = vec![0.0; 4];
                p[i % 4] = 1.0;
                su(&format!("u{i}"), i % 4, &p)
            })
            .collect();
        assert_eq!(acr(&s, 15, 3).unwrap(), 0.0);
        assert_eq!(per_class_accuracy(&s, 1).unwrap(), 100.0);
    }

    #[test]
    fn simulated_random_is_near_half() {
        let r = simulate_random(50, &[10], 10_000, 10, 1).unwrap();
        assert!((r.acr - 50.0).abs() < 1.0, "{}", r.acr);
        assert!((r.accuracy[0] - 20.0).abs() < 1.5, "{}", r.accuracy[0]);
    }

    fn scored_strategy() -> impl Strategy<Value = Vec<ScoredUser>> {
        prop::collection::vec((0usize..4, prop::collection::vec(0.0f64..1.0, 4)), 12..30).prop_map(|rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (t, p))| su(&format!("u{i}"), t, &p))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn accuracy_is_monotone_in_k(s in scored_strategy()) {
            let mut prev = 0.0;
            for k in 1..=4 {
                let a = per_class_accuracy(&s, k).unwrap();
                prop_assert!(a >= prev - 1e-12);
                prop_assert!((0.0..=100.0).contains(&a));
                prev = a;
            }
            prop_assert!((prev - 100.0).abs() < 1e-12);
        }

        #[test]
        fn acr_depends_only_on_ranking(s in scored_strategy(), seed in 0u64..100) {
            let n = max_comparison_size(&s);
            prop_assume!(n > 0);
            let t: Vec<ScoredUser> = s.iter().map(|u| ScoredUser {
                probs: u.probs.iter().map(|p| (3.0 * p).exp()).collect(),
                ..u.clone()
            }).collect();
            prop_assert_eq!(acr(&s, n, seed).unwrap(), acr(&t, n, seed).unwrap());
        }
    }
}
