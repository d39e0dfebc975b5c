//! Output-class setups and class-imbalance weights.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `w_c = N / (count(c) * dim_o)`.
pub fn sample_weight(class: usize, counts: &BTreeMap<usize, usize>, n: usize, dim_o: usize) -> Result<f64> {
    match counts.get(&class) {
        Some(&c) if c > 0 && dim_o > 0 => Ok(n as f64 / (c as f64 * dim_o as f64)),
        _ => Err(Error::InvalidInput(format!("class {class} has no training instances"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Cluster(usize),
    Other,
}

/// Replaces every cluster with fewer than `min_count` instances by
/// [`Label::Other`].
pub fn relabel_other(labels: &[usize], counts: &BTreeMap<usize, usize>, min_count: usize) -> Vec<Label> {
    labels
        .iter()
        .map(|&c| {
            if counts.get(&c).copied().unwrap_or(0) >= min_count {
                Label::Cluster(c)
            } else {
                Label::Other
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum TaskSetup {
    /// Every cluster seen in training is an output class.
    All,
    /// The n most frequent training clusters; other instances are dropped.
    Top(usize),
    /// Clusters below the count threshold share one extra "other" class.
    MinCount(usize),
}

/// Maps activity clusters to output indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassMap {
    pub clusters: Vec<usize>,
    pub other: bool,
}

impl ClassMap {
    /// Builds the map from training-instance counts per cluster.
    pub fn build(setup: TaskSetup, counts: &BTreeMap<usize, usize>) -> Self {
        match setup {
            TaskSetup::All => ClassMap {
                clusters: counts.keys().copied().collect(),
                other: false,
            },
            TaskSetup::Top(n) => {
                let mut by_count: Vec<(usize, usize)> = counts.iter().map(|(&c, &n)| (c, n)).collect();
                by_count.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
                let mut clusters: Vec<usize> = by_count.into_iter().take(n).map(|(c, _)| c).collect();
                clusters.sort_unstable();
                ClassMap { clusters, other: false }
            }
            TaskSetup::MinCount(min) => {
                let clusters: Vec<usize> = counts.iter().filter(|(_, &n)| n >= min).map(|(&c, _)| c).collect();
                let other = counts.values().any(|&n| n < min);
                ClassMap { clusters, other }
            }
        }
    }

    pub fn dim_o(&self) -> usize {
        self.clusters.len() + usize::from(self.other)
    }

    /// Output index for a cluster, or `None` when the setup drops it.
    pub fn class_of(&self, cluster: usize) -> Option<usize> {
        match self.clusters.binary_search(&cluster) {
            Ok(i) => Some(i),
            Err(_) if self.other => Some(self.clusters.len()),
            Err(_) => None,
        }
    }

    pub fn label_of(&self, class: usize) -> Label {
        match self.clusters.get(class) {
            Some(&c) => Label::Cluster(c),
            None => Label::Other,
        }
    }

    pub fn class_name(&self, class: usize) -> String {
        match self.label_of(class) {
            Label::Cluster(c) => c.to_string(),
            Label::Other => "other".to_string(),
        }
    }
}
