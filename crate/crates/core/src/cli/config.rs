use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::Thresholds;
use crate::error::{Error, Result};
use crate::predict::{AdamParams, HistorySource, ModelConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub workdir: Option<PathBuf>,
    pub users: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub survey: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub values: Option<PathBuf>,
    pub negation: Option<PathBuf>,
    pub verbs: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub min_tweets: usize,
    pub min_activities: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        let t = Thresholds::default();
        FilterConfig {
            min_tweets: t.min_tweets,
            min_activities: t.min_activities,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub k: usize,
    pub n_min: u32,
    pub n_max: u32,
    pub max_iter: usize,
    pub tol: f64,
    pub silhouette_sample: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            k: 1024,
            n_min: 1,
            n_max: 10,
            max_iter: 100,
            tol: 1e-6,
            silhouette_sample: 5000,
        }
    }
}

/// Split sizes; unset sizes default to 15% dev, 15% test, rest train.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train: Option<usize>,
    pub dev: Option<usize>,
    pub test: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub dim_d: usize,
    pub dim_p: usize,
    pub classifier_layers: usize,
    pub hidden: usize,
    pub max_sample_docs: usize,
    pub batch: usize,
    pub epochs: usize,
    pub lr: f64,
    pub history: HistorySource,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::default();
        ModelSection {
            dim_d: m.dim_d,
            dim_p: m.dim_p,
            classifier_layers: m.classifier_layers,
            hidden: m.hidden,
            max_sample_docs: m.max_sample_docs,
            batch: m.batch,
            epochs: m.epochs,
            lr: m.adam.lr,
            history: m.history_source,
        }
    }
}

impl ModelSection {
    pub fn model_config(&self, seed: u64) -> ModelConfig {
        ModelConfig {
            dim_d: self.dim_d,
            dim_p: self.dim_p,
            classifier_layers: self.classifier_layers,
            hidden: self.hidden,
            max_sample_docs: self.max_sample_docs,
            batch: self.batch,
            epochs: self.epochs,
            adam: AdamParams { lr: self.lr, ..AdamParams::default() },
            history_source: self.history,
            seed,
            ..ModelConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub ks: Vec<usize>,
    pub acr_n: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            ks: vec![1, 2, 3, 5, 10, 25],
            acr_n: 1000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub threads: Option<usize>,
    pub strict: bool,
    pub paths: Paths,
    pub filter: FilterConfig,
    pub cluster: ClusterConfig,
    pub split: SplitConfig,
    pub model: ModelSection,
    pub eval: EvalConfig,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::io::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn workdir(&self) -> PathBuf {
        self.paths.workdir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    fn input(&self, explicit: &Option<PathBuf>, name: &str) -> PathBuf {
        explicit.clone().unwrap_or_else(|| self.workdir().join(name))
    }

    pub fn users_path(&self) -> PathBuf {
        self.input(&self.paths.users, "users.jsonl")
    }

    pub fn events_path(&self) -> PathBuf {
        self.input(&self.paths.events, "events.txt")
    }

    pub fn survey_path(&self) -> PathBuf {
        self.input(&self.paths.survey, "survey.txt")
    }

    pub fn embeddings_path(&self) -> PathBuf {
        self.input(&self.paths.embeddings, "embeddings.txt")
    }

    pub fn values_path(&self) -> PathBuf {
        self.input(&self.paths.values, "values.tsv")
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.workdir().join(name)
    }
}
