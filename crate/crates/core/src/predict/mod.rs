//! Activity-cluster prediction model and its training protocol.
//!
//! A user's history documents and profile are mean-pooled over frozen word
//! embeddings and passed through trainable affine + tanh encoders. History
//! document encodings are averaged into one history vector. The
//! concatenation of attributes, history and profile feeds a feed-forward
//! classifier with a softmax output, trained with class-weighted
//! cross-entropy and Adam.

mod adam;
mod classes;
mod features;
mod model;
mod train;

use serde::{Deserialize, Serialize};

pub use adam::{Adam, AdamParams};
pub use classes::{relabel_other, sample_weight, ClassMap, Label, TaskSetup};
pub use features::{Featurizer, UserFeatures};
pub use model::{Dense, Gradients, HistoryDocs, PredictionModel, TrainingExample};
pub use train::{class_weights, cluster_counts, instances, log_csv, train, Checkpoint, EpochLog, TrainOutcome, TrainState};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistorySource {
    /// All additional posts.
    Tweets,
    /// Only the activity phrases extracted from them.
    Activities,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Word-embedding dimension of the inputs.
    pub emb_dim: usize,
    pub dim_d: usize,
    pub dim_p: usize,
    /// Attribute vector length; ignored when `use_a` is off.
    pub dim_a: usize,
    pub dim_o: usize,
    /// Dense layers in the classifier, the output layer included.
    pub classifier_layers: usize,
    pub hidden: usize,
    pub max_sample_docs: usize,
    pub batch: usize,
    pub epochs: usize,
    pub adam: AdamParams,
    pub seed: u64,
    pub use_a: bool,
    pub use_p: bool,
    pub use_h: bool,
    pub history_source: HistorySource,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            emb_dim: 100,
            dim_d: 128,
            dim_p: 128,
            dim_a: 50,
            dim_o: 50,
            classifier_layers: 3,
            hidden: 512,
            max_sample_docs: 100,
            batch: 32,
            epochs: 100,
            adam: AdamParams::default(),
            seed: 0,
            use_a: true,
            use_p: true,
            use_h: true,
            history_source: HistorySource::Tweets,
        }
    }
}

impl ModelConfig {
    /// History vector size; mean pooling keeps the document size.
    pub fn dim_h(&self) -> usize {
        self.dim_d
    }

    pub fn classifier_input(&self) -> usize {
        (if self.use_a { self.dim_a } else { 0 })
            + (if self.use_h { self.dim_h() } else { 0 })
            + (if self.use_p { self.dim_p } else { 0 })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.use_a || self.use_p || self.use_h) {
            return Err(Error::Config("at least one of attributes, profile, history must be enabled".into()));
        }
        if self.use_a && self.dim_a == 0 {
            return Err(Error::Config("attributes enabled with dim_a = 0".into()));
        }
        let dims = [
            ("emb_dim", self.emb_dim),
            ("dim_d", self.dim_d),
            ("dim_p", self.dim_p),
            ("dim_o", self.dim_o),
            ("classifier_layers", self.classifier_layers),
            ("hidden", self.hidden),
            ("max_sample_docs", self.max_sample_docs),
            ("batch", self.batch),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}
