use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sample_weight, Adam, ClassMap, Gradients, ModelConfig, PredictionModel, TaskSetup, TrainingExample, UserFeatures};
use crate::error::{Error, Result};
use crate::eval::{per_class_accuracy, ScoredUser};

/// Examples per parallel work unit; fixed so the gradient reduction order
/// does not depend on the thread count.
const CHUNK: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_acc1: Option<f64>,
}

pub fn log_csv(log: &[EpochLog]) -> String {
    let mut out = String::from("epoch,train_loss,dev_acc1\n");
    for e in log {
        let dev = e.dev_acc1.map(|a| a.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", e.epoch, e.train_loss, dev));
    }
    out
}

/// A trained model together with its output-class mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub setup: TaskSetup,
    pub classes: ClassMap,
    pub model: PredictionModel,
}

impl Checkpoint {
    /// One scored entry per user target the class map keeps, with the full
    /// history pooled.
    pub fn score(&self, users: &[UserFeatures]) -> Result<Vec<ScoredUser>> {
        let per_user: Vec<Result<Vec<ScoredUser>>> = users
            .par_iter()
            .map(|u| {
                let targets: Vec<usize> = u.targets.iter().filter_map(|&c| self.classes.class_of(c)).collect();
                if targets.is_empty() {
                    return Ok(Vec::new());
                }
                let probs = self.model.forward(&u.attributes, &u.history, &u.profile)?;
                let mut seen = Vec::new();
                Ok(targets
                    .into_iter()
                    .filter(|t| {
                        let new = !seen.contains(t);
                        seen.push(*t);
                        new
                    })
                    .map(|target| ScoredUser {
                        user_id: u.user_id.clone(),
                        target,
                        probs: probs.clone(),
                    })
                    .collect())
            })
            .collect();
        let mut out = Vec::new();
        for r in per_user {
            out.extend(r?);
        }
        Ok(out)
    }
}

pub struct TrainState {
    pub adam: Adam,
    pub epoch: usize,
    pub best_dev: Option<f64>,
    pub best_epoch: usize,
    pub best_params: Gradients,
    pub rng: ChaCha8Rng,
}

pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochLog>,
    pub best_epoch: usize,
    /// Σ of instance weights over the training set.
    pub total_weight: f64,
    pub num_instances: usize,
}

/// Training instances, one per (user, kept target): (user index, class).
pub fn instances(users: &[UserFeatures], classes: &ClassMap) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, u) in users.iter().enumerate() {
        let mut seen = Vec::new();
        for &c in &u.targets {
            if let Some(class) = classes.class_of(c) {
                if !seen.contains(&class) {
                    seen.push(class);
                    out.push((i, class));
                }
            }
        }
    }
    out
}

/// Instance counts per cluster over a labeled user set.
pub fn cluster_counts(users: &[UserFeatures]) -> BTreeMap<usize, usize> {
    let mut counts = BTreeMap::new();
    for u in users {
        let mut targets = u.targets.clone();
        targets.sort_unstable();
        targets.dedup();
        for c in targets {
            *counts.entry(c).or_insert(0) += 1;
        }
    }
    counts
}

/// `w_c` for every output class present in `instances`.
pub fn class_weights(instances: &[(usize, usize)], dim_o: usize) -> Result<Vec<f64>> {
    let mut counts = BTreeMap::new();
    for &(_, c) in instances {
        *counts.entry(c).or_insert(0) += 1;
    }
    (0..dim_o)
        .map(|c| {
            if counts.contains_key(&c) {
                sample_weight(c, &counts, instances.len(), dim_o)
            } else {
                Ok(0.0)
            }
        })
        .collect()
}

/// Trains with weighted cross-entropy and Adam, reshuffling and resampling
/// histories every epoch, and keeps the parameters with the best dev
/// per-class accuracy@1 (the last epoch when dev is empty).
pub fn train(train: &[UserFeatures], dev: &[UserFeatures], config: &ModelConfig, setup: TaskSetup) -> Result<TrainOutcome> {
    if train.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    let classes = ClassMap::build(setup, &cluster_counts(train));
    let mut config = config.clone();
    config.dim_o = classes.dim_o();
    config.validate()?;
    if config.dim_o < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 output classes, got {}", config.dim_o)));
    }
    let inst = instances(train, &classes);
    if inst.is_empty() {
        return Err(Error::InvalidInput("no training instances after class mapping".into()));
    }
    let weights = class_weights(&inst, config.dim_o)?;
    let total_weight: f64 = inst.iter().map(|&(_, c)| weights[c]).sum();

    let dropped_dev = dev
        .iter()
        .flat_map(|u| &u.targets)
        .filter(|&&c| classes.class_of(c).is_none())
        .count();
    if dropped_dev > 0 {
        log::warn!("{dropped_dev} dev targets have no output class and are ignored");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut checkpoint = Checkpoint {
        setup,
        classes,
        model: PredictionModel::init(config.clone(), &mut rng)?,
    };
    let shapes: Vec<usize> = checkpoint.model.params.tensors().iter().map(|t| t.len()).collect();
    let mut state = TrainState {
        adam: Adam::new(config.adam, &shapes),
        epoch: 0,
        best_dev: None,
        best_epoch: 0,
        best_params: checkpoint.model.params.clone(),
        rng,
    };

    let mut order: Vec<usize> = (0..inst.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        state.epoch = epoch;
        order.shuffle(&mut state.rng);
        let histories: Vec<Vec<Vec<f64>>> = if config.use_h {
            train
                .iter()
                .map(|u| u.sample_history(config.max_sample_docs, &mut state.rng))
                .collect()
        } else {
            vec![Vec::new(); train.len()]
        };

        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch) {
            let examples: Vec<TrainingExample> = batch
                .iter()
                .map(|&j| {
                    let (u, class) = inst[j];
                    TrainingExample {
                        attributes: &train[u].attributes,
                        history: &histories[u],
                        profile: &train[u].profile,
                        class,
                        weight: weights[class],
                    }
                })
                .collect();
            let scale = 1.0 / examples.len() as f64;
            let model = &checkpoint.model;
            let parts: Vec<Result<(f64, Gradients)>> = examples
                .par_chunks(CHUNK)
                .map(|c| model.scaled_loss_and_gradients(c, scale))
                .collect();
            let mut loss = 0.0;
            let mut grads: Option<Gradients> = None;
            for part in parts {
                let (l, g) = part?;
                loss += l;
                match grads.as_mut() {
                    Some(acc) => acc.add_assign(&g),
                    None => grads = Some(g),
                }
            }
            let grads = grads.expect("non-empty batch");
            if !grads.is_finite() || !loss.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite loss or gradient in epoch {epoch}")));
            }
            state.adam.update(checkpoint.model.params.tensors_mut(), grads.tensors());
            epoch_loss += loss * examples.len() as f64;
        }
        let train_loss = epoch_loss / inst.len() as f64;

        let scored = checkpoint.score(dev)?;
        let dev_acc1 = if scored.is_empty() {
            None
        } else {
            Some(per_class_accuracy(&scored, 1)?)
        };
        let improved = match (dev_acc1, state.best_dev) {
            (None, _) => true,
            (Some(_), None) => true,
            (Some(a), Some(b)) => a > b,
        };
        if improved {
            if dev_acc1.is_some() {
                state.best_dev = dev_acc1;
            }
            state.best_epoch = epoch;
            state.best_params = checkpoint.model.params.clone();
        }
        log::debug!("epoch {epoch}: train loss {train_loss:.5}, dev acc@1 {dev_acc1:?}");
        log.push(EpochLog { epoch, train_loss, dev_acc1 });
    }
    checkpoint.model.params = state.best_params;
    Ok(TrainOutcome {
        checkpoint,
        log,
        best_epoch: state.best_epoch,
        total_weight,
        num_instances: inst.len(),
    })
}
