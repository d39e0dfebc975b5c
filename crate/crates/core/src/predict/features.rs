use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HistorySource;
use crate::corpus::UserRecord;
use crate::embed::EmbeddingTable;
use crate::tokenize::glove_preprocess;
use crate::values::AttributeVector;

/// Model inputs for one user, pooled over frozen word embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserFeatures {
    pub user_id: String,
    /// One mean-pooled vector per history document.
    pub history: Vec<Vec<f64>>,
    pub profile: Vec<f64>,
    pub attributes: Vec<f64>,
    /// Target activity clusters.
    pub targets: Vec<usize>,
}

impl UserFeatures {
    /// At most `max` history documents, drawn without replacement and kept
    /// in their original order.
    pub fn sample_history(&self, max: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        if self.history.len() <= max {
            return self.history.clone();
        }
        let mut idx = sample(rng, self.history.len(), max).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| self.history[i].clone()).collect()
    }
}

pub struct Featurizer<'a> {
    pub table: &'a EmbeddingTable,
    pub source: HistorySource,
}

impl<'a> Featurizer<'a> {
    pub fn new(table: &'a EmbeddingTable, source: HistorySource) -> Self {
        Featurizer { table, source }
    }

    /// Mean of the embeddings of the preprocessed tokens; misses skipped,
    /// zero vector when nothing is covered.
    pub fn pool(&self, text: &str) -> Vec<f64> {
        self.table.mean_pool(&glove_preprocess(text)).0
    }

    pub fn history_texts<'u>(&self, user: &'u UserRecord) -> Vec<&'u str> {
        match self.source {
            HistorySource::Tweets => user.additional().map(|d| d.text.as_str()).collect(),
            HistorySource::Activities => user.additional_activities.iter().map(String::as_str).collect(),
        }
    }

    pub fn features(&self, user: &UserRecord, attributes: Option<&AttributeVector>) -> UserFeatures {
        UserFeatures {
            user_id: user.user_id.clone(),
            history: self.history_texts(user).into_iter().map(|t| self.pool(t)).collect(),
            profile: self.pool(&user.profile),
            attributes: attributes.map(|a| a.scores.clone()).unwrap_or_default(),
            targets: user.target_labels.clone(),
        }
    }

    /// Features for many users, in input order.
    pub fn features_all(&self, users: &[UserRecord], attributes: &[Option<&AttributeVector>]) -> Vec<UserFeatures> {
        users
            .par_iter()
            .enumerate()
            .map(|(i, u)| self.features(u, attributes.get(i).copied().flatten()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DocKind, Document};
    use rand::SeedableRng;

    fn table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new(2);
        t.insert("ran", &[1.0, 0.0]).unwrap();
        t.insert("home", &[0.0, 1.0]).unwrap();
        t.insert("happy", &[1.0, 1.0]).unwrap();
        t
    }

    fn user() -> UserRecord {
        UserRecord {
            user_id: "u".into(),
            profile: "Happy zzz".into(),
            history: vec![
                Document { id: "q".into(), text: "I ran".into(), kind: DocKind::Queried },
                Document { id: "a".into(), text: "ran home".into(), kind: DocKind::Additional },
            ],
            additional_activities: vec!["home".into()],
            target_labels: vec![3],
        }
    }

    #[test]
    fn history_uses_additional_posts_or_activities() {
        let t = table();
        let f = Featurizer::new(&t, HistorySource::Tweets).features(&user(), None);
        assert_eq!(f.history, vec![vec![0.5, 0.5]]);
        assert_eq!(f.profile, vec![1.0, 1.0]);
        assert_eq!(f.targets, vec![3]);
        let f = Featurizer::new(&t, HistorySource::Activities).features(&user(), None);
        assert_eq!(f.history, vec![vec![0.0, 1.0]]);
    }

    #[test]
    fn sampling_caps_and_keeps_order() {
        let f = UserFeatures {
            user_id: "u".into(),
            history: (0..10).map(|i| vec![i as f64]).collect(),
            profile: vec![],
            attributes: vec![],
            targets: vec![],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = f.sample_history(4, &mut rng);
        assert_eq!(s.len(), 4);
        assert!(s.windows(2).all(|w| w[0][0] < w[1][0]));
        assert_eq!(f.sample_history(20, &mut rng).len(), 10);
    }
}
