//! User records, JSONL ingestion and the user-validity filter.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocKind {
    /// Retrieved by an activity query.
    Queried,
    /// Any other post from the user's timeline.
    Additional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub kind: DocKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: String,
    #[serde(default)]
    pub profile: String,
    #[serde(rename = "tweets", default)]
    pub history: Vec<Document>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub additional_activities: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub target_labels: Vec<usize>,
}

impl UserRecord {
    pub fn queried(&self) -> impl Iterator<Item = &Document> {
        self.history.iter().filter(|d| d.kind == DocKind::Queried)
    }

    pub fn additional(&self) -> impl Iterator<Item = &Document> {
        self.history.iter().filter(|d| d.kind == DocKind::Additional)
    }

    /// Checks the per-record invariants: non-empty document text and
    /// unique document ids (which also keeps queried and additional ids
    /// disjoint).
    pub fn check(&self) -> std::result::Result<(), String> {
        if self.user_id.is_empty() {
            return Err("empty user_id".into());
        }
        let mut seen = HashSet::new();
        for doc in &self.history {
            if doc.text.trim().is_empty() {
                return Err(format!("document {:?} has empty text", doc.id));
            }
            if !seen.insert(doc.id.as_str()) {
                return Err(format!("duplicate document id {:?}", doc.id));
            }
        }
        Ok(())
    }
}

/// A problem found on one input line.
#[derive(Debug, Clone, PartialEq)]
pub struct LineDiagnostic {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct LoadedUsers {
    pub users: Vec<UserRecord>,
    pub diagnostics: Vec<LineDiagnostic>,
}

/// Parses JSONL user records. Lines are parsed in parallel; output keeps
/// input order. Bad lines are collected unless `strict`, in which case the
/// first one is returned as an error.
pub fn parse_users(text: &str, strict: bool) -> std::result::Result<LoadedUsers, LineDiagnostic> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();
    let parsed: Vec<std::result::Result<UserRecord, LineDiagnostic>> = lines
        .par_iter()
        .map(|&(line, raw)| {
            let rec: UserRecord = serde_json::from_str(raw).map_err(|e| LineDiagnostic {
                line,
                message: e.to_string(),
            })?;
            rec.check().map_err(|message| LineDiagnostic { line, message })?;
            Ok(rec)
        })
        .collect();

    let mut users = Vec::with_capacity(parsed.len());
    let mut diagnostics = Vec::new();
    for item in parsed {
        match item {
            Ok(u) => users.push(u),
            Err(d) if strict => return Err(d),
            Err(d) => diagnostics.push(d),
        }
    }
    Ok(LoadedUsers { users, diagnostics })
}

pub fn load_users(path: &Path, strict: bool) -> Result<LoadedUsers> {
    let text = io::read_to_string(path)?;
    let loaded = parse_users(&text, strict).map_err(|d| Error::Parse {
        path: path.to_path_buf(),
        line: d.line,
        message: d.message,
    })?;
    for d in &loaded.diagnostics {
        log::warn!("{}:{}: skipped: {}", path.display(), d.line, d.message);
    }
    Ok(loaded)
}

pub fn save_users(path: &Path, users: &[UserRecord]) -> Result<()> {
    io::write_jsonl(path, users)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub min_tweets: usize,
    pub min_activities: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            min_tweets: 25,
            min_activities: 5,
        }
    }
}

pub fn is_valid_user(u: &UserRecord, t: Thresholds) -> bool {
    !u.profile.trim().is_empty()
        && u.additional().count() >= t.min_tweets
        && u.additional_activities.len() >= t.min_activities
}

pub fn filter_valid_users(users: Vec<UserRecord>, t: Thresholds) -> Vec<UserRecord> {
    users.into_iter().filter(|u| is_valid_user(u, t)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub dev: Vec<String>,
    pub test: Vec<String>,
}

/// Seeded user-level split. Users beyond `train + dev + test` are left out.
pub fn split_users(users: &[UserRecord], sizes: SplitSizes, seed: u64) -> Result<DatasetSplit> {
    let requested = sizes.train + sizes.dev + sizes.test;
    if requested > users.len() {
        return Err(Error::SplitOverflow {
            requested,
            population: users.len(),
        });
    }
    let mut ids: Vec<String> = users.iter().map(|u| u.user_id.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let mut rest = ids.into_iter();
    let train = rest.by_ref().take(sizes.train).collect();
    let dev = rest.by_ref().take(sizes.dev).collect();
    let test = rest.by_ref().take(sizes.test).collect();
    Ok(DatasetSplit { train, dev, test })
}
