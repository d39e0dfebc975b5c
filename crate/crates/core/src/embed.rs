//! Word-embedding tables, phrase encoders and cosine distance.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::tokenize::glove_preprocess;

/// Token vectors stored row-major as `f32`; lookups widen to `f64`.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    dim: usize,
    index: HashMap<String, usize>,
    tokens: Vec<String>,
    data: Vec<f32>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            ..Default::default()
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Inserts a row unless the token already exists. Returns whether the
    /// row was added.
    pub fn insert(&mut self, token: &str, vector: &[f64]) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: vector.len(),
            });
        }
        if self.index.contains_key(token) {
            return Ok(false);
        }
        self.index.insert(token.to_string(), self.tokens.len());
        self.tokens.push(token.to_string());
        self.data.extend(vector.iter().map(|&x| x as f32));
        Ok(true)
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        let row = *self.index.get(token)?;
        Some(&self.data[row * self.dim..(row + 1) * self.dim])
    }

    /// Mean of the vectors of the tokens found in the table, with the
    /// number found. Zero vector when nothing is found.
    pub fn mean_pool<S: AsRef<str>>(&self, tokens: &[S]) -> (Vec<f64>, usize) {
        let mut sum = vec![0.0; self.dim];
        let mut found = 0;
        for t in tokens {
            if let Some(v) = self.get(t.as_ref()) {
                found += 1;
                for (s, &x) in sum.iter_mut().zip(v) {
                    *s += f64::from(x);
                }
            }
        }
        if found > 0 {
            let n = found as f64;
            sum.iter_mut().for_each(|s| *s /= n);
        }
        (sum, found)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, token) in self.tokens.iter().enumerate() {
            out.push_str(token);
            for x in &self.data[i * self.dim..(i + 1) * self.dim] {
                out.push(' ');
                out.push_str(&x.to_string());
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct LoadedTable {
    pub table: EmbeddingTable,
    pub diagnostics: Vec<String>,
}

/// Parses "token v1 ... vd" rows. The first row fixes the dimension.
/// Duplicate tokens keep their first row.
pub fn parse_embeddings(text: &str, source: &Path) -> Result<LoadedTable> {
    let mut table: Option<EmbeddingTable> = None;
    let mut diagnostics = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let (token, rest) = line.split_once(' ').ok_or_else(|| Error::Parse {
            path: source.to_path_buf(),
            line: line_no,
            message: "expected a token followed by values".into(),
        })?;
        let vector = io::parse_vector(rest).map_err(|message| Error::Parse {
            path: source.to_path_buf(),
            line: line_no,
            message,
        })?;
        let t = table.get_or_insert_with(|| EmbeddingTable::new(vector.len()));
        if vector.len() != t.dim() || vector.is_empty() {
            return Err(Error::Parse {
                path: source.to_path_buf(),
                line: line_no,
                message: format!("row has {} values, table dimension is {}", vector.len(), t.dim()),
            });
        }
        if !t.insert(token, &vector)? {
            diagnostics.push(format!("line {line_no}: duplicate token {token:?} ignored"));
        }
    }
    Ok(LoadedTable {
        table: table.unwrap_or_default(),
        diagnostics,
    })
}

pub fn load_embeddings(path: &Path) -> Result<LoadedTable> {
    let loaded = parse_embeddings(&io::read_to_string(path)?, path)?;
    for d in &loaded.diagnostics {
        log::warn!("{}: {d}", path.display());
    }
    Ok(loaded)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseVector {
    pub phrase: String,
    pub vector: Vec<f64>,
    /// Fraction of tokens found in the table.
    pub covered: f64,
}

/// Turns a normalized phrase into a vector. Implementations other than
/// mean pooling can be supplied through precomputed phrase files.
pub trait PhraseEncoder: Sync {
    fn dim(&self) -> usize;
    fn encode(&self, phrase: &str) -> PhraseVector;

    fn encode_all(&self, phrases: &[String]) -> Vec<PhraseVector> {
        phrases.par_iter().map(|p| self.encode(p)).collect()
    }
}

impl PhraseEncoder for EmbeddingTable {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, phrase: &str) -> PhraseVector {
        encode_phrase(phrase, self)
    }
}

/// Mean-pooled word vectors over the preprocessed tokens of `phrase`.
pub fn encode_phrase(phrase: &str, table: &EmbeddingTable) -> PhraseVector {
    let tokens = glove_preprocess(phrase);
    let (vector, found) = table.mean_pool(&tokens);
    if found == 0 {
        log::debug!("no embedded tokens in phrase {phrase:?}");
    }
    PhraseVector {
        phrase: phrase.to_string(),
        vector,
        covered: if tokens.is_empty() {
            0.0
        } else {
            found as f64 / tokens.len() as f64
        },
    }
}

/// Phrase vectors produced elsewhere, keyed by phrase text.
#[derive(Debug, Clone, Default)]
pub struct PrecomputedPhrases {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl PrecomputedPhrases {
    pub fn from_vectors(vectors: &[PhraseVector]) -> Result<Self> {
        let dim = vectors.first().map_or(0, |v| v.vector.len());
        let mut map = HashMap::new();
        for v in vectors {
            if v.vector.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.vector.len(),
                });
            }
            map.entry(v.phrase.clone()).or_insert_with(|| v.vector.clone());
        }
        Ok(PrecomputedPhrases { dim, vectors: map })
    }
}

impl PhraseEncoder for PrecomputedPhrases {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, phrase: &str) -> PhraseVector {
        match self.vectors.get(phrase) {
            Some(v) => PhraseVector {
                phrase: phrase.to_string(),
                vector: v.clone(),
                covered: 1.0,
            },
            None => PhraseVector {
                phrase: phrase.to_string(),
                vector: vec![0.0; self.dim],
                covered: 0.0,
            },
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `1 - A·B / (|A||B|)`, clamped to [0, 2]. A zero vector on either side
/// gives 1.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        log::debug!("cosine distance with a zero vector");
        return Ok(1.0);
    }
    Ok((1.0 - dot(a, b) / (na * nb)).clamp(0.0, 2.0))
}

/// Writes "phrase<TAB>v1 ... vd" rows.
pub fn write_phrase_vectors(path: &Path, vectors: &[PhraseVector]) -> Result<()> {
    let mut out = String::new();
    for v in vectors {
        out.push_str(&v.phrase);
        out.push('\t');
        out.push_str(&io::format_vector(&v.vector));
        out.push('\n');
    }
    io::write_atomic(path, out.as_bytes())
}

pub fn read_phrase_vectors(path: &Path) -> Result<Vec<PhraseVector>> {
    let text = io::read_to_string(path)?;
    let mut out: Vec<PhraseVector> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let (phrase, values) = line
            .split_once('\t')
            .ok_or_else(|| err("expected phrase<TAB>vector".into()))?;
        let vector = io::parse_vector(values).map_err(err)?;
        if let Some(first) = out.first() {
            if first.vector.len() != vector.len() {
                return Err(err(format!("expected {} values, got {}", first.vector.len(), vector.len())));
            }
        }
        let covered = if vector.iter().any(|&x| x != 0.0) { 1.0 } else { 0.0 };
        out.push(PhraseVector {
            phrase: phrase.to_string(),
            vector,
            covered,
        });
    }
    Ok(out)
}
