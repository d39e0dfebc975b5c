//! Personal-value scoring of profiles with Distributed Dictionary
//! Representations, and value-ranked activity clusters.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embed::{dot, norm, EmbeddingTable};
use crate::error::{Error, Result};
use crate::io;
use crate::tokenize::glove_preprocess;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueDimension {
    pub name: String,
    pub terms: Vec<String>,
}

/// Named value dimensions, each a non-empty set of words or phrases.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValueLexicon {
    dims: Vec<ValueDimension>,
}

impl ValueLexicon {
    pub fn new(dims: Vec<ValueDimension>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for d in &dims {
            if !seen.insert(d.name.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate value dimension {:?}", d.name)));
            }
            if d.terms.is_empty() {
                return Err(Error::InvalidInput(format!("value dimension {:?} has no terms", d.name)));
            }
        }
        Ok(ValueLexicon { dims })
    }

    /// "dimension<TAB>term" lines; dimensions keep first-appearance order.
    pub fn parse(text: &str) -> Result<Self> {
        let mut dims: Vec<ValueDimension> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, term) = line.split_once('\t').ok_or_else(|| {
                Error::InvalidInput(format!("value lexicon line {}: expected dimension<TAB>term", i + 1))
            })?;
            let term = term.trim();
            if term.is_empty() {
                continue;
            }
            match dims.iter_mut().find(|d| d.name == name) {
                Some(d) => d.terms.push(term.to_string()),
                None => dims.push(ValueDimension {
                    name: name.to_string(),
                    terms: vec![term.to_string()],
                }),
            }
        }
        Self::new(dims)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&io::read_to_string(path)?)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for d in &self.dims {
            for t in &d.terms {
                out.push_str(&format!("{}\t{}\n", d.name, t));
            }
        }
        out
    }

    pub fn dims(&self) -> &[ValueDimension] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.dims.iter().position(|d| d.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeVector {
    pub user_id: String,
    #[serde(rename = "a")]
    pub scores: Vec<f64>,
}

fn lexicon_mean(dim: &ValueDimension, table: &EmbeddingTable) -> Result<Vec<f64>> {
    if dim.terms.is_empty() {
        return Err(Error::InvalidInput(format!("value dimension {:?} has no terms", dim.name)));
    }
    let tokens: Vec<String> = dim.terms.iter().flat_map(|t| glove_preprocess(t)).collect();
    Ok(table.mean_pool(&tokens).0)
}

fn cosine_or_zero(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        log::debug!("ddr: zero-norm representation, score set to 0");
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

/// Cosine similarity between the mean profile-token vector and the mean
/// lexicon-token vector of one value dimension.
pub fn ddr_score(profile: &str, dim: &ValueDimension, table: &EmbeddingTable) -> Result<f64> {
    let lex = lexicon_mean(dim, table)?;
    let (prof, _) = table.mean_pool(&glove_preprocess(profile));
    Ok(cosine_or_zero(&prof, &lex))
}

/// Precomputed lexicon means, so scoring many profiles pools each
/// dimension once.
#[derive(Debug, Clone)]
pub struct DdrScorer<'a> {
    table: &'a EmbeddingTable,
    means: Vec<Vec<f64>>,
}

impl<'a> DdrScorer<'a> {
    pub fn new(lexicon: &ValueLexicon, table: &'a EmbeddingTable) -> Result<Self> {
        let means = lexicon
            .dims()
            .iter()
            .map(|d| lexicon_mean(d, table))
            .collect::<Result<_>>()?;
        Ok(DdrScorer { table, means })
    }

    pub fn scores(&self, profile: &str) -> Vec<f64> {
        let (prof, found) = self.table.mean_pool(&glove_preprocess(profile));
        if found == 0 {
            log::debug!("ddr: profile has no embedded tokens");
        }
        self.means.iter().map(|m| cosine_or_zero(&prof, m)).collect()
    }
}

/// One DDR score per lexicon dimension, in lexicon order.
pub fn attribute_vector(user_id: &str, profile: &str, lexicon: &ValueLexicon, table: &EmbeddingTable) -> Result<AttributeVector> {
    Ok(AttributeVector {
        user_id: user_id.to_string(),
        scores: DdrScorer::new(lexicon, table)?.scores(profile),
    })
}

/// Mean value score per cluster over the users with an activity in it.
/// Each user counts once per cluster; clusters without users are absent.
pub fn cluster_value_scores<'a>(
    users: impl IntoIterator<Item = (&'a [usize], &'a AttributeVector)>,
    value: usize,
) -> Result<BTreeMap<usize, f64>> {
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for (clusters, a) in users {
        let s = *a.scores.get(value).ok_or_else(|| {
            Error::InvalidInput(format!("attribute vector of {} has no dimension {value}", a.user_id))
        })?;
        let mut seen: Vec<usize> = clusters.to_vec();
        seen.sort_unstable();
        seen.dedup();
        for c in seen {
            let e = acc.entry(c).or_default();
            e.0 += s;
            e.1 += 1;
        }
    }
    Ok(acc.into_iter().map(|(c, (sum, n))| (c, sum / n as f64)).collect())
}

/// Cluster ids by descending score, ascending id on ties.
pub fn rank_clusters(scores: &BTreeMap<usize, f64>) -> Vec<usize> {
    let mut ids: Vec<(usize, f64)> = scores.iter().map(|(&c, &s)| (c, s)).collect();
    ids.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ids.into_iter().map(|(c, _)| c).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::parse_embeddings;
    use proptest::prelude::*;

    fn table() -> EmbeddingTable {
        let text = "kind 1 0 0\ncaring 0 1 0\ngod 0 0 1\nfaith 1 1 1\nsmart 2 0 1\nfamily 1 2 0\n";
        parse_embeddings(text, Path::new("t")).unwrap().table
    }

    fn dim(name: &str, terms: &[&str]) -> ValueDimension {
        ValueDimension {
            name: name.into(),
            terms: terms.iter().map(|t| t.to_string()).collect(),
        }
    }

    #[test]
    fn identical_tokens_score_one_and_orthogonal_zero() {
        let t = table();
        let care = dim("care", &["kind", "caring"]);
        assert!((ddr_score("kind caring", &care, &t).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(ddr_score("god", &dim("x", &["kind"]), &t).unwrap(), 0.0);
    }

    #[test]
    fn hand_computed_fixture() {
        // profile mean: (smart + family)/2 = (1.5, 1, 0.5)
        // lexicon mean: (god + faith)/2 = (0.5, 0.5, 1)
        // dot = 0.75 + 0.5 + 0.5 = 1.75
        // |p| = sqrt(2.25 + 1 + 0.25) = sqrt(3.5), |l| = sqrt(1.5)
        let expected = 1.75 / (3.5f64.sqrt() * 1.5f64.sqrt());
        let got = ddr_score("smart family", &dim("religion", &["god", "faith"]), &table()).unwrap();
        assert!((got - expected).abs() < 1e-9);
    }

    #[test]
    fn attribute_vector_composes_and_follows_order() {
        let t = table();
        let lex = ValueLexicon::new(vec![dim("care", &["kind"]), dim("religion", &["god faith"])]).unwrap();
        let a = attribute_vector("u", "kind smart", &lex, &t).unwrap();
        assert_eq!(a.scores.len(), 2);
        assert_eq!(a.scores[0], ddr_score("kind smart", &lex.dims()[0], &t).unwrap());
        assert_eq!(a.scores[1], ddr_score("kind smart", &lex.dims()[1], &t).unwrap());

        let flipped = ValueLexicon::new(vec![lex.dims()[1].clone(), lex.dims()[0].clone()]).unwrap();
        let b = attribute_vector("u", "kind smart", &flipped, &t).unwrap();
        assert_eq!(b.scores, [a.scores[1], a.scores[0]]);

        let empty = attribute_vector("u", "", &lex, &t).unwrap();
        assert_eq!(empty.scores, [0.0, 0.0]);
    }

    #[test]
    fn lexicon_parsing() {
        let lex = ValueLexicon::parse("family\tmother\nreligion\tgod\nfamily\tmy son\n").unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.dims()[0].terms, ["mother", "my son"]);
        assert!(ValueLexicon::parse("no tab here\n").is_err());
        assert!(ValueLexicon::new(vec![dim("a", &[])]).is_err());
        assert!(ValueLexicon::new(vec![dim("a", &["x"]), dim("a", &["y"])]).is_err());
        assert_eq!(ValueLexicon::parse(&lex.to_tsv()).unwrap(), lex);
    }

    fn av(id: &str, s: f64) -> AttributeVector {
        AttributeVector {
            user_id: id.into(),
            scores: vec![s],
        }
    }

    #[test]
    fn cluster_scores_average_users() {
        let a = av("a", 0.2);
        let b = av("b", 0.4);
        let one = cluster_value_scores([(&[3usize][..], &a)], 0).unwrap();
        assert_eq!(one[&3], 0.2);
        let two = cluster_value_scores([(&[1usize][..], &a), (&[1usize, 1][..], &b)], 0).unwrap();
        assert!((two[&1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn cluster_scores_match_brute_force() {
        let users = [
            (vec![0usize, 2], av("a", 0.9)),
            (vec![1], av("b", -0.3)),
            (vec![2, 1], av("c", 0.1)),
            (vec![4], av("d", 0.5)),
            (vec![0], av("e", -0.7)),
        ];
        let got = cluster_value_scores(users.iter().map(|(c, a)| (c.as_slice(), a)), 0).unwrap();
        for c in 0..6 {
            let members: Vec<f64> = users
                .iter()
                .filter(|(cs, _)| cs.contains(&c))
                .map(|(_, a)| a.scores[0])
                .collect();
            if members.is_empty() {
                assert!(!got.contains_key(&c));
            } else {
                let mean = members.iter().sum::<f64>() / members.len() as f64;
                assert!((got[&c] - mean).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn ranking_order_and_ties() {
        let s: BTreeMap<usize, f64> = [(1, 0.5), (2, 0.9)].into();
        assert_eq!(rank_clusters(&s), [2, 1]);
        let s: BTreeMap<usize, f64> = [(7, 0.1), (3, 0.1), (5, 0.1)].into();
        assert_eq!(rank_clusters(&s), [3, 5, 7]);
        assert!(rank_clusters(&BTreeMap::new()).is_empty());
    }

    proptest! {
        #[test]
        fn scores_bounded_and_duplication_invariant(
            words in prop::collection::vec(prop::sample::select(vec!["kind", "caring", "god", "faith", "smart", "family", "zzz"]), 0..6)
        ) {
            let t = table();
            let lex = ValueLexicon::new(vec![dim("a", &["kind", "god"]), dim("b", &["family"]), dim("c", &["smart faith"])]).unwrap();
            let profile = words.join(" ");
            let doubled = format!("{profile} {profile}");
            let s1 = DdrScorer::new(&lex, &t).unwrap().scores(&profile);
            let s2 = DdrScorer::new(&lex, &t).unwrap().scores(&doubled);
            for (x, y) in s1.iter().zip(&s2) {
                prop_assert!((-1.0..=1.0).contains(x));
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn ranking_is_a_permutation(scores in prop::collection::btree_map(0usize..50, -1.0f64..1.0, 0..20)) {
            let mut ranked = rank_clusters(&scores);
            ranked.sort_unstable();
            prop_assert_eq!(ranked, scores.keys().copied().collect::<Vec<_>>());
        }
    }
}
