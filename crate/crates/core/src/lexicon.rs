//! English verb lexicon: irregular past forms, suffix rules for regular
//! verbs, and the inverse maps used for tense detection and lemmatization.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

const IRREGULAR: &str = include_str!("../data/irregular_verbs.tsv");
const REGULAR: &str = include_str!("../data/regular_verbs.txt");
const DOUBLING: &str = include_str!("../data/doubling_verbs.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerbForm {
    Base,
    ThirdSingular,
    Past,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerbAnalysis {
    pub lemma: String,
    pub form: VerbForm,
}

#[derive(Debug, Clone, Default)]
pub struct VerbLexicon {
    /// Lemmas in table order, irregulars first.
    lemmas: Vec<String>,
    irregular: HashMap<String, String>,
    doubling: HashSet<String>,
    past_of: HashMap<String, String>,
    lemma_of_past: HashMap<String, String>,
    lemma_of_third: HashMap<String, String>,
}

fn list_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

/// Suffix rules for a lemma that is not in the irregular table.
fn regular_past(lemma: &str, doubles: bool) -> String {
    let chars: Vec<char> = lemma.chars().collect();
    match chars.as_slice() {
        [] => String::new(),
        [.., 'e'] => format!("{lemma}d"),
        [.., c, 'y'] if !is_vowel(*c) => format!("{}ied", &lemma[..lemma.len() - 1]),
        [.., last] if doubles => format!("{lemma}{last}ed"),
        _ => format!("{lemma}ed"),
    }
}

fn third_singular(lemma: &str) -> String {
    match lemma {
        "be" => return "is".into(),
        "have" => return "has".into(),
        _ => {}
    }
    let chars: Vec<char> = lemma.chars().collect();
    match chars.as_slice() {
        [.., 's' | 'x' | 'z' | 'o'] => format!("{lemma}es"),
        [.., 'c' | 's', 'h'] => format!("{lemma}es"),
        [.., c, 'y'] if !is_vowel(*c) => format!("{}ies", &lemma[..lemma.len() - 1]),
        _ => format!("{lemma}s"),
    }
}

impl VerbLexicon {
    /// The shipped irregular table plus the regular lemma list.
    pub fn builtin() -> Self {
        let mut lex = VerbLexicon {
            doubling: list_lines(DOUBLING).map(str::to_string).collect(),
            ..Default::default()
        };
        for line in list_lines(IRREGULAR) {
            let (lemma, past) = line.split_once('\t').expect("irregular table is two-column");
            lex.insert(lemma, Some(past));
        }
        for lemma in list_lines(REGULAR) {
            lex.insert(lemma, None);
        }
        lex
    }

    /// Adds `lemma<TAB>past` rows on top of the builtin table. Rows override
    /// the past form of an existing lemma.
    pub fn extend_from_tsv(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (lemma, past) = line
                .split_once('\t')
                .ok_or_else(|| Error::InvalidInput(format!("verb lexicon line {}: expected lemma<TAB>past", i + 1)))?;
            let (lemma, past) = (lemma.trim().to_lowercase(), past.trim().to_lowercase());
            if lemma.is_empty() || past.is_empty() {
                return Err(Error::InvalidInput(format!("verb lexicon line {}: empty field", i + 1)));
            }
            if let Some(old) = self.past_of.get(&lemma).cloned() {
                if self.lemma_of_past.get(&old) == Some(&lemma) {
                    self.lemma_of_past.remove(&old);
                }
                self.past_of.remove(&lemma);
                self.lemmas.retain(|l| l != &lemma);
            }
            self.insert(&lemma, Some(&past));
        }
        Ok(())
    }

    fn insert(&mut self, lemma: &str, past: Option<&str>) {
        if self.past_of.contains_key(lemma) {
            return;
        }
        let past = match past {
            Some(p) => {
                self.irregular.insert(lemma.to_string(), p.to_string());
                p.to_string()
            }
            None => regular_past(lemma, self.doubling.contains(lemma)),
        };
        self.lemmas.push(lemma.to_string());
        self.past_of.insert(lemma.to_string(), past.clone());
        match self.lemma_of_past.get(&past) {
            Some(first) if first != lemma => {
                log::debug!("past form {past:?} is shared by {first:?} and {lemma:?}; keeping {first:?}");
            }
            Some(_) => {}
            None => {
                self.lemma_of_past.insert(past, lemma.to_string());
            }
        }
        self.lemma_of_third
            .entry(third_singular(lemma))
            .or_insert_with(|| lemma.to_string());
    }

    pub fn len(&self) -> usize {
        self.lemmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lemmas.is_empty()
    }

    pub fn irregular_len(&self) -> usize {
        self.irregular.len()
    }

    pub fn lemmas(&self) -> impl Iterator<Item = &str> {
        self.lemmas.iter().map(String::as_str)
    }

    pub fn contains_lemma(&self, lemma: &str) -> bool {
        self.past_of.contains_key(lemma)
    }

    /// Irregular table first, then suffix rules. Total over any input.
    pub fn past_tense(&self, lemma: &str) -> String {
        if let Some(p) = self.irregular.get(lemma) {
            return p.clone();
        }
        regular_past(lemma, self.doubling.contains(lemma))
    }

    /// Membership in the known past-tense (VBD) set.
    pub fn is_past(&self, token: &str) -> bool {
        self.lemma_of_past.contains_key(token)
    }

    pub fn lemma_of_past(&self, past: &str) -> Option<&str> {
        self.lemma_of_past.get(past).map(String::as_str)
    }

    pub fn past_forms(&self) -> impl Iterator<Item = &str> {
        self.lemma_of_past.keys().map(String::as_str)
    }

    /// Recognizes a lowercase token as a known verb. Past forms win over
    /// lemmas when a token is both (e.g. "read", "found").
    pub fn analyze(&self, token: &str) -> Option<VerbAnalysis> {
        if let Some(lemma) = self.lemma_of_past.get(token) {
            return Some(VerbAnalysis {
                lemma: lemma.clone(),
                form: VerbForm::Past,
            });
        }
        if self.past_of.contains_key(token) {
            return Some(VerbAnalysis {
                lemma: token.to_string(),
                form: VerbForm::Base,
            });
        }
        self.lemma_of_third.get(token).map(|lemma| VerbAnalysis {
            lemma: lemma.clone(),
            form: VerbForm::ThirdSingular,
        })
    }
}

/// Free-function form of [`VerbLexicon::past_tense`].
pub fn past_tense(lemma: &str, lex: &VerbLexicon) -> String {
    lex.past_tense(lemma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn irregular_table_wins() {
        let lex = VerbLexicon::builtin();
        assert_eq!(lex.past_tense("teach"), "taught");
        assert_eq!(lex.past_tense("buy"), "bought");
        assert_eq!(lex.past_tense("go"), "went");
    }

    #[test]
    fn suffix_rules() {
        let lex = VerbLexicon::builtin();
        assert_eq!(lex.past_tense("watch"), "watched");
        assert_eq!(lex.past_tense("study"), "studied");
        assert_eq!(lex.past_tense("bake"), "baked");
        assert_eq!(lex.past_tense("play"), "played");
        assert_eq!(lex.past_tense("stop"), "stopped");
        assert_eq!(lex.past_tense("prefer"), "preferred");
        // not in the doubling list
        assert_eq!(lex.past_tense("travel"), "traveled");
        assert_eq!(lex.past_tense("frobnicate"), "frobnicated");
    }

    #[test]
    fn shipped_irregular_table_is_large_and_injective() {
        let lex = VerbLexicon::builtin();
        assert!(lex.irregular_len() >= 150);
        let mut seen = HashMap::new();
        for line in list_lines(IRREGULAR) {
            let (lemma, past) = line.split_once('\t').unwrap();
            if let Some(prev) = seen.insert(past, lemma) {
                panic!("{past} is the past of both {prev} and {lemma}");
            }
        }
    }

    #[test]
    fn analyze_recognizes_forms() {
        let lex = VerbLexicon::builtin();
        let a = lex.analyze("teaches").unwrap();
        assert_eq!((a.lemma.as_str(), a.form), ("teach", VerbForm::ThirdSingular));
        assert_eq!(lex.analyze("goes").unwrap().lemma, "go");
        assert_eq!(lex.analyze("is").unwrap().lemma, "be");
        assert_eq!(lex.analyze("studies").unwrap().lemma, "study");
        assert_eq!(lex.analyze("went").unwrap().form, VerbForm::Past);
        assert_eq!(lex.analyze("listen").unwrap().form, VerbForm::Base);
        assert!(lex.analyze("socks").is_none());
    }

    #[test]
    fn extension_file_overrides() {
        let mut lex = VerbLexicon::builtin();
        lex.extend_from_tsv("dream\tdreamt\nteach\tteached\n").unwrap();
        assert_eq!(lex.past_tense("dream"), "dreamt");
        assert_eq!(lex.past_tense("teach"), "teached");
        assert!(lex.is_past("dreamt"));
        assert!(!lex.is_past("taught"));
        assert!(lex.extend_from_tsv("nocolumns\n").is_err());
    }

    proptest! {
        #[test]
        fn past_tense_is_total_and_deterministic(lemma in "[a-z]{1,12}") {
            let lex = VerbLexicon::builtin();
            let a = lex.past_tense(&lemma);
            prop_assert!(!a.is_empty());
            prop_assert_eq!(a, lex.past_tense(&lemma));
        }
    }
}
