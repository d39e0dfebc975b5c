//! Rewrites event phrases and survey answers into first-person, past-tense
//! activity queries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{VerbForm, VerbLexicon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuerySource {
    Event,
    Survey,
}

/// An ordered list of substrings that must all occur, in order, inside one
/// sentence. `exact` queries have a single substring and no wildcard gaps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityQuery {
    pub source: QuerySource,
    pub raw: String,
    pub substrings: Vec<String>,
    pub exact: bool,
}

impl ActivityQuery {
    /// Exact single-phrase query, as used for survey-derived activities.
    pub fn exact(source: QuerySource, raw: impl Into<String>, phrase: impl Into<String>) -> Self {
        ActivityQuery {
            source,
            raw: raw.into(),
            substrings: vec![phrase.into()],
            exact: true,
        }
    }

    pub fn text(&self) -> String {
        self.substrings.join(" ___ ")
    }
}

fn is_wildcard(core: &str) -> bool {
    core == "PersonY" || core == "PersonY's" || core.contains("___")
}

/// Splits trailing sentence punctuation off a token.
fn split_punct(token: &str) -> (&str, &str) {
    let core = token.trim_end_matches(['.', ',', '!', '?', ';', ':']);
    (core, &token[core.len()..])
}

fn conjugate(core: &str, lex: &VerbLexicon) -> Option<String> {
    let lower = core.to_lowercase();
    let analysis = lex.analyze(&lower)?;
    Some(match analysis.form {
        VerbForm::Past => lower,
        VerbForm::Base | VerbForm::ThirdSingular => lex.past_tense(&analysis.lemma),
    })
}

/// Converts an event such as `PersonX buys ___ at the store` into the
/// query `["I bought", "at the store"]`.
///
/// The first `PersonX` becomes "I", later ones "me", and every
/// `PersonX's` becomes "my". `PersonY`, `PersonY's` and `___` are wildcard
/// gaps that split the query; gaps at either end are dropped. The main verb
/// is the first token after the subject that the lexicon recognizes.
pub fn convert_event(event: &str, lex: &VerbLexicon) -> Result<ActivityQuery> {
    let tokens: Vec<&str> = event.split_whitespace().collect();
    if tokens.first().map(|t| split_punct(t).0) != Some("PersonX") {
        return Err(Error::NotPersonX(event.to_string()));
    }

    let mut segments: Vec<Vec<String>> = Vec::new();
    let mut current: Vec<String> = Vec::new();
    let mut saw_subject = false;
    let mut saw_verb = false;
    let mut saw_wildcard = false;

    for (i, token) in tokens.iter().enumerate() {
        let (core, punct) = split_punct(token);
        let word = if core == "PersonX's" {
            "my".to_string()
        } else if core == "PersonX" {
            if saw_subject {
                "me".to_string()
            } else {
                saw_subject = true;
                "I".to_string()
            }
        } else if is_wildcard(core) {
            saw_wildcard = true;
            if !current.is_empty() {
                segments.push(std::mem::take(&mut current));
            }
            continue;
        } else if !saw_verb && i > 0 {
            match conjugate(core, lex) {
                Some(past) => {
                    saw_verb = true;
                    past
                }
                None => core.to_string(),
            }
        } else {
            core.to_string()
        };
        current.push(format!("{word}{punct}"));
    }
    if !current.is_empty() {
        segments.push(current);
    }
    if !saw_verb {
        return Err(Error::NoVerb(event.to_string()));
    }

    let substrings: Vec<String> = segments.into_iter().map(|s| s.join(" ")).collect();
    Ok(ActivityQuery {
        source: QuerySource::Event,
        raw: event.to_string(),
        exact: !saw_wildcard,
        substrings,
    })
}

/// Converts a survey answer such as "go to the gym" into the exact query
/// "I went to the gym". Answers already in first-person past pass through.
pub fn convert_survey(activity: &str, lex: &VerbLexicon) -> Result<ActivityQuery> {
    let trimmed = activity.trim();
    if trimmed.is_empty() {
        return Err(Error::InvalidInput("empty survey activity".into()));
    }
    let mut tokens: Vec<String> = trimmed.split_whitespace().map(str::to_string).collect();
    if tokens[0].eq_ignore_ascii_case("i") {
        tokens.remove(0);
    }
    let verb_at = tokens
        .iter()
        .position(|t| lex.analyze(&split_punct(t).0.to_lowercase()).is_some())
        .ok_or_else(|| Error::NoVerb(activity.to_string()))?;
    let (core, punct) = split_punct(&tokens[verb_at]);
    let past = conjugate(core, lex).expect("position() found a known verb");
    tokens[verb_at] = format!("{past}{punct}");

    let phrase = std::iter::once("I".to_string())
        .chain(tokens)
        .collect::<Vec<_>>()
        .join(" ");
    Ok(ActivityQuery::exact(QuerySource::Survey, trimmed, phrase))
}

/// Converts every non-empty line, keeping the first occurrence of each
/// distinct query. Lines that fail conversion are returned separately.
pub fn convert_all<'a>(
    events: impl IntoIterator<Item = &'a str>,
    surveys: impl IntoIterator<Item = &'a str>,
    lex: &VerbLexicon,
) -> (Vec<ActivityQuery>, Vec<(String, Error)>) {
    let mut out: Vec<ActivityQuery> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut failures = Vec::new();
    let converted = events
        .into_iter()
        .filter(|l| !l.trim().is_empty())
        .map(|l| (l, convert_event(l.trim(), lex)))
        .chain(
            surveys
                .into_iter()
                .filter(|l| !l.trim().is_empty())
                .map(|l| (l, convert_survey(l, lex))),
        );
    for (line, result) in converted {
        match result {
            Ok(q) => {
                let key = q.substrings.iter().map(|s| s.to_lowercase()).collect::<Vec<_>>();
                if seen.insert(key) {
                    out.push(q);
                }
            }
            Err(e) => failures.push((line.to_string(), e)),
        }
    }
    (out, failures)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lex() -> VerbLexicon {
        VerbLexicon::builtin()
    }

    #[test]
    fn worked_event_example() {
        let q = convert_event("PersonX teaches PersonX's son", &lex()).unwrap();
        assert!(q.exact);
        assert_eq!(q.substrings, ["I taught my son"]);
    }

    #[test]
    fn wildcard_splits_event() {
        let q = convert_event("PersonX buys ___ at the store", &lex()).unwrap();
        assert!(!q.exact);
        assert_eq!(q.substrings, ["I bought", "at the store"]);
    }

    #[test]
    fn regular_verb_and_possessive() {
        let q = convert_event("PersonX listens to PersonX's music", &lex()).unwrap();
        assert_eq!(q.substrings, ["I listened to my music"]);
    }

    #[test]
    fn later_subject_becomes_me_and_persony_is_wildcard() {
        let q = convert_event("PersonX asks PersonY to help PersonX", &lex()).unwrap();
        assert_eq!(q.substrings, ["I asked", "to help me"]);
        let q = convert_event("PersonX gives PersonY's dog a bath", &lex()).unwrap();
        assert_eq!(q.substrings, ["I gave", "dog a bath"]);
    }

    #[test]
    fn event_errors() {
        assert!(matches!(
            convert_event("It is Christmas morning", &lex()),
            Err(Error::NotPersonX(_))
        ));
        assert!(matches!(
            convert_event("PersonX frobnicates wildly", &lex()),
            Err(Error::NoVerb(_))
        ));
    }

    #[test]
    fn survey_conversion() {
        let q = convert_survey("go to the gym", &lex()).unwrap();
        assert_eq!(q.substrings, ["I went to the gym"]);
        assert!(q.exact);
        let q = convert_survey("I watched a documentary", &lex()).unwrap();
        assert_eq!(q.substrings, ["I watched a documentary"]);
        assert!(convert_survey("", &lex()).is_err());
        assert!(convert_survey("   ", &lex()).is_err());
        assert!(matches!(convert_survey("purple elephants", &lex()), Err(Error::NoVerb(_))));
    }

    #[test]
    fn convert_all_dedupes_and_collects_failures() {
        let events = ["PersonX goes to the gym", "It rains", ""];
        let surveys = ["go to the gym", "read a book"];
        let (qs, failures) = convert_all(events, surveys, &lex());
        let texts: Vec<_> = qs.iter().map(|q| q.text()).collect();
        assert_eq!(texts, ["I went to the gym", "I read a book"]);
        assert_eq!(failures.len(), 1);
    }

    // Token classes used to build random events for the skeleton check.
    fn filler() -> impl Strategy<Value = &'static str> {
        prop::sample::select(vec!["the", "store", "at", "a", "son", "dog", "with", "PersonX", "PersonX's", "PersonY", "___"])
    }

    fn skeleton_of_event(tokens: &[&str]) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for (i, t) in tokens.iter().enumerate() {
            let s = match *t {
                "PersonX" => "X".to_string(),
                "PersonX's" => "X's".to_string(),
                "PersonY" | "PersonY's" | "___" => "*".to_string(),
                _ if i == 1 => "VERB".to_string(),
                other => other.to_string(),
            };
            if s == "*" && out.last().map(String::as_str) == Some("*") {
                continue;
            }
            out.push(s);
        }
        while out.last().map(String::as_str) == Some("*") {
            out.pop();
        }
        out
    }

    fn skeleton_of_query(q: &ActivityQuery) -> Vec<String> {
        q.substrings
            .join(" ___ ")
            .split_whitespace()
            .enumerate()
            .map(|(i, t)| match t {
                "I" | "me" => "X".to_string(),
                "my" => "X's".to_string(),
                "___" => "*".to_string(),
                _ if i == 1 => "VERB".to_string(),
                other => other.to_string(),
            })
            .collect()
    }

    proptest! {
        #[test]
        fn query_reconstructs_event_skeleton(
            verb in prop::sample::select(vec!["teaches", "buys", "listens", "goes", "walks", "plays"]),
            rest in prop::collection::vec(filler(), 0..8),
        ) {
            let mut tokens = vec!["PersonX", verb];
            tokens.extend(rest.iter().copied());
            let event = tokens.join(" ");
            let q = convert_event(&event, &lex()).unwrap();
            for s in &q.substrings {
                prop_assert!(!s.is_empty());
                prop_assert!(!s.contains("PersonX") && !s.contains("PersonY") && !s.contains("___"));
            }
            let wildcard_inside = skeleton_of_event(&tokens).contains(&"*".to_string());
            prop_assert_eq!(q.substrings.len() >= 2, wildcard_inside);
            prop_assert_eq!(skeleton_of_query(&q), skeleton_of_event(&tokens));
        }
    }
}
