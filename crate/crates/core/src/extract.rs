//! Query matching, validity filtering, activity phrase extraction and
//! phrase normalization.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::lexicon::VerbLexicon;
use crate::querygen::ActivityQuery;
use crate::text::{self, find_phrase, sentences, strip_punct, token_ranges};

const DEFAULT_NEGATIONS: &str = include_str!("../data/negation_patterns.txt");

/// A byte span inside one document, tagged with the sentence that holds it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span {
    pub range: Range<usize>,
    pub sentence: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityPhraseInstance {
    pub user_id: String,
    pub doc_id: String,
    pub query_id: Option<usize>,
    pub phrase: String,
    pub normalized: String,
}

/// Patterns that, right before an activity, signal the author did not
/// actually do it ("I wish", "should I").
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegationFilter {
    patterns: Vec<String>,
}

impl Default for NegationFilter {
    fn default() -> Self {
        Self::from_lines(DEFAULT_NEGATIONS)
    }
}

impl NegationFilter {
    pub fn new(patterns: impl IntoIterator<Item = impl AsRef<str>>) -> Self {
        NegationFilter {
            patterns: patterns
                .into_iter()
                .map(|p| p.as_ref().trim().to_lowercase())
                .filter(|p| !p.is_empty())
                .collect(),
        }
    }

    /// One pattern per line; `#` starts a comment line.
    pub fn from_lines(text: &str) -> Self {
        Self::new(text.lines().filter(|l| !l.trim_start().starts_with('#')))
    }

    pub fn patterns(&self) -> &[String] {
        &self.patterns
    }
}

/// First span where all query substrings occur in order inside a single
/// sentence.
pub fn match_query(doc: &Document, query: &ActivityQuery) -> Option<Span> {
    let text = &doc.text;
    for sentence in sentences(text) {
        let s = &text[sentence.clone()];
        let mut at = 0;
        let mut start = None;
        let mut end = 0;
        let mut ok = true;
        for sub in &query.substrings {
            match find_phrase(s, sub, at) {
                Some(r) => {
                    start.get_or_insert(r.start);
                    end = r.end;
                    at = r.end;
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if let (true, Some(start)) = (ok, start) {
            let base = sentence.start;
            return Some(Span {
                range: base + start..base + end,
                sentence,
            });
        }
    }
    None
}

/// False when a negation pattern sits in the same sentence and ends at or
/// after the token just before the span (or overlaps its opening).
pub fn validate(doc: &Document, span: &Span, filter: &NegationFilter) -> bool {
    let text = &doc.text;
    let sentence = &text[span.sentence.clone()];
    let span_start = span.range.start - span.sentence.start;
    let prev_token_start = token_ranges(&sentence[..span_start])
        .last()
        .map_or(span_start, |r| r.start);
    for pattern in filter.patterns() {
        let mut from = 0;
        while let Some(r) = find_phrase(sentence, pattern, from) {
            if r.start >= span_start {
                break;
            }
            if r.end > prev_token_start {
                return false;
            }
            from = r.start + 1;
        }
    }
    true
}

/// The matched words plus everything after them to the sentence end.
pub fn extract_instance(doc: &Document, span: &Span, user_id: &str, query_id: Option<usize>, lex: &VerbLexicon) -> ActivityPhraseInstance {
    let phrase = doc.text[span.range.start..span.sentence.end].trim_end().to_string();
    let normalized = normalize(&phrase, lex);
    ActivityPhraseInstance {
        user_id: user_id.to_string(),
        doc_id: doc.id.clone(),
        query_id,
        phrase,
        normalized,
    }
}

/// Finds the first query (in list order) with a valid match in `doc`.
pub fn match_any(doc: &Document, queries: &[ActivityQuery], filter: &NegationFilter) -> Option<(usize, Span)> {
    queries.iter().enumerate().find_map(|(qi, q)| {
        let span = match_query(doc, q)?;
        validate(doc, &span, filter).then_some((qi, span))
    })
}

/// Pattern `I <VBD> .* <EOS>`: per sentence, the first "I" directly
/// followed by a known past-tense verb, through the sentence end, kept
/// only if it passes the negation filter.
pub fn extract_additional(doc: &Document, user_id: &str, lex: &VerbLexicon, filter: &NegationFilter) -> Vec<ActivityPhraseInstance> {
    let text = &doc.text;
    let mut out = Vec::new();
    for sentence in sentences(text) {
        let s = &text[sentence.clone()];
        let tokens = token_ranges(s);
        let hit = tokens.windows(2).find(|w| {
            let subject = &s[w[0].clone()];
            (subject == "I" || subject == "i")
                && lex.is_past(&strip_punct(&s[w[1].clone()]).to_lowercase())
        });
        let Some(w) = hit else { continue };
        let span = Span {
            range: sentence.start + w[0].start..sentence.start + w[1].end,
            sentence: sentence.clone(),
        };
        if validate(doc, &span, filter) {
            out.push(extract_instance(doc, &span, user_id, None, lex));
        }
    }
    out
}

fn is_noise_token(token: &str) -> bool {
    let lower = token.to_lowercase();
    lower.contains('@') || lower.contains('#') || lower.contains("http") || lower.starts_with("www.")
}

/// Canonical form used for embedding: user mentions, hashtags and URLs
/// removed, leading "I" dropped, the verb right after it put back in its
/// base form, lowercased, whitespace collapsed and trailing sentence
/// punctuation removed. Idempotent.
pub fn normalize(phrase: &str, lex: &VerbLexicon) -> String {
    let mut tokens: Vec<String> = phrase
        .split_whitespace()
        .filter(|t| !is_noise_token(t))
        .map(str::to_lowercase)
        .collect();
    let mut stripped = false;
    while tokens.first().is_some_and(|t| t == "i") {
        tokens.remove(0);
        stripped = true;
    }
    if stripped {
        if let Some(first) = tokens.first_mut() {
            let core = strip_punct(first).to_string();
            match lex.lemma_of_past(&core) {
                Some(lemma) => *first = first.replacen(&core, lemma, 1),
                None if !lex.contains_lemma(&core) => {
                    log::debug!("normalize: {core:?} is not a known past-tense verb");
                }
                None => {}
            }
        }
    }
    let mut out = tokens.join(" ");
    let trimmed_len = out
        .trim_end_matches(|c: char| matches!(c, '.' | '!' | '?') || c.is_whitespace())
        .len();
    out.truncate(trimmed_len);
    out
}

/// Sentence list for a document, exposed for callers that render spans.
pub fn sentence_ranges(doc: &Document) -> Vec<Range<usize>> {
    text::sentences(&doc.text)
}
