//! Sentence segmentation and word-boundary search over post text.

use std::ops::Range;

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "st", "vs", "jr", "sr", "prof", "etc", "e.g", "i.e", "approx", "no",
];

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn word_before(text: &str, end: usize) -> &str {
    let start = text[..end]
        .rfind(|c: char| c.is_whitespace())
        .map(|i| i + 1)
        .unwrap_or(0);
    &text[start..end]
}

/// Splits text into sentence byte ranges. A sentence ends at a newline or
/// at a run of `.`, `!`, `?` that is followed by whitespace or end of text,
/// unless the run is a single `.` after a known abbreviation. Ranges
/// include the terminator and exclude surrounding whitespace.
pub fn sentences(text: &str) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c == '\n' {
            push_trimmed(text, start..pos, &mut out);
            start = pos + 1;
            i += 1;
            continue;
        }
        if is_terminator(c) {
            let mut j = i;
            while j + 1 < chars.len() && is_terminator(chars[j + 1].1) {
                j += 1;
            }
            let end = chars[j].0 + chars[j].1.len_utf8();
            let at_boundary = j + 1 == chars.len() || chars[j + 1].1.is_whitespace();
            let abbreviation = c == '.'
                && j == i
                && ABBREVIATIONS.contains(&word_before(text, pos).to_lowercase().as_str());
            if at_boundary && !abbreviation {
                push_trimmed(text, start..end, &mut out);
                start = end;
            }
            i = j + 1;
            continue;
        }
        i += 1;
    }
    push_trimmed(text, start..text.len(), &mut out);
    out
}

fn push_trimmed(text: &str, range: Range<usize>, out: &mut Vec<Range<usize>>) {
    let slice = &text[range.clone()];
    let lead = slice.len() - slice.trim_start().len();
    let trail = slice.len() - slice.trim_end().len();
    if lead + trail < slice.len() {
        out.push(range.start + lead..range.end - trail);
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '_'
}

/// Case-insensitive search for `needle` in `hay[from..]`, requiring word
/// boundaries on both ends. Returns the byte range in `hay`.
pub fn find_phrase(hay: &str, needle: &str, from: usize) -> Option<Range<usize>> {
    let needle = needle.trim();
    if needle.is_empty() {
        return None;
    }
    let hay_l = hay.to_lowercase();
    let needle_l = needle.to_lowercase();
    // Only ASCII case folding keeps byte offsets aligned; fall back to an
    // exact-case search when folding changes lengths.
    let (h, n) = if hay_l.len() == hay.len() && needle_l.len() == needle.len() {
        (hay_l.as_str(), needle_l.as_str())
    } else {
        (hay, needle)
    };
    let mut at = from;
    while at <= h.len() {
        let found = h[at..].find(n)? + at;
        let end = found + n.len();
        let before_ok = h[..found].chars().next_back().is_none_or(|c| !is_word_char(c))
            || !n.starts_with(is_word_char);
        let after_ok = h[end..].chars().next().is_none_or(|c| !is_word_char(c))
            || !n.ends_with(is_word_char);
        if before_ok && after_ok {
            return Some(found..end);
        }
        at = found + h[found..].chars().next().map_or(1, char::len_utf8);
    }
    None
}

/// Whitespace-token byte ranges.
pub fn token_ranges(text: &str) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push(s..i);
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(s..text.len());
    }
    out
}

/// Strips leading and trailing punctuation from a token, keeping inner
/// apostrophes.
pub fn strip_punct(token: &str) -> &str {
    token.trim_matches(|c: char| !c.is_alphanumeric() && c != '\'' && c != '@' && c != '#')
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(text: &str) -> Vec<&str> {
        sentences(text).into_iter().map(|r| &text[r]).collect()
    }

    #[test]
    fn splits_on_terminators_and_newlines() {
        assert_eq!(
            split("I bought socks. At the store I waited!! Then home?\nnew line"),
            ["I bought socks.", "At the store I waited!!", "Then home?", "new line"]
        );
    }

    #[test]
    fn keeps_urls_decimals_and_abbreviations_together() {
        assert_eq!(
            split("Saw Dr. Smith at 3.5 miles http://x.co/a.b today. ok"),
            ["Saw Dr. Smith at 3.5 miles http://x.co/a.b today.", "ok"]
        );
        assert!(split("").is_empty());
        assert!(split("  \n ").is_empty());
    }

    #[test]
    fn phrase_search_respects_word_boundaries() {
        let s = "I bought socks at the storefront and at the store";
        let r = find_phrase(s, "at the store", 0).unwrap();
        assert_eq!(&s[r.clone()], "at the store");
        assert_eq!(r.end, s.len());
        assert_eq!(find_phrase("i BOUGHT it", "I bought", 0), Some(0..8));
        assert_eq!(find_phrase("Hi bought", "I bought", 0), None);
    }
}
