//! Tokenizer reproducing the preprocessing rules distributed with the
//! GloVe Twitter embeddings (URL, user, smiley, number, hashtag, repeat,
//! elongation and all-caps markers), followed by lowercasing and splitting
//! punctuation off word edges so tokens line up with embedding vocabulary.

use std::sync::LazyLock;

use regex::{Captures, Regex};

const EYES: &str = r"[8:=;]";
const NOSE: &str = r"['`\-]?";

struct Rules {
    url: Regex,
    user: Regex,
    smile: Regex,
    lolface: Regex,
    sadface: Regex,
    neutralface: Regex,
    heart: Regex,
    number: Regex,
    hashtag: Regex,
    repeat: Regex,
    allcaps: Regex,
}

static RULES: LazyLock<Rules> = LazyLock::new(|| Rules {
    url: Regex::new(r"https?://\S+\b|www\.(\w+\.)+\S*").unwrap(),
    user: Regex::new(r"@\w+").unwrap(),
    smile: Regex::new(&format!(r"{EYES}{NOSE}[)dD]+|[)dD]+{NOSE}{EYES}")).unwrap(),
    lolface: Regex::new(&format!(r"{EYES}{NOSE}p+")).unwrap(),
    sadface: Regex::new(&format!(r"{EYES}{NOSE}\(+|\)+{NOSE}{EYES}")).unwrap(),
    neutralface: Regex::new(&format!(r"{EYES}{NOSE}[/|l*]")).unwrap(),
    heart: Regex::new(r"<3").unwrap(),
    number: Regex::new(r"[-+]?[.\d]*[\d]+[:,.\d]*").unwrap(),
    hashtag: Regex::new(r"#\S+").unwrap(),
    repeat: Regex::new(r"([!?.]){2,}").unwrap(),
    allcaps: Regex::new(r"[A-Z]{2,}").unwrap(),
});

fn split_hashtag(caps: &Captures) -> String {
    let body = &caps[0][1..];
    let has_cased = body.chars().any(|c| c.is_uppercase() || c.is_lowercase());
    if has_cased && !body.chars().any(char::is_lowercase) {
        return format!("<hashtag> {} <allcaps>", body.to_lowercase());
    }
    let mut out = String::from("<hashtag>");
    let mut piece = String::new();
    for c in body.chars() {
        if c.is_ascii_uppercase() {
            out.push(' ');
            out.push_str(&piece);
            piece.clear();
        }
        piece.push(c);
    }
    out.push(' ');
    out.push_str(&piece);
    out
}

fn is_word(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Collapses a run of three or more identical characters that ends at a
/// word boundary ("wayyyy" -> "way <elong>").
fn mark_elongations(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len() + 8);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let mut j = i;
        while j + 1 < chars.len() && chars[j + 1] == c {
            j += 1;
        }
        let run = j - i + 1;
        let boundary_after = j + 1 == chars.len() || !is_word(chars[j + 1]);
        if run >= 3 && is_word(c) && boundary_after {
            out.push(c);
            out.push_str(" <elong>");
        } else {
            out.extend(&chars[i..=j]);
        }
        i = j + 1;
    }
    out
}

const EDGE_PUNCT: &[char] = &['.', ',', '!', '?', ';', ':', '"', '(', ')', '[', ']', '{', '}', '…'];

fn push_split(token: &str, out: &mut Vec<String>) {
    if token.starts_with('<') && token.ends_with('>') && token.len() > 2 {
        out.push(token.to_string());
        return;
    }
    let core_start = token.len() - token.trim_start_matches(EDGE_PUNCT).len();
    let trimmed = token.trim_end_matches(EDGE_PUNCT);
    let core_end = trimmed.len().max(core_start);
    for c in token[..core_start].chars() {
        out.push(c.to_string());
    }
    if core_end > core_start {
        out.push(token[core_start..core_end].to_string());
    }
    let tail = &token[core_end..];
    if !tail.is_empty() {
        // A run like "!!" was already marked; keep it as one token.
        if tail.chars().all(|c| c == tail.chars().next().unwrap()) {
            out.push(tail.to_string());
        } else {
            out.extend(tail.chars().map(|c| c.to_string()));
        }
    }
}

/// Tokenizes post text into embedding-vocabulary tokens.
pub fn glove_preprocess(text: &str) -> Vec<String> {
    let r = &*RULES;
    let t = r.url.replace_all(text, " <url> ");
    let t = r.user.replace_all(&t, "<user>");
    let t = r.smile.replace_all(&t, "<smile>");
    let t = r.lolface.replace_all(&t, "<lolface>");
    let t = r.sadface.replace_all(&t, "<sadface>");
    let t = r.neutralface.replace_all(&t, "<neutralface>");
    let t = t.replace('/', " / ");
    let t = r.heart.replace_all(&t, "<heart>");
    let t = r.number.replace_all(&t, "<number>");
    let t = r.hashtag.replace_all(&t, split_hashtag);
    let t = r.repeat.replace_all(&t, "$1 <repeat>");
    let t = mark_elongations(&t);
    let t = r
        .allcaps
        .replace_all(&t, |c: &Captures| format!("{} <allcaps>", c[0].to_lowercase()));
    let lower = t.to_lowercase();
    let mut out = Vec::new();
    for token in lower.split_whitespace() {
        push_split(token, &mut out);
    }
    out
}
