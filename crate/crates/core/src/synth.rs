//! Seeded synthetic corpus with planted activity clusters, for desk-scale
//! runs of the whole pipeline.
//!
//! Every cluster owns one activity verb plus a handful of invented nouns
//! whose embeddings point along the cluster's own axis. Each value
//! dimension owns an axis too; a user's profile mixes terms of the value
//! tied to their cluster with a cluster-specific profile word, and their
//! additional posts mention the cluster's nouns more often than others.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{save_users, DocKind, Document, UserRecord};
use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::lexicon::VerbLexicon;
use crate::values::{ValueDimension, ValueLexicon};

const VERBS: &[&str] = &[
    "play", "cook", "visit", "paint", "climb", "bake", "watch", "clean", "read", "write", "swim", "draw", "sing",
    "build", "fix", "plant", "wash", "ride", "drive", "knit", "hike", "dance", "fish", "sew", "travel", "explore",
    "carve", "brew", "sculpt", "juggle", "polish", "sketch",
];

const FILLER: &[&str] = &[
    "with", "friends", "today", "the", "a", "so", "fun", "and", "really", "great", "again", "this", "morning",
    "we", "after", "work", "weekend", "nice", "tonight", "love", "lol", "finally", "happy", "long", "day", "for",
    "my", "our", "some", "new",
];

const OPENERS: &[&str] = &["", "Today", "Yesterday", "Last night", "This morning", "Finally"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub users: usize,
    pub clusters: usize,
    pub values: usize,
    pub seed: u64,
    /// Additional posts per kept user.
    pub tweets: usize,
    /// Share of users generated below the filtering thresholds.
    pub sparse_share: f64,
    /// Probability that a profile or history word follows the user's own
    /// cluster rather than a random one.
    pub signal: f64,
    pub noise: f64,
}

impl SynthParams {
    pub fn new(users: usize, clusters: usize, seed: u64) -> Self {
        SynthParams {
            users,
            clusters,
            values: clusters.div_ceil(2).max(2),
            seed,
            tweets: 30,
            sparse_share: 0.05,
            signal: 0.7,
            noise: 0.05,
        }
    }
}

pub struct SynthCorpus {
    pub users: Vec<UserRecord>,
    pub events: Vec<String>,
    pub surveys: Vec<String>,
    pub embeddings: EmbeddingTable,
    pub values: ValueLexicon,
    /// Planted cluster per user, aligned with `users`.
    pub planted: Vec<usize>,
}

struct Vocab {
    verbs: Vec<&'static str>,
    objects: Vec<Vec<String>>,
    profile_words: Vec<Vec<String>>,
    value_terms: Vec<Vec<String>>,
}

fn third_singular(verb: &str) -> String {
    let b = verb.as_bytes();
    if ["s", "sh", "ch", "x", "z", "o"].iter().any(|e| verb.ends_with(e)) {
        format!("{verb}es")
    } else if verb.ends_with('y') && b.len() > 1 && !b"aeiou".contains(&b[b.len() - 2]) {
        format!("{}ies", &verb[..verb.len() - 1])
    } else {
        format!("{verb}s")
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

struct WordMaker<'a> {
    used: BTreeSet<String>,
    lex: &'a VerbLexicon,
}

impl WordMaker<'_> {
    fn make(&mut self, rng: &mut ChaCha8Rng) -> String {
        const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "gl", "tr"];
        const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];
        loop {
            let syllables = rng.gen_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(ONSETS.choose(rng).unwrap());
                w.push_str(VOWELS.choose(rng).unwrap());
            }
            if rng.gen_bool(0.4) {
                w.push_str(["n", "r", "l", "m"].choose(rng).unwrap());
            }
            if self.lex.analyze(&w).is_none() && !FILLER.contains(&w.as_str()) && self.used.insert(w.clone()) {
                return w;
            }
        }
    }

    fn many(&mut self, n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
        (0..n).map(|_| self.make(rng)).collect()
    }
}

fn axis_vector(dim: usize, axis: Option<usize>, noise: &Normal<f64>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dim)
        .map(|d| {
            let base = if Some(d) == axis { 1.0 } else { 0.0 };
            ((base + noise.sample(rng)) * 1e4).round() / 1e4
        })
        .collect()
}

/// Generates the corpus. Identical parameters give identical output.
pub fn generate(params: SynthParams, lex: &VerbLexicon) -> Result<SynthCorpus> {
    let verbs: Vec<&'static str> = VERBS.iter().copied().filter(|v| lex.contains_lemma(v)).collect();
    if params.clusters < 2 || params.clusters > verbs.len() {
        return Err(Error::InvalidInput(format!("clusters must be in 2..={}", verbs.len())));
    }
    if params.users == 0 || params.values == 0 {
        return Err(Error::InvalidInput("users and values must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut maker = WordMaker { used: BTreeSet::new(), lex };
    let k = params.clusters;
    let vocab = Vocab {
        verbs: verbs[..k].to_vec(),
        objects: (0..k).map(|_| maker.many(4, &mut rng)).collect(),
        profile_words: (0..k).map(|_| maker.many(2, &mut rng)).collect(),
        value_terms: (0..params.values).map(|_| maker.many(3, &mut rng)).collect(),
    };

    let dim = k + params.values + 8;
    let tight = Normal::new(0.0, params.noise).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let loose = Normal::new(0.0, 0.3).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut table = EmbeddingTable::new(dim);
    for c in 0..k {
        let verb = vocab.verbs[c];
        table.insert(verb, &axis_vector(dim, Some(c), &tight, &mut rng))?;
        table.insert(&lex.past_tense(verb), &axis_vector(dim, Some(c), &tight, &mut rng))?;
        for w in vocab.objects[c].iter().chain(&vocab.profile_words[c]) {
            table.insert(w, &axis_vector(dim, Some(c), &tight, &mut rng))?;
        }
    }
    for (v, terms) in vocab.value_terms.iter().enumerate() {
        for t in terms {
            table.insert(t, &axis_vector(dim, Some(k + v), &tight, &mut rng))?;
        }
    }
    for w in FILLER.iter().chain(&["i", "yesterday", "last", "night", "wish", "<user>"]) {
        let mut v = axis_vector(dim, None, &loose, &mut rng);
        v[..k + params.values].iter_mut().for_each(|x| *x = (*x * 0.2 * 1e4).round() / 1e4);
        table.insert(w, &v)?;
    }

    let values = ValueLexicon::new(
        vocab
            .value_terms
            .iter()
            .enumerate()
            .map(|(v, terms)| ValueDimension {
                name: format!("value{v}"),
                terms: terms.clone(),
            })
            .collect(),
    )?;

    let mut events = Vec::new();
    let mut surveys = Vec::new();
    for c in 0..k {
        let v3 = third_singular(vocab.verbs[c]);
        events.push(format!("PersonX {v3} ___"));
        events.push(format!("PersonX {v3} PersonY's {}", vocab.objects[c][1]));
        surveys.push(format!("I {} {}", vocab.verbs[c], vocab.objects[c][0]));
    }
    events.push("PersonY goes home".into());

    let mut users = Vec::with_capacity(params.users);
    let mut planted = Vec::with_capacity(params.users);
    for u in 0..params.users {
        let c = rng.gen_range(0..k);
        let value = c % params.values;
        let sparse = rng.gen_bool(params.sparse_share);
        let id = format!("user{u:05}");
        let pick_cluster = |rng: &mut ChaCha8Rng| if rng.gen_bool(params.signal) { c } else { rng.gen_range(0..k) };

        let mut profile = Vec::new();
        for _ in 0..3 {
            let v = if rng.gen_bool(params.signal) { value } else { rng.gen_range(0..params.values) };
            profile.push(vocab.value_terms[v].choose(&mut rng).unwrap().clone());
        }
        let pc = pick_cluster(&mut rng);
        profile.push(vocab.profile_words[pc].choose(&mut rng).unwrap().clone());
        profile.push(FILLER.choose(&mut rng).unwrap().to_string());
        profile.shuffle(&mut rng);
        let profile = capitalize(&profile.join(" "));

        let mut history = Vec::new();
        let opener = OPENERS.choose(&mut rng).unwrap();
        let obj = vocab.objects[c].choose(&mut rng).unwrap();
        let tail = FILLER.choose(&mut rng).unwrap();
        let sentence = format!("I {} {obj} {tail}.", lex.past_tense(vocab.verbs[c]));
        let text = if opener.is_empty() { sentence } else { format!("{opener} {sentence}") };
        history.push(Document { id: format!("{id}-q0"), text, kind: DocKind::Queried });
        if rng.gen_bool(0.3) {
            let other = rng.gen_range(0..k);
            let obj = vocab.objects[other].choose(&mut rng).unwrap();
            let text = format!("I wish I {} {obj}", lex.past_tense(vocab.verbs[other]));
            history.push(Document { id: format!("{id}-q1"), text, kind: DocKind::Queried });
        }

        let n_tweets = if sparse { params.tweets / 2 } else { params.tweets };
        let n_acts = if sparse { 2 } else { 8.min(n_tweets) };
        for t in 0..n_tweets {
            let cc = pick_cluster(&mut rng);
            let obj = vocab.objects[cc].choose(&mut rng).unwrap();
            let text = if t < n_acts {
                let f = FILLER.choose(&mut rng).unwrap();
                format!("I {} {obj} {f}!", lex.past_tense(vocab.verbs[cc]))
            } else {
                let mut words: Vec<String> = (0..4).map(|_| FILLER.choose(&mut rng).unwrap().to_string()).collect();
                words.insert(rng.gen_range(1..=words.len()), obj.clone());
                if rng.gen_bool(0.1) {
                    words.push("@friend".into());
                }
                capitalize(&words.join(" "))
            };
            history.push(Document { id: format!("{id}-a{t}"), text, kind: DocKind::Additional });
        }
        users.push(UserRecord {
            user_id: id,
            profile,
            history,
            additional_activities: Vec::new(),
            target_labels: Vec::new(),
        });
        planted.push(c);
    }

    Ok(SynthCorpus { users, events, surveys, embeddings: table, values, planted })
}

impl SynthCorpus {
    /// Writes users.jsonl, events.txt, survey.txt, embeddings.txt,
    /// values.tsv and planted.tsv into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_users(&dir.join("users.jsonl"), &self.users)?;
        write_atomic(&dir.join("events.txt"), lines(&self.events).as_bytes())?;
        write_atomic(&dir.join("survey.txt"), lines(&self.surveys).as_bytes())?;
        write_atomic(&dir.join("embeddings.txt"), self.embeddings.to_text().as_bytes())?;
        write_atomic(&dir.join("values.tsv"), self.values.to_tsv().as_bytes())?;
        let planted: Vec<String> = self
            .users
            .iter()
            .zip(&self.planted)
            .map(|(u, c)| format!("{}\t{c}", u.user_id))
            .collect();
        write_atomic(&dir.join("planted.tsv"), lines(&planted).as_bytes())
    }
}

fn lines(items: &[String]) -> String {
    let mut s = items.join("\n");
    s.push('\n');
    s
}
