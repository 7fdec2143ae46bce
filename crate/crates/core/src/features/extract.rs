//! Discrete feature families: n-grams, lexicon hits, sentiment
//! incongruity and surface sarcasm indicators.

use std::collections::BTreeMap;

use crate::data::text::TextResources;
use crate::data::SegmentedInstance;

use super::lexicon::{IndicatorLexicon, LexiconSet};

/// Feature name → value, before ids are assigned. Zero values are never stored.
pub type NamedFeatures = BTreeMap<String, f64>;

pub const NGRAM_PREFIX: &str = "ng:";
pub const REPLY_NS: &str = "r|";
pub const CONTEXT_NS: &str = "c|";
pub const INCONGRUITY: &str = "incongruity";

const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "do", "does", "did", "have", "has", "had", "can", "could", "will", "would", "should",
    "shall", "must", "might", "may", "am",
];
const PRONOUNS: &[&str] = &["i", "you", "he", "she", "it", "we", "they", "there", "that", "this"];
/// `-est` words that are not superlatives.
const NOT_SUPERLATIVE: &[&str] = &[
    "honest", "modest", "interest", "forest", "request", "suggest", "protest", "contest", "harvest", "arrest",
    "invest", "digest", "manifest", "behest", "conquest", "earnest", "tempest", "attest", "detest", "molest",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Context,
    Reply,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureMode {
    ReplyOnly,
    ContextAndReply,
}

fn bump(f: &mut NamedFeatures, name: &str, by: f64) {
    if by != 0.0 {
        *f.entry(name.to_string()).or_insert(0.0) += by;
    }
}

/// Binary presence of every 1-, 2- and 3-gram.
pub fn ngram_features<S: AsRef<str>>(tokens: &[S]) -> NamedFeatures {
    let mut f = NamedFeatures::new();
    for n in 1..=3 {
        for w in tokens.windows(n) {
            let gram: Vec<&str> = w.iter().map(AsRef::as_ref).collect();
            f.insert(format!("{NGRAM_PREFIX}{}", gram.join("_")), 1.0);
        }
    }
    f
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PolarityCounts {
    pub positive: usize,
    pub negative: usize,
    pub negations: usize,
}

impl PolarityCounts {
    pub fn count<S: AsRef<str>>(tokens: &[S], lex: &LexiconSet) -> Self {
        let mut c = Self::default();
        for t in tokens {
            let t = t.as_ref();
            c.positive += lex.positive.contains(t) as usize;
            c.negative += lex.negative.contains(t) as usize;
            c.negations += lex.negations.contains(t) as usize;
        }
        c
    }

    /// Sign of `positive − negative`.
    pub fn polarity(&self) -> i8 {
        match self.positive.cmp(&self.negative) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => -1,
            std::cmp::Ordering::Equal => 0,
        }
    }
}

/// Category presence booleans, sentiment/negation counts and, on the reply
/// side, whether both polarities occur.
pub fn lexicon_features<S: AsRef<str>>(tokens: &[S], side: Side, lex: &LexiconSet) -> NamedFeatures {
    let mut f = NamedFeatures::new();
    for (name, set) in &lex.categories {
        if tokens.iter().any(|t| set.contains(t.as_ref())) {
            f.insert(format!("cat:{name}"), 1.0);
        }
    }
    let c = PolarityCounts::count(tokens, lex);
    bump(&mut f, "lex:pos_count", c.positive as f64);
    bump(&mut f, "lex:neg_count", c.negative as f64);
    bump(&mut f, "lex:negation_count", c.negations as f64);
    if side == Side::Reply && c.positive > 0 && c.negative > 0 {
        f.insert("lex:both_polarities".into(), 1.0);
    }
    f
}

/// True iff both sides have nonzero net polarity of opposite sign.
pub fn sentiment_incongruity<S: AsRef<str>, T: AsRef<str>>(context: &[S], reply: &[T], lex: &LexiconSet) -> bool {
    let c = PolarityCounts::count(context, lex).polarity();
    let r = PolarityCounts::count(reply, lex).polarity();
    c * r < 0
}

fn is_superlative(token: &str, ind: &IndicatorLexicon) -> bool {
    if ind.superlatives.contains(token) {
        return true;
    }
    let t = token.to_lowercase();
    t.chars().count() >= 6
        && t.ends_with("est")
        && t.chars().all(char::is_alphabetic)
        && !NOT_SUPERLATIVE.contains(&t.as_str())
}

fn is_punct(token: &str) -> bool {
    !token.chars().any(char::is_alphanumeric)
}

/// Negated auxiliary plus pronoun at the end of a clause ("don't they",
/// "is not it?").
fn count_tag_questions(lower: &[String]) -> usize {
    let mut n = 0;
    let mut i = 0;
    while i < lower.len() {
        let (aux_len, ok) = match lower[i].strip_suffix("n't") {
            Some(stem) => (
                1,
                AUXILIARIES.contains(&stem) || matches!(stem, "do" | "ca" | "wo" | "sha" | "ai"),
            ),
            None => (
                2,
                AUXILIARIES.contains(&lower[i].as_str()) && lower.get(i + 1).is_some_and(|t| t == "not"),
            ),
        };
        if ok {
            let p = i + aux_len;
            let closes = |j: usize| lower.get(j).is_none_or(|t| is_punct(t));
            if lower.get(p).is_some_and(|t| PRONOUNS.contains(&t.as_str())) && closes(p + 1) {
                n += 1;
                i = p + 1;
                continue;
            }
        }
        i += 1;
    }
    n
}

/// Surface sarcasm markers. `raw_text` must be the text before casefolding.
pub fn indicator_features<S: AsRef<str>>(tokens: &[S], raw_text: &str, ind: &IndicatorLexicon) -> NamedFeatures {
    let res = TextResources::shared();
    let mut f = NamedFeatures::new();
    let lower: Vec<String> = tokens.iter().map(|t| t.as_ref().to_lowercase()).collect();
    let raw_tokens = res.tokenize(raw_text);

    bump(
        &mut f,
        "ind:interjection",
        lower.iter().filter(|t| ind.interjections.contains(t)).count() as f64,
    );
    bump(&mut f, "ind:tag_question", count_tag_questions(&lower) as f64);
    bump(&mut f, "ind:exclamation", raw_text.matches('!').count() as f64);
    bump(&mut f, "ind:question", raw_text.matches('?').count() as f64);
    let caps = raw_tokens
        .iter()
        .filter(|t| !res.is_emoticon(t))
        .filter(|t| {
            let letters: Vec<char> = t.chars().filter(|c| c.is_alphabetic()).collect();
            letters.len() >= 2 && letters.iter().all(|c| c.is_uppercase())
        })
        .count();
    bump(&mut f, "ind:all_caps", caps as f64);
    let quotes = raw_text.matches('"').count() / 2 + raw_text.matches('“').count().min(raw_text.matches('”').count());
    bump(&mut f, "ind:quotes", quotes as f64);
    bump(
        &mut f,
        "ind:emoticon",
        raw_tokens.iter().filter(|t| res.is_emoticon(t)).count() as f64,
    );
    bump(
        &mut f,
        "ind:superlative",
        lower.iter().filter(|t| is_superlative(t, ind)).count() as f64,
    );
    bump(
        &mut f,
        "ind:intensifier",
        lower.iter().filter(|t| ind.intensifiers.contains(t)).count() as f64,
    );
    f
}

/// Extracts all features of one instance for the given task.
pub fn extract(
    instance: &SegmentedInstance,
    mode: FeatureMode,
    lex: &LexiconSet,
    ind: &IndicatorLexicon,
) -> NamedFeatures {
    let reply: Vec<&String> = instance.reply_tokens().collect();
    let reply_raw = instance
        .reply_sentences
        .iter()
        .map(|s| s.raw.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    let mut out = side_features(&reply, &reply_raw, Side::Reply, lex, ind);
    if mode == FeatureMode::ContextAndReply {
        let context: Vec<&String> = instance.context_tokens().collect();
        let context_raw = instance
            .context_sentences
            .iter()
            .map(|s| s.raw.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        out.extend(side_features(&context, &context_raw, Side::Context, lex, ind));
        if sentiment_incongruity(&context, &reply, lex) {
            out.insert(INCONGRUITY.into(), 1.0);
        }
    }
    out
}

fn side_features(tokens: &[&String], raw: &str, side: Side, lex: &LexiconSet, ind: &IndicatorLexicon) -> NamedFeatures {
    let ns = match side {
        Side::Reply => REPLY_NS,
        Side::Context => CONTEXT_NS,
    };
    let mut f = ngram_features(tokens);
    f.extend(lexicon_features(tokens, side, lex));
    f.extend(indicator_features(tokens, raw, ind));
    f.into_iter().map(|(k, v)| (format!("{ns}{k}"), v)).collect()
}
