//! Corpus ingestion, Twitter self-labeling, segmentation and splitting.

pub mod corpus;
pub mod text;
pub mod twitter;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use corpus::{load_corpus, parse_corpus, stratified_split, write_corpus, Split};
pub use text::{casefold_selective, split_sentences, tokenize, TextResources};
pub use twitter::{assemble_conversations, parse_raw_tweets, twitter_filter, LabeledTweet, RawTweet};

/// Maximum context sentences kept for forum posts.
pub const FORUM_MAX_CONTEXT: usize = 10;
/// Maximum context tweets kept for Twitter threads.
pub const TWITTER_MAX_CONTEXT: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    S,
    NS,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::S, Label::NS];

    /// Position in class-probability vectors: S first, NS second.
    pub fn index(self) -> usize {
        match self {
            Label::S => 0,
            Label::NS => 1,
        }
    }

    pub fn from_index(i: usize) -> Label {
        if i == 0 {
            Label::S
        } else {
            Label::NS
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::S => "S",
            Label::NS => "NS",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S" => Ok(Label::S),
            "NS" => Ok(Label::NS),
            other => Err(Error::Domain(format!(
                "unknown label {other:?}, expected \"S\" or \"NS\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Forum,
    Twitter,
}

impl Platform {
    pub fn default_max_context(self) -> usize {
        match self {
            Platform::Forum => FORUM_MAX_CONTEXT,
            Platform::Twitter => TWITTER_MAX_CONTEXT,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Platform::Forum => "forum",
            Platform::Twitter => "twitter",
        }
    }
}

impl FromStr for Platform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forum" => Ok(Platform::Forum),
            "twitter" => Ok(Platform::Twitter),
            other => Err(Error::Domain(format!(
                "unknown platform {other:?}, expected \"forum\" or \"twitter\""
            ))),
        }
    }
}

/// One labeled (context, reply) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationInstance {
    pub id: String,
    pub platform: Platform,
    /// Prior turns, oldest first.
    pub context: Vec<String>,
    pub reply: String,
    pub label: Label,
    /// Indices into the segmented context sentences picked by annotators.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human_triggers: Option<Vec<usize>>,
}

/// A sentence in both original and model-ready form.
#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    /// Text before casefolding; surface cues such as capitalization survive here.
    pub raw: String,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedInstance {
    pub id: String,
    pub context_sentences: Vec<Sentence>,
    pub reply_sentences: Vec<Sentence>,
    pub label: Label,
    pub human_triggers: Option<Vec<usize>>,
}

impl SegmentedInstance {
    pub fn context_tokens(&self) -> impl Iterator<Item = &String> {
        self.context_sentences.iter().flat_map(|s| s.tokens.iter())
    }

    pub fn reply_tokens(&self) -> impl Iterator<Item = &String> {
        self.reply_sentences.iter().flat_map(|s| s.tokens.iter())
    }
}

fn sentences_for(text: &str, platform: Platform, res: &TextResources) -> Vec<Sentence> {
    let pieces = match platform {
        // A tweet is one sentence.
        Platform::Twitter => vec![text.trim().to_string()],
        Platform::Forum => res.split_sentences(text),
    };
    pieces
        .into_iter()
        .filter_map(|raw| {
            let tokens = casefold_selective(&res.tokenize(&raw));
            (!tokens.is_empty()).then_some(Sentence { raw, tokens })
        })
        .collect()
}

/// Number of context sentences segmentation will produce, before truncation.
pub fn context_sentence_count(instance: &ConversationInstance, res: &TextResources) -> usize {
    instance
        .context
        .iter()
        .map(|c| sentences_for(c, instance.platform, res).len())
        .sum()
}

/// Splits, tokenizes and casefolds both sides. Truncation is separate.
pub fn segment(instance: &ConversationInstance, res: &TextResources) -> SegmentedInstance {
    let context_sentences = instance
        .context
        .iter()
        .flat_map(|c| sentences_for(c, instance.platform, res))
        .collect();
    SegmentedInstance {
        id: instance.id.clone(),
        context_sentences,
        reply_sentences: sentences_for(&instance.reply, instance.platform, res),
        label: instance.label,
        human_triggers: instance.human_triggers.clone(),
    }
}

/// Keeps only the most recent `max_context` context sentences; the reply is untouched.
pub fn truncate_context(mut instance: SegmentedInstance, max_context: usize) -> SegmentedInstance {
    let n = instance.context_sentences.len();
    if n <= max_context {
        return instance;
    }
    let dropped = n - max_context;
    instance.context_sentences.drain(..dropped);
    if let Some(triggers) = instance.human_triggers.as_mut() {
        *triggers = triggers
            .iter()
            .filter(|&&t| t >= dropped)
            .map(|t| t - dropped)
            .collect();
    }
    instance
}

/// Segments then truncates to the platform default cutoff.
pub fn prepare_instance(
    instance: &ConversationInstance,
    res: &TextResources,
    max_context: Option<usize>,
) -> SegmentedInstance {
    let limit = max_context.unwrap_or_else(|| instance.platform.default_max_context());
    truncate_context(segment(instance, res), limit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(n: usize) -> SegmentedInstance {
        SegmentedInstance {
            id: "x".into(),
            context_sentences: (0..n)
                .map(|i| Sentence {
                    raw: format!("s{i}"),
                    tokens: vec![format!("s{i}")],
                })
                .collect(),
            reply_sentences: vec![Sentence {
                raw: "r".into(),
                tokens: vec!["r".into()],
            }],
            label: Label::S,
            human_triggers: Some(vec![0, 3, 11]),
        }
    }

    #[test]
    fn truncation_keeps_most_recent() {
        let t = truncate_context(seg(12), FORUM_MAX_CONTEXT);
        assert_eq!(t.context_sentences.len(), 10);
        assert_eq!(t.context_sentences[0].raw, "s2");
        assert_eq!(t.context_sentences[9].raw, "s11");
        assert_eq!(t.human_triggers, Some(vec![1, 9]));
        assert_eq!(t.reply_sentences.len(), 1);

        let t = truncate_context(seg(7), TWITTER_MAX_CONTEXT);
        assert_eq!(t.context_sentences.len(), 5);
        assert_eq!(t.context_sentences[0].raw, "s2");

        let t = truncate_context(seg(3), FORUM_MAX_CONTEXT);
        assert_eq!(t, seg(3));
    }

    #[test]
    fn segmentation_by_platform() {
        let mut inst = ConversationInstance {
            id: "a".into(),
            platform: Platform::Forum,
            context: vec!["See for yourselves. The fact remains.".into(), "Third one!".into()],
            reply: "Are you kidding me?! You think so".into(),
            label: Label::S,
            human_triggers: None,
        };
        let s = segment(&inst, TextResources::shared());
        assert_eq!(s.context_sentences.len(), 3);
        assert_eq!(s.reply_sentences.len(), 2);
        assert_eq!(s.context_sentences[0].tokens, ["see", "for", "yourselves", "."]);
        assert_eq!(context_sentence_count(&inst, TextResources::shared()), 3);

        inst.platform = Platform::Twitter;
        let s = segment(&inst, TextResources::shared());
        assert_eq!(s.context_sentences.len(), 2);
        assert_eq!(s.reply_sentences.len(), 1);
    }

    #[test]
    fn label_round_trip() {
        for l in Label::ALL {
            assert_eq!(l.as_str().parse::<Label>().unwrap(), l);
            assert_eq!(Label::from_index(l.index()), l);
        }
        assert!("X".parse::<Label>().is_err());
    }
}
