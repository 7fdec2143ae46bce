//! Hashtag-based self-labeling of tweets and thread assembly.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::text::{is_hashtag, is_mention, is_url, tokenize};
use super::{ConversationInstance, Label, Platform};
use crate::error::{Error, Result};

pub const SARCASM_HASHTAGS: [&str; 3] = ["#sarcasm", "#sarcastic", "#irony"];
/// Minimum words, not counting hashtags, URLs, mentions or punctuation.
pub const MIN_WORDS: usize = 3;
const MAX_THREAD_DEPTH: usize = 64;

fn sarcasm_tag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)#(sarcasm|sarcastic|irony)\b").expect("valid regex"))
}

/// True if `text` mentions any sarcasm label hashtag, anywhere.
pub fn contains_sarcasm_tag(text: &str) -> bool {
    sarcasm_tag_re().is_match(text)
}

fn is_sarcasm_tag(chunk: &str) -> bool {
    SARCASM_HASHTAGS.contains(&chunk.to_lowercase().as_str())
}

/// A downloaded tweet with the metadata the filter needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTweet {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub is_retweet: bool,
    #[serde(default)]
    pub is_quote: bool,
    #[serde(default)]
    pub in_reply_to: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledTweet {
    pub id: String,
    /// Text with the label hashtags removed.
    pub text: String,
    pub label: Label,
    pub in_reply_to: Option<String>,
}

/// Parses one JSON tweet per line.
pub fn parse_raw_tweets(text: &str) -> Result<Vec<RawTweet>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let tweet: RawTweet = serde_json::from_str(line).map_err(|e| {
            let id = serde_json::from_str::<serde_json::Value>(line)
                .ok()
                .and_then(|v| v.get("id").and_then(|x| x.as_str()).map(str::to_string))
                .unwrap_or_else(|| "<unknown>".into());
            Error::parse(i + 1, None, format!("malformed tweet record {id}: {e}"))
        })?;
        out.push(tweet);
    }
    Ok(out)
}

fn word_count(text: &str) -> usize {
    tokenize(text)
        .iter()
        .filter(|t| !is_hashtag(t) && !is_url(t) && !is_mention(t) && t.chars().any(char::is_alphanumeric))
        .count()
}

/// Decides the label of one tweet and strips label hashtags, or `None` if
/// the tweet must be discarded on content grounds.
fn label_text(text: &str) -> Option<(Label, String)> {
    let chunks: Vec<&str> = text.split_whitespace().collect();
    let total_tags = sarcasm_tag_re().find_iter(text).count();
    if total_tags == 0 {
        return Some((Label::NS, chunks.join(" ")));
    }
    let run_start = chunks.iter().rposition(|c| !is_hashtag(c)).map_or(0, |p| p + 1);
    let trailing = &chunks[run_start..];
    let ends_with_tag = trailing.last().is_some_and(|c| is_sarcasm_tag(c));
    let trailing_tags = trailing.iter().filter(|c| is_sarcasm_tag(c)).count();
    if !ends_with_tag || trailing_tags != total_tags {
        return None;
    }
    let kept: Vec<&str> = chunks[..run_start]
        .iter()
        .chain(trailing.iter().filter(|c| !is_sarcasm_tag(c)))
        .copied()
        .collect();
    Some((Label::S, kept.join(" ")))
}

/// Keeps original tweets with at least three words; labels S when a
/// sarcasm hashtag closes the message and NS when none occurs at all.
pub fn twitter_filter(raw: &[RawTweet]) -> Vec<LabeledTweet> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for tweet in raw {
        let normalized = tweet.text.split_whitespace().collect::<Vec<_>>().join(" ");
        if tweet.is_retweet || tweet.is_quote || normalized.starts_with("RT @") {
            continue;
        }
        if !seen.insert(normalized.clone()) {
            continue;
        }
        let Some((label, text)) = label_text(&normalized) else {
            continue;
        };
        if word_count(&text) < MIN_WORDS {
            continue;
        }
        out.push(LabeledTweet {
            id: tweet.id.clone(),
            text,
            label,
            in_reply_to: tweet.in_reply_to.clone(),
        });
    }
    out
}

/// Builds (context, reply) instances by following reply-to links through
/// `pool`. Tweets whose parent is not in the pool are dropped.
pub fn assemble_conversations(pool: &[RawTweet], accepted: &[LabeledTweet]) -> Vec<ConversationInstance> {
    let by_id: HashMap<&str, &RawTweet> = pool.iter().map(|t| (t.id.as_str(), t)).collect();
    accepted
        .iter()
        .filter_map(|tweet| {
            let mut context = Vec::new();
            let mut visited = HashSet::from([tweet.id.as_str()]);
            let mut next = tweet.in_reply_to.as_deref();
            while let Some(parent_id) = next {
                if context.len() >= MAX_THREAD_DEPTH || !visited.insert(parent_id) {
                    break;
                }
                let Some(parent) = by_id.get(parent_id) else { break };
                context.push(parent.text.split_whitespace().collect::<Vec<_>>().join(" "));
                next = parent.in_reply_to.as_deref();
            }
            if context.is_empty() {
                return None;
            }
            context.reverse();
            Some(ConversationInstance {
                id: tweet.id.clone(),
                platform: Platform::Twitter,
                context,
                reply: tweet.text.clone(),
                label: tweet.label,
                human_triggers: None,
            })
        })
        .collect()
}
