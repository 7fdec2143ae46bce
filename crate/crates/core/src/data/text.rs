//! Rule-based tokenization, sentence splitting and selective casefolding.

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const DEFAULT_EMOTICONS: &str = include_str!("../../resources/emoticons.txt");
const DEFAULT_ABBREVIATIONS: &str = include_str!("../../resources/abbreviations.txt");

/// Punctuation split off the end of a whitespace chunk.
const TRAILING: &[char] = &['.', ',', '!', '?', ';', ':', '"', '\'', ')', ']', '}', '”', '’', '…'];
/// Punctuation split off the start of a whitespace chunk.
const LEADING: &[char] = &['"', '\'', '(', '[', '{', '“', '‘', '`'];
const TERMINATORS: &[char] = &['.', '!', '?'];
const CLOSERS: &[char] = &['"', '\'', ')', ']', '”', '’'];

/// Parses a one-entry-per-line list; blank lines and `#` comments skipped.
pub fn parse_word_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with("# ") && *l != "#")
        .map(str::to_string)
        .collect()
}

pub(crate) fn read_word_list(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_word_list(&text))
}

/// Editable inventories the text rules depend on.
#[derive(Debug, Clone)]
pub struct TextResources {
    emoticons: HashSet<String>,
    /// Sorted longest first for suffix matching.
    emoticons_by_len: Vec<String>,
    abbreviations: HashSet<String>,
}

impl Default for TextResources {
    fn default() -> Self {
        Self::new(
            parse_word_list(DEFAULT_EMOTICONS),
            parse_word_list(DEFAULT_ABBREVIATIONS),
        )
    }
}

impl TextResources {
    pub fn new(emoticons: Vec<String>, abbreviations: Vec<String>) -> Self {
        let mut by_len = emoticons.clone();
        by_len.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));
        Self {
            emoticons: emoticons.into_iter().collect(),
            emoticons_by_len: by_len,
            abbreviations: abbreviations.into_iter().map(|a| a.to_lowercase()).collect(),
        }
    }

    /// Loads `emoticons.txt` and `abbreviations.txt` from `dir`.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        Ok(Self::new(
            read_word_list(&dir.join("emoticons.txt"))?,
            read_word_list(&dir.join("abbreviations.txt"))?,
        ))
    }

    pub fn shared() -> &'static TextResources {
        static DEFAULT: OnceLock<TextResources> = OnceLock::new();
        DEFAULT.get_or_init(TextResources::default)
    }

    pub fn is_emoticon(&self, token: &str) -> bool {
        self.emoticons.contains(token)
    }

    pub fn is_abbreviation(&self, token: &str) -> bool {
        self.abbreviations.contains(&token.to_lowercase())
    }

    fn emoticon_suffix<'a>(&self, chunk: &'a str) -> Option<(&'a str, &'a str)> {
        self.emoticons_by_len.iter().find_map(|e| {
            let prefix = chunk.strip_suffix(e.as_str())?;
            let last = prefix.chars().last()?;
            last.is_alphanumeric().then(|| (prefix, &chunk[prefix.len()..]))
        })
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for chunk in text.split_whitespace() {
            self.tokenize_chunk(chunk, &mut out);
        }
        out
    }

    fn tokenize_chunk(&self, chunk: &str, out: &mut Vec<String>) {
        if self.is_emoticon(chunk) || self.is_abbreviation(chunk) {
            out.push(chunk.to_string());
            return;
        }
        if is_url(chunk) {
            let core = chunk.trim_end_matches(TRAILING);
            out.push(core.to_string());
            out.extend(chunk[core.len()..].chars().map(String::from));
            return;
        }

        let mut core = chunk;
        while core.chars().count() > 1 && !self.is_emoticon(core) {
            let first = core.chars().next().expect("non-empty");
            if !LEADING.contains(&first) {
                break;
            }
            out.push(first.to_string());
            core = &core[first.len_utf8()..];
        }

        let mut trailing: Vec<String> = Vec::new();
        while !core.is_empty() && !self.is_emoticon(core) && !self.is_abbreviation(core) {
            if let Some((prefix, emo)) = self.emoticon_suffix(core) {
                trailing.push(emo.to_string());
                core = prefix;
                continue;
            }
            let last = core.chars().last().expect("non-empty");
            if !TRAILING.contains(&last) {
                break;
            }
            if last == '.' && core.ends_with("..") {
                let stem = core.trim_end_matches('.');
                trailing.push(core[stem.len()..].to_string());
                core = stem;
                continue;
            }
            trailing.push(last.to_string());
            core = &core[..core.len() - last.len_utf8()];
        }
        if !core.is_empty() {
            out.push(core.to_string());
        }
        out.extend(trailing.into_iter().rev());
    }

    /// Splits at `.`, `!`, `?` runs followed by whitespace and then an
    /// uppercase letter, opening quote or digit, unless the word carrying
    /// the terminator is a known abbreviation.
    pub fn split_sentences(&self, text: &str) -> Vec<String> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut sentences = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < chars.len() {
            if !TERMINATORS.contains(&chars[i].1) {
                i += 1;
                continue;
            }
            let mut j = i;
            while j < chars.len() && TERMINATORS.contains(&chars[j].1) {
                j += 1;
            }
            while j < chars.len() && CLOSERS.contains(&chars[j].1) {
                j += 1;
            }
            let end_byte = chars.get(j).map_or(text.len(), |c| c.0);
            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            let boundary = k > j
                && k < chars.len()
                && opens_sentence(chars[k].1)
                && !self.ends_with_abbreviation(&text[start..end_byte]);
            if boundary {
                push_sentence(&mut sentences, &text[start..end_byte]);
                start = chars[k].0;
            }
            i = j.max(i + 1);
        }
        push_sentence(&mut sentences, &text[start..]);
        sentences
    }

    fn ends_with_abbreviation(&self, segment: &str) -> bool {
        segment
            .split_whitespace()
            .last()
            .map(|w| w.trim_start_matches(LEADING))
            .is_some_and(|w| self.is_abbreviation(w))
    }
}

fn opens_sentence(c: char) -> bool {
    c.is_uppercase() || c.is_ascii_digit() || LEADING.contains(&c)
}

fn push_sentence(out: &mut Vec<String>, s: &str) {
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}

pub fn is_url(token: &str) -> bool {
    let t = token.to_ascii_lowercase();
    t.starts_with("http://") || t.starts_with("https://") || t.starts_with("www.")
}

pub fn is_hashtag(token: &str) -> bool {
    token.len() > 1 && token.starts_with('#') && token[1..].chars().all(|c| c.is_alphanumeric() || c == '_')
}

pub fn is_mention(token: &str) -> bool {
    token.len() > 1 && token.starts_with('@') && token[1..].chars().all(|c| c.is_alphanumeric() || c == '_')
}

/// Tokenizes with the built-in emoticon and abbreviation inventories.
pub fn tokenize(text: &str) -> Vec<String> {
    TextResources::shared().tokenize(text)
}

pub fn split_sentences(text: &str) -> Vec<String> {
    TextResources::shared().split_sentences(text)
}

/// Lowercases every token except those whose alphabetic characters are all
/// uppercase.
pub fn casefold_selective<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    tokens
        .iter()
        .map(|t| {
            let t = t.as_ref();
            let mut letters = t.chars().filter(|c| c.is_alphabetic()).peekable();
            let keep = letters.peek().is_none() || letters.all(|c| c.is_uppercase());
            if keep {
                t.to_string()
            } else {
                t.to_lowercase()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(toks("don't they?"), ["don't", "they", "?"]);
        assert_eq!(
            toks("hooray for gerrymandering #sarcasm"),
            ["hooray", "for", "gerrymandering", "#sarcasm"]
        );
        assert_eq!(toks("great :)"), ["great", ":)"]);
    }

    #[test]
    fn tokenize_details() {
        assert!(toks("   \t ").is_empty());
        assert_eq!(toks("@UserA one more."), ["@UserA", "one", "more", "."]);
        assert_eq!(toks("see https://x.co/a?b=1."), ["see", "https://x.co/a?b=1", "."]);
        assert_eq!(toks("what?!"), ["what", "?", "!"]);
        assert_eq!(toks("wait..."), ["wait", "..."]);
        assert_eq!(toks("\"content?!\""), ["\"", "content", "?", "!", "\""]);
        assert_eq!(toks("great:)"), ["great", ":)"]);
        assert_eq!(toks("e.g., this"), ["e.g.", ",", "this"]);
        assert_eq!(toks(":D :("), [":D", ":("]);
    }

    #[test]
    fn sentence_examples() {
        assert_eq!(split_sentences("Are you kidding me?! You think…").len(), 2);
        assert_eq!(split_sentences("i.e. this stays together").len(), 1);
        assert_eq!(split_sentences("no terminators at all").len(), 1);
        assert_eq!(split_sentences("Mr. Smith went home. He slept.").len(), 2);
        assert_eq!(split_sentences("I paid 5.50 dollars. 3 times!").len(), 2);
        assert_eq!(split_sentences("lowercase after. stays joined").len(), 1);
    }

    #[test]
    fn forum_post_from_quote() {
        let s = split_sentences(
            "Are you kidding me?! You think that Caribbean countries are \"content?!\" Maybe you should wander off the beach sometime and see for yourself.",
        );
        assert_eq!(s.len(), 3, "{s:?}");
        assert_eq!(s[0], "Are you kidding me?!");
    }

    #[test]
    fn casefold_examples() {
        assert_eq!(
            casefold_selective(&["GREAT", "i'm", "SO", "happy"]),
            ["GREAT", "i'm", "SO", "happy"]
        );
        assert_eq!(casefold_selective(&["Hello"]), ["hello"]);
        assert_eq!(casefold_selective(&["!!"]), ["!!"]);
        assert_eq!(
            casefold_selective(&["#Sarcasm", "@BOB", ":D"]),
            ["#sarcasm", "@BOB", ":D"]
        );
    }

    #[test]
    fn tag_predicates() {
        assert!(is_hashtag("#irony"));
        assert!(!is_hashtag("#"));
        assert!(is_mention("@user_1"));
        assert!(is_url("HTTP://a.b"));
    }

    proptest! {
        #[test]
        fn tokenize_casefold_idempotent(text in "[a-zA-Z'\"#@:;().,!?\\- ]{0,40}") {
            let once = casefold_selective(&tokenize(&text));
            let twice = casefold_selective(&tokenize(&once.join(" ")));
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn sentences_cover_all_words(text in "[a-zA-Z .!?]{1,60}") {
            let joined: Vec<String> = split_sentences(&text)
                .iter()
                .flat_map(|s| s.split_whitespace().map(str::to_string).collect::<Vec<_>>())
                .collect();
            let orig: Vec<String> = text.split_whitespace().map(str::to_string).collect();
            prop_assert_eq!(joined, orig);
        }
    }
}
