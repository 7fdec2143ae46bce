use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use crate::data::text::{parse_word_list, read_word_list};
use crate::error::{Error, Result};

const DEFAULT_INTERJECTIONS: &str = include_str!("../../resources/interjections.txt");
const DEFAULT_INTENSIFIERS: &str = include_str!("../../resources/intensifiers.txt");
const DEFAULT_SUPERLATIVES: &str = include_str!("../../resources/superlatives.txt");

/// A token set that also supports `prefix*` entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TokenSet {
    exact: HashSet<String>,
    prefixes: Vec<String>,
}

impl TokenSet {
    pub fn insert(&mut self, entry: &str) {
        let entry = entry.to_lowercase();
        match entry.strip_suffix('*') {
            Some(p) if !p.is_empty() => {
                if !self.prefixes.iter().any(|q| q == p) {
                    self.prefixes.push(p.to_string());
                }
            }
            _ => {
                self.exact.insert(entry);
            }
        }
    }

    /// Case-insensitive membership.
    pub fn contains(&self, token: &str) -> bool {
        let t = token.to_lowercase();
        self.exact.contains(&t) || self.prefixes.iter().any(|p| t.starts_with(p.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.exact.is_empty() && self.prefixes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.exact.len() + self.prefixes.len()
    }
}

impl<S: AsRef<str>> FromIterator<S> for TokenSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut set = TokenSet::default();
        for s in iter {
            set.insert(s.as_ref());
        }
        set
    }
}

/// Category and sentiment lexicons for the discrete baseline.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LexiconSet {
    pub categories: BTreeMap<String, TokenSet>,
    pub positive: TokenSet,
    pub negative: TokenSet,
    pub negations: TokenSet,
}

impl LexiconSet {
    /// Parses `category<TAB>token` lines.
    pub fn parse_categories(text: &str) -> Result<BTreeMap<String, TokenSet>> {
        let mut out: BTreeMap<String, TokenSet> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((cat, token)) = line.split_once('\t') else {
                return Err(Error::parse(i + 1, None, "expected `category<TAB>token`"));
            };
            let (cat, token) = (cat.trim(), token.trim());
            if cat.is_empty() || token.is_empty() {
                return Err(Error::parse(i + 1, None, "empty category or token"));
            }
            out.entry(cat.to_string()).or_default().insert(token);
        }
        Ok(out)
    }

    /// Loads `categories.tsv`, `positive.txt`, `negative.txt` and
    /// `negations.txt` from `dir`.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let cat_path = dir.join("categories.tsv");
        let cats = fs::read_to_string(&cat_path).map_err(|e| Error::io(&cat_path, e))?;
        let lex = LexiconSet {
            categories: Self::parse_categories(&cats)?,
            positive: read_word_list(&dir.join("positive.txt"))?.into_iter().collect(),
            negative: read_word_list(&dir.join("negative.txt"))?.into_iter().collect(),
            negations: read_word_list(&dir.join("negations.txt"))?.into_iter().collect(),
        };
        lex.validate()?;
        Ok(lex)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, set) in [
            ("positive", &self.positive),
            ("negative", &self.negative),
            ("negations", &self.negations),
        ] {
            if set.is_empty() {
                return Err(Error::config("lexicons", format!("{name} lexicon is empty")));
            }
        }
        if let Some((name, _)) = self.categories.iter().find(|(_, s)| s.is_empty()) {
            return Err(Error::config("lexicons", format!("category {name:?} is empty")));
        }
        Ok(())
    }
}

/// Word lists behind the sarcasm-indicator features.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorLexicon {
    pub interjections: TokenSet,
    pub intensifiers: TokenSet,
    pub superlatives: TokenSet,
}

impl Default for IndicatorLexicon {
    fn default() -> Self {
        Self {
            interjections: parse_word_list(DEFAULT_INTERJECTIONS).into_iter().collect(),
            intensifiers: parse_word_list(DEFAULT_INTENSIFIERS).into_iter().collect(),
            superlatives: parse_word_list(DEFAULT_SUPERLATIVES).into_iter().collect(),
        }
    }
}

impl IndicatorLexicon {
    /// Loads `interjections.txt`, `intensifiers.txt`, `superlatives.txt`.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        Ok(Self {
            interjections: read_word_list(&dir.join("interjections.txt"))?.into_iter().collect(),
            intensifiers: read_word_list(&dir.join("intensifiers.txt"))?.into_iter().collect(),
            superlatives: read_word_list(&dir.join("superlatives.txt"))?.into_iter().collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categories_parse_with_wildcards() {
        let cats = LexiconSet::parse_categories("posemo\thapp*\nposemo\tlove\nswear\tdamn\n").unwrap();
        assert_eq!(cats.len(), 2);
        assert!(cats["posemo"].contains("Happiness"));
        assert!(cats["posemo"].contains("love"));
        assert!(!cats["swear"].contains("love"));
    }

    #[test]
    fn category_line_without_tab() {
        assert!(matches!(
            LexiconSet::parse_categories("a\tb\nbroken line\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn empty_sentiment_lexicon_rejected() {
        let lex = LexiconSet::default();
        assert!(lex.validate().is_err());
    }
}
