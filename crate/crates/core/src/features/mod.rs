//! Discrete features and the class-weighted linear SVM baseline.

pub mod extract;
pub mod lexicon;
pub mod svm;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::data::SegmentedInstance;

pub use extract::{
    extract, indicator_features, lexicon_features, ngram_features, sentiment_incongruity, FeatureMode, NamedFeatures,
    Side,
};
pub use lexicon::{IndicatorLexicon, LexiconSet, TokenSet};
pub use svm::{svm_predict, svm_train, SvmConfig, SvmModel};

/// Default minimum training frequency for an n-gram to get an id.
pub const DEFAULT_MIN_NGRAM_COUNT: usize = 2;

/// Sparse feature vector: `(id, value)` sorted by id, no zero entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureVector {
    entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    pub fn from_entries(mut entries: Vec<(u32, f64)>) -> Self {
        entries.retain(|(_, v)| *v != 0.0);
        entries.sort_by_key(|(id, _)| *id);
        entries.dedup_by_key(|(id, _)| *id);
        Self { entries }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(id, v)| dense.get(id as usize).copied().unwrap_or(0.0) * v)
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum()
    }
}

/// Stable feature-name → id assignment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureRegistry {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

fn is_ngram(name: &str) -> bool {
    name.split_once('|')
        .map_or(name, |(_, rest)| rest)
        .starts_with(extract::NGRAM_PREFIX)
}

impl FeatureRegistry {
    /// Registers every feature seen in training; n-grams need at least
    /// `min_ngram_count` instances. Ids follow sorted name order.
    pub fn build<'a>(train: impl IntoIterator<Item = &'a NamedFeatures>, min_ngram_count: usize) -> Self {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for f in train {
            for name in f.keys() {
                *counts.entry(name.as_str()).or_insert(0) += 1;
            }
        }
        let keep: BTreeSet<&str> = counts
            .into_iter()
            .filter(|(name, n)| !is_ngram(name) || *n >= min_ngram_count)
            .map(|(name, _)| name)
            .collect();
        let mut reg = Self::default();
        for name in keep {
            reg.intern(name);
        }
        reg
    }

    pub fn from_names(names: Vec<String>) -> Self {
        let mut reg = Self::default();
        for n in names {
            reg.intern(&n);
        }
        reg
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.ids.insert(name.to_string(), id);
        self.names.push(name.to_string());
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Maps named features to ids; unknown names are dropped.
    pub fn vectorize(&self, features: &NamedFeatures) -> FeatureVector {
        FeatureVector::from_entries(
            features
                .iter()
                .filter_map(|(name, &v)| self.get(name).map(|id| (id, v)))
                .collect(),
        )
    }
}

/// Extraction followed by id assignment through `registry`.
pub fn assemble(
    instance: &SegmentedInstance,
    mode: FeatureMode,
    lex: &LexiconSet,
    ind: &IndicatorLexicon,
    registry: &FeatureRegistry,
) -> FeatureVector {
    registry.vectorize(&extract(instance, mode, lex, ind))
}
