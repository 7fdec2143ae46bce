//! Frozen word vectors in word2vec text format, with deterministic
//! out-of-vocabulary vectors.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::RwLock;

use crate::error::{Error, Result};
use crate::nn::rng::RngSeed;

/// Half-width of the uniform range OOV vectors are drawn from.
pub const OOV_RANGE: f64 = 0.05;

#[derive(Debug)]
pub struct EmbeddingTable {
    dim: usize,
    vocab: HashMap<String, Vec<f64>>,
    oov_cache: RwLock<HashMap<String, Vec<f64>>>,
    seed: RngSeed,
}

impl EmbeddingTable {
    pub fn new(dim: usize, seed: RngSeed) -> Self {
        Self {
            dim,
            vocab: HashMap::new(),
            oov_cache: RwLock::new(HashMap::new()),
            seed,
        }
    }

    /// Builds a table from in-memory vectors; every vector must have length `dim`.
    pub fn from_vectors<I, S>(dim: usize, seed: RngSeed, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut table = Self::new(dim, seed);
        for (token, v) in entries {
            let token = token.into();
            if v.len() != dim {
                return Err(Error::shape(format!("embedding for `{token}`"), dim, v.len()));
            }
            table.vocab.insert(token, v);
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>, expected_dim: usize, seed: RngSeed) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, expected_dim, seed)
    }

    /// Parses word2vec text: a `V D` header, then `V` rows of `token v1 … vD`.
    pub fn parse(text: &str, expected_dim: usize, seed: RngSeed) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, None, "missing `V D` header"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [v, d] = fields.as_slice() else {
            return Err(Error::parse(1, None, format!("header must be `V D`, got {header:?}")));
        };
        let count: usize = v
            .parse()
            .map_err(|_| Error::parse(1, None, format!("bad vocabulary size {v:?}")))?;
        let dim: usize = d
            .parse()
            .map_err(|_| Error::parse(1, None, format!("bad dimension {d:?}")))?;
        if dim != expected_dim {
            return Err(Error::config(
                "embedding_dim",
                format!("file has dimension {dim}, expected {expected_dim}"),
            ));
        }

        let mut table = Self::new(dim, seed);
        let mut rows = 0;
        for (line_no, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let token = parts.next().expect("non-empty line has a first field");
            let values = parts
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(line_no, None, format!("bad value for `{token}`: {e}")))?;
            if values.len() != dim {
                return Err(Error::parse(
                    line_no,
                    None,
                    format!("`{token}` has {} values, header says {dim}", values.len()),
                ));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::parse(line_no, None, format!("non-finite value for `{token}`")));
            }
            rows += 1;
            table.vocab.entry(token.to_string()).or_insert(values);
        }
        if rows != count {
            return Err(Error::parse(
                1,
                None,
                format!("header declares {count} rows, file has {rows}"),
            ));
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vocab.contains_key(token)
    }

    pub fn oov_count(&self) -> usize {
        self.oov_cache.read().expect("oov cache poisoned").len()
    }

    /// Stored vector for known tokens; for unknown tokens a cached
    /// uniform(−0.05, 0.05) vector seeded by the token and the table seed.
    pub fn lookup(&self, token: &str) -> Vec<f64> {
        if let Some(v) = self.vocab.get(token) {
            return v.clone();
        }
        if let Some(v) = self.oov_cache.read().expect("oov cache poisoned").get(token) {
            return v.clone();
        }
        let mut cache = self.oov_cache.write().expect("oov cache poisoned");
        cache
            .entry(token.to_string())
            .or_insert_with(|| self.oov_vector(token))
            .clone()
    }

    fn oov_vector(&self, token: &str) -> Vec<f64> {
        let mut rng = self.seed.derive(fnv1a(token.as_bytes())).rng();
        (0..self.dim).map(|_| rng.uniform_open(OOV_RANGE)).collect()
    }

    /// Componentwise mean of the token vectors.
    pub fn sentence_avg<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<f64>> {
        if tokens.is_empty() {
            return Err(Error::Domain("cannot average an empty sentence".into()));
        }
        let mut sum = vec![0.0; self.dim];
        for t in tokens {
            for (s, v) in sum.iter_mut().zip(self.lookup(t.as_ref())) {
                *s += v;
            }
        }
        let n = tokens.len() as f64;
        sum.iter_mut().for_each(|s| *s /= n);
        Ok(sum)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
