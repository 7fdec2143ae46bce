//! Run configuration: a flat TOML file, overridden by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use serde::{Deserialize, Serialize};

use sarcasm_core::data::Platform;
use sarcasm_core::features::DEFAULT_MIN_NGRAM_COUNT;
use sarcasm_core::models::{ConditionalReadout, TrainConfig, Variant};
use sarcasm_core::nn::rng::RngSeed;
use sarcasm_core::Error;

/// One of the LSTM variants or the discrete-feature SVM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModelKind {
    Lstm(Variant),
    Svm,
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "svm" {
            return Ok(ModelKind::Svm);
        }
        s.parse::<Variant>().map(ModelKind::Lstm).map_err(|_| {
            let names: Vec<&str> = Variant::ALL.iter().map(|v| v.as_str()).collect();
            format!("unknown variant {s:?}, expected one of {} or svm", names.join(", "))
        })
    }
}

impl TryFrom<String> for ModelKind {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<ModelKind> for String {
    fn from(m: ModelKind) -> String {
        m.to_string()
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Lstm(v) => f.write_str(v.as_str()),
            ModelKind::Svm => f.write_str("svm"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    ReplyOnly,
    ContextAndReply,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::ReplyOnly => "reply_only",
            Task::ContextAndReply => "context_and_reply",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl SplitName {
    pub fn file_name(self) -> &'static str {
        match self {
            SplitName::Train => "train.jsonl",
            SplitName::Dev => "dev.jsonl",
            SplitName::Test => "test.jsonl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub variant: ModelKind,
    pub task: Task,
    pub platform: Platform,
    /// Conversation instances, one JSON object per line.
    pub corpus: Option<PathBuf>,
    /// Raw tweets for Twitter self-labeling.
    pub tweets: Option<PathBuf>,
    /// Directory holding `train.jsonl`, `dev.jsonl` and `test.jsonl`.
    pub data: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub embedding_dim: usize,
    pub lexicons: Option<PathBuf>,
    /// Directory overriding the bundled emoticon/abbreviation/indicator lists.
    pub resources: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub split: SplitName,
    pub hidden_dim: usize,
    pub att_dim: Option<usize>,
    pub conditional_readout: ConditionalReadout,
    pub dropout: f64,
    pub l2: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Defaults to 10 for forum posts and 5 for tweets.
    pub max_context: Option<usize>,
    pub svm_lambda: f64,
    pub svm_lr: f64,
    pub svm_epochs: usize,
    pub min_ngram_count: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            variant: ModelKind::Lstm(Variant::Conditional),
            task: Task::ContextAndReply,
            platform: Platform::Forum,
            corpus: None,
            tweets: None,
            data: None,
            embeddings: None,
            embedding_dim: 300,
            lexicons: None,
            resources: None,
            model: None,
            output: None,
            split: SplitName::Test,
            hidden_dim: 100,
            att_dim: None,
            conditional_readout: ConditionalReadout::Both,
            dropout: t.dropout,
            l2: t.l2,
            lr: t.lr,
            batch_size: t.batch_size,
            epochs: t.epochs,
            patience: t.patience,
            seed: t.seed.0,
            max_context: None,
            svm_lambda: 1e-4,
            svm_lr: 0.1,
            svm_epochs: 50,
            min_ngram_count: DEFAULT_MIN_NGRAM_COUNT,
        }
    }
}

/// Flags mirroring every config key.
#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct Overrides {
    /// reply_only, concat, conditional, sent_attn, word_attn, hier_attn or svm
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    /// reply_only or context_and_reply
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
    /// forum or twitter
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub platform: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tweets: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding_dim: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lexicons: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resources: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[arg(long, short)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// train, dev or test
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub att_dim: Option<usize>,
    /// both or reply_only
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditional_readout: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dropout: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l2: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patience: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_context: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svm_lambda: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svm_lr: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svm_epochs: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_ngram_count: Option<usize>,
}

fn config_error(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        message: message.into(),
    }
}

/// Reads `file` (if any), applies `overrides` and checks value ranges.
pub fn load(file: Option<&Path>, overrides: &Overrides) -> Result<RunConfig, Error> {
    let mut table = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_error("config", format!("cannot read {}: {e}", path.display())))?;
            text.parse::<toml::Table>()
                .map_err(|e| config_error("config", format!("{}: {e}", path.display())))?
        }
        None => toml::Table::new(),
    };
    let flags = toml::Table::try_from(overrides).map_err(|e| config_error("flags", e.to_string()))?;
    table.extend(flags);
    let config: RunConfig = table.try_into().map_err(|e: toml::de::Error| {
        let msg = e.message().to_string();
        let field = msg
            .split('`')
            .nth(1)
            .filter(|f| RunConfig::KEYS.contains(f))
            .unwrap_or("config")
            .to_string();
        config_error(&field, msg)
    })?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    pub const KEYS: [&'static str; 29] = [
        "variant",
        "task",
        "platform",
        "corpus",
        "tweets",
        "data",
        "embeddings",
        "embedding_dim",
        "lexicons",
        "resources",
        "model",
        "output",
        "split",
        "hidden_dim",
        "att_dim",
        "conditional_readout",
        "dropout",
        "l2",
        "lr",
        "batch_size",
        "epochs",
        "patience",
        "seed",
        "max_context",
        "svm_lambda",
        "svm_lr",
        "svm_epochs",
        "min_ngram_count",
        "config",
    ];

    pub fn validate(&self) -> Result<(), Error> {
        self.train_config().validate()?;
        if self.embedding_dim == 0 {
            return Err(config_error("embedding_dim", "must be >= 1"));
        }
        if self.hidden_dim == 0 {
            return Err(config_error("hidden_dim", "must be >= 1"));
        }
        if self.att_dim == Some(0) {
            return Err(config_error("att_dim", "must be >= 1"));
        }
        if self.max_context == Some(0) {
            return Err(config_error("max_context", "must be >= 1"));
        }
        if !(self.svm_lambda >= 0.0 && self.svm_lambda.is_finite()) {
            return Err(config_error("svm_lambda", "must be >= 0"));
        }
        if !(self.svm_lr > 0.0 && self.svm_lr.is_finite()) {
            return Err(config_error("svm_lr", "must be > 0"));
        }
        if self.svm_epochs == 0 {
            return Err(config_error("svm_epochs", "must be >= 1"));
        }
        if self.min_ngram_count == 0 {
            return Err(config_error("min_ngram_count", "must be >= 1"));
        }
        if let (Task::ReplyOnly, ModelKind::Lstm(v)) = (self.task, self.variant) {
            if v.uses_context() {
                return Err(config_error(
                    "variant",
                    format!("{v} reads the context; the reply_only task needs variant reply_only or svm"),
                ));
            }
        }
        for (field, path) in [
            ("corpus", &self.corpus),
            ("tweets", &self.tweets),
            ("data", &self.data),
            ("embeddings", &self.embeddings),
            ("lexicons", &self.lexicons),
            ("resources", &self.resources),
            ("model", &self.model),
        ] {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(config_error(field, format!("{} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            patience: self.patience,
            batch_size: self.batch_size,
            lr: self.lr,
            l2: self.l2,
            dropout: self.dropout,
            seed: RngSeed(self.seed),
        }
    }

    pub fn max_context(&self) -> usize {
        self.max_context.unwrap_or_else(|| self.platform.default_max_context())
    }

    /// The path behind a required key, or a config error naming it.
    pub fn require<'a>(&self, field: &str, value: &'a Option<PathBuf>) -> Result<&'a Path, Error> {
        value
            .as_deref()
            .ok_or_else(|| config_error(field, "required for this command"))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "variant = \"sent_attn\"\nhidden_dim = 7\nlr = 0.2\n").unwrap();
        let flags = Overrides {
            hidden_dim: Some(9),
            ..Default::default()
        };
        let c = load(Some(&path), &flags).unwrap();
        assert_eq!(c.variant, ModelKind::Lstm(Variant::SentAttn));
        assert_eq!(c.hidden_dim, 9);
        assert_eq!(c.lr, 0.2);
        assert_eq!(c.batch_size, 16);
        assert_eq!(c.dropout, 0.5);
    }

    #[test]
    fn unknown_and_invalid_keys_name_the_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "dropout = 1.5\n").unwrap();
        let err = load(Some(&path), &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("dropout"), "{err}");

        std::fs::write(&path, "hidden = 3\n").unwrap();
        let err = load(Some(&path), &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("hidden"), "{err}");

        let flags = Overrides {
            embeddings: Some(dir.path().join("missing.vec")),
            ..Default::default()
        };
        let err = load(None, &flags).unwrap_err();
        assert!(err.to_string().contains("embeddings"), "{err}");
    }

    #[test]
    fn reply_task_rejects_context_variants() {
        let flags = Overrides {
            task: Some("reply_only".into()),
            variant: Some("concat".into()),
            ..Default::default()
        };
        assert!(load(None, &flags).unwrap_err().to_string().contains("variant"));
    }

    #[test]
    fn effective_config_round_trips() {
        let c = RunConfig::default();
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(c.max_context(), 10);
    }
}
