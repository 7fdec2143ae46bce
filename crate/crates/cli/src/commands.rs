use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sarcasm_core::data::{
    assemble_conversations, parse_corpus, parse_raw_tweets, prepare_instance, stratified_split, twitter_filter,
    write_corpus, ConversationInstance, Label, Platform, SegmentedInstance, TextResources,
};
use sarcasm_core::embeddings::EmbeddingTable;
use sarcasm_core::eval::{
    attention_overlap, format_table, prf1, render_heatmap, ClassMetrics, HeatmapText, MetricsReport,
};
use sarcasm_core::features::svm::SVM_FORMAT;
use sarcasm_core::features::{
    extract, svm_predict, svm_train, FeatureMode, FeatureRegistry, FeatureVector, IndicatorLexicon, LexiconSet,
    SvmConfig, SvmModel,
};
use sarcasm_core::models::network::gradient_check;
use sarcasm_core::models::{
    parse_checkpoint, predict, render_checkpoint, train, AttentionLevel, AttentionRecord, ConditionalReadout,
    EncodedInstance, ModelDims, ModelParams, Variant,
};
use sarcasm_core::nn::rng::RngSeed;
use sarcasm_core::{Error, Result};

use crate::config::{ModelKind, RunConfig, SplitName, Task};

/// Files produced by a command, written only once everything succeeded.
#[derive(Default)]
struct Artifacts(Vec<(PathBuf, Vec<u8>)>);

impl Artifacts {
    fn add(&mut self, path: PathBuf, contents: impl Into<Vec<u8>>) {
        self.0.push((path, contents.into()));
    }

    fn add_jsonl<T: Serialize>(&mut self, path: PathBuf, rows: &[T]) {
        let mut out = String::new();
        for r in rows {
            out.push_str(&serde_json::to_string(r).expect("row serializes"));
            out.push('\n');
        }
        self.add(path, out);
    }

    fn write(self) -> Result<()> {
        for (path, contents) in self.0 {
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
            }
            fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
        }
        Ok(())
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn config_error(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_error(path, e))
}

fn text_resources(cfg: &RunConfig) -> Result<TextResources> {
    match &cfg.resources {
        Some(dir) => TextResources::load(dir),
        None => Ok(TextResources::default()),
    }
}

fn indicator_lexicon(cfg: &RunConfig) -> Result<IndicatorLexicon> {
    match &cfg.resources {
        Some(dir) if dir.join("interjections.txt").exists() => IndicatorLexicon::load(dir),
        _ => Ok(IndicatorLexicon::default()),
    }
}

fn embedding_seed(cfg: &RunConfig) -> RngSeed {
    RngSeed(cfg.seed).derive(3)
}

struct Dataset {
    raw: Vec<ConversationInstance>,
    segmented: Vec<SegmentedInstance>,
}

fn load_split(cfg: &RunConfig, res: &TextResources, split: SplitName) -> Result<Dataset> {
    let dir = cfg.require("data", &cfg.data)?;
    let path = dir.join(split.file_name());
    if !path.exists() {
        return Err(config_error(
            "data",
            format!("{} has no {}", dir.display(), split.file_name()),
        ));
    }
    let raw = parse_corpus(&read(&path)?, res)?;
    let segmented = raw
        .iter()
        .map(|inst| prepare_instance(inst, res, Some(cfg.max_context())))
        .collect();
    Ok(Dataset { raw, segmented })
}

fn load_embeddings(cfg: &RunConfig) -> Result<EmbeddingTable> {
    let path = cfg.require("embeddings", &cfg.embeddings)?;
    EmbeddingTable::load(path, cfg.embedding_dim, embedding_seed(cfg))
}

fn encode(data: &Dataset, table: &EmbeddingTable) -> Vec<EncodedInstance> {
    data.segmented
        .iter()
        .map(|s| EncodedInstance::from_segmented(s, table))
        .collect()
}

fn feature_mode(task: Task) -> FeatureMode {
    match task {
        Task::ReplyOnly => FeatureMode::ReplyOnly,
        Task::ContextAndReply => FeatureMode::ContextAndReply,
    }
}

fn output_dir(cfg: &RunConfig) -> Result<&Path> {
    cfg.require("output", &cfg.output)
}

pub fn prepare(cfg: &RunConfig) -> Result<()> {
    let out = output_dir(cfg)?;
    let res = text_resources(cfg)?;
    let instances = match (&cfg.corpus, &cfg.tweets) {
        (Some(path), None) => parse_corpus(&read(path)?, &res)?,
        (None, Some(path)) => {
            if cfg.platform != Platform::Twitter {
                return Err(config_error("platform", "tweets input needs platform = \"twitter\""));
            }
            let pool = parse_raw_tweets(&read(path)?)?;
            let accepted = twitter_filter(&pool);
            let conversations = assemble_conversations(&pool, &accepted);
            println!(
                "{} tweets, {} kept by the filter, {} with context",
                pool.len(),
                accepted.len(),
                conversations.len()
            );
            conversations
        }
        (Some(_), Some(_)) => return Err(config_error("corpus", "give either corpus or tweets, not both")),
        (None, None) => return Err(config_error("corpus", "one of corpus or tweets is required")),
    };
    let split = stratified_split(&instances, RngSeed(cfg.seed))?;
    for (name, part) in [("train", &split.train), ("dev", &split.dev), ("test", &split.test)] {
        println!("{name}: {} instances", part.len());
    }
    fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
    write_corpus(out.join("train.jsonl"), &split.train)?;
    write_corpus(out.join("dev.jsonl"), &split.dev)?;
    write_corpus(out.join("test.jsonl"), &split.test)?;
    fs::write(out.join("config.toml"), cfg.to_toml()).map_err(|e| io_error(&out.join("config.toml"), e))
}

#[derive(Serialize)]
struct SvmEpoch {
    epoch: usize,
    objective: f64,
}

pub fn train_model(cfg: &RunConfig) -> Result<()> {
    let out = output_dir(cfg)?;
    let res = text_resources(cfg)?;
    let mut files = Artifacts::default();
    match cfg.variant {
        ModelKind::Lstm(variant) => {
            let table = load_embeddings(cfg)?;
            let train_set = encode(&load_split(cfg, &res, SplitName::Train)?, &table);
            let dev_set = encode(&load_split(cfg, &res, SplitName::Dev)?, &table);
            let dims = ModelDims {
                embed_dim: cfg.embedding_dim,
                hidden_dim: cfg.hidden_dim,
                att_dim: cfg.att_dim.unwrap_or(cfg.hidden_dim),
            };
            let mut rng = RngSeed(cfg.seed).derive(4).rng();
            let initial = ModelParams::init(variant, dims, cfg.conditional_readout, &mut rng);
            let outcome = train(initial, &train_set, &dev_set, &cfg.train_config())?;
            for e in &outcome.log {
                println!(
                    "epoch {:>3}  loss {:.4}  dev F1 {:.2}  dev acc {:.2}",
                    e.epoch, e.train_loss, e.dev_f1, e.dev_accuracy
                );
            }
            println!("best epoch {}", outcome.best_epoch);
            files.add(out.join("model.ckpt"), render_checkpoint(&outcome.params));
            files.add_jsonl(out.join("train_log.jsonl"), &outcome.log);
        }
        ModelKind::Svm => {
            let lex = LexiconSet::load(cfg.require("lexicons", &cfg.lexicons)?)?;
            let ind = indicator_lexicon(cfg)?;
            let mode = feature_mode(cfg.task);
            let data = load_split(cfg, &res, SplitName::Train)?;
            let named: Vec<_> = data.segmented.iter().map(|s| extract(s, mode, &lex, &ind)).collect();
            let registry = FeatureRegistry::build(&named, cfg.min_ngram_count);
            let rows: Vec<(FeatureVector, Label)> = named
                .iter()
                .zip(&data.segmented)
                .map(|(f, s)| (registry.vectorize(f), s.label))
                .collect();
            let svm_cfg = SvmConfig {
                lambda: cfg.svm_lambda,
                lr: cfg.svm_lr,
                epochs: cfg.svm_epochs,
                batch_size: None,
                seed: RngSeed(cfg.seed),
            };
            let trained = svm_train(&rows, registry.len(), &svm_cfg)?;
            println!(
                "{} features, objective {:.4} -> {:.4}",
                registry.len(),
                trained.objective[0],
                trained.objective.last().copied().unwrap_or(f64::NAN)
            );
            let log: Vec<SvmEpoch> = trained
                .objective
                .iter()
                .enumerate()
                .map(|(epoch, &objective)| SvmEpoch { epoch, objective })
                .collect();
            files.add_jsonl(out.join("train_log.jsonl"), &log);
            files.add(out.join("config.toml"), cfg.to_toml());
            files.write()?;
            return trained.model.save(out.join("model.svm"), &registry);
        }
    }
    files.add(out.join("config.toml"), cfg.to_toml());
    files.write()
}

enum LoadedModel {
    Lstm(ModelParams),
    Svm(SvmModel, FeatureRegistry),
}

impl LoadedModel {
    fn name(&self) -> String {
        match self {
            LoadedModel::Lstm(p) => p.variant.to_string(),
            LoadedModel::Svm(..) => "svm".into(),
        }
    }
}

fn load_model(cfg: &RunConfig) -> Result<LoadedModel> {
    let path = cfg.require("model", &cfg.model)?;
    let text = read(path)?;
    if text.starts_with(SVM_FORMAT) {
        let (model, registry) = SvmModel::parse(&text)?;
        Ok(LoadedModel::Svm(model, registry))
    } else {
        let params = parse_checkpoint(&text)?;
        if params.dims().embed_dim != cfg.embedding_dim {
            return Err(config_error(
                "embedding_dim",
                format!(
                    "model expects {}, config says {}",
                    params.dims().embed_dim,
                    cfg.embedding_dim
                ),
            ));
        }
        Ok(LoadedModel::Lstm(params))
    }
}

/// One line of `predictions.jsonl`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRow {
    pub id: String,
    pub gold: Label,
    pub label: Label,
    /// `[P(S), P(NS)]` for the neural models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<[f64; 2]>,
    /// Signed SVM margin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attention: Option<AttentionRecord>,
}

fn run_model(cfg: &RunConfig, model: &LoadedModel, data: &Dataset) -> Result<Vec<PredictionRow>> {
    let mut rows = Vec::with_capacity(data.raw.len());
    match model {
        LoadedModel::Lstm(params) => {
            let table = load_embeddings(cfg)?;
            for (raw, enc) in data.raw.iter().zip(encode(data, &table)) {
                let p = predict(params, &enc)?;
                rows.push(PredictionRow {
                    id: raw.id.clone(),
                    gold: raw.label,
                    label: p.label,
                    probs: Some(p.probs),
                    margin: None,
                    attention: p.attention,
                });
            }
        }
        LoadedModel::Svm(svm, registry) => {
            let lex = LexiconSet::load(cfg.require("lexicons", &cfg.lexicons)?)?;
            let ind = indicator_lexicon(cfg)?;
            let mode = feature_mode(cfg.task);
            for (raw, seg) in data.raw.iter().zip(&data.segmented) {
                let fv = registry.vectorize(&extract(seg, mode, &lex, &ind));
                let (label, margin) = svm_predict(svm, &fv);
                rows.push(PredictionRow {
                    id: raw.id.clone(),
                    gold: raw.label,
                    label,
                    probs: None,
                    margin: Some(margin),
                    attention: None,
                });
            }
        }
    }
    Ok(rows)
}

fn metrics_of(rows: &[PredictionRow]) -> Result<ClassMetrics> {
    let gold: Vec<Label> = rows.iter().map(|r| r.gold).collect();
    let pred: Vec<Label> = rows.iter().map(|r| r.label).collect();
    prf1(&gold, &pred)
}

#[derive(Deserialize)]
struct StoredPrediction {
    gold: Label,
    label: Label,
}

fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    let text = read(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let p: StoredPrediction = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            field: None,
            message: e.to_string(),
        })?;
        rows.push(PredictionRow {
            id: (i + 1).to_string(),
            gold: p.gold,
            label: p.label,
            probs: None,
            margin: None,
            attention: None,
        });
    }
    Ok(rows)
}

pub fn evaluate(cfg: &RunConfig, predictions: Option<&Path>) -> Result<()> {
    let (name, rows) = match predictions {
        Some(path) => {
            if !path.exists() {
                return Err(config_error(
                    "predictions",
                    format!("{} does not exist", path.display()),
                ));
            }
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "predictions".into());
            (name, read_predictions(path)?)
        }
        None => {
            let model = load_model(cfg)?;
            let res = text_resources(cfg)?;
            let data = load_split(cfg, &res, cfg.split)?;
            (model.name(), run_model(cfg, &model, &data)?)
        }
    };
    let report = MetricsReport::new(name, cfg.task.as_str(), metrics_of(&rows)?);
    let table = format_table(std::slice::from_ref(&report));
    print!("{table}");
    if let Some(out) = &cfg.output {
        let mut files = Artifacts::default();
        files.add_jsonl(out.join("metrics.jsonl"), std::slice::from_ref(&report));
        files.add(out.join("metrics.txt"), table);
        files.add(out.join("config.toml"), cfg.to_toml());
        files.write()?;
    }
    Ok(())
}

pub fn predict_split(cfg: &RunConfig) -> Result<()> {
    let out = output_dir(cfg)?;
    let model = load_model(cfg)?;
    let res = text_resources(cfg)?;
    let data = load_split(cfg, &res, cfg.split)?;
    let rows = run_model(cfg, &model, &data)?;
    let m = metrics_of(&rows)?;
    println!(
        "{} predictions, accuracy {:.2}, S F1 {:.2}",
        rows.len(),
        m.accuracy(),
        m.s.f1
    );
    let mut files = Artifacts::default();
    files.add_jsonl(out.join("predictions.jsonl"), &rows);
    files.add(out.join("config.toml"), cfg.to_toml());
    files.write()
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn heatmap_text(seg: &SegmentedInstance, record: &AttentionRecord) -> HeatmapText {
    match record.level {
        AttentionLevel::Sentence => HeatmapText {
            context: seg.context_sentences.iter().map(|s| s.raw.clone()).collect(),
            reply: seg.reply_sentences.iter().map(|s| s.raw.clone()).collect(),
            human_triggers: seg.human_triggers.clone(),
        },
        AttentionLevel::Word => HeatmapText {
            context: seg.context_tokens().cloned().collect(),
            reply: seg.reply_tokens().cloned().collect(),
            human_triggers: None,
        },
    }
}

pub fn attention(cfg: &RunConfig) -> Result<()> {
    let out = output_dir(cfg)?;
    let params = match load_model(cfg)? {
        LoadedModel::Lstm(p) if p.variant.has_attention() => p,
        other => {
            return Err(config_error(
                "model",
                format!(
                    "{} has no attention; use sent_attn, word_attn or hier_attn",
                    other.name()
                ),
            ))
        }
    };
    let res = text_resources(cfg)?;
    let data = load_split(cfg, &res, cfg.split)?;
    let table = load_embeddings(cfg)?;
    let mut files = Artifacts::default();
    let mut with_triggers = Vec::new();
    let mut used = BTreeMap::new();
    for (seg, enc) in data.segmented.iter().zip(encode(&data, &table)) {
        let record = predict(&params, &enc)?
            .attention
            .expect("attention variant yields weights");
        let svg = render_heatmap(&heatmap_text(seg, &record), &record)?;
        let stem = file_stem(&seg.id);
        let n = used.entry(stem.clone()).or_insert(0usize);
        let name = if *n == 0 {
            format!("{stem}.svg")
        } else {
            format!("{stem}-{n}.svg")
        };
        *n += 1;
        files.add(out.join("heatmaps").join(name), svg);
        if let Some(t) = seg.human_triggers.as_ref().filter(|t| !t.is_empty()) {
            if record.level == AttentionLevel::Sentence {
                with_triggers.push((record, t.clone()));
            }
        }
    }
    println!("{} heatmaps", data.segmented.len());
    if !with_triggers.is_empty() {
        let rate = attention_overlap(with_triggers.iter().map(|(r, t)| (r, t.as_slice())))?;
        println!(
            "top context sentence among human triggers: {:.2}% of {} instances",
            100.0 * rate,
            with_triggers.len()
        );
        files.add(
            out.join("overlap.json"),
            serde_json::json!({ "instances": with_triggers.len(), "overlap": rate }).to_string() + "\n",
        );
    }
    files.add(out.join("config.toml"), cfg.to_toml());
    files.write()
}

/// Largest relative error per variant of analytic versus central-difference
/// gradients on a random toy instance.
pub fn gradcheck(cfg: &RunConfig, only: Option<Variant>) -> Result<()> {
    const EPSILON: f64 = 1e-5;
    const TOLERANCE: f64 = 1e-4;
    let (embed, hidden) = (6, 5);
    let mut rng = RngSeed(cfg.seed).rng();
    let tokens = |n: usize, rng: &mut sarcasm_core::nn::rng::SeededRng| -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..embed).map(|_| rng.uniform_open(1.0)).collect())
            .collect()
    };
    let inst = EncodedInstance {
        context: vec![tokens(3, &mut rng), tokens(2, &mut rng), tokens(4, &mut rng)],
        reply: vec![tokens(3, &mut rng), tokens(2, &mut rng)],
        label: Label::S,
    };
    let variants: Vec<Variant> = match only {
        Some(v) => vec![v],
        None => Variant::ALL.to_vec(),
    };
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for v in variants {
        let params = ModelParams::init_scaled(
            v,
            ModelDims::new(embed, hidden),
            ConditionalReadout::Both,
            0.3,
            &mut rng,
        );
        let errors = gradient_check(&params, &inst, EPSILON)?;
        let (worst_name, worst) = errors
            .iter()
            .cloned()
            .fold((String::new(), 0.0f64), |a, b| if b.1 > a.1 { b } else { a });
        let ok = worst < TOLERANCE;
        println!(
            "{:<12} max rel. error {worst:.2e} ({worst_name})  {}",
            v.as_str(),
            if ok { "ok" } else { "FAIL" }
        );
        if !ok {
            failed.push(format!("{v} {worst_name} {worst:.2e}"));
        }
        rows.push(serde_json::json!({
            "variant": v.as_str(),
            "max_relative_error": worst,
            "parameter": worst_name,
            "passed": ok,
        }));
    }
    if let Some(out) = &cfg.output {
        let mut files = Artifacts::default();
        files.add_jsonl(out.join("gradcheck.jsonl"), &rows);
        files.add(out.join("config.toml"), cfg.to_toml());
        files.write()?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Numeric {
            location: "gradient check".into(),
            message: format!("relative error above {TOLERANCE:e}: {}", failed.join(", ")),
        })
    }
}
