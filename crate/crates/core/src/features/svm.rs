//! Linear SVM trained by primal subgradient descent on the class-weighted
//! hinge loss.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::data::Label;
use crate::error::{Error, Result};
use crate::nn::rng::RngSeed;

use super::{FeatureRegistry, FeatureVector};

pub const SVM_FORMAT: &str = "sarcasm-svm";
pub const SVM_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SvmConfig {
    /// L2 strength λ in `(λ/2)‖w‖²`.
    pub lambda: f64,
    pub lr: f64,
    pub epochs: usize,
    /// `None` takes one full-batch step per epoch.
    pub batch_size: Option<usize>,
    pub seed: RngSeed,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            lr: 0.1,
            epochs: 50,
            batch_size: None,
            seed: RngSeed(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Indexed by [`Label::index`].
    pub class_weights: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct SvmTraining {
    pub model: SvmModel,
    /// Objective before training, then after every epoch.
    pub objective: Vec<f64>,
}

fn sign(label: Label) -> f64 {
    match label {
        Label::S => 1.0,
        Label::NS => -1.0,
    }
}

/// `N_total / (2·N_k)` for each class.
pub fn class_weights(labels: impl IntoIterator<Item = Label>) -> Result<[f64; 2]> {
    let mut counts = [0usize; 2];
    for l in labels {
        counts[l.index()] += 1;
    }
    if counts.contains(&0) {
        return Err(Error::config("train", "both S and NS instances are required"));
    }
    let total = (counts[0] + counts[1]) as f64;
    Ok(counts.map(|n| total / (2.0 * n as f64)))
}

impl SvmModel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
            class_weights: [1.0, 1.0],
        }
    }

    pub fn decision(&self, fv: &FeatureVector) -> f64 {
        fv.dot(&self.weights) + self.bias
    }

    /// `(λ/2)‖w‖² + (1/N) Σ c_y·max(0, 1 − y(w·x + b))`.
    pub fn objective(&self, data: &[(FeatureVector, Label)], lambda: f64) -> f64 {
        let reg = 0.5 * lambda * self.weights.iter().map(|w| w * w).sum::<f64>();
        let hinge: f64 = data
            .iter()
            .map(|(x, y)| self.class_weights[y.index()] * (1.0 - sign(*y) * self.decision(x)).max(0.0))
            .sum();
        reg + hinge / data.len().max(1) as f64
    }

    /// Writes the model with feature names so it can be applied to new data.
    pub fn save(&self, path: impl AsRef<Path>, registry: &FeatureRegistry) -> Result<()> {
        let path = path.as_ref();
        let mut s = String::new();
        writeln!(s, "{SVM_FORMAT} {SVM_FORMAT_VERSION}").unwrap();
        writeln!(s, "bias {:?}", self.bias).unwrap();
        writeln!(
            s,
            "class_weights {:?} {:?}",
            self.class_weights[0], self.class_weights[1]
        )
        .unwrap();
        writeln!(s, "features {}", registry.len()).unwrap();
        for (name, w) in registry.names().iter().zip(&self.weights) {
            writeln!(s, "{name}\t{w:?}").unwrap();
        }
        fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(SvmModel, FeatureRegistry)> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<(SvmModel, FeatureRegistry)> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(0, Some(what), "unexpected end of file"))
        };
        let num = |line: usize, s: &str| s.parse::<f64>().map_err(|e| Error::parse(line, None, e.to_string()));

        let (ln, header) = next("header")?;
        let expected = format!("{SVM_FORMAT} {SVM_FORMAT_VERSION}");
        if header != expected {
            return Err(Error::parse(
                ln,
                Some("header"),
                format!("expected {expected:?}, got {header:?}"),
            ));
        }
        let (ln, bias) = next("bias")?;
        let bias = num(
            ln,
            bias.strip_prefix("bias ")
                .ok_or_else(|| Error::parse(ln, Some("bias"), "missing"))?,
        )?;
        let (ln, cw) = next("class_weights")?;
        let cw: Vec<f64> = cw
            .strip_prefix("class_weights ")
            .ok_or_else(|| Error::parse(ln, Some("class_weights"), "missing"))?
            .split(' ')
            .map(|s| num(ln, s))
            .collect::<Result<_>>()?;
        let [s_w, ns_w] = cw[..] else {
            return Err(Error::parse(ln, Some("class_weights"), "expected two values"));
        };
        let (ln, nf) = next("features")?;
        let n: usize = nf
            .strip_prefix("features ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(ln, Some("features"), "expected `features N`"))?;
        let mut names = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, row) = next("feature row")?;
            let (name, w) = row
                .rsplit_once('\t')
                .ok_or_else(|| Error::parse(ln, None, "expected `name<TAB>weight`"))?;
            names.push(name.to_string());
            weights.push(num(ln, w)?);
        }
        let registry = FeatureRegistry::from_names(names);
        if registry.len() != n {
            return Err(Error::parse(0, Some("features"), "duplicate feature names"));
        }
        Ok((
            SvmModel {
                weights,
                bias,
                class_weights: [s_w, ns_w],
            },
            registry,
        ))
    }
}

/// Epoch-wise subgradient descent on the class-weighted hinge objective
/// with seeded shuffling.
pub fn svm_train(train: &[(FeatureVector, Label)], dim: usize, config: &SvmConfig) -> Result<SvmTraining> {
    if !(config.lr > 0.0) {
        return Err(Error::config("svm.lr", "must be > 0"));
    }
    if !(config.lambda >= 0.0) {
        return Err(Error::config("svm.lambda", "must be >= 0"));
    }
    if config.batch_size == Some(0) {
        return Err(Error::config("svm.batch_size", "must be > 0"));
    }
    let mut model = SvmModel::zeros(dim);
    model.class_weights = class_weights(train.iter().map(|(_, y)| *y))?;
    if let Some((x, _)) = train
        .iter()
        .find(|(x, _)| x.entries().iter().any(|&(id, _)| id as usize >= dim))
    {
        return Err(Error::shape(
            "svm feature vector",
            format!("ids < {dim}"),
            format!("{:?}", x.entries().last()),
        ));
    }

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut rng = config.seed.rng();
    let batch = config.batch_size.unwrap_or(train.len());
    let mut objective = vec![model.objective(train, config.lambda)];
    let mut grad = vec![0.0; dim];

    for epoch in 0..config.epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(batch) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_b = 0.0;
            let scale = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let (x, y) = &train[i];
                let s = sign(*y);
                if s * model.decision(x) < 1.0 {
                    let c = model.class_weights[y.index()] * s * scale;
                    for &(id, v) in x.entries() {
                        grad[id as usize] -= c * v;
                    }
                    grad_b -= c;
                }
            }
            for (w, g) in model.weights.iter_mut().zip(&grad) {
                *w -= config.lr * (g + config.lambda * *w);
            }
            model.bias -= config.lr * grad_b;
        }
        let obj = model.objective(train, config.lambda);
        if !obj.is_finite() {
            return Err(Error::Numeric {
                location: format!("svm epoch {epoch}"),
                message: "objective is not finite".into(),
            });
        }
        objective.push(obj);
    }
    Ok(SvmTraining { model, objective })
}

/// `S` when `w·x + b > 0`, otherwise `NS`; the margin is returned too.
pub fn svm_predict(model: &SvmModel, fv: &FeatureVector) -> (Label, f64) {
    let m = model.decision(fv);
    (if m > 0.0 { Label::S } else { Label::NS }, m)
}
