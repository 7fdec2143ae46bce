//! Mini-batch SGD with dropout on the classifier input and early stopping
//! on development-set macro F1.

use serde::{Deserialize, Serialize};

use super::network::{backward_into, decide, forward, loss, predict, EncodedInstance, Prediction};
use super::params::ModelParams;
use crate::data::Label;
use crate::error::{Error, Result};
use crate::eval::{prf1, ClassMetrics};
use crate::nn::dropout::dropout_mask;
use crate::nn::ops::cross_entropy;
use crate::nn::optim::{sgd_step, Parameters};
use crate::nn::rng::RngSeed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Epochs without a dev F1 improvement before stopping.
    pub patience: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub l2: f64,
    pub dropout: f64,
    pub seed: RngSeed,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            patience: 10,
            batch_size: 16,
            lr: 0.05,
            l2: 1e-4,
            dropout: 0.5,
            seed: RngSeed(13),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs", "must be >= 1"));
        }
        if self.patience == 0 {
            return Err(Error::config("patience", "must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be >= 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config(
                "lr",
                format!("must be a positive number, got {}", self.lr),
            ));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::config("l2", format!("must be >= 0, got {}", self.l2)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config(
                "dropout",
                format!("must be in [0, 1), got {}", self.dropout),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub dev_f1: f64,
    pub dev_accuracy: f64,
    pub dev_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best dev macro F1; among epochs
    /// with equal F1 the lowest dev loss wins.
    pub params: ModelParams,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
}

/// Predictions and metrics over a data set, without dropout.
pub fn evaluate(params: &ModelParams, data: &[EncodedInstance]) -> Result<(Vec<Prediction>, ClassMetrics)> {
    let preds = data.iter().map(|x| predict(params, x)).collect::<Result<Vec<_>>>()?;
    let gold: Vec<Label> = data.iter().map(|x| x.label).collect();
    let labels: Vec<Label> = preds.iter().map(|p| p.label).collect();
    let metrics = prf1(&gold, &labels)?;
    Ok((preds, metrics))
}

fn locate(e: Error, at: String) -> Error {
    match e {
        Error::Numeric { location, message } => Error::Numeric {
            location: format!("{at}, {location}"),
            message,
        },
        other => other,
    }
}

pub fn train(
    initial: ModelParams,
    train_set: &[EncodedInstance],
    dev_set: &[EncodedInstance],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    initial.validate()?;
    if train_set.is_empty() {
        return Err(Error::Domain("training set is empty".into()));
    }
    if dev_set.is_empty() {
        return Err(Error::Domain("development set is empty".into()));
    }
    let mut params = initial;
    let mut shuffle_rng = config.seed.derive(1).rng();
    let mut dropout_rng = config.seed.derive(2).rng();
    let width = params.w_out.cols();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut best: Option<(f64, f64, usize, ModelParams)> = None;
    let mut last_improvement = 0;
    let mut log = Vec::new();

    for epoch in 1..=config.epochs {
        shuffle_rng.shuffle(&mut order);
        let (mut total_loss, mut correct) = (0.0, 0usize);
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let mut grads = params.zeros_like();
            for &i in batch {
                let inst = &train_set[i];
                let mask = (config.dropout > 0.0)
                    .then(|| dropout_mask(width, config.dropout, &mut dropout_rng))
                    .transpose()?;
                let at = |e| locate(e, format!("epoch {epoch}, batch {}", b + 1));
                let fwd = forward(&params, inst, mask.as_deref()).map_err(at)?;
                total_loss += loss(&fwd, inst.label).map_err(at)?;
                correct += usize::from(decide(&fwd.probs) == inst.label);
                backward_into(&params, &fwd, inst.label, &mut grads);
            }
            grads.scale(1.0 / batch.len() as f64);
            if !grads.all_finite() {
                return Err(Error::Numeric {
                    location: format!("epoch {epoch}, batch {}", b + 1),
                    message: "non-finite gradient".into(),
                });
            }
            sgd_step(&mut params, &grads, config.lr, config.l2)?;
            if !params.all_finite() {
                return Err(Error::Numeric {
                    location: format!("epoch {epoch}, batch {}", b + 1),
                    message: "non-finite parameter after update".into(),
                });
            }
        }
        let at_dev = |e| locate(e, format!("epoch {epoch}, dev evaluation"));
        let (preds, dev) = evaluate(&params, dev_set).map_err(at_dev)?;
        let mut dev_loss = 0.0;
        for (p, x) in preds.iter().zip(dev_set) {
            dev_loss += cross_entropy(&p.probs, x.label.index()).map_err(at_dev)?;
        }
        let entry = EpochLog {
            epoch,
            train_loss: total_loss / train_set.len() as f64,
            train_accuracy: 100.0 * correct as f64 / train_set.len() as f64,
            dev_f1: dev.macro_f1(),
            dev_accuracy: dev.accuracy(),
            dev_loss: dev_loss / dev_set.len() as f64,
        };
        let improved = best.as_ref().is_none_or(|b| entry.dev_f1 > b.0);
        let tie_break = best
            .as_ref()
            .is_some_and(|b| entry.dev_f1 == b.0 && entry.dev_loss < b.1);
        if improved {
            last_improvement = epoch;
        }
        if improved || tie_break {
            best = Some((entry.dev_f1, entry.dev_loss, epoch, params.clone()));
        }
        log.push(entry);
        if epoch - last_improvement >= config.patience {
            break;
        }
    }
    let (_, _, best_epoch, params) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        params,
        best_epoch,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::params::{ConditionalReadout, ModelDims, Variant};
    use crate::nn::rng::SeededRng;

    fn token(rng: &mut SeededRng, dim: usize, cue: f64) -> Vec<f64> {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.uniform_open(0.3)).collect();
        v[0] = cue;
        v
    }

    fn corpus(n: usize, seed: u64) -> Vec<EncodedInstance> {
        let mut rng = RngSeed(seed).rng();
        (0..n)
            .map(|i| {
                let label = if i % 2 == 0 { Label::S } else { Label::NS };
                let cue = if label == Label::S { 1.0 } else { -1.0 };
                EncodedInstance {
                    context: vec![(0..2).map(|_| token(&mut rng, 4, 0.0)).collect()],
                    reply: vec![(0..3).map(|_| token(&mut rng, 4, cue)).collect()],
                    label,
                }
            })
            .collect()
    }

    fn config() -> TrainConfig {
        TrainConfig {
            epochs: 40,
            patience: 40,
            batch_size: 4,
            lr: 0.5,
            l2: 0.0,
            dropout: 0.0,
            seed: RngSeed(3),
        }
    }

    #[test]
    fn learns_a_separable_cue() {
        let data = corpus(20, 1);
        let init = ModelParams::init(
            Variant::Concat,
            ModelDims::new(4, 5),
            ConditionalReadout::Both,
            &mut RngSeed(2).rng(),
        );
        let out = train(init, &data, &data, &config()).unwrap();
        let (_, m) = evaluate(&out.params, &data).unwrap();
        assert_eq!(m.accuracy(), 100.0);
        let best = out.log[out.best_epoch - 1].dev_f1;
        assert!(best >= out.log[0].dev_f1);
        assert!(out.log.iter().all(|e| e.dev_f1 <= best));
    }

    #[test]
    fn same_seed_same_parameters() {
        let data = corpus(12, 4);
        let mut cfg = config();
        cfg.dropout = 0.5;
        cfg.epochs = 5;
        let run = || {
            let init = ModelParams::init(
                Variant::SentAttn,
                ModelDims::new(4, 3),
                ConditionalReadout::Both,
                &mut RngSeed(5).rng(),
            );
            train(init, &data, &data, &cfg).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.params, b.params);
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn early_stopping_honours_patience() {
        let data = corpus(8, 6);
        let mut cfg = config();
        cfg.lr = 1e-9;
        cfg.patience = 2;
        let init = ModelParams::zeros(Variant::ReplyOnly, ModelDims::new(4, 3), ConditionalReadout::Both);
        let out = train(init, &data, &data, &cfg).unwrap();
        assert_eq!(out.best_epoch, 1);
        assert_eq!(out.log.len(), 3);
    }

    #[test]
    fn divergence_reports_coordinates() {
        let data = corpus(8, 7);
        let mut cfg = config();
        cfg.lr = f64::MAX;
        let init = ModelParams::init(
            Variant::ReplyOnly,
            ModelDims::new(4, 3),
            ConditionalReadout::Both,
            &mut RngSeed(8).rng(),
        );
        let err = train(init, &data, &data, &cfg).unwrap_err().to_string();
        assert!(err.contains("epoch 1,"), "{err}");
    }

    #[test]
    fn invalid_config_names_field() {
        let mut cfg = TrainConfig::default();
        cfg.dropout = 1.0;
        assert!(cfg.validate().unwrap_err().to_string().contains("dropout"));
        assert_eq!(TrainConfig::default().batch_size, 16);
    }
}
