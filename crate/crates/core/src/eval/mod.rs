//! Precision/recall/F1, attention overlap and heatmap export.

mod heatmap;
mod report;

pub use heatmap::{export_heatmap, render_heatmap, HeatmapText};
pub use report::{format_table, write_report, MetricsReport};

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};
use crate::models::AttentionRecord;

/// Scores for one class, as percentages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    /// Set when `tp + fp == 0`; precision is then reported as 0.
    pub precision_undefined: bool,
    /// Set when `tp + fn == 0`; recall is then reported as 0.
    pub recall_undefined: bool,
}

impl ClassScores {
    fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                (0.0, true)
            } else {
                (100.0 * num as f64 / den as f64, false)
            }
        };
        let (precision, precision_undefined) = ratio(tp, tp + fp);
        let (recall, recall_undefined) = ratio(tp, tp + fn_);
        Self {
            precision,
            recall,
            f1: f1_from_pr(precision, recall),
            tp,
            fp,
            fn_,
            tn,
            precision_undefined,
            recall_undefined,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    #[serde(rename = "S")]
    pub s: ClassScores,
    #[serde(rename = "NS")]
    pub ns: ClassScores,
}

impl ClassMetrics {
    pub fn class(&self, label: Label) -> &ClassScores {
        match label {
            Label::S => &self.s,
            Label::NS => &self.ns,
        }
    }

    /// Unweighted mean of the two class F1 scores.
    pub fn macro_f1(&self) -> f64 {
        (self.s.f1 + self.ns.f1) / 2.0
    }

    /// Percentage of correct predictions.
    pub fn accuracy(&self) -> f64 {
        100.0 * (self.s.tp + self.ns.tp) as f64 / self.s.total() as f64
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_from_pr(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn prf1(gold: &[Label], predicted: &[Label]) -> Result<ClassMetrics> {
    if gold.len() != predicted.len() {
        return Err(Error::Domain(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            predicted.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::Domain("no labels to score".into()));
    }
    let scores = |class: Label| {
        let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
        for (&g, &p) in gold.iter().zip(predicted) {
            match (g == class, p == class) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        ClassScores::from_counts(tp, fp, fn_, tn)
    };
    Ok(ClassMetrics {
        s: scores(Label::S),
        ns: scores(Label::NS),
    })
}

/// Index of the largest weight; ties go to the lowest index.
pub fn argmax(weights: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &w) in weights.iter().enumerate() {
        if best.is_none_or(|b| w > weights[b]) {
            best = Some(i);
        }
    }
    best
}

/// Fraction of instances whose most-attended context sentence is among the
/// human-selected trigger sentences.
pub fn attention_overlap<'a, I>(records: I) -> Result<f64>
where
    I: IntoIterator<Item = (&'a AttentionRecord, &'a [usize])>,
{
    let mut total = 0usize;
    let mut hits = 0usize;
    for (i, (record, triggers)) in records.into_iter().enumerate() {
        let top = argmax(&record.context_weights)
            .ok_or_else(|| Error::Domain(format!("record {i} has no context weights")))?;
        if triggers.is_empty() {
            return Err(Error::Domain(format!("record {i} has no human triggers")));
        }
        total += 1;
        if triggers.contains(&top) {
            hits += 1;
        }
    }
    if total == 0 {
        return Err(Error::Domain("no attention records to score".into()));
    }
    Ok(hits as f64 / total as f64)
}
