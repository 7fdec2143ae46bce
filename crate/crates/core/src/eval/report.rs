use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ClassMetrics;
use crate::error::{Error, Result};

/// One line of the metrics report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub task: String,
    pub instances: usize,
    #[serde(flatten)]
    pub metrics: ClassMetrics,
}

impl MetricsReport {
    pub fn new(model: impl Into<String>, task: impl Into<String>, metrics: ClassMetrics) -> Self {
        Self {
            model: model.into(),
            task: task.into(),
            instances: metrics.s.total(),
            metrics,
        }
    }
}

/// Writes one JSON object per report, one per line.
pub fn write_report(path: &Path, reports: &[MetricsReport]) -> Result<()> {
    let mut out = Vec::new();
    for r in reports {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::Domain(format!("report serialization: {e}")))?;
        out.push(b'\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}

/// Plain-text table with P, R and F1 for each class, one row per model.
pub fn format_table(reports: &[MetricsReport]) -> String {
    let name_w = reports
        .iter()
        .map(|r| r.model.len() + r.task.len() + 3)
        .max()
        .unwrap_or(0)
        .max(6);
    let mut s = String::new();
    let _ = writeln!(s, "{:<name_w$}  {:^20}  {:^20}", "", "S", "NS");
    let _ = writeln!(
        s,
        "{:<name_w$}  {:>6} {:>6} {:>6}  {:>6} {:>6} {:>6}",
        "Models", "P", "R", "F1", "P", "R", "F1"
    );
    for r in reports {
        let (a, b) = (&r.metrics.s, &r.metrics.ns);
        let name = format!("{} ({})", r.model, r.task);
        let _ = writeln!(
            s,
            "{name:<name_w$}  {:>6.2} {:>6.2} {:>6.2}  {:>6.2} {:>6.2} {:>6.2}",
            a.precision, a.recall, a.f1, b.precision, b.recall, b.f1
        );
    }
    s
}
