use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::models::AttentionRecord;

const WIDTH: usize = 720;
const ROW_HEIGHT: usize = 28;
const HEADER_HEIGHT: usize = 22;
const WEIGHT_COL: usize = 70;
const MARGIN: usize = 8;
const FILL: &str = "#b2182b";
const MAX_CHARS: usize = 90;

/// The units an [`AttentionRecord`] weighs: sentences, or tokens for
/// word-level records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HeatmapText {
    pub context: Vec<String>,
    pub reply: Vec<String>,
    /// Context units chosen by annotators, drawn outlined.
    pub human_triggers: Option<Vec<usize>>,
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if c.is_control() => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

fn clip(s: &str) -> String {
    if s.chars().count() <= MAX_CHARS {
        s.to_string()
    } else {
        let mut t: String = s.chars().take(MAX_CHARS - 3).collect();
        t.push_str("...");
        t
    }
}

fn check(side: &str, units: &[String], weights: &[f64]) -> Result<()> {
    if units.len() != weights.len() {
        return Err(Error::Domain(format!(
            "{side}: {} weights for {} units",
            weights.len(),
            units.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
        return Err(Error::Domain(format!("{side}: weight {w} outside [0, 1]")));
    }
    Ok(())
}

fn section(svg: &mut String, y: &mut usize, title: &str, units: &[String], weights: &[f64], triggers: &[usize]) {
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN}" y="{}" font-weight="bold">{title}</text>"#,
        *y + HEADER_HEIGHT - 6
    );
    *y += HEADER_HEIGHT;
    for (i, (unit, &w)) in units.iter().zip(weights).enumerate() {
        let outline = if triggers.contains(&i) {
            r##" stroke="#000000" stroke-width="2""##
        } else {
            ""
        };
        let _ = writeln!(
            svg,
            r#"<rect x="{MARGIN}" y="{y}" width="{}" height="{}" fill="{FILL}" fill-opacity="{w:.3}"{outline}/>"#,
            WIDTH - 2 * MARGIN,
            ROW_HEIGHT - 2,
            y = *y
        );
        let base = *y + ROW_HEIGHT / 2 + 3;
        let _ = writeln!(svg, r#"<text x="{}" y="{base}">{w:.3}</text>"#, MARGIN + 6);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{base}">{}</text>"#,
            MARGIN + WEIGHT_COL,
            escape(&clip(unit))
        );
        *y += ROW_HEIGHT;
    }
}

/// Renders a standalone SVG document: one row per unit, fill opacity equal
/// to the unit's weight.
pub fn render_heatmap(text: &HeatmapText, record: &AttentionRecord) -> Result<String> {
    check("context", &text.context, &record.context_weights)?;
    check("reply", &text.reply, &record.reply_weights)?;
    let triggers = text.human_triggers.as_deref().unwrap_or(&[]);
    if let Some(t) = triggers.iter().find(|&&t| t >= text.context.len()) {
        return Err(Error::Domain(format!(
            "trigger {t} beyond {} context units",
            text.context.len()
        )));
    }
    let sections = usize::from(!text.context.is_empty()) + 1;
    let height = 2 * MARGIN + sections * HEADER_HEIGHT + (text.context.len() + text.reply.len()) * ROW_HEIGHT;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" font-family="monospace" font-size="12">"#
    );
    let _ = writeln!(svg, r##"<rect width="{WIDTH}" height="{height}" fill="#ffffff"/>"##);
    let mut y = MARGIN;
    if !text.context.is_empty() {
        section(
            &mut svg,
            &mut y,
            "context",
            &text.context,
            &record.context_weights,
            triggers,
        );
    }
    section(&mut svg, &mut y, "reply", &text.reply, &record.reply_weights, &[]);
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn export_heatmap(text: &HeatmapText, record: &AttentionRecord, path: &Path) -> Result<()> {
    let svg = render_heatmap(text, record)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
