//! Line-delimited JSON corpus files and stratified splitting.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

use super::{context_sentence_count, ConversationInstance, Label, Platform, TextResources};
use crate::error::{Error, Result};
use crate::nn::rng::RngSeed;

/// Minimum instances per class for a stratified split.
pub const MIN_PER_CLASS: usize = 10;
/// Train/dev/test shares in tenths.
const SPLIT_TENTHS: [usize; 3] = [8, 1, 1];

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<ConversationInstance>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, TextResources::shared())
}

/// Parses and validates one record per non-blank line.
pub fn parse_corpus(text: &str, res: &TextResources) -> Result<Vec<ConversationInstance>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let inst = parse_record(line, line_no)?;
        validate(&inst, line_no, res)?;
        if !seen.insert(inst.id.clone()) {
            return Err(Error::Validation {
                line: line_no,
                message: format!("duplicate id {:?}", inst.id),
            });
        }
        out.push(inst);
    }
    Ok(out)
}

fn parse_record(line: &str, line_no: usize) -> Result<ConversationInstance> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| Error::parse(line_no, None, format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::parse(line_no, None, "record is not an object"))?;

    let field = |name: &str| {
        obj.get(name)
            .ok_or_else(|| Error::parse(line_no, Some(name), "missing field"))
    };
    let string = |name: &str| -> Result<String> {
        field(name)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| Error::parse(line_no, Some(name), "expected a string"))
    };

    let id = string("id")?;
    let platform: Platform = string("platform")?
        .parse()
        .map_err(|e: Error| Error::parse(line_no, Some("platform"), e.to_string()))?;
    let context = field("context")?
        .as_array()
        .ok_or_else(|| Error::parse(line_no, Some("context"), "expected an array of strings"))?
        .iter()
        .map(|v| {
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| Error::parse(line_no, Some("context"), "expected an array of strings"))
        })
        .collect::<Result<Vec<_>>>()?;
    let reply = string("reply")?;
    let label: Label = string("label")?
        .parse()
        .map_err(|e: Error| Error::parse(line_no, Some("label"), e.to_string()))?;
    let human_triggers = match obj.get("human_triggers") {
        None | Some(Value::Null) => None,
        Some(v) => Some(
            v.as_array()
                .ok_or_else(|| Error::parse(line_no, Some("human_triggers"), "expected an array of integers"))?
                .iter()
                .map(|x| {
                    x.as_u64()
                        .map(|n| n as usize)
                        .ok_or_else(|| Error::parse(line_no, Some("human_triggers"), "expected non-negative integers"))
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    Ok(ConversationInstance {
        id,
        platform,
        context,
        reply,
        label,
        human_triggers,
    })
}

fn validate(inst: &ConversationInstance, line: usize, res: &TextResources) -> Result<()> {
    if inst.reply.trim().is_empty() {
        return Err(Error::Validation {
            line,
            message: format!("instance {:?} has an empty reply", inst.id),
        });
    }
    if let Some(triggers) = &inst.human_triggers {
        let n = context_sentence_count(inst, res);
        if let Some(bad) = triggers.iter().find(|&&t| t >= n) {
            return Err(Error::Validation {
                line,
                message: format!("human_triggers index {bad} out of range: context has {n} sentences"),
            });
        }
    }
    Ok(())
}

pub fn write_corpus(path: impl AsRef<Path>, instances: &[ConversationInstance]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    for inst in instances {
        serde_json::to_writer(&mut buf, inst).expect("instances serialize");
        buf.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<ConversationInstance>,
    pub dev: Vec<ConversationInstance>,
    pub test: Vec<ConversationInstance>,
}

/// Part sizes for `n` items under 80/10/10 with largest-remainder rounding.
/// Remainder ties go to the earlier part.
pub fn split_sizes(n: usize) -> [usize; 3] {
    let mut sizes = SPLIT_TENTHS.map(|w| n * w / 10);
    let rem = SPLIT_TENTHS.map(|w| n * w % 10);
    let mut remaining = n - sizes.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| rem[b].cmp(&rem[a]).then(a.cmp(&b)));
    for &k in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        sizes[k] += 1;
        remaining -= 1;
    }
    sizes
}

/// Per-class seeded shuffle followed by an 80/10/10 cut. Each part keeps
/// the input order.
pub fn stratified_split(instances: &[ConversationInstance], seed: RngSeed) -> Result<Split> {
    let mut by_class: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    for l in Label::ALL {
        by_class.insert(l, Vec::new());
    }
    for (i, inst) in instances.iter().enumerate() {
        by_class.get_mut(&inst.label).expect("all labels present").push(i);
    }
    let mut parts: [Vec<usize>; 3] = Default::default();
    for (label, mut idx) in by_class {
        if idx.len() < MIN_PER_CLASS {
            return Err(Error::config(
                "corpus",
                format!(
                    "class {label} has {} instances, at least {MIN_PER_CLASS} needed",
                    idx.len()
                ),
            ));
        }
        seed.derive(label.index() as u64 + 1).rng().shuffle(&mut idx);
        let [a, b, _] = split_sizes(idx.len());
        parts[0].extend_from_slice(&idx[..a]);
        parts[1].extend_from_slice(&idx[a..a + b]);
        parts[2].extend_from_slice(&idx[a + b..]);
    }
    let [train, dev, test] = parts.map(|mut p| {
        p.sort_unstable();
        p.into_iter().map(|i| instances[i].clone()).collect()
    });
    Ok(Split { train, dev, test })
}
