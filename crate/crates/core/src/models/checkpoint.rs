//! Text checkpoint format.
//!
//! ```text
//! sarcasm-checkpoint 1
//! variant sent_attn
//! readout both
//! dims <embed> <hidden> <att>
//! tensor <name> <len>
//! <len whitespace-separated values>
//! ...
//! end
//! ```
//!
//! Tensors appear in the fixed order of [`Parameters::tensors`]. Values are
//! written in shortest round-trip form, so loading is exact.

use std::fmt::Write as _;
use std::path::Path;

use super::params::{ConditionalReadout, ModelDims, ModelParams, Variant};
use crate::error::{Error, Result};
use crate::nn::optim::Parameters;

pub const CHECKPOINT_MAGIC: &str = "sarcasm-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn render_checkpoint(params: &ModelParams) -> String {
    let d = params.dims();
    let mut s = String::new();
    let _ = writeln!(s, "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}");
    let _ = writeln!(s, "variant {}", params.variant);
    let _ = writeln!(s, "readout {}", params.readout.as_str());
    let _ = writeln!(s, "dims {} {} {}", d.embed_dim, d.hidden_dim, d.att_dim);
    for (name, values) in params.tensors() {
        let _ = writeln!(s, "tensor {name} {}", values.len());
        let line: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s.push_str("end\n");
    s
}

pub fn save_checkpoint(params: &ModelParams, path: &Path) -> Result<()> {
    std::fs::write(path, render_checkpoint(params)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l.trim_end()))
            .ok_or_else(|| Error::parse(0, Some(what), "checkpoint ends early"))
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (n, line) = self.next(key)?;
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .map(|r| (n, r))
            .ok_or_else(|| Error::parse(n, Some(key), format!("expected `{key} ...`, found {line:?}")))
    }
}

fn num<T: std::str::FromStr>(n: usize, field: &str, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(n, Some(field), format!("bad number {s:?}")))
}

pub fn parse_checkpoint(text: &str) -> Result<ModelParams> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (n, version) = lines.keyed(CHECKPOINT_MAGIC)?;
    let version: u32 = num(n, "version", version)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::parse(
            n,
            Some("version"),
            format!("checkpoint format version {version}, this build reads version {CHECKPOINT_VERSION}"),
        ));
    }
    let (n, v) = lines.keyed("variant")?;
    let variant: Variant = v
        .parse()
        .map_err(|_| Error::parse(n, Some("variant"), format!("unknown variant {v:?}")))?;
    let (n, r) = lines.keyed("readout")?;
    let readout: ConditionalReadout = r
        .parse()
        .map_err(|_| Error::parse(n, Some("readout"), format!("unknown readout {r:?}")))?;
    let (n, d) = lines.keyed("dims")?;
    let d: Vec<usize> = d.split_whitespace().map(|x| num(n, "dims", x)).collect::<Result<_>>()?;
    let [embed_dim, hidden_dim, att_dim] = d[..] else {
        return Err(Error::parse(n, Some("dims"), "expected three dimensions"));
    };
    let mut params = ModelParams::zeros(
        variant,
        ModelDims {
            embed_dim,
            hidden_dim,
            att_dim,
        },
        readout,
    );
    for (name, slot) in params.tensors_mut() {
        let (n, header) = lines.keyed("tensor")?;
        let mut parts = header.split_whitespace();
        let (got, len) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""));
        if got != name {
            return Err(Error::parse(
                n,
                Some("tensor"),
                format!("expected tensor {name}, found {got:?}"),
            ));
        }
        let len: usize = num(n, &name, len)?;
        if len != slot.len() {
            return Err(Error::shape(name, slot.len(), len));
        }
        let (n, values) = lines.next(&name)?;
        let values: Vec<f64> = values
            .split_whitespace()
            .map(|x| num(n, &name, x))
            .collect::<Result<_>>()?;
        if values.len() != len {
            return Err(Error::parse(
                n,
                Some(&name),
                format!("{len} values declared, {} found", values.len()),
            ));
        }
        slot.copy_from_slice(&values);
    }
    let (n, end) = lines.next("end")?;
    if end != "end" {
        return Err(Error::parse(n, None, format!("expected `end`, found {end:?}")));
    }
    if !params.all_finite() {
        return Err(Error::Numeric {
            location: "checkpoint".into(),
            message: "non-finite parameter".into(),
        });
    }
    params.validate()?;
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::rng::RngSeed;

    #[test]
    fn round_trip_is_exact() {
        for v in Variant::ALL {
            let p = ModelParams::init(v, ModelDims::new(5, 4), ConditionalReadout::Both, &mut RngSeed(9).rng());
            let text = render_checkpoint(&p);
            assert_eq!(parse_checkpoint(&text).unwrap(), p, "{v}");
        }
    }

    #[test]
    fn version_mismatch_fails_loudly() {
        let p = ModelParams::zeros(Variant::Concat, ModelDims::new(2, 2), ConditionalReadout::Both);
        let text = render_checkpoint(&p).replacen("sarcasm-checkpoint 1", "sarcasm-checkpoint 2", 1);
        let err = parse_checkpoint(&text).unwrap_err().to_string();
        assert!(err.contains("version 2"), "{err}");
    }

    #[test]
    fn truncated_file_is_rejected() {
        let p = ModelParams::zeros(Variant::WordAttn, ModelDims::new(2, 2), ConditionalReadout::Both);
        let text = render_checkpoint(&p);
        let cut: String = text.lines().take(7).collect::<Vec<_>>().join("\n");
        assert!(parse_checkpoint(&cut).is_err());
    }
}
