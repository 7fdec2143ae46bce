use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::attention::AttentionParams;
use crate::error::{Error, Result};
use crate::nn::lstm::{LstmCellParams, INIT_RANGE};
use crate::nn::optim::Parameters;
use crate::nn::rng::SeededRng;
use crate::nn::tensor::Tensor2;

pub const NUM_CLASSES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// One LSTM over the reply tokens.
    ReplyOnly,
    /// Independent LSTMs over context and reply tokens, final states concatenated.
    Concat,
    /// Reply LSTM starts from the context LSTM's final cell state.
    Conditional,
    /// LSTMs over sentence averages with sentence-level attention per side.
    SentAttn,
    /// LSTMs over tokens with token-level attention per side.
    WordAttn,
    /// Word attention builds sentence vectors, then sentence attention.
    HierAttn,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::ReplyOnly,
        Variant::Concat,
        Variant::Conditional,
        Variant::SentAttn,
        Variant::WordAttn,
        Variant::HierAttn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::ReplyOnly => "reply_only",
            Variant::Concat => "concat",
            Variant::Conditional => "conditional",
            Variant::SentAttn => "sent_attn",
            Variant::WordAttn => "word_attn",
            Variant::HierAttn => "hier_attn",
        }
    }

    pub fn uses_context(self) -> bool {
        self != Variant::ReplyOnly
    }

    pub fn has_attention(self) -> bool {
        matches!(self, Variant::SentAttn | Variant::WordAttn | Variant::HierAttn)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::config("variant", format!("unknown variant {s:?}")))
    }
}

/// What the classifier reads in the conditional variant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionalReadout {
    /// `[h_c ; h_r]`, like every other two-input variant.
    #[default]
    Both,
    /// `h_r` only; the context reaches the output through the cell-state handoff.
    ReplyOnly,
}

impl ConditionalReadout {
    pub fn as_str(self) -> &'static str {
        match self {
            ConditionalReadout::Both => "both",
            ConditionalReadout::ReplyOnly => "reply_only",
        }
    }
}

impl FromStr for ConditionalReadout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(Self::Both),
            "reply_only" => Ok(Self::ReplyOnly),
            other => Err(Error::config(
                "conditional_readout",
                format!("unknown readout {other:?}"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelDims {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub att_dim: usize,
}

impl ModelDims {
    /// Attention width defaults to the hidden width.
    pub fn new(embed_dim: usize, hidden_dim: usize) -> Self {
        Self {
            embed_dim,
            hidden_dim,
            att_dim: hidden_dim,
        }
    }
}

/// Every trainable tensor of one model. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub variant: Variant,
    pub readout: ConditionalReadout,
    pub lstm_c: Option<LstmCellParams>,
    pub lstm_r: LstmCellParams,
    /// Attention over the context encoder's hidden states.
    pub attn_c: Option<AttentionParams>,
    pub attn_r: Option<AttentionParams>,
    /// Word-level attention over embeddings, hierarchical variant only.
    pub word_c: Option<AttentionParams>,
    pub word_r: Option<AttentionParams>,
    pub w_out: Tensor2,
    pub b_out: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(variant: Variant, dims: ModelDims, readout: ConditionalReadout) -> Self {
        let ModelDims {
            embed_dim: e,
            hidden_dim: h,
            att_dim: a,
        } = dims;
        let two_sided = variant.uses_context();
        let sent_level = variant.has_attention();
        let hier = variant == Variant::HierAttn;
        let out_dim = match (variant, readout) {
            (Variant::ReplyOnly, _) | (Variant::Conditional, ConditionalReadout::ReplyOnly) => h,
            _ => 2 * h,
        };
        Self {
            variant,
            readout,
            lstm_c: two_sided.then(|| LstmCellParams::zeros(e, h)),
            lstm_r: LstmCellParams::zeros(e, h),
            attn_c: sent_level.then(|| AttentionParams::zeros(a, h)),
            attn_r: sent_level.then(|| AttentionParams::zeros(a, h)),
            word_c: hier.then(|| AttentionParams::zeros(a, e)),
            word_r: hier.then(|| AttentionParams::zeros(a, e)),
            w_out: Tensor2::zeros(NUM_CLASSES, out_dim),
            b_out: vec![0.0; NUM_CLASSES],
        }
    }

    /// Default initialization: uniform(−0.05, 0.05) weights, forget bias 1.
    pub fn init(variant: Variant, dims: ModelDims, readout: ConditionalReadout, rng: &mut SeededRng) -> Self {
        Self::init_scaled(variant, dims, readout, INIT_RANGE, rng)
    }

    pub fn init_scaled(
        variant: Variant,
        dims: ModelDims,
        readout: ConditionalReadout,
        range: f64,
        rng: &mut SeededRng,
    ) -> Self {
        let mut p = Self::zeros(variant, dims, readout);
        let (e, h, a) = (dims.embed_dim, dims.hidden_dim, dims.att_dim);
        if p.lstm_c.is_some() {
            p.lstm_c = Some(LstmCellParams::init_scaled(e, h, range, rng));
        }
        p.lstm_r = LstmCellParams::init_scaled(e, h, range, rng);
        for slot in [&mut p.attn_c, &mut p.attn_r] {
            if slot.is_some() {
                *slot = Some(AttentionParams::init(a, h, range, rng));
            }
        }
        for slot in [&mut p.word_c, &mut p.word_r] {
            if slot.is_some() {
                *slot = Some(AttentionParams::init(a, e, range, rng));
            }
        }
        p.w_out.data_mut().iter_mut().for_each(|v| *v = rng.uniform_open(range));
        p
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            embed_dim: self.lstm_r.input_dim(),
            hidden_dim: self.lstm_r.hidden_dim(),
            att_dim: self
                .attn_r
                .as_ref()
                .map_or(self.lstm_r.hidden_dim(), AttentionParams::att_dim),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut g = self.clone();
        g.zero();
        g
    }

    /// Checks presence and shape of every tensor against the variant.
    pub fn validate(&self) -> Result<()> {
        let expected = Self::zeros(self.variant, self.dims(), self.readout);
        let have = self.tensors();
        let want = expected.tensors();
        if have.len() != want.len() {
            return Err(Error::shape(
                format!("{} parameter set", self.variant),
                format!("{} tensors", want.len()),
                format!("{} tensors", have.len()),
            ));
        }
        for ((hn, h), (wn, w)) in have.iter().zip(&want) {
            if hn != wn || h.len() != w.len() {
                return Err(Error::shape(wn.clone(), w.len(), format!("{hn}[{}]", h.len())));
            }
        }
        if let Some(c) = &self.lstm_c {
            c.validate()?;
        }
        self.lstm_r.validate()?;
        for a in [&self.attn_c, &self.attn_r, &self.word_c, &self.word_r]
            .into_iter()
            .flatten()
        {
            a.validate()?;
        }
        Ok(())
    }
}

fn prefixed<'a>(prefix: &str, items: Vec<(String, &'a [f64])>) -> impl Iterator<Item = (String, &'a [f64])> + 'a {
    let prefix = prefix.to_string();
    items.into_iter().map(move |(n, t)| (format!("{prefix}.{n}"), t))
}

fn prefixed_mut<'a>(
    prefix: &str,
    items: Vec<(String, &'a mut [f64])>,
) -> impl Iterator<Item = (String, &'a mut [f64])> + 'a {
    let prefix = prefix.to_string();
    items.into_iter().map(move |(n, t)| (format!("{prefix}.{n}"), t))
}

impl Parameters for ModelParams {
    fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::new();
        if let Some(c) = &self.lstm_c {
            out.extend(prefixed("lstm_c", c.tensors()));
        }
        out.extend(prefixed("lstm_r", self.lstm_r.tensors()));
        for (name, slot) in [
            ("attn_c", &self.attn_c),
            ("attn_r", &self.attn_r),
            ("word_c", &self.word_c),
            ("word_r", &self.word_r),
        ] {
            if let Some(a) = slot {
                out.extend(prefixed(name, a.tensors()));
            }
        }
        out.push(("out.W".into(), self.w_out.data()));
        out.push(("out.b".into(), self.b_out.as_slice()));
        out
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out = Vec::new();
        if let Some(c) = &mut self.lstm_c {
            out.extend(prefixed_mut("lstm_c", c.tensors_mut()));
        }
        out.extend(prefixed_mut("lstm_r", self.lstm_r.tensors_mut()));
        for (name, slot) in [
            ("attn_c", &mut self.attn_c),
            ("attn_r", &mut self.attn_r),
            ("word_c", &mut self.word_c),
            ("word_r", &mut self.word_r),
        ] {
            if let Some(a) = slot {
                out.extend(prefixed_mut(name, a.tensors_mut()));
            }
        }
        out.push(("out.W".into(), self.w_out.data_mut()));
        out.push(("out.b".into(), self.b_out.as_mut_slice()));
        out
    }
}
