//! Forward and backward passes for every variant.
//!
//! Each side (context or reply) is encoded into one vector; the classifier
//! is a softmax layer over the concatenated side vectors. Gradients are
//! derived by hand and checked against finite differences in the tests.

use serde::{Deserialize, Serialize};

use super::attention::{AttendTrace, AttentionParams};
use super::params::{ConditionalReadout, ModelParams, Variant};
use crate::data::{Label, SegmentedInstance};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::nn::gradcheck::{finite_diff_grad, max_relative_error};
use crate::nn::lstm::{LstmCellParams, LstmState, LstmTrace};
use crate::nn::ops::{cross_entropy, softmax_unchecked};

/// An instance with every token replaced by its (frozen) embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedInstance {
    /// Sentences of token vectors, oldest first.
    pub context: Vec<Vec<Vec<f64>>>,
    pub reply: Vec<Vec<Vec<f64>>>,
    pub label: Label,
}

impl EncodedInstance {
    pub fn from_segmented(seg: &SegmentedInstance, table: &EmbeddingTable) -> Self {
        let embed = |sents: &[crate::data::Sentence]| {
            sents
                .iter()
                .map(|s| s.tokens.iter().map(|t| table.lookup(t)).collect())
                .collect()
        };
        Self {
            context: embed(&seg.context_sentences),
            reply: embed(&seg.reply_sentences),
            label: seg.label,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionLevel {
    /// One weight per sentence.
    Sentence,
    /// One weight per token of the flattened side.
    Word,
}

/// Normalized attention weights of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionRecord {
    pub level: AttentionLevel,
    pub context_weights: Vec<f64>,
    pub reply_weights: Vec<f64>,
    /// Per-sentence word weights (hierarchical variant).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_word_weights: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reply_word_weights: Option<Vec<Vec<f64>>>,
}

impl AttentionRecord {
    pub fn all_weight_vectors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![&self.context_weights, &self.reply_weights];
        for words in [&self.context_word_weights, &self.reply_word_weights]
            .into_iter()
            .flatten()
        {
            out.extend(words.iter().map(Vec::as_slice));
        }
        out
    }
}

#[derive(Debug, Clone)]
enum SideTrace {
    /// Final hidden state of an LSTM over tokens.
    Token { lstm: LstmTrace },
    /// Attention over LSTM states; inputs are sentence averages or tokens.
    Pooled { lstm: LstmTrace, attn: AttendTrace },
    /// Word attention per sentence, then LSTM and sentence attention.
    Hier {
        words: Vec<AttendTrace>,
        lstm: LstmTrace,
        attn: AttendTrace,
    },
}

impl SideTrace {
    fn repr(&self) -> &[f64] {
        match self {
            SideTrace::Token { lstm } => &lstm.last.h,
            SideTrace::Pooled { attn, .. } | SideTrace::Hier { attn, .. } => &attn.pooled,
        }
    }

    fn last_state(&self) -> &LstmState {
        match self {
            SideTrace::Token { lstm } | SideTrace::Pooled { lstm, .. } | SideTrace::Hier { lstm, .. } => &lstm.last,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SideKind {
    Token,
    SentAvg,
    WordAttn,
    Hier,
}

fn side_kind(variant: Variant) -> SideKind {
    match variant {
        Variant::ReplyOnly | Variant::Concat | Variant::Conditional => SideKind::Token,
        Variant::SentAttn => SideKind::SentAvg,
        Variant::WordAttn => SideKind::WordAttn,
        Variant::HierAttn => SideKind::Hier,
    }
}

struct SideParams<'a> {
    lstm: &'a LstmCellParams,
    attn: Option<&'a AttentionParams>,
    words: Option<&'a AttentionParams>,
}

struct SideGrads<'a> {
    lstm: &'a mut LstmCellParams,
    attn: Option<&'a mut AttentionParams>,
    words: Option<&'a mut AttentionParams>,
}

fn mean(vectors: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for v in vectors {
        for (o, x) in out.iter_mut().zip(v) {
            *o += x;
        }
    }
    let n = vectors.len() as f64;
    out.iter_mut().for_each(|o| *o /= n);
    out
}

fn side_forward(
    kind: SideKind,
    side: &str,
    sentences: &[Vec<Vec<f64>>],
    p: &SideParams,
    init: &LstmState,
) -> Result<SideTrace> {
    let sentences: Vec<&Vec<Vec<f64>>> = sentences.iter().filter(|s| !s.is_empty()).collect();
    if sentences.is_empty() {
        return Err(Error::Domain(format!("{side} has no tokens")));
    }
    let embed_dim = p.lstm.input_dim();
    fn need<'p>(side: &str, a: Option<&'p AttentionParams>) -> Result<&'p AttentionParams> {
        a.ok_or_else(|| Error::config("variant", format!("{side} attention parameters missing")))
    }
    Ok(match kind {
        SideKind::Token => {
            let tokens: Vec<Vec<f64>> = sentences.into_iter().flatten().cloned().collect();
            SideTrace::Token {
                lstm: p.lstm.forward(&tokens, init)?,
            }
        }
        SideKind::WordAttn => {
            let tokens: Vec<Vec<f64>> = sentences.into_iter().flatten().cloned().collect();
            let lstm = p.lstm.forward(&tokens, init)?;
            let attn = need(side, p.attn)?.forward(&lstm.hidden)?;
            SideTrace::Pooled { lstm, attn }
        }
        SideKind::SentAvg => {
            let avgs: Vec<Vec<f64>> = sentences.iter().map(|s| mean(s, embed_dim)).collect();
            let lstm = p.lstm.forward(&avgs, init)?;
            let attn = need(side, p.attn)?.forward(&lstm.hidden)?;
            SideTrace::Pooled { lstm, attn }
        }
        SideKind::Hier => {
            let word_attn = need(side, p.words)?;
            let words = sentences
                .iter()
                .map(|s| word_attn.forward(s))
                .collect::<Result<Vec<_>>>()?;
            let sent_vecs: Vec<Vec<f64>> = words.iter().map(|w| w.pooled.clone()).collect();
            let lstm = p.lstm.forward(&sent_vecs, init)?;
            let attn = need(side, p.attn)?.forward(&lstm.hidden)?;
            SideTrace::Hier { words, lstm, attn }
        }
    })
}

/// Returns `(dh0, dc0)`, the gradient on the side's initial state.
fn side_backward(
    trace: &SideTrace,
    p: &SideParams,
    g: SideGrads,
    d_repr: &[f64],
    dc_last: Option<&[f64]>,
) -> (Vec<f64>, Vec<f64>) {
    let run =
        |lstm: &LstmTrace, dh: Vec<Vec<f64>>, g_lstm: &mut LstmCellParams| p.lstm.backward(lstm, &dh, dc_last, g_lstm);
    match trace {
        SideTrace::Token { lstm } => {
            let mut dh = vec![vec![0.0; p.lstm.hidden_dim()]; lstm.hidden.len()];
            *dh.last_mut().expect("non-empty side") = d_repr.to_vec();
            let out = run(lstm, dh, g.lstm);
            (out.dh0, out.dc0)
        }
        SideTrace::Pooled { lstm, attn } => {
            let attn_p = p.attn.expect("pooled side has attention");
            let dh = attn_p.backward(attn, d_repr, g.attn.expect("attention grads"));
            let out = run(lstm, dh, g.lstm);
            (out.dh0, out.dc0)
        }
        SideTrace::Hier { words, lstm, attn } => {
            let attn_p = p.attn.expect("hier side has attention");
            let word_p = p.words.expect("hier side has word attention");
            let dh = attn_p.backward(attn, d_repr, g.attn.expect("attention grads"));
            let out = run(lstm, dh, g.lstm);
            let g_words = g.words.expect("word attention grads");
            for (w, dx) in words.iter().zip(&out.dx) {
                // embeddings are frozen; their gradient is dropped
                let _ = word_p.backward(w, dx, g_words);
            }
            (out.dh0, out.dc0)
        }
    }
}

/// Everything the backward pass and the caller need from one forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    context: Option<SideTrace>,
    reply: SideTrace,
    /// Classifier input after dropout.
    features: Vec<f64>,
    mask: Option<Vec<f64>>,
    pub logits: Vec<f64>,
    /// Class probabilities ordered `[S, NS]`.
    pub probs: Vec<f64>,
    pub attention: Option<AttentionRecord>,
}

fn context_params(params: &ModelParams) -> Result<SideParams<'_>> {
    Ok(SideParams {
        lstm: params
            .lstm_c
            .as_ref()
            .ok_or_else(|| Error::config("variant", "context LSTM parameters missing"))?,
        attn: params.attn_c.as_ref(),
        words: params.word_c.as_ref(),
    })
}

fn reply_params(params: &ModelParams) -> SideParams<'_> {
    SideParams {
        lstm: &params.lstm_r,
        attn: params.attn_r.as_ref(),
        words: params.word_r.as_ref(),
    }
}

/// Length of the classifier input for these parameters.
pub fn classifier_width(params: &ModelParams) -> usize {
    params.w_out.cols()
}

/// Runs the model. `mask` is an inverted-dropout mask over the classifier
/// input, `None` at inference.
pub fn forward(params: &ModelParams, inst: &EncodedInstance, mask: Option<&[f64]>) -> Result<Forward> {
    let variant = params.variant;
    let kind = side_kind(variant);
    let hidden = params.lstm_r.hidden_dim();
    let zero = LstmState::zeros(hidden);

    let context = if variant.uses_context() {
        if inst.context.iter().all(Vec::is_empty) {
            let hint = if variant == Variant::ReplyOnly {
                ""
            } else {
                "; use the reply_only variant for reply-only data"
            };
            return Err(Error::Domain(format!("{variant} needs a non-empty context{hint}")));
        }
        let cp = context_params(params)?;
        if variant == Variant::Conditional && cp.lstm.hidden_dim() != hidden {
            return Err(Error::config(
                "hidden_dim",
                format!(
                    "conditional encoding needs equal context/reply widths, got {} and {hidden}",
                    cp.lstm.hidden_dim()
                ),
            ));
        }
        Some(side_forward(
            kind,
            "context",
            &inst.context,
            &cp,
            &LstmState::zeros(cp.lstm.hidden_dim()),
        )?)
    } else {
        None
    };

    let reply_init = match (&context, variant) {
        (Some(c), Variant::Conditional) => LstmState {
            h: vec![0.0; hidden],
            c: c.last_state().c.clone(),
        },
        _ => zero,
    };
    let reply = side_forward(kind, "reply", &inst.reply, &reply_params(params), &reply_init)?;

    let mut features = Vec::with_capacity(params.w_out.cols());
    let reads_context = !(variant == Variant::Conditional && params.readout == ConditionalReadout::ReplyOnly);
    if let (Some(c), true) = (&context, reads_context) {
        features.extend_from_slice(c.repr());
    }
    features.extend_from_slice(reply.repr());
    if features.len() != params.w_out.cols() {
        return Err(Error::shape("out.W", params.w_out.cols(), features.len()));
    }
    if let Some(m) = mask {
        if m.len() != features.len() {
            return Err(Error::shape("dropout mask", features.len(), m.len()));
        }
        features.iter_mut().zip(m).for_each(|(f, k)| *f *= k);
    }
    let mut logits = params.w_out.matvec_unchecked(&features);
    logits.iter_mut().zip(&params.b_out).for_each(|(l, b)| *l += b);
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::Numeric {
            location: "classifier logits".into(),
            message: format!("{logits:?}"),
        });
    }
    let probs = softmax_unchecked(&logits);

    let attention = variant
        .has_attention()
        .then(|| attention_record(context.as_ref(), &reply, variant));
    Ok(Forward {
        context,
        reply,
        features,
        mask: mask.map(<[f64]>::to_vec),
        logits,
        probs,
        attention,
    })
}

fn attention_record(context: Option<&SideTrace>, reply: &SideTrace, variant: Variant) -> AttentionRecord {
    let weights = |t: &SideTrace| match t {
        SideTrace::Pooled { attn, .. } | SideTrace::Hier { attn, .. } => attn.weights.clone(),
        SideTrace::Token { .. } => Vec::new(),
    };
    let words = |t: &SideTrace| match t {
        SideTrace::Hier { words, .. } => Some(words.iter().map(|w| w.weights.clone()).collect()),
        _ => None,
    };
    AttentionRecord {
        level: if variant == Variant::WordAttn {
            AttentionLevel::Word
        } else {
            AttentionLevel::Sentence
        },
        context_weights: context.map(weights).unwrap_or_default(),
        reply_weights: weights(reply),
        context_word_weights: context.and_then(words),
        reply_word_weights: words(reply),
    }
}

/// Cross-entropy loss of `fwd` against `label`.
pub fn loss(fwd: &Forward, label: Label) -> Result<f64> {
    cross_entropy(&fwd.probs, label.index())
}

/// Gradients of the cross-entropy loss for one forward pass.
pub fn backward(params: &ModelParams, fwd: &Forward, label: Label) -> ModelParams {
    let mut grads = params.zeros_like();
    backward_into(params, fwd, label, &mut grads);
    grads
}

/// Like [`backward`] but accumulates into an existing gradient buffer.
pub fn backward_into(params: &ModelParams, fwd: &Forward, label: Label, grads: &mut ModelParams) {
    let mut d_logits = fwd.probs.clone();
    d_logits[label.index()] -= 1.0;
    grads.w_out.add_outer(&d_logits, &fwd.features);
    for (g, d) in grads.b_out.iter_mut().zip(&d_logits) {
        *g += d;
    }
    let mut d_features = vec![0.0; fwd.features.len()];
    params.w_out.add_matvec_transposed(&d_logits, &mut d_features);
    if let Some(m) = &fwd.mask {
        d_features.iter_mut().zip(m).for_each(|(d, k)| *d *= k);
    }

    let hidden = params.lstm_r.hidden_dim();
    let reads_context = fwd.context.is_some()
        && !(params.variant == Variant::Conditional && params.readout == ConditionalReadout::ReplyOnly);
    let (d_context, d_reply) = if reads_context {
        let split = d_features.len() - hidden;
        (d_features[..split].to_vec(), d_features[split..].to_vec())
    } else {
        (vec![0.0; hidden], d_features)
    };

    let rp = reply_params(params);
    let (_, dc0_reply) = side_backward(
        &fwd.reply,
        &rp,
        SideGrads {
            lstm: &mut grads.lstm_r,
            attn: grads.attn_r.as_mut(),
            words: grads.word_r.as_mut(),
        },
        &d_reply,
        None,
    );

    if let Some(ctx) = &fwd.context {
        let cp = context_params(params).expect("context trace implies context params");
        let handoff = (params.variant == Variant::Conditional).then_some(dc0_reply.as_slice());
        side_backward(
            ctx,
            &cp,
            SideGrads {
                lstm: grads.lstm_c.as_mut().expect("context grads"),
                attn: grads.attn_c.as_mut(),
                words: grads.word_c.as_mut(),
            },
            &d_context,
            handoff,
        );
    }
}

/// Loss and gradients for one instance.
pub fn loss_and_grads(
    params: &ModelParams,
    inst: &EncodedInstance,
    mask: Option<&[f64]>,
) -> Result<(f64, ModelParams)> {
    let fwd = forward(params, inst, mask)?;
    let l = loss(&fwd, inst.label)?;
    Ok((l, backward(params, &fwd, inst.label)))
}

/// Per-tensor maximum relative error between the analytic gradient and
/// central finite differences with step `epsilon`, dropout off.
pub fn gradient_check(params: &ModelParams, inst: &EncodedInstance, epsilon: f64) -> Result<Vec<(String, f64)>> {
    let (_, analytic) = loss_and_grads(params, inst, None)?;
    let numeric = finite_diff_grad(
        |p: &ModelParams| {
            forward(p, inst, None)
                .and_then(|f| loss(&f, inst.label))
                .unwrap_or(f64::NAN)
        },
        params,
        epsilon,
    )?;
    Ok(max_relative_error(&analytic, &numeric))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    /// `[P(S), P(NS)]`.
    pub probs: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attention: Option<AttentionRecord>,
}

/// Label from class probabilities: S only when `P(S) > P(NS)`.
pub fn decide(probs: &[f64]) -> Label {
    if probs[Label::S.index()] > probs[Label::NS.index()] {
        Label::S
    } else {
        Label::NS
    }
}

/// Inference without dropout.
pub fn predict(params: &ModelParams, inst: &EncodedInstance) -> Result<Prediction> {
    let fwd = forward(params, inst, None)?;
    Ok(Prediction {
        label: decide(&fwd.probs),
        probs: [fwd.probs[0], fwd.probs[1]],
        attention: fwd.attention,
    })
}

fn require(params: &ModelParams, variant: Variant) -> Result<()> {
    if params.variant != variant {
        return Err(Error::Domain(format!(
            "parameters are for {}, not {variant}",
            params.variant
        )));
    }
    Ok(())
}

/// Class probabilities of the reply-only LSTM.
pub fn encode_reply_only(inst: &EncodedInstance, params: &ModelParams) -> Result<Vec<f64>> {
    require(params, Variant::ReplyOnly)?;
    Ok(forward(params, inst, None)?.probs)
}

pub fn encode_concat(inst: &EncodedInstance, params: &ModelParams) -> Result<Vec<f64>> {
    require(params, Variant::Concat)?;
    Ok(forward(params, inst, None)?.probs)
}

pub fn encode_conditional(inst: &EncodedInstance, params: &ModelParams) -> Result<Vec<f64>> {
    require(params, Variant::Conditional)?;
    Ok(forward(params, inst, None)?.probs)
}

fn with_attention(fwd: Forward) -> (Vec<f64>, AttentionRecord) {
    (fwd.probs, fwd.attention.expect("attention variant records weights"))
}

pub fn encode_sent_attn(inst: &EncodedInstance, params: &ModelParams) -> Result<(Vec<f64>, AttentionRecord)> {
    require(params, Variant::SentAttn)?;
    Ok(with_attention(forward(params, inst, None)?))
}

pub fn encode_word_attn(inst: &EncodedInstance, params: &ModelParams) -> Result<(Vec<f64>, AttentionRecord)> {
    require(params, Variant::WordAttn)?;
    Ok(with_attention(forward(params, inst, None)?))
}

pub fn encode_hier_attn(inst: &EncodedInstance, params: &ModelParams) -> Result<(Vec<f64>, AttentionRecord)> {
    require(params, Variant::HierAttn)?;
    Ok(with_attention(forward(params, inst, None)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::params::ModelDims;
    use crate::nn::optim::Parameters;
    use crate::nn::rng::{RngSeed, SeededRng};

    const E: usize = 4;
    const H: usize = 3;

    fn vecs(rng: &mut SeededRng, n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..E).map(|_| rng.uniform_open(1.0)).collect())
            .collect()
    }

    fn instance(seed: u64, sentence_lengths: &[usize], reply_lengths: &[usize], label: Label) -> EncodedInstance {
        let mut rng = RngSeed(seed).rng();
        EncodedInstance {
            context: sentence_lengths.iter().map(|&n| vecs(&mut rng, n)).collect(),
            reply: reply_lengths.iter().map(|&n| vecs(&mut rng, n)).collect(),
            label,
        }
    }

    fn params(v: Variant, seed: u64) -> ModelParams {
        ModelParams::init_scaled(
            v,
            ModelDims::new(E, H),
            ConditionalReadout::Both,
            0.5,
            &mut RngSeed(seed).rng(),
        )
    }

    #[test]
    fn zero_params_are_uniform() {
        let inst = instance(1, &[2, 3], &[2], Label::S);
        for v in Variant::ALL {
            let p = ModelParams::zeros(v, ModelDims::new(E, H), ConditionalReadout::Both);
            let probs = forward(&p, &inst, None).unwrap().probs;
            assert_eq!(probs, vec![0.5, 0.5], "{v}");
            let pred = predict(&p, &inst).unwrap();
            assert_eq!(pred.label, Label::NS);
            assert_eq!(pred.attention.is_some(), v.has_attention());
        }
    }

    #[test]
    fn same_instance_twice_is_identical() {
        let inst = instance(2, &[3], &[4], Label::NS);
        for v in Variant::ALL {
            let p = params(v, 3);
            assert_eq!(
                forward(&p, &inst, None).unwrap().probs,
                forward(&p, &inst, None).unwrap().probs
            );
        }
    }

    #[test]
    fn reply_only_matches_unrolled_steps() {
        let p = params(Variant::ReplyOnly, 4);
        let inst = instance(5, &[], &[2], Label::S);
        let mut s = LstmState::zeros(H);
        for x in &inst.reply[0] {
            s = p.lstm_r.step(x, &s).unwrap();
        }
        let logits: Vec<f64> = (0..2)
            .map(|k| p.b_out[k] + (0..H).map(|j| p.w_out.get(k, j) * s.h[j]).sum::<f64>())
            .collect();
        let z = logits[0].exp() + logits[1].exp();
        let probs = encode_reply_only(&inst, &p).unwrap();
        assert!((probs[0] - logits[0].exp() / z).abs() < 1e-15);
        assert!((probs[1] - logits[1].exp() / z).abs() < 1e-15);
    }

    #[test]
    fn concat_parameters_are_untied() {
        let p = params(Variant::Concat, 6);
        let inst = instance(7, &[3], &[3], Label::S);
        let swapped = EncodedInstance {
            context: inst.reply.clone(),
            reply: inst.context.clone(),
            label: inst.label,
        };
        assert_ne!(encode_concat(&inst, &p).unwrap(), encode_concat(&swapped, &p).unwrap());
    }

    #[test]
    fn concat_with_zero_context_encoder_reads_zero_block() {
        let mut p = params(Variant::Concat, 8);
        p.lstm_c.as_mut().unwrap().zero();
        let mut inst = instance(9, &[2], &[3], Label::S);
        inst.context = vec![vec![vec![0.0; E]; 2]];
        let fwd = forward(&p, &inst, None).unwrap();
        assert!(fwd.features[..H].iter().all(|&x| x == 0.0));
    }

    fn reply_block(p: &ModelParams) -> ModelParams {
        let mut r = ModelParams::zeros(Variant::ReplyOnly, p.dims(), ConditionalReadout::Both);
        r.lstm_r = p.lstm_r.clone();
        for k in 0..2 {
            for j in 0..H {
                r.w_out.set(k, j, p.w_out.get(k, H + j));
            }
        }
        r.b_out = p.b_out.clone();
        r
    }

    #[test]
    fn conditional_with_zero_context_state_reduces_to_reply_pathway() {
        let mut p = params(Variant::Conditional, 10);
        p.lstm_c.as_mut().unwrap().zero();
        let inst = instance(11, &[3, 2], &[4], Label::S);
        let cond = encode_conditional(&inst, &p).unwrap();
        let reply = encode_reply_only(&inst, &reply_block(&p)).unwrap();
        for (a, b) in cond.iter().zip(&reply) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn conditional_context_changes_output() {
        let mut p = params(Variant::Conditional, 12);
        p.readout = ConditionalReadout::ReplyOnly;
        p.w_out = crate::nn::tensor::Tensor2::from_fn(2, H, |i, j| 0.3 * (i as f64 + 1.0) - 0.2 * j as f64);
        let a = instance(13, &[3], &[3], Label::S);
        let mut b = a.clone();
        b.context = instance(14, &[3], &[1], Label::S).context;
        assert_ne!(encode_conditional(&a, &p).unwrap(), encode_conditional(&b, &p).unwrap());
    }

    #[test]
    fn conditional_reply_only_readout_trains_context_encoder() {
        let mut p = params(Variant::Conditional, 15);
        p.readout = ConditionalReadout::ReplyOnly;
        p.w_out = crate::nn::tensor::Tensor2::from_fn(2, H, |i, j| 0.4 - 0.3 * i as f64 + 0.1 * j as f64);
        let inst = instance(16, &[2, 2], &[3], Label::S);
        let (_, g) = loss_and_grads(&p, &inst, None).unwrap();
        let gc = g.lstm_c.as_ref().unwrap();
        assert!(gc.tensors().iter().any(|(_, t)| t.iter().any(|&x| x.abs() > 1e-8)));
        for (name, err) in gradient_check(&p, &inst, 1e-5).unwrap() {
            assert!(err < 1e-4, "{name}: {err}");
        }
    }

    #[test]
    fn conditional_width_mismatch_is_config_error() {
        let mut p = params(Variant::Conditional, 17);
        p.lstm_c = Some(LstmCellParams::zeros(E, H + 1));
        let err = forward(&p, &instance(18, &[2], &[2], Label::S), None).unwrap_err();
        assert!(matches!(err, Error::Config { .. }), "{err}");
    }

    #[test]
    fn empty_context_points_to_reply_only() {
        let inst = instance(19, &[], &[2], Label::S);
        for v in Variant::ALL.into_iter().filter(|v| v.uses_context()) {
            let err = forward(&params(v, 20), &inst, None).unwrap_err();
            assert!(err.to_string().contains("reply_only"), "{err}");
        }
        let empty_reply = instance(19, &[2], &[], Label::S);
        assert!(matches!(
            forward(&params(Variant::ReplyOnly, 20), &empty_reply, None),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn wrong_variant_is_rejected() {
        let inst = instance(21, &[2], &[2], Label::S);
        assert!(encode_concat(&inst, &params(Variant::SentAttn, 22)).is_err());
    }

    #[test]
    fn single_sentences_get_full_weight() {
        let inst = instance(23, &[3], &[2], Label::S);
        let (_, rec) = encode_sent_attn(&inst, &params(Variant::SentAttn, 24)).unwrap();
        assert_eq!((rec.context_weights, rec.reply_weights), (vec![1.0], vec![1.0]));
        let one_token = instance(25, &[3], &[1], Label::S);
        let (_, rec) = encode_word_attn(&one_token, &params(Variant::WordAttn, 26)).unwrap();
        assert_eq!(rec.reply_weights, vec![1.0]);
        assert_eq!(rec.level, AttentionLevel::Word);
        assert_eq!(rec.context_weights.len(), 3);
    }

    #[test]
    fn sentence_weights_match_attend_oracle() {
        let p = params(Variant::SentAttn, 27);
        let inst = instance(28, &[2, 4, 1], &[3], Label::S);
        let avgs: Vec<Vec<f64>> = inst.context.iter().map(|s| mean(s, E)).collect();
        let (hidden, _) = p.lstm_c.as_ref().unwrap().run(&avgs, &LstmState::zeros(H)).unwrap();
        let (_, oracle) = crate::models::attend(&hidden, p.attn_c.as_ref().unwrap()).unwrap();
        let (_, rec) = encode_sent_attn(&inst, &p).unwrap();
        assert_eq!(rec.context_weights, oracle);
        assert!((rec.context_weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sent_attn_ignores_word_order_but_not_sentence_order() {
        let p = params(Variant::SentAttn, 29);
        let inst = instance(30, &[3, 4, 2], &[3, 2], Label::S);
        let mut shuffled = inst.clone();
        for s in shuffled.context.iter_mut().chain(shuffled.reply.iter_mut()) {
            s.reverse();
        }
        let a = encode_sent_attn(&inst, &p).unwrap().0;
        let b = encode_sent_attn(&shuffled, &p).unwrap().0;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        let mut reordered = inst.clone();
        reordered.context.swap(0, 2);
        assert_ne!(encode_sent_attn(&reordered, &p).unwrap().0, a);
    }

    #[test]
    fn hier_with_uniform_word_weights_equals_sent_attn() {
        let s = params(Variant::SentAttn, 31);
        let mut h = params(Variant::HierAttn, 32);
        h.lstm_c = s.lstm_c.clone();
        h.lstm_r = s.lstm_r.clone();
        h.attn_c = s.attn_c.clone();
        h.attn_r = s.attn_r.clone();
        h.w_out = s.w_out.clone();
        h.b_out = s.b_out.clone();
        for w in [h.word_c.as_mut().unwrap(), h.word_r.as_mut().unwrap()] {
            w.u_s.iter_mut().for_each(|x| *x = 0.0);
        }
        let inst = instance(33, &[2, 3], &[4], Label::NS);
        let (ps, rs) = encode_sent_attn(&inst, &s).unwrap();
        let (ph, rh) = encode_hier_attn(&inst, &h).unwrap();
        for (a, b) in ps
            .iter()
            .zip(&ph)
            .chain(rs.context_weights.iter().zip(&rh.context_weights))
        {
            assert!((a - b).abs() < 1e-12);
        }
        let words = rh.context_word_weights.unwrap();
        assert_eq!(words[1].len(), 3);
        for w in &words[1] {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn all_variants_pass_gradient_check() {
        let inst = instance(34, &[3, 1, 2], &[2, 3], Label::S);
        for v in Variant::ALL {
            let p = params(v, 35);
            for (name, err) in gradient_check(&p, &inst, 1e-5).unwrap() {
                assert!(err < 1e-4, "{v} {name}: {err}");
            }
        }
    }

    #[test]
    fn dropout_mask_enters_backward() {
        let p = params(Variant::Concat, 36);
        let inst = instance(37, &[2], &[2], Label::NS);
        let mask: Vec<f64> = (0..2 * H).map(|i| if i % 2 == 0 { 2.0 } else { 0.0 }).collect();
        let fwd = forward(&p, &inst, Some(&mask)).unwrap();
        let g = backward(&p, &fwd, inst.label);
        for k in 0..2 {
            for j in (1..2 * H).step_by(2) {
                assert_eq!(g.w_out.get(k, j), 0.0);
            }
        }
    }

    #[test]
    fn tie_goes_to_not_sarcastic() {
        assert_eq!(decide(&[0.7, 0.3]), Label::S);
        assert_eq!(decide(&[0.5, 0.5]), Label::NS);
        assert_eq!(decide(&[0.3, 0.7]), Label::NS);
    }
}
