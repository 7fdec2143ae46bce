//! Additive attention pooling: `u_i = tanh(W_a·h_i + b_a)`,
//! `α = softmax(u_iᵀ·u_s)`, `v = Σ α_i·h_i`.

use crate::error::{Error, Result};
use crate::nn::ops::softmax_unchecked;
use crate::nn::optim::Parameters;
use crate::nn::rng::SeededRng;
use crate::nn::tensor::{add_assign, dot, Tensor2};

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    /// `att_dim × input_dim` projection.
    pub w_a: Tensor2,
    pub b_a: Vec<f64>,
    /// Learned context vector scored against each projected input.
    pub u_s: Vec<f64>,
}

/// Forward values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct AttendTrace {
    inputs: Vec<Vec<f64>>,
    projected: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub pooled: Vec<f64>,
}

impl AttentionParams {
    pub fn zeros(att_dim: usize, input_dim: usize) -> Self {
        Self {
            w_a: Tensor2::zeros(att_dim, input_dim),
            b_a: vec![0.0; att_dim],
            u_s: vec![0.0; att_dim],
        }
    }

    /// Uniform(±range) for `W_a` and `u_s`; zero bias.
    pub fn init(att_dim: usize, input_dim: usize, range: f64, rng: &mut SeededRng) -> Self {
        let mut p = Self::zeros(att_dim, input_dim);
        p.w_a.data_mut().iter_mut().for_each(|v| *v = rng.uniform_open(range));
        p.u_s.iter_mut().for_each(|v| *v = rng.uniform_open(range));
        p
    }

    pub fn att_dim(&self) -> usize {
        self.w_a.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.w_a.cols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.b_a.len() != self.att_dim() {
            return Err(Error::shape("b_a", self.att_dim(), self.b_a.len()));
        }
        if self.u_s.len() != self.att_dim() {
            return Err(Error::shape("u_s", self.att_dim(), self.u_s.len()));
        }
        Ok(())
    }

    pub fn forward(&self, inputs: &[Vec<f64>]) -> Result<AttendTrace> {
        if inputs.is_empty() {
            return Err(Error::Domain("attention over an empty sequence".into()));
        }
        let mut projected = Vec::with_capacity(inputs.len());
        for (i, h) in inputs.iter().enumerate() {
            let mut u = self.w_a.matvec(h, &format!("attention input {i}"))?;
            for (x, b) in u.iter_mut().zip(&self.b_a) {
                *x = (*x + b).tanh();
            }
            projected.push(u);
        }
        let scores: Vec<f64> = projected.iter().map(|u| dot(u, &self.u_s)).collect();
        let weights = softmax_unchecked(&scores);
        let mut pooled = vec![0.0; self.input_dim()];
        for (h, &a) in inputs.iter().zip(&weights) {
            for (p, x) in pooled.iter_mut().zip(h) {
                *p += a * x;
            }
        }
        Ok(AttendTrace {
            inputs: inputs.to_vec(),
            projected,
            weights,
            pooled,
        })
    }

    /// Accumulates parameter gradients and returns `∂L/∂h_i` for each input.
    pub fn backward(&self, trace: &AttendTrace, d_pooled: &[f64], grads: &mut AttentionParams) -> Vec<Vec<f64>> {
        let alpha = &trace.weights;
        let d_alpha: Vec<f64> = trace.inputs.iter().map(|h| dot(d_pooled, h)).collect();
        let mean: f64 = alpha.iter().zip(&d_alpha).map(|(a, d)| a * d).sum();
        let mut d_inputs = Vec::with_capacity(trace.inputs.len());
        for (i, (h, u)) in trace.inputs.iter().zip(&trace.projected).enumerate() {
            let d_score = alpha[i] * (d_alpha[i] - mean);
            let mut dh: Vec<f64> = d_pooled.iter().map(|d| alpha[i] * d).collect();
            for (g, x) in grads.u_s.iter_mut().zip(u) {
                *g += d_score * x;
            }
            let d_pre: Vec<f64> = u
                .iter()
                .zip(&self.u_s)
                .map(|(uj, sj)| d_score * sj * (1.0 - uj * uj))
                .collect();
            grads.w_a.add_outer(&d_pre, h);
            add_assign(&mut grads.b_a, &d_pre);
            self.w_a.add_matvec_transposed(&d_pre, &mut dh);
            d_inputs.push(dh);
        }
        d_inputs
    }
}

/// Pools `hidden` under `attn`, returning `(pooled, weights)`.
pub fn attend(hidden: &[Vec<f64>], attn: &AttentionParams) -> Result<(Vec<f64>, Vec<f64>)> {
    attn.validate()?;
    let t = attn.forward(hidden)?;
    Ok((t.pooled, t.weights))
}

impl Parameters for AttentionParams {
    fn tensors(&self) -> Vec<(String, &[f64])> {
        vec![
            ("W_a".into(), self.w_a.data()),
            ("b_a".into(), self.b_a.as_slice()),
            ("u_s".into(), self.u_s.as_slice()),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        vec![
            ("W_a".into(), self.w_a.data_mut()),
            ("b_a".into(), self.b_a.as_mut_slice()),
            ("u_s".into(), self.u_s.as_mut_slice()),
        ]
    }
}
