//! Standard LSTM cell (input, forget and output sigmoid gates, tanh
//! candidate, no peepholes) with truncation-free backpropagation through
//! time.

use crate::error::{Error, Result};
use crate::nn::ops::sigmoid;
use crate::nn::optim::Parameters;
use crate::nn::rng::SeededRng;
use crate::nn::tensor::{add_assign, Tensor2};

/// Gate order used for every per-gate array.
pub const GATE_I: usize = 0;
pub const GATE_F: usize = 1;
pub const GATE_O: usize = 2;
pub const GATE_G: usize = 3;
const GATE_NAMES: [&str; 4] = ["i", "f", "o", "g"];

/// Weight scale of the uniform initializer.
pub const INIT_RANGE: f64 = 0.05;
pub const FORGET_BIAS_INIT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCellParams {
    /// Input weights `W_i, W_f, W_o, W_g`, each `hidden × input`.
    pub w: [Tensor2; 4],
    /// Recurrent weights `U_i, U_f, U_o, U_g`, each `hidden × hidden`.
    pub u: [Tensor2; 4],
    pub b: [Vec<f64>; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden_dim: usize) -> Self {
        Self {
            h: vec![0.0; hidden_dim],
            c: vec![0.0; hidden_dim],
        }
    }
}

/// Values saved by the forward pass of one step.
#[derive(Debug, Clone)]
pub struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    gates: [Vec<f64>; 4],
    c: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Forward trace of a full sequence, consumed by [`LstmCellParams::backward`].
#[derive(Debug, Clone)]
pub struct LstmTrace {
    pub hidden: Vec<Vec<f64>>,
    pub init: LstmState,
    pub last: LstmState,
    steps: Vec<StepCache>,
}

/// Gradients flowing out of an LSTM backward pass, besides parameter grads.
#[derive(Debug, Clone)]
pub struct LstmInputGrads {
    pub dx: Vec<Vec<f64>>,
    pub dh0: Vec<f64>,
    pub dc0: Vec<f64>,
}

impl LstmCellParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let w = std::array::from_fn(|_| Tensor2::zeros(hidden_dim, input_dim));
        let u = std::array::from_fn(|_| Tensor2::zeros(hidden_dim, hidden_dim));
        let b = std::array::from_fn(|_| vec![0.0; hidden_dim]);
        Self { w, u, b }
    }

    /// Uniform(-0.05, 0.05) weights, zero biases except the forget gate (1.0).
    pub fn init(input_dim: usize, hidden_dim: usize, rng: &mut SeededRng) -> Self {
        Self::init_scaled(input_dim, hidden_dim, INIT_RANGE, rng)
    }

    pub fn init_scaled(input_dim: usize, hidden_dim: usize, range: f64, rng: &mut SeededRng) -> Self {
        let mut p = Self::zeros(input_dim, hidden_dim);
        for t in p.w.iter_mut().chain(p.u.iter_mut()) {
            for v in t.data_mut() {
                *v = rng.uniform_open(range);
            }
        }
        p.b[GATE_F].iter_mut().for_each(|v| *v = FORGET_BIAS_INIT);
        p
    }

    pub fn input_dim(&self) -> usize {
        self.w[0].cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w[0].rows()
    }

    /// Checks that all tensors agree on input/hidden dimensions.
    pub fn validate(&self) -> Result<()> {
        let (n, h) = (self.input_dim(), self.hidden_dim());
        for k in 0..4 {
            let g = GATE_NAMES[k];
            if self.w[k].rows() != h || self.w[k].cols() != n {
                return Err(Error::shape(
                    format!("W_{g}"),
                    format!("{h}x{n}"),
                    self.w[k].shape_string(),
                ));
            }
            if self.u[k].rows() != h || self.u[k].cols() != h {
                return Err(Error::shape(
                    format!("U_{g}"),
                    format!("{h}x{h}"),
                    self.u[k].shape_string(),
                ));
            }
            if self.b[k].len() != h {
                return Err(Error::shape(format!("b_{g}"), h, self.b[k].len()));
            }
        }
        Ok(())
    }

    fn check_state(&self, state: &LstmState) -> Result<()> {
        let h = self.hidden_dim();
        if state.h.len() != h {
            return Err(Error::shape("state h", h, state.h.len()));
        }
        if state.c.len() != h {
            return Err(Error::shape("state c", h, state.c.len()));
        }
        Ok(())
    }

    /// One step: `c' = f⊙c + i⊙g`, `h' = o⊙tanh(c')`.
    pub fn step(&self, x: &[f64], prev: &LstmState) -> Result<LstmState> {
        if x.len() != self.input_dim() {
            return Err(Error::shape("lstm input x", self.input_dim(), x.len()));
        }
        self.check_state(prev)?;
        let cache = self.step_cached(x, prev);
        Ok(LstmState {
            h: cache.h(),
            c: cache.c,
        })
    }

    fn step_cached(&self, x: &[f64], prev: &LstmState) -> StepCache {
        let gates: [Vec<f64>; 4] = std::array::from_fn(|k| {
            let mut a = self.w[k].matvec_unchecked(x);
            add_assign(&mut a, &self.u[k].matvec_unchecked(&prev.h));
            add_assign(&mut a, &self.b[k]);
            if k == GATE_G {
                a.iter_mut().for_each(|v| *v = v.tanh());
            } else {
                a.iter_mut().for_each(|v| *v = sigmoid(*v));
            }
            a
        });
        let c: Vec<f64> = (0..self.hidden_dim())
            .map(|j| gates[GATE_F][j] * prev.c[j] + gates[GATE_I][j] * gates[GATE_G][j])
            .collect();
        let tanh_c = c.iter().map(|v| v.tanh()).collect();
        StepCache {
            x: x.to_vec(),
            h_prev: prev.h.clone(),
            c_prev: prev.c.clone(),
            gates,
            c,
            tanh_c,
        }
    }

    /// Runs the cell over `inputs`, returning all hidden states and the final state.
    pub fn run(&self, inputs: &[Vec<f64>], init: &LstmState) -> Result<(Vec<Vec<f64>>, LstmState)> {
        let trace = self.forward(inputs, init)?;
        Ok((trace.hidden, trace.last))
    }

    /// Like [`run`](Self::run) but keeps what the backward pass needs.
    pub fn forward(&self, inputs: &[Vec<f64>], init: &LstmState) -> Result<LstmTrace> {
        self.check_state(init)?;
        let mut steps = Vec::with_capacity(inputs.len());
        let mut hidden = Vec::with_capacity(inputs.len());
        let mut state = init.clone();
        for (t, x) in inputs.iter().enumerate() {
            if x.len() != self.input_dim() {
                return Err(Error::shape(
                    format!("lstm input at step {t}"),
                    self.input_dim(),
                    x.len(),
                ));
            }
            let cache = self.step_cached(x, &state);
            state = LstmState {
                h: cache.h(),
                c: cache.c.clone(),
            };
            hidden.push(state.h.clone());
            steps.push(cache);
        }
        Ok(LstmTrace {
            hidden,
            init: init.clone(),
            last: state,
            steps,
        })
    }

    /// Backpropagation through time.
    ///
    /// `dh` holds the external gradient on each emitted hidden state (same
    /// length as the sequence); `dc_last` is an extra gradient on the final
    /// cell state, used when that state is handed to another encoder.
    /// Parameter gradients are accumulated into `grads`.
    pub fn backward(
        &self,
        trace: &LstmTrace,
        dh: &[Vec<f64>],
        dc_last: Option<&[f64]>,
        grads: &mut LstmCellParams,
    ) -> LstmInputGrads {
        let hd = self.hidden_dim();
        debug_assert_eq!(dh.len(), trace.steps.len());
        let mut dh_next = vec![0.0; hd];
        let mut dc_next = dc_last.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; hd]);
        let mut dx = vec![Vec::new(); trace.steps.len()];

        for (t, step) in trace.steps.iter().enumerate().rev() {
            let [i, f, o, g] = &step.gates;
            let mut da: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; hd]);
            let mut dc_prev = vec![0.0; hd];
            for j in 0..hd {
                let dhj = dh[t][j] + dh_next[j];
                let dc = dc_next[j] + dhj * o[j] * (1.0 - step.tanh_c[j] * step.tanh_c[j]);
                da[GATE_O][j] = dhj * step.tanh_c[j] * o[j] * (1.0 - o[j]);
                da[GATE_I][j] = dc * g[j] * i[j] * (1.0 - i[j]);
                da[GATE_F][j] = dc * step.c_prev[j] * f[j] * (1.0 - f[j]);
                da[GATE_G][j] = dc * i[j] * (1.0 - g[j] * g[j]);
                dc_prev[j] = dc * f[j];
            }
            let mut dxt = vec![0.0; self.input_dim()];
            let mut dh_prev = vec![0.0; hd];
            for k in 0..4 {
                grads.w[k].add_outer(&da[k], &step.x);
                grads.u[k].add_outer(&da[k], &step.h_prev);
                add_assign(&mut grads.b[k], &da[k]);
                self.w[k].add_matvec_transposed(&da[k], &mut dxt);
                self.u[k].add_matvec_transposed(&da[k], &mut dh_prev);
            }
            dx[t] = dxt;
            dh_next = dh_prev;
            dc_next = dc_prev;
        }
        LstmInputGrads {
            dx,
            dh0: dh_next,
            dc0: dc_next,
        }
    }
}

impl StepCache {
    fn h(&self) -> Vec<f64> {
        self.gates[GATE_O]
            .iter()
            .zip(&self.tanh_c)
            .map(|(o, t)| o * t)
            .collect()
    }
}

impl Parameters for LstmCellParams {
    fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::with_capacity(12);
        for k in 0..4 {
            out.push((format!("W_{}", GATE_NAMES[k]), self.w[k].data()));
        }
        for k in 0..4 {
            out.push((format!("U_{}", GATE_NAMES[k]), self.u[k].data()));
        }
        for k in 0..4 {
            out.push((format!("b_{}", GATE_NAMES[k]), self.b[k].as_slice()));
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out = Vec::with_capacity(12);
        for (k, t) in self.w.iter_mut().enumerate() {
            out.push((format!("W_{}", GATE_NAMES[k]), t.data_mut()));
        }
        for (k, t) in self.u.iter_mut().enumerate() {
            out.push((format!("U_{}", GATE_NAMES[k]), t.data_mut()));
        }
        for (k, b) in self.b.iter_mut().enumerate() {
            out.push((format!("b_{}", GATE_NAMES[k]), b.as_mut_slice()));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{finite_diff_grad, max_relative_error};
    use crate::nn::rng::RngSeed;
    use proptest::prelude::*;

    /// Scalar re-implementation of the gate equations, written out per unit.
    fn oracle_step(p: &LstmCellParams, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = p.hidden_dim();
        let pre = |k: usize, j: usize| {
            let mut s = p.b[k][j];
            for (m, xm) in x.iter().enumerate() {
                s += p.w[k].get(j, m) * xm;
            }
            for (m, hm) in h.iter().enumerate() {
                s += p.u[k].get(j, m) * hm;
            }
            s
        };
        let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
        let mut h2 = vec![0.0; n];
        let mut c2 = vec![0.0; n];
        for j in 0..n {
            let ig = sig(pre(0, j));
            let fg = sig(pre(1, j));
            let og = sig(pre(2, j));
            let gg = pre(3, j).tanh();
            c2[j] = fg * c[j] + ig * gg;
            h2[j] = og * c2[j].tanh();
        }
        (h2, c2)
    }

    #[test]
    fn zero_params_give_zero_state() {
        let p = LstmCellParams::zeros(3, 4);
        let s = p.step(&[0.0; 3], &LstmState::zeros(4)).unwrap();
        assert_eq!(s, LstmState::zeros(4));
    }

    #[test]
    fn saturated_forget_gate_clears_memory() {
        let mut p = LstmCellParams::zeros(1, 1);
        p.b[GATE_I][0] = 100.0;
        p.b[GATE_O][0] = 100.0;
        p.b[GATE_F][0] = -100.0;
        let prev = LstmState {
            h: vec![0.0],
            c: vec![5.0],
        };
        let s = p.step(&[0.0], &prev).unwrap();
        assert!(s.c[0].abs() < 1e-40);
        assert!(s.h[0].abs() < 1e-40);
    }

    #[test]
    fn step_matches_scalar_oracle() {
        let p = LstmCellParams::init_scaled(3, 2, 0.8, &mut RngSeed(0).rng());
        let mut xr = RngSeed(1).rng();
        let x: Vec<f64> = (0..3).map(|_| xr.uniform_open(1.0)).collect();
        let prev = LstmState {
            h: vec![0.3, -0.2],
            c: vec![0.5, 1.5],
        };
        let s = p.step(&x, &prev).unwrap();
        let (h, c) = oracle_step(&p, &x, &prev.h, &prev.c);
        for j in 0..2 {
            assert!((s.h[j] - h[j]).abs() < 1e-12);
            assert!((s.c[j] - c[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn run_edge_cases() {
        let p = LstmCellParams::init(2, 3, &mut RngSeed(5).rng());
        let init = LstmState {
            h: vec![0.1, 0.2, 0.3],
            c: vec![-1.0, 0.0, 1.0],
        };
        let (hs, last) = p.run(&[], &init).unwrap();
        assert!(hs.is_empty());
        assert_eq!(last, init);

        let x = vec![0.4, -0.7];
        let (hs, last) = p.run(std::slice::from_ref(&x), &init).unwrap();
        let one = p.step(&x, &init).unwrap();
        assert_eq!(hs, vec![one.h.clone()]);
        assert_eq!(last, one);

        let z = LstmCellParams::zeros(2, 3);
        let (hs, _) = z.run(&vec![vec![1.0, 2.0]; 3], &LstmState::zeros(3)).unwrap();
        assert!(hs.iter().all(|h| h.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn shape_errors_name_the_tensor() {
        let p = LstmCellParams::zeros(2, 3);
        let err = p.step(&[0.0], &LstmState::zeros(3)).unwrap_err();
        assert!(err.to_string().contains("lstm input x"));
        let err = p.run(&[vec![0.0; 2], vec![0.0; 5]], &LstmState::zeros(3)).unwrap_err();
        assert!(err.to_string().contains("step 1"));
        let err = p.step(&[0.0; 2], &LstmState::zeros(2)).unwrap_err();
        assert!(err.to_string().contains("state h"));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let p = LstmCellParams::init_scaled(3, 4, 0.5, &mut RngSeed(2).rng());
        let mut r = RngSeed(3).rng();
        let xs: Vec<Vec<f64>> = (0..4).map(|_| (0..3).map(|_| r.uniform_open(1.0)).collect()).collect();
        let init = LstmState {
            h: (0..4).map(|_| r.uniform_open(0.5)).collect(),
            c: (0..4).map(|_| r.uniform_open(0.5)).collect(),
        };
        let probe_h: Vec<Vec<f64>> = (0..4).map(|_| (0..4).map(|_| r.uniform_open(1.0)).collect()).collect();
        let probe_c: Vec<f64> = (0..4).map(|_| r.uniform_open(1.0)).collect();
        // L = Σ_t probe_h[t]·h_t + probe_c·c_T
        let loss = |q: &LstmCellParams| {
            let tr = q.forward(&xs, &init).unwrap();
            let mut l = 0.0;
            for (h, ph) in tr.hidden.iter().zip(&probe_h) {
                l += crate::nn::tensor::dot(h, ph);
            }
            l + crate::nn::tensor::dot(&tr.last.c, &probe_c)
        };
        let tr = p.forward(&xs, &init).unwrap();
        let mut g = LstmCellParams::zeros(3, 4);
        p.backward(&tr, &probe_h, Some(&probe_c), &mut g);
        let num = finite_diff_grad(loss, &p, 1e-5).unwrap();
        for (name, err) in max_relative_error(&g, &num) {
            assert!(err < 1e-6, "{name}: {err}");
        }
    }

    proptest! {
        #[test]
        fn hidden_strictly_bounded(
            seed in 0u64..1000,
            xs in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 2), 1..6),
        ) {
            let p = LstmCellParams::init_scaled(2, 3, 2.0, &mut RngSeed(seed).rng());
            let (hs, last) = p.run(&xs, &LstmState::zeros(3)).unwrap();
            for h in &hs {
                prop_assert!(h.iter().all(|v| v.abs() < 1.0));
            }
            prop_assert!(last.c.iter().all(|v| v.is_finite()));
        }
    }
}
