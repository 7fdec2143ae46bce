//! Numerical substrate: dense tensors, the LSTM cell, activations, loss,
//! optimizer, dropout and the finite-difference oracle.

pub mod dropout;
pub mod gradcheck;
pub mod lstm;
pub mod ops;
pub mod optim;
pub mod rng;
pub mod tensor;

pub use dropout::dropout_mask;
pub use gradcheck::{finite_diff_grad, max_relative_error};
pub use lstm::{LstmCellParams, LstmState};
pub use ops::{cross_entropy, mlp_tanh, sigmoid, softmax};
pub use optim::{sgd_step, Parameters};
pub use rng::{RngSeed, SeededRng};
pub use tensor::Tensor2;
