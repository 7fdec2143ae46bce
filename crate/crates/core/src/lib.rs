pub mod data;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod features;
pub mod models;
pub mod nn;

pub use error::{Error, Result};
