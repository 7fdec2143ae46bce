//! The six LSTM variants, their checkpoints and the training loop.

pub mod attention;
pub mod checkpoint;
pub mod network;
pub mod params;
pub mod train;

pub use attention::{attend, AttendTrace, AttentionParams};
pub use checkpoint::{load_checkpoint, parse_checkpoint, render_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use network::{
    backward, decide, encode_concat, encode_conditional, encode_hier_attn, encode_reply_only, encode_sent_attn,
    encode_word_attn, forward, loss, loss_and_grads, predict, AttentionLevel, AttentionRecord, EncodedInstance,
    Forward, Prediction,
};
pub use params::{ConditionalReadout, ModelDims, ModelParams, Variant, NUM_CLASSES};
pub use train::{evaluate, train, EpochLog, TrainConfig, TrainOutcome};
