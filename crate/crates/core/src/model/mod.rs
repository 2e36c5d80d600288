//! Per-view encoders, view fusion and the classification head.

pub mod forward;
pub mod params;
pub mod sample;

pub use forward::{forward_batch, predict_proba, BatchOutput, BoundModel, Mode};
pub use params::{
    AttentionParams, Architecture, Dense, EncoderParams, Fusion, FusionKind, HeadParams, ModelParams,
};
pub use sample::{
    attention_embed, attention_weights, classify, encode_view, encoder_block, forward, fuse, predict, Fused,
    Prediction,
};
