//! Supervised multi-view representation learning.
//!
//! Each view is encoded by its own three-layer ReLU encoder; the resulting
//! view encodings are fused (multi-hop self-attention with an orthogonality
//! penalty on the hop weights, or one of the max / mean / weighted-sum
//! baselines) and classified by a two-layer MLP.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod experiment;
pub mod model;
pub mod numerics;
pub mod training;

pub use error::{Error, Result};
