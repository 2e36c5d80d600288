//! Deterministic dense linear algebra with reverse-mode differentiation.

pub mod gradcheck;
pub mod matrix;
pub mod ops;
pub mod rng;
pub mod tape;

pub use gradcheck::{finite_diff_check, GradCheck};
pub use matrix::Matrix;
pub use ops::Activation;
pub use rng::{Rng, Stream};
pub use tape::{Gradients, NodeId, Tape};
