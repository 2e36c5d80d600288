//! Cross-entropy plus the weighted hop-orthogonality penalty.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BatchOutput, FusionKind};
use crate::numerics::ops::LOG_CLAMP;
use crate::numerics::{Matrix, NodeId, Tape};

pub const DEFAULT_LAMBDA: f64 = 1e-4;

/// Batch-mean of `-ln(max(p[label], 1e-12))`.
pub fn cross_entropy(probs: &Matrix, labels: &[usize]) -> Result<f64> {
    if probs.rows() != labels.len() {
        return Err(Error::Shape {
            op: "cross_entropy",
            left: probs.shape(),
            right: (labels.len(), 1),
        });
    }
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        if y >= probs.cols() {
            return Err(Error::Dataset(format!(
                "label {y} out of range for {} classes",
                probs.cols()
            )));
        }
        total -= probs.get(i, y).max(LOG_CLAMP).ln();
    }
    Ok(total / labels.len() as f64)
}

/// `‖A·Aᵀ − I‖²_F` for one `d_c × V` attention matrix.
pub fn attention_penalty(a: &Matrix) -> f64 {
    let gram = a.matmul_t(a).expect("A·Aᵀ is always defined");
    let mut total = 0.0;
    for r in 0..gram.rows() {
        for c in 0..gram.cols() {
            let target = if r == c { 1.0 } else { 0.0 };
            total += (gram.get(r, c) - target).powi(2);
        }
    }
    total
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub lambda: f64,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig { lambda: DEFAULT_LAMBDA }
    }
}

impl ObjectiveConfig {
    /// The default weight for self-attention, zero for the baselines.
    pub fn for_fusion(kind: FusionKind) -> Self {
        match kind {
            FusionKind::SelfAttention => Self::default(),
            _ => ObjectiveConfig { lambda: 0.0 },
        }
    }

    pub fn validate(&self, kind: FusionKind) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::config(format!("lambda must be a non-negative number, got {}", self.lambda)));
        }
        if self.lambda > 0.0 && kind != FusionKind::SelfAttention {
            return Err(Error::config(format!(
                "lambda = {} requires self-attention fusion, not {kind}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Scalar nodes of the objective for one batch.
#[derive(Clone, Copy, Debug)]
pub struct LossNodes {
    pub total: NodeId,
    pub cross_entropy: NodeId,
    /// Mean per-sample penalty before weighting; present for self-attention
    /// even when `lambda = 0`.
    pub penalty: Option<NodeId>,
}

/// Records `CE + λ · mean_i ‖A_i·A_iᵀ − I‖²_F` on `tape`.
pub fn total_loss(
    tape: &mut Tape,
    out: &BatchOutput,
    labels: &[usize],
    kind: FusionKind,
    cfg: &ObjectiveConfig,
) -> Result<LossNodes> {
    cfg.validate(kind)?;
    let ce = tape.cross_entropy(out.probs, labels)?;
    let penalty = out.penalty.map(|p| tape.mean(p));
    let total = match penalty {
        Some(p) if cfg.lambda > 0.0 => {
            let weighted = tape.scale(p, cfg.lambda);
            tape.add(ce, weighted)?
        }
        _ => ce,
    };
    Ok(LossNodes {
        total,
        cross_entropy: ce,
        penalty,
    })
}
