//! Batched forward pass recorded on a [`Tape`].
//!
//! A batch holds one row per sample. Encoder outputs of all views are laid
//! side by side (`B × V·H`), and the attention weights as `B × V·d_c` with
//! `A_i[c][v]` at column `v·d_c + c`. Attention is still computed per sample;
//! the layout only lets the per-sample work share matrix products.

use crate::error::{Error, Result};
use crate::model::params::{Dense, Fusion, ModelParams};
use crate::numerics::{Matrix, NodeId, Rng, Tape};

/// Whether dropout is active.
pub enum Mode<'a> {
    Eval,
    Train { dropout: f64, rng: &'a mut Rng },
}

impl Mode<'_> {
    pub fn is_training(&self) -> bool {
        matches!(self, Mode::Train { .. })
    }

    pub(crate) fn dropout_node(&mut self, tape: &mut Tape, x: NodeId) -> Result<NodeId> {
        match self {
            Mode::Eval => Ok(x),
            Mode::Train { dropout, rng } => tape.dropout(x, *dropout, rng, true),
        }
    }

    pub(crate) fn dropout_matrix(&mut self, x: Matrix) -> Result<Matrix> {
        match self {
            Mode::Eval => Ok(x),
            Mode::Train { dropout, rng } => crate::numerics::ops::dropout(&x, *dropout, rng, true),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct BoundDense {
    weight: NodeId,
    bias: NodeId,
}

#[derive(Clone, Debug)]
enum BoundFusion {
    SelfAttention { ws1: NodeId, ws2: NodeId },
    MaxPool,
    MeanPool,
    WeightedSum { logits: NodeId },
}

/// Parameters registered as tape leaves.
#[derive(Clone, Debug)]
pub struct BoundModel {
    encoders: Vec<Vec<BoundDense>>,
    fusion: BoundFusion,
    head: [BoundDense; 2],
    ids: Vec<NodeId>,
}

impl BoundModel {
    /// Leaf ids in [`ModelParams::tensors`] order.
    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }
}

fn bind_dense(tape: &mut Tape, d: &Dense, ids: &mut Vec<NodeId>) -> BoundDense {
    let weight = tape.leaf(d.weight.clone());
    let bias = tape.leaf(d.bias.clone());
    ids.push(weight);
    ids.push(bias);
    BoundDense { weight, bias }
}

impl ModelParams {
    pub fn bind(&self, tape: &mut Tape) -> BoundModel {
        let mut ids = Vec::new();
        let encoders = self
            .encoders
            .iter()
            .map(|e| e.layers.iter().map(|l| bind_dense(tape, l, &mut ids)).collect())
            .collect();
        let fusion = match &self.fusion {
            Fusion::SelfAttention(a) => {
                let ws1 = tape.leaf(a.ws1.clone());
                let ws2 = tape.leaf(a.ws2.clone());
                ids.extend([ws1, ws2]);
                BoundFusion::SelfAttention { ws1, ws2 }
            }
            Fusion::MaxPool => BoundFusion::MaxPool,
            Fusion::MeanPool => BoundFusion::MeanPool,
            Fusion::WeightedSum { logits } => {
                let logits = tape.leaf(logits.clone());
                ids.push(logits);
                BoundFusion::WeightedSum { logits }
            }
        };
        let hidden = bind_dense(tape, &self.head.hidden, &mut ids);
        let output = bind_dense(tape, &self.head.output, &mut ids);
        BoundModel {
            encoders,
            fusion,
            head: [hidden, output],
            ids,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BatchOutput {
    /// `B × K` class probabilities.
    pub probs: NodeId,
    /// `B × 1` per-sample `‖A·Aᵀ − I‖²_F`, self-attention only.
    pub penalty: Option<NodeId>,
    /// `B × V·d_c` attention weights, self-attention only.
    pub attention: Option<NodeId>,
    pub views: usize,
}

impl BatchOutput {
    /// The `d_c × V` attention matrix of sample `i`.
    pub fn attention_matrix(&self, tape: &Tape, i: usize) -> Option<Matrix> {
        let w = tape.value(self.attention?);
        let hops = w.cols() / self.views;
        let row = w.row(i);
        Some(Matrix::from_fn(hops, self.views, |c, v| row[v * hops + c]))
    }
}

fn dense(tape: &mut Tape, x: NodeId, d: BoundDense) -> Result<NodeId> {
    let h = tape.matmul(x, d.weight)?;
    tape.add_row(h, d.bias)
}

pub(crate) fn check_batch(model: &ModelParams, views: &[Matrix]) -> Result<usize> {
    let dims: Vec<usize> = views.iter().map(Matrix::cols).collect();
    model.check_view_dims(&dims)?;
    let n = views[0].rows();
    if let Some(bad) = views.iter().position(|v| v.rows() != n) {
        return Err(Error::Shape {
            op: "batch",
            left: views[0].shape(),
            right: views[bad].shape(),
        });
    }
    Ok(n)
}

/// Records the full model on `tape` for a batch given as one `B × M^v`
/// matrix per view.
pub fn forward_batch(
    tape: &mut Tape,
    model: &ModelParams,
    bound: &BoundModel,
    views: &[Matrix],
    mode: &mut Mode<'_>,
) -> Result<BatchOutput> {
    check_batch(model, views)?;
    let v_count = views.len();

    let mut encoded = Vec::with_capacity(v_count);
    for (x, layers) in views.iter().zip(&bound.encoders) {
        let mut h = tape.constant(x.clone());
        for &layer in layers {
            let pre = dense(tape, h, layer)?;
            let act = tape.relu(pre);
            h = mode.dropout_node(tape, act)?;
        }
        encoded.push(h);
    }

    let mut penalty = None;
    let mut attention = None;
    let rep = match &bound.fusion {
        BoundFusion::SelfAttention { ws1, ws2 } => {
            let mut logits = Vec::with_capacity(v_count);
            for &z in &encoded {
                let s = tape.matmul_t(z, *ws1)?;
                let s = tape.tanh(s);
                logits.push(tape.matmul_t(s, *ws2)?);
            }
            let logits = tape.hconcat(&logits)?;
            let weights = tape.view_softmax(logits, v_count)?;
            let stacked = tape.hconcat(&encoded)?;
            penalty = Some(tape.view_penalty(weights, v_count)?);
            attention = Some(weights);
            tape.view_attend(weights, stacked, v_count)?
        }
        BoundFusion::MaxPool => {
            let stacked = tape.hconcat(&encoded)?;
            tape.view_max(stacked, v_count)?
        }
        BoundFusion::MeanPool => {
            let stacked = tape.hconcat(&encoded)?;
            let uniform = tape.constant(Matrix::filled(1, v_count, 1.0 / v_count as f64));
            tape.view_weighted(uniform, stacked, v_count)?
        }
        BoundFusion::WeightedSum { logits } => {
            let stacked = tape.hconcat(&encoded)?;
            let w = tape.row_softmax(*logits);
            tape.view_weighted(w, stacked, v_count)?
        }
    };

    let [hidden, output] = bound.head;
    let h = dense(tape, rep, hidden)?;
    let h = tape.relu(h);
    let h = mode.dropout_node(tape, h)?;
    let o = dense(tape, h, output)?;
    let probs = tape.row_softmax(o);

    Ok(BatchOutput {
        probs,
        penalty,
        attention,
        views: v_count,
    })
}

/// Class probabilities for a batch in evaluation mode.
pub fn predict_proba(model: &ModelParams, views: &[Matrix]) -> Result<Matrix> {
    let mut tape = Tape::new();
    let bound = model.bind(&mut tape);
    let out = forward_batch(&mut tape, model, &bound, views, &mut Mode::Eval)?;
    Ok(tape.value(out.probs).clone())
}
