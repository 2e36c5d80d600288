//! Single-sample pipeline written directly against the matrix primitives.
//!
//! This mirrors the batched tape path step by step and serves as its
//! reference: `Z` is `H × V` with column `v` the encoding of view `v`,
//! `A = softmax_rows(W_s2 · tanh(W_s1 · Z))` and `M = A · Zᵀ`.

use crate::error::{Error, Result};
use crate::model::forward::Mode;
use crate::model::params::{AttentionParams, EncoderParams, Fusion, HeadParams, ModelParams};
use crate::numerics::{ops, Matrix};

fn dense_row(x: &Matrix, weight: &Matrix, bias: &Matrix) -> Result<Matrix> {
    x.matmul(weight)?.add(bias)
}

/// Encodes one view's feature vector into its `H`-dimensional encoding.
pub fn encode_view(p: &EncoderParams, view: usize, x: &[f64], mode: &mut Mode<'_>) -> Result<Vec<f64>> {
    if x.len() != p.input_dim() {
        return Err(Error::ViewWidth {
            view,
            expected: p.input_dim(),
            actual: x.len(),
        });
    }
    let mut h = Matrix::row_vector(x.to_vec())?;
    for layer in &p.layers {
        h = ops::relu(&dense_row(&h, &layer.weight, &layer.bias)?);
        h = mode.dropout_matrix(h)?;
    }
    Ok(h.into_vec())
}

/// Stacks the view encodings horizontally into `Z` (`H × V`).
pub fn encoder_block<S: AsRef<[f64]>>(params: &[EncoderParams], sample: &[S], mode: &mut Mode<'_>) -> Result<Matrix> {
    if sample.len() != params.len() {
        return Err(Error::ViewCount {
            expected: params.len(),
            actual: sample.len(),
        });
    }
    let mut columns = Vec::with_capacity(params.len());
    for (v, (p, x)) in params.iter().zip(sample).enumerate() {
        columns.push(encode_view(p, v, x.as_ref(), mode)?);
    }
    let hidden = columns[0].len();
    Ok(Matrix::from_fn(hidden, columns.len(), |h, v| columns[v][h]))
}

/// `A = softmax_rows(W_s2 · tanh(W_s1 · Z))`, shape `d_c × V`.
pub fn attention_weights(p: &AttentionParams, z: &Matrix) -> Result<Matrix> {
    let s = ops::tanh(&p.ws1.matmul(z)?);
    Ok(ops::row_softmax(&p.ws2.matmul(&s)?))
}

/// `M = A · Zᵀ`, shape `d_c × H`.
pub fn attention_embed(a: &Matrix, z: &Matrix) -> Result<Matrix> {
    a.matmul_t(z)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fused {
    pub representation: Vec<f64>,
    /// Attention matrix used, self-attention only.
    pub attention: Option<Matrix>,
}

/// Collapses `Z` (`H × V`) into one representation vector.
pub fn fuse(fusion: &Fusion, z: &Matrix) -> Result<Fused> {
    let (hidden, views) = z.shape();
    let weighted = |w: &[f64]| -> Vec<f64> {
        (0..hidden)
            .map(|h| (0..views).map(|v| w[v] * z.get(h, v)).sum())
            .collect()
    };
    let (representation, attention) = match fusion {
        Fusion::SelfAttention(p) => {
            let a = attention_weights(p, z)?;
            let m = attention_embed(&a, z)?;
            (ops::concat_rows(&m).into_vec(), Some(a))
        }
        Fusion::MaxPool => (
            (0..hidden)
                .map(|h| z.row(h).iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .collect(),
            None,
        ),
        Fusion::MeanPool => (weighted(&vec![1.0 / views as f64; views]), None),
        Fusion::WeightedSum { logits } => {
            if logits.cols() != views {
                return Err(Error::Shape {
                    op: "weighted_sum",
                    left: logits.shape(),
                    right: z.shape(),
                });
            }
            let w = ops::row_softmax(logits);
            (weighted(w.row(0)), None)
        }
    };
    Ok(Fused {
        representation,
        attention,
    })
}

/// Class probabilities from a fused representation.
pub fn classify(head: &HeadParams, rep: &[f64], mode: &mut Mode<'_>) -> Result<Vec<f64>> {
    if rep.len() != head.input_dim() {
        return Err(Error::Shape {
            op: "classify",
            left: (1, rep.len()),
            right: head.hidden.weight.shape(),
        });
    }
    let x = Matrix::row_vector(rep.to_vec())?;
    let h = ops::relu(&dense_row(&x, &head.hidden.weight, &head.hidden.bias)?);
    let h = mode.dropout_matrix(h)?;
    let o = dense_row(&h, &head.output.weight, &head.output.bias)?;
    Ok(ops::row_softmax(&o).into_vec())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub probabilities: Vec<f64>,
    pub attention: Option<Matrix>,
}

/// Encoder block, fusion and classifier for one sample.
pub fn forward<S: AsRef<[f64]>>(model: &ModelParams, sample: &[S], mode: &mut Mode<'_>) -> Result<Prediction> {
    let z = encoder_block(&model.encoders, sample, mode)?;
    let fused = fuse(&model.fusion, &z)?;
    let probabilities = classify(&model.head, &fused.representation, mode)?;
    Ok(Prediction {
        probabilities,
        attention: fused.attention,
    })
}

/// Index of the largest probability; the lowest index wins ties.
pub fn predict(probabilities: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probabilities.iter().enumerate() {
        if p > probabilities[best] {
            best = i;
        }
    }
    best
}
