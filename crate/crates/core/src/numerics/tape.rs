//! Reverse-mode automatic differentiation over dense matrices.
//!
//! Every operation appends a node holding its value, so the node list is in
//! topological order by construction. [`Tape::backward`] walks it in reverse.

use crate::error::{Error, Result};
use crate::numerics::matrix::{gemm, gemm_new};
use crate::numerics::ops::{self, Activation, LOG_CLAMP};
use crate::numerics::{Matrix, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Constant,
    MatMul(NodeId, NodeId),
    MatMulT(NodeId, NodeId),
    Add(NodeId, NodeId),
    AddRow(NodeId, NodeId),
    Act(Activation, NodeId),
    RowSoftmax(NodeId),
    Mask(NodeId, Matrix),
    ConcatRows(NodeId),
    Transpose(NodeId),
    HConcat(Vec<NodeId>),
    Scale(NodeId, f64),
    Sum(NodeId),
    SubIdentity(NodeId),
    SumSquares(NodeId),
    CrossEntropy { probs: NodeId, labels: Vec<usize> },
    MeanSquaredError { pred: NodeId, target: Matrix },
    ViewSoftmax { logits: NodeId, views: usize },
    ViewAttend { weights: NodeId, enc: NodeId, views: usize },
    ViewPenalty { weights: NodeId, views: usize },
    ViewMax { enc: NodeId, argmax: Vec<usize> },
    ViewWeighted { weights: NodeId, enc: NodeId, views: usize },
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Matrix,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar with respect to every node of a tape.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    /// Gradient for `id`; zeros when the loss does not depend on it.
    pub fn wrt(&self, id: NodeId) -> Matrix {
        match &self.grads[id.0] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = self.shapes[id.0];
                Matrix::zeros(r, c)
            }
        }
    }

    pub fn take(&mut self, id: NodeId) -> Matrix {
        match self.grads[id.0].take() {
            Some(g) => g,
            None => {
                let (r, c) = self.shapes[id.0];
                Matrix::zeros(r, c)
            }
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id.0].value
    }

    fn push(&mut self, op: Op, value: Matrix) -> NodeId {
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Matrix) -> NodeId {
        self.push(Op::Leaf, value)
    }

    /// A leaf whose gradient is never needed; backward does not compute it.
    pub fn constant(&mut self, value: Matrix) -> NodeId {
        self.push(Op::Constant, value)
    }

    fn is_constant(&self, id: NodeId) -> bool {
        matches!(self.nodes[id.0].op, Op::Constant)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(Op::MatMul(a, b), value))
    }

    /// `a · bᵀ` without materializing the transpose.
    pub fn matmul_t(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).matmul_t(self.value(b))?;
        Ok(self.push(Op::MatMulT(a, b), value))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).add(self.value(b))?;
        Ok(self.push(Op::Add(a, b), value))
    }

    /// Adds a `1 × n` row to every row of `x`.
    pub fn add_row(&mut self, x: NodeId, row: NodeId) -> Result<NodeId> {
        let (xv, rv) = (self.value(x), self.value(row));
        if rv.rows() != 1 || rv.cols() != xv.cols() {
            return Err(Error::Shape {
                op: "add_row",
                left: xv.shape(),
                right: rv.shape(),
            });
        }
        let mut value = xv.clone();
        for r in 0..value.rows() {
            for (dst, b) in value.row_mut(r).iter_mut().zip(rv.row(0)) {
                *dst += b;
            }
        }
        Ok(self.push(Op::AddRow(x, row), value))
    }

    pub fn activation(&mut self, kind: Activation, x: NodeId) -> NodeId {
        let value = kind.apply(self.value(x));
        self.push(Op::Act(kind, x), value)
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        self.activation(Activation::Relu, x)
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        self.activation(Activation::Tanh, x)
    }

    pub fn row_softmax(&mut self, x: NodeId) -> NodeId {
        let value = ops::row_softmax(self.value(x));
        self.push(Op::RowSoftmax(x), value)
    }

    /// Inverted dropout. Returns `x` itself when not training or at rate zero.
    pub fn dropout(&mut self, x: NodeId, rate: f64, rng: &mut Rng, training: bool) -> Result<NodeId> {
        ops::check_dropout_rate(rate)?;
        if !training || rate == 0.0 {
            return Ok(x);
        }
        let (r, c) = self.value(x).shape();
        let mask = ops::dropout_mask(r, c, rate, rng)?;
        let value = self.value(x).hadamard(&mask)?;
        Ok(self.push(Op::Mask(x, mask), value))
    }

    pub fn concat_rows(&mut self, x: NodeId) -> NodeId {
        let value = ops::concat_rows(self.value(x));
        self.push(Op::ConcatRows(x), value)
    }

    pub fn transpose(&mut self, x: NodeId) -> NodeId {
        let value = self.value(x).transpose();
        self.push(Op::Transpose(x), value)
    }

    /// Horizontal concatenation of matrices with equal row counts.
    pub fn hconcat(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let Some(&first) = parts.first() else {
            return Err(Error::Usage("hconcat of zero matrices".into()));
        };
        let rows = self.value(first).rows();
        let mut cols = 0;
        for &p in parts {
            let v = self.value(p);
            if v.rows() != rows {
                return Err(Error::Shape {
                    op: "hconcat",
                    left: self.value(first).shape(),
                    right: v.shape(),
                });
            }
            cols += v.cols();
        }
        let mut value = Matrix::zeros(rows, cols);
        for r in 0..rows {
            let mut offset = 0;
            for &p in parts {
                let src = self.value(p).row(r);
                value.row_mut(r)[offset..offset + src.len()].copy_from_slice(src);
                offset += src.len();
            }
        }
        Ok(self.push(Op::HConcat(parts.to_vec()), value))
    }

    pub fn scale(&mut self, x: NodeId, k: f64) -> NodeId {
        let value = self.value(x).scale(k);
        self.push(Op::Scale(x, k), value)
    }

    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let value = Matrix::filled(1, 1, self.value(x).sum());
        self.push(Op::Sum(x), value)
    }

    /// Mean of all entries, as a 1 × 1 node.
    pub fn mean(&mut self, x: NodeId) -> NodeId {
        let n = self.value(x).len() as f64;
        let s = self.sum(x);
        self.scale(s, 1.0 / n)
    }

    pub fn sub_identity(&mut self, x: NodeId) -> Result<NodeId> {
        let v = self.value(x);
        if v.rows() != v.cols() {
            return Err(Error::Shape {
                op: "sub_identity",
                left: v.shape(),
                right: (v.rows(), v.rows()),
            });
        }
        let value = v.sub(&Matrix::identity(v.rows()))?;
        Ok(self.push(Op::SubIdentity(x), value))
    }

    pub fn sum_squares(&mut self, x: NodeId) -> NodeId {
        let value = Matrix::filled(1, 1, self.value(x).sum_squares());
        self.push(Op::SumSquares(x), value)
    }

    /// Batch-mean of `-ln(max(p[i][label_i], 1e-12))` for row-probabilities `probs`.
    pub fn cross_entropy(&mut self, probs: NodeId, labels: &[usize]) -> Result<NodeId> {
        let p = self.value(probs);
        if p.rows() != labels.len() {
            return Err(Error::Shape {
                op: "cross_entropy",
                left: p.shape(),
                right: (labels.len(), 1),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= p.cols()) {
            return Err(Error::Dataset(format!(
                "label {bad} out of range for {} classes",
                p.cols()
            )));
        }
        let total: f64 = labels
            .iter()
            .enumerate()
            .map(|(i, &y)| -p.get(i, y).max(LOG_CLAMP).ln())
            .sum();
        let value = Matrix::filled(1, 1, total / labels.len() as f64);
        Ok(self.push(
            Op::CrossEntropy {
                probs,
                labels: labels.to_vec(),
            },
            value,
        ))
    }

    /// Mean over all entries of `(pred - target)²`.
    pub fn mean_squared_error(&mut self, pred: NodeId, target: &Matrix) -> Result<NodeId> {
        let diff = self.value(pred).sub(target)?;
        let value = Matrix::filled(1, 1, diff.sum_squares() / diff.len() as f64);
        Ok(self.push(
            Op::MeanSquaredError {
                pred,
                target: target.clone(),
            },
            value,
        ))
    }

    pub fn view_softmax(&mut self, logits: NodeId, views: usize) -> Result<NodeId> {
        let value = ops::view_softmax(self.value(logits), views)?;
        Ok(self.push(Op::ViewSoftmax { logits, views }, value))
    }

    pub fn view_attend(&mut self, weights: NodeId, enc: NodeId, views: usize) -> Result<NodeId> {
        let value = ops::view_attend(self.value(weights), self.value(enc), views)?;
        Ok(self.push(Op::ViewAttend { weights, enc, views }, value))
    }

    pub fn view_penalty(&mut self, weights: NodeId, views: usize) -> Result<NodeId> {
        let value = ops::view_penalty(self.value(weights), views)?;
        Ok(self.push(Op::ViewPenalty { weights, views }, value))
    }

    pub fn view_max(&mut self, enc: NodeId, views: usize) -> Result<NodeId> {
        let (value, argmax) = ops::view_max(self.value(enc), views)?;
        Ok(self.push(Op::ViewMax { enc, argmax }, value))
    }

    pub fn view_weighted(&mut self, weights: NodeId, enc: NodeId, views: usize) -> Result<NodeId> {
        let value = ops::view_weighted(self.value(weights), self.value(enc), views)?;
        Ok(self.push(Op::ViewWeighted { weights, enc, views }, value))
    }

    /// Reverse accumulation from a 1 × 1 node.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        if self.value(loss).shape() != (1, 1) {
            return Err(Error::Usage(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Matrix::filled(1, 1, 1.0));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            self.propagate(idx, &g, &mut grads);
            grads[idx] = Some(g);
        }

        Ok(Gradients {
            grads,
            shapes: self.nodes.iter().map(|n| n.value.shape()).collect(),
        })
    }

    fn propagate(&self, idx: usize, g: &Matrix, grads: &mut [Option<Matrix>]) {
        let node = &self.nodes[idx];
        let y = &node.value;
        match &node.op {
            Op::Leaf | Op::Constant => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if !self.is_constant(*a) {
                    accumulate_gemm(grads, *a, g, false, bv, true, av.shape());
                }
                accumulate_gemm(grads, *b, av, true, g, false, bv.shape());
            }
            Op::MatMulT(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if !self.is_constant(*a) {
                    accumulate_gemm(grads, *a, g, false, bv, false, av.shape());
                }
                accumulate_gemm(grads, *b, g, true, av, false, bv.shape());
            }
            Op::Add(a, b) => {
                accumulate(grads, *a, g.clone());
                accumulate(grads, *b, g.clone());
            }
            Op::AddRow(x, row) => {
                accumulate(grads, *x, g.clone());
                let mut db = Matrix::zeros(1, g.cols());
                for r in 0..g.rows() {
                    for (dst, v) in db.row_mut(0).iter_mut().zip(g.row(r)) {
                        *dst += v;
                    }
                }
                accumulate(grads, *row, db);
            }
            Op::Act(Activation::Relu, x) => {
                let xv = self.value(*x);
                let dx = g.zip_map(xv, "relu", |g, x| if x > 0.0 { g } else { 0.0 }).unwrap();
                accumulate(grads, *x, dx);
            }
            Op::Act(Activation::Tanh, x) => {
                let dx = g.zip_map(y, "tanh", |g, t| g * (1.0 - t * t)).unwrap();
                accumulate(grads, *x, dx);
            }
            Op::RowSoftmax(x) => {
                let mut dx = Matrix::zeros(y.rows(), y.cols());
                for r in 0..y.rows() {
                    let (yr, gr) = (y.row(r), g.row(r));
                    let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for ((d, &yv), &gv) in dx.row_mut(r).iter_mut().zip(yr).zip(gr) {
                        *d = yv * (gv - dot);
                    }
                }
                accumulate(grads, *x, dx);
            }
            Op::Mask(x, mask) => accumulate(grads, *x, g.hadamard(mask).unwrap()),
            Op::ConcatRows(x) => {
                let (r, c) = self.value(*x).shape();
                accumulate(grads, *x, Matrix::new(r, c, g.as_slice().to_vec()).unwrap());
            }
            Op::Transpose(x) => accumulate(grads, *x, g.transpose()),
            Op::HConcat(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let (rows, cols) = self.value(p).shape();
                    let part = Matrix::from_fn(rows, cols, |r, c| g.get(r, offset + c));
                    accumulate(grads, p, part);
                    offset += cols;
                }
            }
            Op::Scale(x, k) => accumulate(grads, *x, g.scale(*k)),
            Op::Sum(x) => {
                let (r, c) = self.value(*x).shape();
                accumulate(grads, *x, Matrix::filled(r, c, g.get(0, 0)));
            }
            Op::SubIdentity(x) => accumulate(grads, *x, g.clone()),
            Op::SumSquares(x) => {
                let k = 2.0 * g.get(0, 0);
                accumulate(grads, *x, self.value(*x).scale(k));
            }
            Op::CrossEntropy { probs, labels } => {
                let p = self.value(*probs);
                let mut dp = Matrix::zeros(p.rows(), p.cols());
                let n = labels.len() as f64;
                for (i, &label) in labels.iter().enumerate() {
                    let pi = p.get(i, label);
                    if pi > LOG_CLAMP {
                        dp.set(i, label, -g.get(0, 0) / (n * pi));
                    }
                }
                accumulate(grads, *probs, dp);
            }
            Op::MeanSquaredError { pred, target } => {
                let pv = self.value(*pred);
                let k = 2.0 * g.get(0, 0) / pv.len() as f64;
                accumulate(grads, *pred, pv.zip_map(target, "mse", |p, t| k * (p - t)).unwrap());
            }
            Op::ViewSoftmax { logits, views } => {
                let width = y.cols() / views;
                let mut dx = Matrix::zeros(y.rows(), y.cols());
                for i in 0..y.rows() {
                    let (yr, gr) = (y.row(i), g.row(i));
                    let dr = dx.row_mut(i);
                    for k in 0..width {
                        let dot: f64 = (0..*views).map(|v| yr[v * width + k] * gr[v * width + k]).sum();
                        for v in 0..*views {
                            let j = v * width + k;
                            dr[j] = yr[j] * (gr[j] - dot);
                        }
                    }
                }
                accumulate(grads, *logits, dx);
            }
            Op::ViewAttend { weights, enc, views } => {
                let (w, e) = (self.value(*weights), self.value(*enc));
                let hops = w.cols() / views;
                let hidden = e.cols() / views;
                let mut dw = Matrix::zeros(w.rows(), w.cols());
                let mut de = Matrix::zeros(e.rows(), e.cols());
                for i in 0..e.rows() {
                    let (wr, er, gr) = (w.row(i), e.row(i), g.row(i));
                    for c in 0..hops {
                        let gc = &gr[c * hidden..(c + 1) * hidden];
                        for v in 0..*views {
                            let ev = &er[v * hidden..(v + 1) * hidden];
                            let dot: f64 = gc.iter().zip(ev).map(|(a, b)| a * b).sum();
                            dw.row_mut(i)[v * hops + c] += dot;
                            let a = wr[v * hops + c];
                            for (d, gv) in de.row_mut(i)[v * hidden..(v + 1) * hidden].iter_mut().zip(gc) {
                                *d += a * gv;
                            }
                        }
                    }
                }
                accumulate(grads, *weights, dw);
                accumulate(grads, *enc, de);
            }
            Op::ViewPenalty { weights, views } => {
                let w = self.value(*weights);
                let hops = w.cols() / views;
                let mut dw = Matrix::zeros(w.rows(), w.cols());
                for i in 0..w.rows() {
                    let wr = w.row(i);
                    let mut resid = ops::view_gram(wr, *views, hops);
                    for c in 0..hops {
                        resid[c * hops + c] -= 1.0;
                    }
                    let gi = g.get(i, 0);
                    for v in 0..*views {
                        for k in 0..hops {
                            let s: f64 = (0..hops).map(|c| resid[k * hops + c] * wr[v * hops + c]).sum();
                            dw.row_mut(i)[v * hops + k] = 4.0 * gi * s;
                        }
                    }
                }
                accumulate(grads, *weights, dw);
            }
            Op::ViewMax { enc, argmax } => {
                let e = self.value(*enc);
                let hidden = y.cols();
                let mut de = Matrix::zeros(e.rows(), e.cols());
                for i in 0..y.rows() {
                    for h in 0..hidden {
                        let v = argmax[i * hidden + h];
                        de.set(i, v * hidden + h, g.get(i, h));
                    }
                }
                accumulate(grads, *enc, de);
            }
            Op::ViewWeighted { weights, enc, views } => {
                let (w, e) = (self.value(*weights), self.value(*enc));
                let hidden = y.cols();
                let mut dw = Matrix::zeros(1, *views);
                let mut de = Matrix::zeros(e.rows(), e.cols());
                for i in 0..e.rows() {
                    let (er, gr) = (e.row(i), g.row(i));
                    for v in 0..*views {
                        let wv = w.get(0, v);
                        let ev = &er[v * hidden..(v + 1) * hidden];
                        dw.row_mut(0)[v] += ev.iter().zip(gr).map(|(a, b)| a * b).sum::<f64>();
                        for (d, gv) in de.row_mut(i)[v * hidden..(v + 1) * hidden].iter_mut().zip(gr) {
                            *d = wv * gv;
                        }
                    }
                }
                if !self.is_constant(*weights) {
                    accumulate(grads, *weights, dw);
                }
                accumulate(grads, *enc, de);
            }
        }
    }
}

fn accumulate(grads: &mut [Option<Matrix>], id: NodeId, g: Matrix) {
    match &mut grads[id.0] {
        Some(existing) => existing.add_assign(&g).expect("gradient shape"),
        slot @ None => *slot = Some(g),
    }
}

fn accumulate_gemm(
    grads: &mut [Option<Matrix>],
    id: NodeId,
    a: &Matrix,
    trans_a: bool,
    b: &Matrix,
    trans_b: bool,
    shape: (usize, usize),
) {
    let slot = &mut grads[id.0];
    match slot {
        Some(existing) => gemm(a, trans_a, b, trans_b, existing, 1.0),
        None => {
            let out = gemm_new(a, trans_a, b, trans_b);
            debug_assert_eq!(out.shape(), shape);
            *slot = Some(out);
        }
    }
}
