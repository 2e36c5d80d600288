//! Forward kernels shared by the tape and by tape-free evaluation.
//!
//! The `view_*` kernels work on a batch laid out as one row per sample with
//! the per-view blocks side by side: column `v * width + j` holds entry `j`
//! of view `v`.

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

/// Lower clamp applied to probabilities before taking a logarithm.
pub const LOG_CLAMP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    pub fn apply(self, x: &Matrix) -> Matrix {
        match self {
            Activation::Relu => x.map(|v| if v > 0.0 { v } else { 0.0 }),
            Activation::Tanh => x.map(tanh_exp),
        }
    }
}

/// `tanh` through one call to `exp`, about twice as fast as `f64::tanh`;
/// the absolute difference from it stays within a few ulp of 1.
pub fn tanh_exp(x: f64) -> f64 {
    let e = (-2.0 * x.abs()).exp();
    ((1.0 - e) / (1.0 + e)).copysign(x)
}

pub fn relu(x: &Matrix) -> Matrix {
    Activation::Relu.apply(x)
}

pub fn tanh(x: &Matrix) -> Matrix {
    Activation::Tanh.apply(x)
}

fn softmax_in_place(xs: &mut [f64]) {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in xs.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in xs.iter_mut() {
        *v /= total;
    }
}

/// Softmax applied independently to every row.
pub fn row_softmax(x: &Matrix) -> Matrix {
    let mut out = x.clone();
    for r in 0..out.rows() {
        softmax_in_place(out.row_mut(r));
    }
    out
}

/// Flattens the rows of `m` into one row vector, first row first.
pub fn concat_rows(m: &Matrix) -> Matrix {
    Matrix::new(1, m.len(), m.as_slice().to_vec()).expect("non-empty matrix")
}

pub(crate) fn check_dropout_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::config(format!("dropout rate must lie in [0, 1), got {rate}")));
    }
    Ok(())
}

/// Inverted-dropout mask: zero with probability `rate`, otherwise `1 / (1 - rate)`.
/// Each 64-bit draw decides two entries, so `rate` is rounded to a multiple of 2⁻³².
pub fn dropout_mask(rows: usize, cols: usize, rate: f64, rng: &mut Rng) -> Result<Matrix> {
    check_dropout_rate(rate)?;
    let keep = 1.0 / (1.0 - rate);
    let threshold = (rate * 4294967296.0).round() as u64;
    let mut data = vec![0.0; rows * cols];
    for pair in data.chunks_mut(2) {
        let bits = rng.next_u64();
        for (slot, half) in pair.iter_mut().zip([bits & 0xffff_ffff, bits >> 32]) {
            if half >= threshold {
                *slot = keep;
            }
        }
    }
    Matrix::new(rows, cols, data)
}

/// Inverted dropout. Identity outside training and at rate zero.
pub fn dropout(x: &Matrix, rate: f64, rng: &mut Rng, training: bool) -> Result<Matrix> {
    check_dropout_rate(rate)?;
    if !training || rate == 0.0 {
        return Ok(x.clone());
    }
    let mask = dropout_mask(x.rows(), x.cols(), rate, rng)?;
    x.hadamard(&mask)
}

pub(crate) fn check_view_blocks(x: &Matrix, views: usize, op: &'static str) -> Result<usize> {
    if views == 0 || !x.cols().is_multiple_of(views) {
        return Err(Error::Shape {
            op,
            left: x.shape(),
            right: (x.rows(), views),
        });
    }
    Ok(x.cols() / views)
}

/// Softmax across the view blocks for every (sample, position) pair.
pub fn view_softmax(logits: &Matrix, views: usize) -> Result<Matrix> {
    let width = check_view_blocks(logits, views, "view_softmax")?;
    let mut out = logits.clone();
    let mut buf = vec![0.0; views];
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        for g in 0..width {
            for v in 0..views {
                buf[v] = row[v * width + g];
            }
            softmax_in_place(&mut buf);
            for v in 0..views {
                row[v * width + g] = buf[v];
            }
        }
    }
    Ok(out)
}

/// For each sample, `A · Zᵀ` flattened row-wise, where `A[c][v]` is read from
/// `weights` (blocks of width `hops`) and `Z[:, v]` from `enc` (blocks of width `H`).
pub fn view_attend(weights: &Matrix, enc: &Matrix, views: usize) -> Result<Matrix> {
    let hops = check_view_blocks(weights, views, "view_attend")?;
    let hidden = check_view_blocks(enc, views, "view_attend")?;
    if weights.rows() != enc.rows() {
        return Err(Error::Shape {
            op: "view_attend",
            left: weights.shape(),
            right: enc.shape(),
        });
    }
    let mut out = Matrix::zeros(enc.rows(), hops * hidden);
    for i in 0..enc.rows() {
        let w = weights.row(i);
        let e = enc.row(i);
        let o = out.row_mut(i);
        for c in 0..hops {
            for v in 0..views {
                let a = w[v * hops + c];
                let src = &e[v * hidden..(v + 1) * hidden];
                for (dst, z) in o[c * hidden..(c + 1) * hidden].iter_mut().zip(src) {
                    *dst += a * z;
                }
            }
        }
    }
    Ok(out)
}

/// Per-sample `‖A·Aᵀ − I‖²_F`, returned as a column.
pub fn view_penalty(weights: &Matrix, views: usize) -> Result<Matrix> {
    let hops = check_view_blocks(weights, views, "view_penalty")?;
    let mut out = Matrix::zeros(weights.rows(), 1);
    for i in 0..weights.rows() {
        let gram = view_gram(weights.row(i), views, hops);
        let mut p = 0.0;
        for c in 0..hops {
            for d in 0..hops {
                let r = gram[c * hops + d] - if c == d { 1.0 } else { 0.0 };
                p += r * r;
            }
        }
        out.set(i, 0, p);
    }
    Ok(out)
}

pub(crate) fn view_gram(w: &[f64], views: usize, hops: usize) -> Vec<f64> {
    let mut gram = vec![0.0; hops * hops];
    for c in 0..hops {
        for d in 0..hops {
            gram[c * hops + d] = (0..views).map(|v| w[v * hops + c] * w[v * hops + d]).sum();
        }
    }
    gram
}

/// Elementwise maximum across views. Also returns the winning view per entry
/// (lowest index on ties).
pub fn view_max(enc: &Matrix, views: usize) -> Result<(Matrix, Vec<usize>)> {
    let hidden = check_view_blocks(enc, views, "view_max")?;
    let mut out = Matrix::zeros(enc.rows(), hidden);
    let mut arg = vec![0; enc.rows() * hidden];
    for i in 0..enc.rows() {
        let e = enc.row(i);
        for h in 0..hidden {
            let mut best = 0;
            for v in 1..views {
                if e[v * hidden + h] > e[best * hidden + h] {
                    best = v;
                }
            }
            out.set(i, h, e[best * hidden + h]);
            arg[i * hidden + h] = best;
        }
    }
    Ok((out, arg))
}

/// `Σ_v w_v · z^v` per sample with one weight per view (`weights` is 1 × V).
pub fn view_weighted(weights: &Matrix, enc: &Matrix, views: usize) -> Result<Matrix> {
    let hidden = check_view_blocks(enc, views, "view_weighted")?;
    if weights.shape() != (1, views) {
        return Err(Error::Shape {
            op: "view_weighted",
            left: weights.shape(),
            right: (1, views),
        });
    }
    let w = weights.row(0);
    let mut out = Matrix::zeros(enc.rows(), hidden);
    for i in 0..enc.rows() {
        let e = enc.row(i);
        let o = out.row_mut(i);
        for (v, &wv) in w.iter().enumerate() {
            for (dst, z) in o.iter_mut().zip(&e[v * hidden..(v + 1) * hidden]) {
                *dst += wv * z;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_and_tanh_examples() {
        let x = Matrix::row_vector(vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(relu(&x).as_slice(), &[0.0, 0.0, 2.0]);
        assert_eq!(tanh(&Matrix::zeros(1, 1)).get(0, 0), 0.0);
        let big = tanh(&Matrix::filled(1, 1, 1e6)).get(0, 0);
        assert!(big > 0.0 && big <= 1.0 && big < 1.0 + 1e-15);
    }

    #[test]
    fn tanh_exp_tracks_libm() {
        for i in -40_000..=40_000 {
            let x = i as f64 * 5e-4;
            assert!((tanh_exp(x) - x.tanh()).abs() <= 4.5e-16, "x = {x}");
            assert_eq!(tanh_exp(-x), -tanh_exp(x));
        }
        assert_eq!(tanh_exp(800.0), 1.0);
        assert_eq!(tanh_exp(-800.0), -1.0);
        assert!(tanh_exp(f64::NAN).is_nan());
    }

    #[test]
    fn softmax_examples() {
        let s = row_softmax(&Matrix::zeros(1, 3));
        for &v in s.as_slice() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let s = row_softmax(&Matrix::row_vector(vec![2f64.ln(), 0.0, 0.0]).unwrap());
        for (v, e) in s.as_slice().iter().zip([0.5, 0.25, 0.25]) {
            assert!((v - e).abs() < 1e-15);
        }
        let s = row_softmax(&Matrix::row_vector(vec![1000.0, 1000.0]).unwrap());
        assert_eq!(s.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn concat_rows_layout() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(concat_rows(&m).as_slice(), &[1.0, 2.0, 3.0, 4.0]);
        let single = Matrix::row_vector(vec![5.0, 6.0]).unwrap();
        assert_eq!(concat_rows(&single), single);
        let m = Matrix::from_fn(3, 2, |i, j| (10 * i + j) as f64);
        let flat = concat_rows(&m);
        assert_eq!(flat.shape(), (1, 6));
        for i in 0..3 {
            for j in 0..2 {
                assert_eq!(flat.get(0, 2 * i + j), m.get(i, j));
            }
        }
    }

    #[test]
    fn dropout_identity_cases() {
        let x = Matrix::from_fn(4, 5, |r, c| (r * 5 + c) as f64);
        let mut rng = Rng::new(1);
        assert_eq!(dropout(&x, 0.0, &mut rng, true).unwrap(), x);
        for rate in [0.0, 0.3, 0.9] {
            assert_eq!(dropout(&x, rate, &mut rng, false).unwrap(), x);
        }
        assert!(matches!(dropout(&x, 1.0, &mut rng, true), Err(Error::Config(_))));
        assert!(matches!(dropout(&x, -0.1, &mut rng, false), Err(Error::Config(_))));
    }

    #[test]
    fn dropout_preserves_mean() {
        let x = Matrix::filled(1000, 10, 1.0);
        let y = dropout(&x, 0.5, &mut Rng::new(9), true).unwrap();
        let mean = y.sum() / y.len() as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
        assert!(y.as_slice().iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn dropout_masks_reproduce() {
        let a = dropout_mask(8, 8, 0.5, &mut Rng::new(5)).unwrap();
        let b = dropout_mask(8, 8, 0.5, &mut Rng::new(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn view_max_ties_pick_first() {
        let enc = Matrix::from_rows(&[[1.0, 3.0, 1.0, 2.0]]).unwrap();
        let (out, arg) = view_max(&enc, 2).unwrap();
        assert_eq!(out.as_slice(), &[1.0, 3.0]);
        assert_eq!(arg, vec![0, 0]);
    }
}
