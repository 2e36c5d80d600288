//! Per-view autoencoder pretraining of the encoders.
//!
//! Each encoder is paired with an untied mirrored decoder
//! (`H → l2 → l1 → M`, ReLU hidden layers, linear output) and trained with
//! Adam on the view's training features under mean squared error.

use serde::{Deserialize, Serialize};

use crate::data::minibatches;
use crate::error::{Error, Result};
use crate::model::{Dense, EncoderParams};
use crate::numerics::{Matrix, NodeId, Rng, Stream, Tape};
use crate::training::adam::{AdamConfig, AdamState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PretrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            epochs: 100,
            lr: 1e-3,
            batch_size: 16,
        }
    }
}

impl PretrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || self.batch_size == 0 {
            return Err(Error::config("pretraining needs a positive learning rate and batch size"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewReconstruction {
    pub initial_mse: f64,
    pub final_mse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PretrainReport {
    pub views: Vec<ViewReconstruction>,
}

/// An encoder with its mirrored decoder.
#[derive(Clone, Debug)]
pub struct Autoencoder {
    pub encoder: EncoderParams,
    pub decoder: Vec<Dense>,
}

impl Autoencoder {
    pub fn new(encoder: EncoderParams, rng: &mut Rng) -> Self {
        let input = encoder.input_dim();
        let [l1, l2, l3] = encoder.widths();
        let decoder = vec![Dense::xavier(l3, l2, rng), Dense::xavier(l2, l1, rng), Dense::xavier(l1, input, rng)];
        Autoencoder { encoder, decoder }
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        self.encoder
            .layers
            .iter_mut()
            .chain(self.decoder.iter_mut())
            .flat_map(|d| [&mut d.weight, &mut d.bias])
            .collect()
    }

    fn tensors(&self) -> Vec<&Matrix> {
        self.encoder
            .layers
            .iter()
            .chain(&self.decoder)
            .flat_map(|d| [&d.weight, &d.bias])
            .collect()
    }

    /// Records the reconstruction of `x`; returns the output and the leaf ids.
    fn record(&self, tape: &mut Tape, x: &Matrix) -> Result<(NodeId, Vec<NodeId>)> {
        let mut ids = Vec::new();
        let mut h = tape.leaf(x.clone());
        let layers: Vec<&Dense> = self.encoder.layers.iter().chain(&self.decoder).collect();
        let last = layers.len() - 1;
        for (i, d) in layers.into_iter().enumerate() {
            let w = tape.leaf(d.weight.clone());
            let b = tape.leaf(d.bias.clone());
            ids.extend([w, b]);
            let pre = tape.matmul(h, w)?;
            h = tape.add_row(pre, b)?;
            if i != last {
                h = tape.relu(h);
            }
        }
        Ok((h, ids))
    }

    pub fn reconstruction_mse(&self, x: &Matrix) -> Result<f64> {
        let mut tape = Tape::new();
        let (out, _) = self.record(&mut tape, x)?;
        let loss = tape.mean_squared_error(out, x)?;
        Ok(tape.value(loss).get(0, 0))
    }

    /// One epoch of minibatch Adam; returns nothing, the caller measures MSE.
    fn epoch(&mut self, x: &Matrix, opt: &mut AdamState, cfg: &PretrainConfig, rng: &mut Rng) -> Result<()> {
        let rows: Vec<usize> = (0..x.rows()).collect();
        for batch in minibatches(&rows, cfg.batch_size, rng)? {
            let xb = Matrix::from_fn(batch.len(), x.cols(), |r, c| x.get(batch[r], c));
            let mut tape = Tape::new();
            let (out, ids) = self.record(&mut tape, &xb)?;
            let loss = tape.mean_squared_error(out, &xb)?;
            let mut grads = tape.backward(loss)?;
            let g: Vec<Matrix> = ids.iter().map(|&id| grads.take(id)).collect();
            opt.step(&mut self.tensors_mut(), &g, cfg.lr)?;
        }
        Ok(())
    }
}

/// Pretrains one encoder per view on `views` (training rows only) and
/// returns the trained encoder halves. Deterministic in `seed`.
pub fn pretrain_autoencoders(
    views: &[Matrix],
    encoders: Vec<EncoderParams>,
    cfg: &PretrainConfig,
    seed: u64,
) -> Result<(Vec<EncoderParams>, PretrainReport)> {
    cfg.validate()?;
    if views.len() != encoders.len() {
        return Err(Error::ViewCount {
            expected: encoders.len(),
            actual: views.len(),
        });
    }
    let mut rng = Rng::stream(seed, Stream::Pretrain);
    let mut out = Vec::with_capacity(views.len());
    let mut report = Vec::with_capacity(views.len());
    for (v, (x, enc)) in views.iter().zip(encoders).enumerate() {
        if x.cols() != enc.input_dim() {
            return Err(Error::ViewWidth {
                view: v,
                expected: enc.input_dim(),
                actual: x.cols(),
            });
        }
        let mut ae = Autoencoder::new(enc, &mut rng);
        let initial_mse = ae.reconstruction_mse(x)?;
        let mut opt = AdamState::new(&ae.tensors(), AdamConfig::default());
        for _ in 0..cfg.epochs {
            ae.epoch(x, &mut opt, cfg, &mut rng)?;
        }
        let final_mse = ae.reconstruction_mse(x)?;
        log::debug!("view {v}: reconstruction MSE {initial_mse:.4} -> {final_mse:.4}");
        report.push(ViewReconstruction { initial_mse, final_mse });
        out.push(ae.encoder);
    }
    Ok((out, PretrainReport { views: report }))
}
