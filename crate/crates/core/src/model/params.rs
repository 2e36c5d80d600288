use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};
use crate::training::init::xavier_init;

/// Fully connected layer used on row batches: `y = x · weight + bias`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `in × out`
    pub weight: Matrix,
    /// `1 × out`
    pub bias: Matrix,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Dense {
            weight: Matrix::zeros(input, output),
            bias: Matrix::zeros(1, output),
        }
    }

    pub fn xavier(input: usize, output: usize, rng: &mut Rng) -> Self {
        Dense {
            weight: xavier_init(input, output, rng),
            bias: Matrix::zeros(1, output),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.cols()
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.bias.shape() != (1, self.output_dim()) {
            return Err(Error::Format(format!(
                "{what}: bias shape {:?} does not match weight {:?}",
                self.bias.shape(),
                self.weight.shape()
            )));
        }
        Ok(())
    }
}

/// One view's encoder: input → l1 → l2 → l3, ReLU after every layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub layers: Vec<Dense>,
}

impl EncoderParams {
    pub const DEPTH: usize = 3;

    pub fn new(layers: Vec<Dense>) -> Result<Self> {
        let enc = EncoderParams { layers };
        enc.validate()?;
        Ok(enc)
    }

    pub fn zeros(input: usize, widths: [usize; 3]) -> Self {
        EncoderParams {
            layers: vec![
                Dense::zeros(input, widths[0]),
                Dense::zeros(widths[0], widths[1]),
                Dense::zeros(widths[1], widths[2]),
            ],
        }
    }

    pub fn xavier(input: usize, widths: [usize; 3], rng: &mut Rng) -> Self {
        EncoderParams {
            layers: vec![
                Dense::xavier(input, widths[0], rng),
                Dense::xavier(widths[0], widths[1], rng),
                Dense::xavier(widths[1], widths[2], rng),
            ],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[Self::DEPTH - 1].output_dim()
    }

    pub fn widths(&self) -> [usize; 3] {
        [
            self.layers[0].output_dim(),
            self.layers[1].output_dim(),
            self.layers[2].output_dim(),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.len() != Self::DEPTH {
            return Err(Error::config(format!(
                "encoder must have {} hidden layers, got {}",
                Self::DEPTH,
                self.layers.len()
            )));
        }
        for (i, l) in self.layers.iter().enumerate() {
            l.validate(&format!("encoder layer {i}"))?;
            if i > 0 && l.input_dim() != self.layers[i - 1].output_dim() {
                return Err(Error::Shape {
                    op: "encoder",
                    left: self.layers[i - 1].weight.shape(),
                    right: l.weight.shape(),
                });
            }
        }
        validate_widths(self.widths())
    }
}

pub fn validate_widths(widths: [usize; 3]) -> Result<()> {
    if widths.contains(&0) {
        return Err(Error::config("encoder widths must be positive"));
    }
    if widths[0] < widths[1] || widths[1] < widths[2] {
        return Err(Error::config(format!(
            "encoder widths must be non-increasing, got {widths:?}"
        )));
    }
    Ok(())
}

/// Bias-free two-layer attention MLP.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionParams {
    /// `d_s × H`
    pub ws1: Matrix,
    /// `d_c × d_s`
    pub ws2: Matrix,
}

impl AttentionParams {
    pub fn hidden(&self) -> usize {
        self.ws1.cols()
    }

    pub fn attention_units(&self) -> usize {
        self.ws1.rows()
    }

    pub fn hops(&self) -> usize {
        self.ws2.rows()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FusionKind {
    #[serde(rename = "self-attention")]
    SelfAttention,
    #[serde(rename = "max")]
    MaxPool,
    #[serde(rename = "mean")]
    MeanPool,
    #[serde(rename = "weighted-sum")]
    WeightedSum,
}

impl FusionKind {
    pub const ALL: [FusionKind; 4] = [
        FusionKind::MaxPool,
        FusionKind::MeanPool,
        FusionKind::WeightedSum,
        FusionKind::SelfAttention,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FusionKind::SelfAttention => "self-attention",
            FusionKind::MaxPool => "max",
            FusionKind::MeanPool => "mean",
            FusionKind::WeightedSum => "weighted-sum",
        }
    }

    /// Row label used in comparison tables.
    pub fn title(self) -> &'static str {
        match self {
            FusionKind::SelfAttention => "Self-Attention",
            FusionKind::MaxPool => "Max-Pooling",
            FusionKind::MeanPool => "Mean-Pooling",
            FusionKind::WeightedSum => "Weighted Sum",
        }
    }
}

impl fmt::Display for FusionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FusionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "self-attention" | "attention" => Ok(FusionKind::SelfAttention),
            "max" | "max-pool" => Ok(FusionKind::MaxPool),
            "mean" | "mean-pool" => Ok(FusionKind::MeanPool),
            "weighted-sum" | "weighted" => Ok(FusionKind::WeightedSum),
            other => Err(Error::config(format!("unknown fusion strategy `{other}`"))),
        }
    }
}

/// How the view encodings of one sample are collapsed into a representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Fusion {
    SelfAttention(AttentionParams),
    MaxPool,
    MeanPool,
    /// Pre-softmax view weights, `1 × V`.
    WeightedSum { logits: Matrix },
}

impl Fusion {
    pub fn kind(&self) -> FusionKind {
        match self {
            Fusion::SelfAttention(_) => FusionKind::SelfAttention,
            Fusion::MaxPool => FusionKind::MaxPool,
            Fusion::MeanPool => FusionKind::MeanPool,
            Fusion::WeightedSum { .. } => FusionKind::WeightedSum,
        }
    }

    /// Length of the fused representation for encodings of width `hidden`.
    pub fn output_dim(&self, hidden: usize) -> usize {
        match self {
            Fusion::SelfAttention(a) => a.hops() * hidden,
            _ => hidden,
        }
    }
}

/// Two-layer classifier: `d_in → hidden (ReLU) → K`, then softmax.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadParams {
    pub hidden: Dense,
    pub output: Dense,
}

impl HeadParams {
    pub fn input_dim(&self) -> usize {
        self.hidden.input_dim()
    }

    pub fn classes(&self) -> usize {
        self.output.output_dim()
    }
}

/// Shape-level description of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub view_dims: Vec<usize>,
    pub encoder_widths: [usize; 3],
    pub fusion: FusionKind,
    pub attention_units: usize,
    pub hops: usize,
    pub head_hidden: usize,
    pub classes: usize,
}

impl Architecture {
    pub fn views(&self) -> usize {
        self.view_dims.len()
    }

    pub fn hidden(&self) -> usize {
        self.encoder_widths[2]
    }

    pub fn validate(&self) -> Result<()> {
        if self.view_dims.len() < 2 {
            return Err(Error::config("at least two views are required"));
        }
        if self.view_dims.contains(&0) {
            return Err(Error::config("view dimensions must be positive"));
        }
        validate_widths(self.encoder_widths)?;
        if self.fusion == FusionKind::SelfAttention && (self.attention_units == 0 || self.hops == 0) {
            return Err(Error::config("d_s and d_c must be at least 1"));
        }
        if self.head_hidden == 0 || self.classes < 2 {
            return Err(Error::config("head needs a positive hidden width and at least two classes"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub encoders: Vec<EncoderParams>,
    pub fusion: Fusion,
    pub head: HeadParams,
}

impl ModelParams {
    /// Xavier-uniform weights, zero biases, uniform weighted-sum logits.
    pub fn init(arch: &Architecture, rng: &mut Rng) -> Result<Self> {
        arch.validate()?;
        let encoders = arch
            .view_dims
            .iter()
            .map(|&d| EncoderParams::xavier(d, arch.encoder_widths, rng))
            .collect();
        let hidden = arch.hidden();
        let fusion = match arch.fusion {
            FusionKind::SelfAttention => Fusion::SelfAttention(AttentionParams {
                ws1: xavier_init(arch.attention_units, hidden, rng),
                ws2: xavier_init(arch.hops, arch.attention_units, rng),
            }),
            FusionKind::MaxPool => Fusion::MaxPool,
            FusionKind::MeanPool => Fusion::MeanPool,
            FusionKind::WeightedSum => Fusion::WeightedSum {
                logits: Matrix::zeros(1, arch.views()),
            },
        };
        let d_in = fusion.output_dim(hidden);
        let head = HeadParams {
            hidden: Dense::xavier(d_in, arch.head_hidden, rng),
            output: Dense::xavier(arch.head_hidden, arch.classes, rng),
        };
        Ok(ModelParams { encoders, fusion, head })
    }

    pub fn zeros(arch: &Architecture) -> Result<Self> {
        arch.validate()?;
        let encoders = arch
            .view_dims
            .iter()
            .map(|&d| EncoderParams::zeros(d, arch.encoder_widths))
            .collect();
        let fusion = match arch.fusion {
            FusionKind::SelfAttention => Fusion::SelfAttention(AttentionParams {
                ws1: Matrix::zeros(arch.attention_units, arch.hidden()),
                ws2: Matrix::zeros(arch.hops, arch.attention_units),
            }),
            FusionKind::MaxPool => Fusion::MaxPool,
            FusionKind::MeanPool => Fusion::MeanPool,
            FusionKind::WeightedSum => Fusion::WeightedSum {
                logits: Matrix::zeros(1, arch.views()),
            },
        };
        let d_in = fusion.output_dim(arch.hidden());
        Ok(ModelParams {
            encoders,
            fusion,
            head: HeadParams {
                hidden: Dense::zeros(d_in, arch.head_hidden),
                output: Dense::zeros(arch.head_hidden, arch.classes),
            },
        })
    }

    pub fn views(&self) -> usize {
        self.encoders.len()
    }

    pub fn hidden(&self) -> usize {
        self.encoders[0].output_dim()
    }

    pub fn classes(&self) -> usize {
        self.head.classes()
    }

    pub fn view_dims(&self) -> Vec<usize> {
        self.encoders.iter().map(EncoderParams::input_dim).collect()
    }

    pub fn architecture(&self) -> Architecture {
        let (attention_units, hops) = match &self.fusion {
            Fusion::SelfAttention(a) => (a.attention_units(), a.hops()),
            _ => (0, 0),
        };
        Architecture {
            view_dims: self.view_dims(),
            encoder_widths: self.encoders[0].widths(),
            fusion: self.fusion.kind(),
            attention_units,
            hops,
            head_hidden: self.head.hidden.output_dim(),
            classes: self.classes(),
        }
    }

    /// Checks that all parameter shapes fit together.
    pub fn validate(&self) -> Result<()> {
        if self.encoders.len() < 2 {
            return Err(Error::Format("model needs at least two view encoders".into()));
        }
        let widths = self.encoders[0].widths();
        for (v, e) in self.encoders.iter().enumerate() {
            e.validate()?;
            if e.widths() != widths {
                return Err(Error::Format(format!(
                    "encoder {v} widths {:?} differ from encoder 0 {widths:?}",
                    e.widths()
                )));
            }
        }
        let hidden = widths[2];
        match &self.fusion {
            Fusion::SelfAttention(a) => {
                if a.hidden() != hidden || a.ws2.cols() != a.ws1.rows() {
                    return Err(Error::Format(format!(
                        "attention shapes W_s1 {:?}, W_s2 {:?} do not fit H = {hidden}",
                        a.ws1.shape(),
                        a.ws2.shape()
                    )));
                }
            }
            Fusion::WeightedSum { logits } => {
                if logits.shape() != (1, self.views()) {
                    return Err(Error::Format(format!(
                        "weighted-sum logits {:?} do not match {} views",
                        logits.shape(),
                        self.views()
                    )));
                }
            }
            Fusion::MaxPool | Fusion::MeanPool => {}
        }
        self.head.hidden.validate("head hidden")?;
        self.head.output.validate("head output")?;
        if self.head.input_dim() != self.fusion.output_dim(hidden) {
            return Err(Error::Format(format!(
                "head expects {} inputs but fusion produces {}",
                self.head.input_dim(),
                self.fusion.output_dim(hidden)
            )));
        }
        if self.head.output.input_dim() != self.head.hidden.output_dim() {
            return Err(Error::Format("head layers do not chain".into()));
        }
        Ok(())
    }

    /// Checks per-view input widths against `dims`.
    pub fn check_view_dims(&self, dims: &[usize]) -> Result<()> {
        if dims.len() != self.views() {
            return Err(Error::ViewCount {
                expected: self.views(),
                actual: dims.len(),
            });
        }
        for (v, (&d, e)) in dims.iter().zip(&self.encoders).enumerate() {
            if d != e.input_dim() {
                return Err(Error::ViewWidth {
                    view: v,
                    expected: e.input_dim(),
                    actual: d,
                });
            }
        }
        Ok(())
    }

    /// All learnable matrices in a fixed order: encoders (W, b per layer),
    /// fusion parameters, then head.
    pub fn tensors(&self) -> Vec<&Matrix> {
        let mut out = Vec::new();
        for e in &self.encoders {
            for l in &e.layers {
                out.push(&l.weight);
                out.push(&l.bias);
            }
        }
        match &self.fusion {
            Fusion::SelfAttention(a) => {
                out.push(&a.ws1);
                out.push(&a.ws2);
            }
            Fusion::WeightedSum { logits } => out.push(logits),
            Fusion::MaxPool | Fusion::MeanPool => {}
        }
        for l in [&self.head.hidden, &self.head.output] {
            out.push(&l.weight);
            out.push(&l.bias);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = Vec::new();
        for e in &mut self.encoders {
            for l in &mut e.layers {
                out.push(&mut l.weight);
                out.push(&mut l.bias);
            }
        }
        match &mut self.fusion {
            Fusion::SelfAttention(a) => {
                out.push(&mut a.ws1);
                out.push(&mut a.ws2);
            }
            Fusion::WeightedSum { logits } => out.push(logits),
            Fusion::MaxPool | Fusion::MeanPool => {}
        }
        for l in [&mut self.head.hidden, &mut self.head.output] {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        out
    }

    /// Human-readable names matching [`ModelParams::tensors`].
    pub fn tensor_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for v in 0..self.encoders.len() {
            for l in 1..=EncoderParams::DEPTH {
                out.push(format!("encoder{v}.W{l}"));
                out.push(format!("encoder{v}.b{l}"));
            }
        }
        match &self.fusion {
            Fusion::SelfAttention(_) => {
                out.push("attention.W_s1".into());
                out.push("attention.W_s2".into());
            }
            Fusion::WeightedSum { .. } => out.push("fusion.weights".into()),
            Fusion::MaxPool | Fusion::MeanPool => {}
        }
        for n in ["head.W_hidden", "head.b_hidden", "head.W_out", "head.b_out"] {
            out.push(n.into());
        }
        out
    }

    /// Replaces every learnable matrix, in [`ModelParams::tensors`] order.
    pub fn set_tensors(&mut self, values: &[Matrix]) -> Result<()> {
        let mut slots = self.tensors_mut();
        if slots.len() != values.len() {
            return Err(Error::Usage(format!(
                "expected {} tensors, got {}",
                slots.len(),
                values.len()
            )));
        }
        for (slot, v) in slots.iter_mut().zip(values) {
            slot.expect_same_shape(v, "set_tensors")?;
            **slot = v.clone();
        }
        Ok(())
    }
}
