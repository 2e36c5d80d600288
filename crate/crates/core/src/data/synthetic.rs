//! Synthetic multi-view datasets with known structure.
//!
//! `xor2`: two hidden bits, label = bit₀ XOR bit₁, view `v` sees only bit `v`
//! as `±u_v` (a fixed random sign pattern) plus Gaussian noise. Either view
//! alone carries no information about the label.
//!
//! `shared+specific`: the label is the sum mod K of per-view latent codes, and
//! every view additionally carries a class prototype of the label itself. The
//! `shared` weight moves the data between pure complementarity (0: all views
//! are needed) and pure consistency (1: any single view suffices).

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{MultiViewDataset, View};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "xor2")]
    Xor2,
    #[serde(rename = "shared+specific")]
    SharedSpecific,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xor2" => Ok(Scheme::Xor2),
            "shared+specific" | "shared-specific" => Ok(Scheme::SharedSpecific),
            other => Err(Error::config(format!("unknown synthetic scheme `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub scheme: Scheme,
    #[serde(default = "defaults::samples")]
    pub samples: usize,
    #[serde(default = "defaults::two")]
    pub views: usize,
    #[serde(default = "defaults::two")]
    pub classes: usize,
    #[serde(default = "defaults::dim")]
    pub dim: usize,
    #[serde(default = "defaults::noise")]
    pub noise: f64,
    /// Weight of the shared component, `shared+specific` only.
    #[serde(default = "defaults::shared")]
    pub shared: f64,
    #[serde(default)]
    pub seed: u64,
}

mod defaults {
    pub fn samples() -> usize {
        2000
    }
    pub fn two() -> usize {
        2
    }
    pub fn dim() -> usize {
        10
    }
    pub fn noise() -> f64 {
        0.1
    }
    pub fn shared() -> f64 {
        0.5
    }
}

impl SyntheticSpec {
    pub fn xor2(samples: usize, dim: usize, noise: f64, seed: u64) -> Self {
        SyntheticSpec {
            scheme: Scheme::Xor2,
            samples,
            views: 2,
            classes: 2,
            dim,
            noise,
            shared: defaults::shared(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise >= 0.0) {
            return Err(Error::config("synthetic noise must be non-negative"));
        }
        if self.dim == 0 {
            return Err(Error::config("synthetic view dimension must be at least 1"));
        }
        if self.views < 2 || self.classes < 2 {
            return Err(Error::config("synthetic data needs at least two views and two classes"));
        }
        if self.samples < self.classes {
            return Err(Error::config("fewer samples than classes"));
        }
        if self.scheme == Scheme::Xor2 && (self.views != 2 || self.classes != 2) {
            return Err(Error::config("xor2 has exactly two views and two classes"));
        }
        if !(0.0..=1.0).contains(&self.shared) {
            return Err(Error::config("shared weight must lie in [0, 1]"));
        }
        Ok(())
    }

    fn name(&self) -> String {
        match self.scheme {
            Scheme::Xor2 => "xor2".into(),
            Scheme::SharedSpecific => "shared+specific".into(),
        }
    }
}

fn sign_pattern(dim: usize, rng: &mut Rng) -> Vec<f64> {
    (0..dim).map(|_| if rng.bernoulli(0.5) { 1.0 } else { -1.0 }).collect()
}

/// Generates the dataset described by `spec`; a pure function of the spec.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<MultiViewDataset> {
    spec.validate()?;
    let mut rng = Rng::stream(spec.seed, Stream::Synthetic);
    let n = spec.samples;
    let v_count = spec.views;
    let k = spec.classes;

    // latent[i][v]: the code view v encodes for sample i. Labels are balanced
    // by cycling through classes before shuffling.
    let (labels, latent, prototypes, shared_protos) = match spec.scheme {
        Scheme::Xor2 => {
            let mut configs: Vec<usize> = (0..n).map(|i| i % 4).collect();
            rng.shuffle(&mut configs);
            let latent: Vec<Vec<usize>> = configs.iter().map(|&c| vec![c & 1, c >> 1]).collect();
            let labels = latent.iter().map(|b| b[0] ^ b[1]).collect();
            let protos: Vec<Vec<Vec<f64>>> = (0..2)
                .map(|_| {
                    let u = sign_pattern(spec.dim, &mut rng);
                    vec![u.iter().map(|x| -x).collect(), u]
                })
                .collect();
            (labels, latent, protos, None)
        }
        Scheme::SharedSpecific => {
            let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
            rng.shuffle(&mut labels);
            let latent: Vec<Vec<usize>> = labels
                .iter()
                .map(|&y| {
                    let mut codes = vec![0; v_count];
                    let mut rest = 0;
                    for code in codes.iter_mut().skip(1) {
                        *code = rng.below(k);
                        rest += *code;
                    }
                    codes[0] = (y + k * v_count - rest % k) % k;
                    codes
                })
                .collect();
            let specific: Vec<Vec<Vec<f64>>> = (0..v_count)
                .map(|_| (0..k).map(|_| sign_pattern(spec.dim, &mut rng)).collect())
                .collect();
            let shared: Vec<Vec<Vec<f64>>> = (0..v_count)
                .map(|_| (0..k).map(|_| sign_pattern(spec.dim, &mut rng)).collect())
                .collect();
            (labels, latent, specific, Some(shared))
        }
    };

    let views = (0..v_count)
        .map(|v| {
            let mut m = Matrix::zeros(n, spec.dim);
            for i in 0..n {
                let code = latent[i][v];
                for (j, x) in m.row_mut(i).iter_mut().enumerate() {
                    let signal = match &shared_protos {
                        None => prototypes[v][code][j],
                        Some(sh) => spec.shared * sh[v][labels[i]][j] + (1.0 - spec.shared) * prototypes[v][code][j],
                    };
                    *x = signal + spec.noise * rng.normal();
                }
            }
            View {
                name: format!("view{v}"),
                features: m,
            }
        })
        .collect();

    MultiViewDataset::new(spec.name(), k, views, labels)
}
