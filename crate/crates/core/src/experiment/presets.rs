//! Hyperparameters and reference results for the eight benchmark datasets.

use serde::Serialize;

use crate::model::FusionKind;

/// Published accuracy as (mean, std) in percent.
pub type Reference = (f64, f64);

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub samples: usize,
    pub classes: usize,
    pub view_dims: &'static [usize],
    pub encoder_widths: [usize; 3],
    pub hops: usize,
    pub batch_size: usize,
    /// Reference accuracies in [`FusionKind::ALL`] order.
    pub reference: [Reference; 4],
}

impl Preset {
    pub fn views(&self) -> usize {
        self.view_dims.len()
    }

    pub fn reference_for(&self, kind: FusionKind) -> Reference {
        let i = FusionKind::ALL.iter().position(|&k| k == kind).expect("kind listed in ALL");
        self.reference[i]
    }
}

pub const PRESETS: [Preset; 8] = [
    Preset {
        name: "leaves",
        samples: 96,
        classes: 6,
        view_dims: &[64, 64, 64],
        encoder_widths: [64, 32, 16],
        hops: 3,
        batch_size: 4,
        reference: [(100.0, 0.0), (100.0, 0.0), (100.0, 0.0), (100.0, 0.0)],
    },
    Preset {
        name: "reuters",
        samples: 1200,
        classes: 6,
        view_dims: &[2000, 2000, 2000, 2000, 2000],
        encoder_widths: [2048, 1024, 512],
        hops: 2,
        batch_size: 16,
        reference: [(71.2, 3.4), (71.2, 4.3), (72.8, 4.7), (70.0, 5.2)],
    },
    Preset {
        name: "yaleface",
        samples: 256,
        classes: 8,
        view_dims: &[2016, 2016],
        encoder_widths: [1024, 512, 512],
        hops: 2,
        batch_size: 32,
        reference: [(90.0, 4.6), (90.6, 5.3), (92.9, 4.8), (94.0, 2.2)],
    },
    Preset {
        name: "bbc",
        samples: 685,
        classes: 5,
        view_dims: &[4659, 4633, 4665, 4684],
        encoder_widths: [1024, 512, 512],
        hops: 4,
        batch_size: 32,
        reference: [(80.5, 7.6), (83.3, 6.7), (87.2, 4.5), (93.5, 2.4)],
    },
    Preset {
        name: "cornell",
        samples: 195,
        classes: 5,
        view_dims: &[1703, 585],
        encoder_widths: [1024, 512, 128],
        hops: 2,
        batch_size: 16,
        reference: [(71.3, 8.7), (70.9, 5.5), (72.5, 13.0), (72.2, 4.9)],
    },
    Preset {
        name: "texas",
        samples: 187,
        classes: 5,
        view_dims: &[1703, 561],
        encoder_widths: [1024, 512, 128],
        hops: 2,
        batch_size: 16,
        reference: [(74.7, 5.2), (76.6, 4.0), (76.3, 4.9), (85.3, 4.0)],
    },
    Preset {
        name: "washington",
        samples: 230,
        classes: 5,
        view_dims: &[1703, 690],
        encoder_widths: [1024, 512, 128],
        hops: 2,
        batch_size: 16,
        reference: [(67.5, 8.2), (70.0, 4.9), (66.9, 7.8), (75.0, 6.1)],
    },
    Preset {
        name: "wisconsin",
        samples: 265,
        classes: 8,
        view_dims: &[1703, 795],
        encoder_widths: [1024, 512, 128],
        hops: 2,
        batch_size: 16,
        reference: [(86.2, 7.7), (84.8, 5.2), (86.3, 4.3), (84.0, 5.2)],
    },
];

/// Case-insensitive lookup by dataset name.
pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name.eq_ignore_ascii_case(name))
}
