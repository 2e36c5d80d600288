//! Stratified 60/20/20 splitting and per-epoch minibatching.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Rng, Stream};

pub const VALIDATION_FRACTION: f64 = 0.2;
pub const TEST_FRACTION: f64 = 0.2;

/// Disjoint, exhaustive train / validation / test index sets, each sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndices {
    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Validation and test share for a class of `n` samples: `round(0.2·n)` each,
/// at least one when `n ≥ 3`; training takes the remainder.
fn holdout(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction).round() as usize).max(1)
}

/// Stratified split seeded by `seed`. Classes with fewer than three samples
/// are pooled and split without stratification (with a warning).
pub fn split(labels: &[usize], num_classes: usize, seed: u64) -> Result<SplitIndices> {
    if labels.is_empty() {
        return Err(Error::Dataset("cannot split an empty dataset".into()));
    }
    let mut rng = Rng::stream(seed, Stream::Split);
    let mut by_class = vec![Vec::new(); num_classes];
    for (i, &y) in labels.iter().enumerate() {
        if y >= num_classes {
            return Err(Error::Dataset(format!("label {y} outside 0..{num_classes}")));
        }
        by_class[y].push(i);
    }

    let mut out = SplitIndices {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
    };
    let mut pooled = Vec::new();
    for (k, mut members) in by_class.into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < 3 {
            warn!(
                "class {k} has only {} samples; assigning it without stratification",
                members.len()
            );
            pooled.extend(members);
            continue;
        }
        rng.shuffle(&mut members);
        assign(&members, &mut out);
    }
    if !pooled.is_empty() {
        rng.shuffle(&mut pooled);
        let n = pooled.len();
        let n_val = (n as f64 * VALIDATION_FRACTION).round() as usize;
        let n_test = (n as f64 * TEST_FRACTION).round() as usize;
        out.validation.extend(&pooled[..n_val]);
        out.test.extend(&pooled[n_val..n_val + n_test]);
        out.train.extend(&pooled[n_val + n_test..]);
    }
    out.train.sort_unstable();
    out.validation.sort_unstable();
    out.test.sort_unstable();
    Ok(out)
}

fn assign(members: &[usize], out: &mut SplitIndices) {
    let n = members.len();
    let n_val = holdout(n, VALIDATION_FRACTION);
    let n_test = holdout(n, TEST_FRACTION);
    out.validation.extend(&members[..n_val]);
    out.test.extend(&members[n_val..n_val + n_test]);
    out.train.extend(&members[n_val + n_test..]);
}

/// Shuffles `indices` with `rng` and chunks them; the last batch may be short.
pub fn minibatches(indices: &[usize], batch_size: usize, rng: &mut Rng) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(Error::config("batch size must be at least 1"));
    }
    if indices.is_empty() {
        return Err(Error::config("cannot batch an empty split"));
    }
    if batch_size > indices.len() {
        warn!(
            "batch size {batch_size} exceeds split size {}; using one full batch",
            indices.len()
        );
    }
    let mut order = indices.to_vec();
    rng.shuffle(&mut order);
    Ok(order.chunks(batch_size).map(<[usize]>::to_vec).collect())
}
