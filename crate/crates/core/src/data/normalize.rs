//! Per-feature z-scoring with statistics from the training split only.

use serde::{Deserialize, Serialize};

use crate::data::MultiViewDataset;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Features with a training standard deviation below this map to zero.
pub const MIN_STD: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    /// Population standard deviation; zero marks a constant feature.
    pub std: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub views: Vec<FeatureStats>,
}

impl Normalization {
    pub fn fit(ds: &MultiViewDataset, train: &[usize]) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Dataset("cannot fit normalization on an empty training split".into()));
        }
        let n = train.len() as f64;
        let views = ds
            .views
            .iter()
            .map(|v| {
                let dim = v.dim();
                let mut mean = vec![0.0; dim];
                for &i in train {
                    for (m, x) in mean.iter_mut().zip(v.features.row(i)) {
                        *m += x;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= n);
                let mut var = vec![0.0; dim];
                for &i in train {
                    for ((s, x), m) in var.iter_mut().zip(v.features.row(i)).zip(&mean) {
                        *s += (x - m) * (x - m);
                    }
                }
                let std = var
                    .into_iter()
                    .map(|s| {
                        let sd = (s / n).sqrt();
                        if sd < MIN_STD {
                            0.0
                        } else {
                            sd
                        }
                    })
                    .collect();
                FeatureStats { mean, std }
            })
            .collect();
        Ok(Normalization { views })
    }

    /// Standardizes per-view feature matrices in place.
    pub fn apply_views(&self, views: &mut [Matrix]) -> Result<()> {
        if views.len() != self.views.len() {
            return Err(Error::ViewCount {
                expected: self.views.len(),
                actual: views.len(),
            });
        }
        for (v, (m, stats)) in views.iter_mut().zip(&self.views).enumerate() {
            if m.cols() != stats.mean.len() {
                return Err(Error::ViewWidth {
                    view: v,
                    expected: stats.mean.len(),
                    actual: m.cols(),
                });
            }
            for r in 0..m.rows() {
                for ((x, mu), sd) in m.row_mut(r).iter_mut().zip(&stats.mean).zip(&stats.std) {
                    *x = if *sd == 0.0 { 0.0 } else { (*x - mu) / sd };
                }
            }
        }
        Ok(())
    }

    /// A standardized copy of `ds`. Refuses already normalized data.
    pub fn apply(&self, ds: &MultiViewDataset) -> Result<MultiViewDataset> {
        if ds.normalized {
            return Err(Error::Dataset(format!("dataset `{}` is already normalized", ds.name)));
        }
        let mut out = ds.clone();
        let mut mats: Vec<Matrix> = out.views.iter().map(|v| v.features.clone()).collect();
        self.apply_views(&mut mats)?;
        for (v, m) in out.views.iter_mut().zip(mats) {
            v.features = m;
        }
        out.normalized = true;
        Ok(out)
    }
}

/// Fits statistics on `train` and standardizes the whole dataset with them.
pub fn normalize(ds: &MultiViewDataset, train: &[usize]) -> Result<(MultiViewDataset, Normalization)> {
    if ds.normalized {
        return Err(Error::Dataset(format!("dataset `{}` is already normalized", ds.name)));
    }
    let stats = Normalization::fit(ds, train)?;
    let out = stats.apply(ds)?;
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::View;
    use crate::numerics::Rng;

    fn dataset() -> MultiViewDataset {
        let mut rng = Rng::new(3);
        let a = Matrix::from_fn(20, 3, |_, c| if c == 2 { 5.0 } else { rng.uniform(-4.0, 9.0) });
        let b = Matrix::from_fn(20, 2, |_, _| rng.normal() * 3.0 + 1.0);
        MultiViewDataset::new(
            "n",
            2,
            vec![
                View {
                    name: "a".into(),
                    features: a,
                },
                View {
                    name: "b".into(),
                    features: b,
                },
            ],
            (0..20).map(|i| i % 2).collect(),
        )
        .unwrap()
    }

    #[test]
    fn train_columns_standardized() {
        let ds = dataset();
        let train: Vec<usize> = (0..12).collect();
        let (out, _) = normalize(&ds, &train).unwrap();
        let (views, _) = out.gather(&train);
        for m in &views {
            for c in 0..m.cols() {
                let col = m.column(c);
                let mean = col.iter().sum::<f64>() / col.len() as f64;
                let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / col.len() as f64;
                assert!(mean.abs() < 1e-9);
                if !(m.cols() == 3 && c == 2) {
                    assert!((var.sqrt() - 1.0).abs() < 1e-9);
                }
            }
        }
        // Constant column maps to zero everywhere.
        assert!(out.views[0].features.column(2).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn double_normalization_rejected() {
        let ds = dataset();
        let (out, stats) = normalize(&ds, &[0, 1, 2, 3]).unwrap();
        assert!(out.is_normalized());
        assert!(normalize(&out, &[0, 1]).is_err());
        assert!(stats.apply(&out).is_err());
        assert!(normalize(&ds, &[]).is_err());
    }
}
