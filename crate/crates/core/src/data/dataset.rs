use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct View {
    pub name: String,
    /// `N × M^v`, one sample per row.
    pub features: Matrix,
}

impl View {
    pub fn dim(&self) -> usize {
        self.features.cols()
    }
}

/// `V` aligned feature matrices with one class label per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiViewDataset {
    pub name: String,
    pub num_classes: usize,
    pub views: Vec<View>,
    pub labels: Vec<usize>,
    pub(crate) normalized: bool,
}

impl MultiViewDataset {
    pub fn new(name: impl Into<String>, num_classes: usize, views: Vec<View>, labels: Vec<usize>) -> Result<Self> {
        let ds = MultiViewDataset {
            name: name.into(),
            num_classes,
            views,
            labels,
            normalized: false,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn view_dims(&self) -> Vec<usize> {
        self.views.iter().map(View::dim).collect()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn validate(&self) -> Result<()> {
        if self.views.len() < 2 {
            return Err(Error::Dataset(format!(
                "at least two views are required, got {}",
                self.views.len()
            )));
        }
        let n = self.labels.len();
        for v in &self.views {
            if v.features.rows() != n {
                return Err(Error::Dataset(format!(
                    "view `{}` has {} rows but there are {n} labels",
                    v.name,
                    v.features.rows()
                )));
            }
            if !v.features.is_finite() {
                return Err(Error::Dataset(format!("view `{}` contains non-finite values", v.name)));
            }
        }
        if self.num_classes < 2 {
            return Err(Error::Dataset("at least two classes are required".into()));
        }
        let counts = self.class_counts_unchecked();
        if let Some(pos) = self.labels.iter().position(|&y| y >= self.num_classes) {
            return Err(Error::Dataset(format!(
                "sample {pos}: label {} outside 0..{}",
                self.labels[pos], self.num_classes
            )));
        }
        if let Some(k) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Dataset(format!("class {k} has no samples")));
        }
        Ok(())
    }

    fn class_counts_unchecked(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            if y < self.num_classes {
                counts[y] += 1;
            }
        }
        counts
    }

    pub fn class_counts(&self) -> Vec<usize> {
        self.class_counts_unchecked()
    }

    /// Rows `indices` of every view plus their labels.
    pub fn gather(&self, indices: &[usize]) -> (Vec<Matrix>, Vec<usize>) {
        let views = self
            .views
            .iter()
            .map(|v| {
                let dim = v.dim();
                let mut data = Vec::with_capacity(indices.len() * dim);
                for &i in indices {
                    data.extend_from_slice(v.features.row(i));
                }
                Matrix::new(indices.len(), dim, data).expect("non-empty gather")
            })
            .collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        (views, labels)
    }
}
