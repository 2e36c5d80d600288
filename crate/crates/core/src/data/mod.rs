//! Multi-view datasets: loading, normalization, splitting, batching and
//! synthetic generation.

pub mod dataset;
pub mod io;
pub mod normalize;
pub mod split;
pub mod synthetic;

pub use dataset::{MultiViewDataset, View};
pub use io::{load_dataset, write_dataset, Manifest, ManifestView};
pub use normalize::{normalize, FeatureStats, Normalization};
pub use split::{minibatches, split, SplitIndices};
pub use synthetic::{generate_synthetic, Scheme, SyntheticSpec};
