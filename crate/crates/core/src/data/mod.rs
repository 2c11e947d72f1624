//! Synthetic data, CSV I/O, evaluation metrics and exhaustive oracles.

mod blobs;
mod io;
mod metrics;
mod oracle;

pub use blobs::{generate_blobs, BlobSpec, LabeledDataset};
pub use io::{parse_dataset, read_dataset, write_dataset, write_labels};
pub use metrics::clustering_accuracy;
pub use oracle::{brute_force_kmeans, BRUTE_FORCE_LIMIT};
