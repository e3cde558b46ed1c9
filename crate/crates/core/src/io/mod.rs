//! File formats: labelled series text files, binary feature sets, model
//! checkpoints, and CSV/PGM/PNG exports.

mod binary;
mod checkpoint;
mod dataset;
mod export;
mod featfile;
mod render;

pub use checkpoint::Checkpoint;
pub use dataset::{ingest_csv, read_dataset, write_dataset, IngestOptions, LabeledDataset};
pub use export::{distributions_csv, trace_csv};
pub use featfile::{FeatureKind, FeatureSet};
pub use render::{domain_outline, grid_csv, overlay_image, write_overlay_png, write_pgm};
