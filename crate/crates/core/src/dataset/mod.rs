//! Dataset manifests and the procedural group dance generator.

mod manifest;
mod synthetic;

pub use manifest::{ClipEntry, DatasetManifest, LoadedClip, Split};
pub use synthetic::{
    generate_synthetic_dataset, synthesize_clip, Primitive, SyntheticClip, SyntheticDatasetSpec,
};
