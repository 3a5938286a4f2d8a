//! Evaluation: Fréchet distance, diversity, beat alignment and trajectory
//! intersection frequency.

mod fid;
mod kinematic;
mod report;

pub use fid::{fid, frechet_distance, psd_sqrt, FeatureKind, FeatureSet, Gaussian};
pub use kinematic::{
    beat_alignment, diversity, group_features, motion_beats, root_paths, tif, tif_from_paths,
};
pub use report::{evaluate, EvalClip, EvalConfig, MetricsReport, GROUP_FEATURE_VERSION};
