//! Face verification and identification from SIFT keypoints grouped around facial landmarks.
//!
//! Two matchers score a probe/gallery pair: a local matcher that sums per-region descriptor
//! distances and a global matcher that takes a modified Hausdorff distance over the
//! concatenated keypoint sets. Their normalized distances are turned into mass functions
//! over {genuine, impostor} and combined with Dempster's rule.

pub mod config;
pub mod error;
pub mod evaluation;
pub mod fusion;
pub mod image;
pub mod landmarks;
pub mod manifest;
pub mod matching;
pub mod pipeline;
pub mod sift;
pub mod synth;

pub use error::{Error, Result};
pub use image::{load_image, Image};
pub use landmarks::{LandmarkSet, Region, RegionFeatures, RoiRadii};
pub use manifest::{load_manifest, DatasetManifest, Role};
pub use sift::{extract, Descriptor, Keypoint, SiftParams};
