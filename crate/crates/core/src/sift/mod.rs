//! Scale-invariant keypoints: DoG scale space, extrema localization, orientation
//! assignment and 128-element gradient descriptors.
//!
//! Parameters default to the values of Lowe's reference pipeline. Images are mapped to
//! [0, 1] before filtering, so `contrast_threshold` is in those units.

mod blur;
mod descriptor;
mod detect;
mod orientation;
mod pyramid;
mod raster;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

pub use blur::{gaussian_blur, gaussian_kernel, reflect};
pub use descriptor::{compute_descriptor, compute_descriptors, window_radius, CLIP_LEVEL};
pub use detect::{detect_keypoints, Candidate, IMAGE_BORDER};
pub use orientation::{assign_orientations, orientation_histogram, orientation_peaks, OrientedCandidate};
pub use pyramid::{build_scale_space, Octave, ScaleSpace, ASSUMED_INPUT_BLUR, MIN_IMAGE_SIZE};
pub use raster::Raster;

pub const DESCRIPTOR_CELLS: usize = 4;
pub const DESCRIPTOR_BINS: usize = 8;
pub const DESCRIPTOR_LEN: usize = DESCRIPTOR_CELLS * DESCRIPTOR_CELLS * DESCRIPTOR_BINS;

#[derive(Debug, Clone, PartialEq)]
pub struct SiftParams {
    pub octaves: usize,
    pub scales_per_octave: usize,
    pub base_sigma: f64,
    pub contrast_threshold: f64,
    pub edge_ratio_threshold: f64,
    pub orientation_bins: usize,
}

impl Default for SiftParams {
    fn default() -> Self {
        Self {
            octaves: 4,
            scales_per_octave: 3,
            base_sigma: 1.6,
            contrast_threshold: 0.03,
            edge_ratio_threshold: 10.0,
            orientation_bins: 36,
        }
    }
}

impl SiftParams {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail the checks
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("sift: {m}")));
        if self.octaves < 1 {
            return bad("octaves must be >= 1");
        }
        if self.scales_per_octave < 1 {
            return bad("scales_per_octave must be >= 1");
        }
        if !(self.base_sigma > 0.0) {
            return bad("base_sigma must be > 0");
        }
        if !(self.contrast_threshold >= 0.0) {
            return bad("contrast_threshold must be >= 0");
        }
        if !(self.edge_ratio_threshold > 0.0) {
            return bad("edge_ratio_threshold must be > 0");
        }
        if self.orientation_bins < 2 {
            return bad("orientation_bins must be >= 2");
        }
        Ok(())
    }

    /// `base_sigma * 2^(level / scales_per_octave)`; fractional levels allowed.
    pub fn level_sigma(&self, level: f64) -> f64 {
        self.base_sigma * 2f64.powf(level / self.scales_per_octave as f64)
    }
}

/// Unit-length 128-element descriptor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Descriptor {
    pub values: [f32; DESCRIPTOR_LEN],
    /// Norm of the clipped vector before the final renormalization; `values * clipped_norm`
    /// recovers the clipped vector, whose elements never exceed [`CLIP_LEVEL`].
    pub clipped_norm: f32,
}

impl Descriptor {
    pub fn from_values(values: [f32; DESCRIPTOR_LEN]) -> Self {
        Self {
            values,
            clipped_norm: 1.0,
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt()
    }

    /// Largest element of the clipped (pre-renormalization) vector.
    pub fn max_clipped_element(&self) -> f64 {
        let max = self.values.iter().copied().fold(0.0f32, f32::max);
        f64::from(max) * f64::from(self.clipped_norm)
    }

    /// Euclidean distance, accumulated in f64 in element order.
    #[inline]
    pub fn distance(&self, other: &Descriptor) -> f64 {
        self.squared_distance(other).sqrt()
    }

    #[inline]
    pub fn squared_distance(&self, other: &Descriptor) -> f64 {
        let mut acc = 0.0f64;
        for (a, b) in self.values.iter().zip(&other.values) {
            let d = f64::from(*a) - f64::from(*b);
            acc += d * d;
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Keypoint {
    /// Sub-pixel column in input-image pixels.
    pub x: f64,
    pub y: f64,
    /// Blur level in input-image pixels.
    pub scale: f64,
    /// Radians in `[0, 2pi)`.
    pub orientation: f64,
    pub descriptor: Descriptor,
    pub octave: usize,
    pub level: usize,
    pub response: f64,
}

/// Full pipeline: scale space, detection, orientation and descriptors, in the stable
/// `(octave, level, y, x, orientation)` order.
pub fn extract(image: &Image, params: &SiftParams) -> Result<Vec<Keypoint>> {
    let space = build_scale_space(image, params)?;
    let candidates = detect_keypoints(&space);
    let oriented = assign_orientations(&candidates, &space);
    let mut keypoints = compute_descriptors(&oriented, &space);
    keypoints.retain(|k| k.x >= 0.0 && k.y >= 0.0 && k.x < image.width() as f64 && k.y < image.height() as f64);
    sort_keypoints(&mut keypoints);
    Ok(keypoints)
}

pub fn sort_keypoints(keypoints: &mut [Keypoint]) {
    keypoints.sort_by(|a, b| {
        a.octave
            .cmp(&b.octave)
            .then(a.level.cmp(&b.level))
            .then(a.y.total_cmp(&b.y))
            .then(a.x.total_cmp(&b.x))
            .then(a.orientation.total_cmp(&b.orientation))
    });
}

/// One keypoint per line: `x y scale orientation d1 ... d128`.
pub fn format_keypoints(keypoints: &[Keypoint]) -> String {
    let mut out = String::new();
    for k in keypoints {
        let _ = write!(out, "{:.6} {:.6} {:.6} {:.6}", k.x, k.y, k.scale, k.orientation);
        for v in &k.descriptor.values {
            let _ = write!(out, " {v:.8}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_keypoints(text: &str, origin: &Path) -> Result<Vec<Keypoint>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: lineno + 1,
            message,
        };
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| err(format!("`{t}`: {e}"))))
            .collect::<Result<_>>()?;
        if nums.len() != 4 + DESCRIPTOR_LEN {
            return Err(err(format!(
                "expected {} fields, found {}",
                4 + DESCRIPTOR_LEN,
                nums.len()
            )));
        }
        let mut values = [0.0f32; DESCRIPTOR_LEN];
        for (v, n) in values.iter_mut().zip(&nums[4..]) {
            *v = *n as f32;
        }
        out.push(Keypoint {
            x: nums[0],
            y: nums[1],
            scale: nums[2],
            orientation: nums[3],
            descriptor: Descriptor::from_values(values),
            octave: 0,
            level: 0,
            response: 0.0,
        });
    }
    Ok(out)
}

pub fn write_keypoints(keypoints: &[Keypoint], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_keypoints(keypoints)).map_err(|e| Error::io(path, e))
}

pub fn read_keypoints(path: impl AsRef<Path>) -> Result<Vec<Keypoint>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_keypoints(&text, path)
}
