//! Dominant gradient orientations around each candidate.

use std::f64::consts::TAU;

use super::detect::Candidate;
use super::pyramid::ScaleSpace;

/// Window sigma relative to the keypoint scale.
pub const ORIENTATION_WINDOW_FACTOR: f64 = 1.5;
/// Secondary peaks within this fraction of the maximum spawn extra keypoints.
pub const PEAK_RATIO: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedCandidate {
    pub candidate: Candidate,
    /// Radians in `[0, 2pi)`, measured as `atan2(dy, dx)` in image coordinates (y down).
    pub orientation: f64,
}

pub fn assign_orientations(candidates: &[Candidate], space: &ScaleSpace) -> Vec<OrientedCandidate> {
    let bins = space.params.orientation_bins;
    candidates
        .iter()
        .flat_map(|c| {
            let hist = orientation_histogram(c, space, bins);
            orientation_peaks(&hist)
                .into_iter()
                .map(move |orientation| OrientedCandidate {
                    candidate: *c,
                    orientation,
                })
        })
        .collect()
}

/// Gaussian-weighted histogram of gradient orientations, circularly smoothed once
/// with `[1 4 6 4 1] / 16`. Bin `k` is centred on `k * 2pi / bins`.
pub fn orientation_histogram(c: &Candidate, space: &ScaleSpace, bins: usize) -> Vec<f64> {
    let image = &space.octaves[c.octave].gaussians[c.level];
    let sigma = ORIENTATION_WINDOW_FACTOR * space.level_sigma(c.octave_level);
    let radius = (3.0 * sigma).round() as i64;
    let cx = c.octave_x.round() as i64;
    let cy = c.octave_y.round() as i64;
    let (w, h) = (image.width() as i64, image.height() as i64);
    let denom = 2.0 * sigma * sigma;

    let mut raw = vec![0.0f64; bins];
    for j in -radius..=radius {
        let y = cy + j;
        if y < 1 || y >= h - 1 {
            continue;
        }
        for i in -radius..=radius {
            let x = cx + i;
            if x < 1 || x >= w - 1 {
                continue;
            }
            let (xu, yu) = (x as usize, y as usize);
            let dx = f64::from(image.get(xu + 1, yu) - image.get(xu - 1, yu));
            let dy = f64::from(image.get(xu, yu + 1) - image.get(xu, yu - 1));
            let mag = (dx * dx + dy * dy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let angle = dy.atan2(dx).rem_euclid(TAU);
            let bin = ((angle * bins as f64 / TAU).round() as usize) % bins;
            let weight = (-((i * i + j * j) as f64) / denom).exp();
            raw[bin] += weight * mag;
        }
    }
    smooth_circular(&raw)
}

fn smooth_circular(raw: &[f64]) -> Vec<f64> {
    let n = raw.len();
    let at = |k: isize| raw[k.rem_euclid(n as isize) as usize];
    (0..n as isize)
        .map(|k| (at(k - 2) + at(k + 2) + 4.0 * (at(k - 1) + at(k + 1)) + 6.0 * at(k)) / 16.0)
        .collect()
}

/// Orientations (radians) of every circular local maximum reaching `PEAK_RATIO` of the
/// global maximum, refined by a parabola through the peak and its neighbours. A flat
/// non-zero histogram yields the orientation of its first bin.
pub fn orientation_peaks(hist: &[f64]) -> Vec<f64> {
    let n = hist.len();
    let max = hist.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if n == 0 || max <= 0.0 {
        return Vec::new();
    }
    let bin_width = TAU / n as f64;
    let mut out = Vec::new();
    for k in 0..n {
        let l = hist[(k + n - 1) % n];
        let r = hist[(k + 1) % n];
        let c = hist[k];
        if c > l && c > r && c >= PEAK_RATIO * max {
            let denom = l - 2.0 * c + r;
            let shift = if denom != 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
            out.push(((k as f64 + shift) * bin_width).rem_euclid(TAU));
        }
    }
    if out.is_empty() {
        // plateau: no strict local maximum anywhere
        let k = hist.iter().position(|&v| v == max).expect("max exists");
        out.push(k as f64 * bin_width);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Image;
    use crate::sift::{build_scale_space, detect_keypoints, SiftParams};

    #[test]
    fn two_opposite_equal_peaks() {
        let mut h = vec![0.0; 36];
        h[3] = 1.0;
        h[21] = 1.0;
        let peaks = orientation_peaks(&h);
        assert_eq!(peaks.len(), 2);
        assert!((peaks[0] - 30f64.to_radians()).abs() < 1e-9);
        assert!((peaks[1] - 210f64.to_radians()).abs() < 1e-9);
    }

    #[test]
    fn weak_secondary_peak_is_ignored() {
        let mut h = vec![0.0; 36];
        h[5] = 1.0;
        h[20] = 0.79;
        assert_eq!(orientation_peaks(&h).len(), 1);
        h[20] = 0.8;
        assert_eq!(orientation_peaks(&h).len(), 2);
    }

    #[test]
    fn parabolic_refinement_shifts_toward_heavier_neighbour() {
        let mut h = vec![0.0; 36];
        h[9] = 0.5;
        h[10] = 1.0;
        h[11] = 0.0;
        let p = orientation_peaks(&h);
        assert_eq!(p.len(), 1);
        let deg = p[0].to_degrees();
        assert!(deg > 95.0 && deg < 100.0, "{deg}");
    }

    #[test]
    fn wraparound_peak_stays_in_range() {
        let mut h = vec![0.0; 36];
        h[0] = 1.0;
        h[35] = 0.9;
        let p = orientation_peaks(&h);
        assert_eq!(p.len(), 1);
        assert!(p[0] >= 0.0 && p[0] < TAU);
        assert!(p[0].to_degrees() > 350.0);
    }

    #[test]
    fn flat_histogram_still_orients() {
        assert_eq!(orientation_peaks(&[1.0; 36]).len(), 1);
        assert!(orientation_peaks(&[0.0; 36]).is_empty());
    }

    #[test]
    fn symmetric_blob_gets_an_orientation() {
        let img = Image::from_fn(64, 64, |x, y| {
            let d2 = (x as f64 - 31.6).powi(2) + (y as f64 - 32.2).powi(2);
            20.0 + 220.0 * (-d2 / 18.0).exp()
        })
        .unwrap();
        let ss = build_scale_space(&img, &SiftParams::default()).unwrap();
        let cands = detect_keypoints(&ss);
        assert!(!cands.is_empty());
        let oriented = assign_orientations(&cands, &ss);
        assert!(oriented.len() >= cands.len());
        assert!(oriented.iter().all(|o| (0.0..TAU).contains(&o.orientation)));
    }

    #[test]
    fn blob_on_ramp_points_along_the_ramp() {
        // gradient of the scene is dominated by the horizontal ramp (+x direction)
        let img = Image::from_fn(80, 80, |x, y| {
            let d2 = (x as f64 - 40.3).powi(2) + (y as f64 - 39.7).powi(2);
            20.0 + 1.2 * x as f64 + 120.0 * (-d2 / 18.0).exp()
        })
        .unwrap();
        let ss = build_scale_space(&img, &SiftParams::default()).unwrap();
        let cands = detect_keypoints(&ss);
        let c = cands
            .iter()
            .filter(|c| ((c.x() - 40.3).powi(2) + (c.y() - 39.7).powi(2)).sqrt() < 3.0)
            .max_by(|a, b| a.response.abs().total_cmp(&b.response.abs()))
            .expect("blob detected");
        let hist = orientation_histogram(c, &ss, 36);
        let peaks = orientation_peaks(&hist);
        let dominant = peaks
            .iter()
            .copied()
            .max_by(|a, b| {
                let ha = hist[((a / TAU * 36.0).round() as usize) % 36];
                let hb = hist[((b / TAU * 36.0).round() as usize) % 36];
                ha.total_cmp(&hb)
            })
            .unwrap();
        let deg = dominant.to_degrees();
        let off = deg.min(360.0 - deg);
        assert!(off < 10.0, "dominant orientation {deg} deg");
    }
}
