//! 4x4x8 gradient-orientation descriptors.

use std::f64::consts::TAU;

use super::orientation::OrientedCandidate;
use super::pyramid::ScaleSpace;
use super::{Descriptor, Keypoint, DESCRIPTOR_BINS, DESCRIPTOR_CELLS, DESCRIPTOR_LEN};

/// Width of one descriptor cell in units of the keypoint scale.
pub const CELL_WIDTH_FACTOR: f64 = 3.0;
pub const CLIP_LEVEL: f64 = 0.2;

pub fn compute_descriptors(oriented: &[OrientedCandidate], space: &ScaleSpace) -> Vec<Keypoint> {
    oriented
        .iter()
        .filter_map(|oc| {
            let descriptor = compute_descriptor(oc, space)?;
            let c = &oc.candidate;
            let scale = space.level_sigma(c.octave_level) * c.octave_scale();
            Some(Keypoint {
                x: c.x(),
                y: c.y(),
                scale,
                orientation: oc.orientation,
                descriptor,
                octave: c.octave,
                level: c.level,
                response: c.response,
            })
        })
        .collect()
}

/// Radius (octave pixels) of the sampling window for a keypoint of octave-scale `sigma`.
pub fn window_radius(sigma: f64) -> i64 {
    let cell = CELL_WIDTH_FACTOR * sigma;
    (cell * std::f64::consts::SQRT_2 * (DESCRIPTOR_CELLS as f64 + 1.0) * 0.5).round() as i64
}

/// `None` when the sampling window leaves the image or the patch has no gradient.
pub fn compute_descriptor(oc: &OrientedCandidate, space: &ScaleSpace) -> Option<Descriptor> {
    let c = &oc.candidate;
    let image = &space.octaves[c.octave].gaussians[c.level];
    let sigma = space.level_sigma(c.octave_level);
    let cell = CELL_WIDTH_FACTOR * sigma;
    let radius = window_radius(sigma);
    let (w, h) = (image.width() as i64, image.height() as i64);
    let cx = c.octave_x.round() as i64;
    let cy = c.octave_y.round() as i64;
    if cx - radius < 1 || cy - radius < 1 || cx + radius > w - 2 || cy + radius > h - 2 {
        return None;
    }

    let d = DESCRIPTOR_CELLS;
    let n = DESCRIPTOR_BINS;
    let half = d as f64 / 2.0;
    let (sin_t, cos_t) = oc.orientation.sin_cos();
    // padded by one cell on every side so interpolation never branches
    let stride = d + 2;
    let mut hist = vec![0.0f64; stride * stride * n];
    let weight_denom = 2.0 * half * half;

    for j in -radius..=radius {
        for i in -radius..=radius {
            let px = cx + i;
            let py = cy + j;
            let ox = px as f64 - c.octave_x;
            let oy = py as f64 - c.octave_y;
            // sample offset expressed in the keypoint frame, in cell units
            let col = (cos_t * ox + sin_t * oy) / cell;
            let row = (-sin_t * ox + cos_t * oy) / cell;
            let rb = row + half - 0.5;
            let cb = col + half - 0.5;
            if rb <= -1.0 || rb >= d as f64 || cb <= -1.0 || cb >= d as f64 {
                continue;
            }
            let (xu, yu) = (px as usize, py as usize);
            let gx = f64::from(image.get(xu + 1, yu) - image.get(xu - 1, yu));
            let gy = f64::from(image.get(xu, yu + 1) - image.get(xu, yu - 1));
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let angle = (gy.atan2(gx) - oc.orientation).rem_euclid(TAU);
            let ob = angle * n as f64 / TAU;
            let weight = (-(col * col + row * row) / weight_denom).exp();
            accumulate(&mut hist, stride, n, rb, cb, ob, mag * weight);
        }
    }

    let mut raw = [0.0f64; DESCRIPTOR_LEN];
    for r in 0..d {
        for c in 0..d {
            for o in 0..n {
                raw[(r * d + c) * n + o] = hist[((r + 1) * stride + (c + 1)) * n + o];
            }
        }
    }
    normalize(&raw)
}

/// Trilinear distribution of `value` over the 8 neighbouring (row, col, orientation) bins.
fn accumulate(hist: &mut [f64], stride: usize, n: usize, rb: f64, cb: f64, ob: f64, value: f64) {
    let r0 = rb.floor();
    let c0 = cb.floor();
    let o0 = ob.floor();
    let (fr, fc, fo) = (rb - r0, cb - c0, ob - o0);
    let r0 = (r0 as i64 + 1) as usize;
    let c0 = (c0 as i64 + 1) as usize;
    let o0 = (o0 as i64).rem_euclid(n as i64) as usize;
    for (dr, wr) in [(0, 1.0 - fr), (1, fr)] {
        for (dc, wc) in [(0, 1.0 - fc), (1, fc)] {
            for (dor, wo) in [(0, 1.0 - fo), (1, fo)] {
                let idx = ((r0 + dr) * stride + (c0 + dc)) * n + (o0 + dor) % n;
                hist[idx] += value * wr * wc * wo;
            }
        }
    }
}

/// Unit-normalize, clip every element at `CLIP_LEVEL`, renormalize.
pub fn normalize(raw: &[f64; DESCRIPTOR_LEN]) -> Option<Descriptor> {
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= f64::EPSILON {
        return None;
    }
    let clipped: Vec<f64> = raw.iter().map(|v| (v / norm).min(CLIP_LEVEL)).collect();
    let clipped_norm = clipped.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut values = [0.0f32; DESCRIPTOR_LEN];
    for (out, v) in values.iter_mut().zip(&clipped) {
        *out = (v / clipped_norm) as f32;
    }
    Some(Descriptor {
        values,
        clipped_norm: clipped_norm as f32,
    })
}
