//! Scale-space extrema detection, sub-pixel refinement, contrast and edge rejection.

use super::pyramid::{Octave, ScaleSpace};
use super::raster::Raster;

/// Pixels this close to an octave border are never candidates.
pub const IMAGE_BORDER: usize = 5;
pub const MAX_REFINE_STEPS: usize = 5;

/// A localized scale-space extremum, before orientation assignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub octave: usize,
    /// Discrete DoG level the refinement converged at.
    pub level: usize,
    /// Refined position in the octave's own sampling grid.
    pub octave_x: f64,
    pub octave_y: f64,
    /// Refined fractional level (`level + offset`).
    pub octave_level: f64,
    /// Interpolated DoG value at the refined extremum.
    pub response: f64,
}

impl Candidate {
    pub fn octave_scale(&self) -> f64 {
        2f64.powi(self.octave as i32)
    }

    /// Position in input-image pixels.
    pub fn x(&self) -> f64 {
        self.octave_x * self.octave_scale()
    }

    pub fn y(&self) -> f64 {
        self.octave_y * self.octave_scale()
    }
}

pub fn detect_keypoints(space: &ScaleSpace) -> Vec<Candidate> {
    let p = &space.params;
    let prefilter = 0.5 * p.contrast_threshold;
    let mut out = Vec::new();
    for (o, octave) in space.octaves.iter().enumerate() {
        let (w, h) = (octave.width(), octave.height());
        if w <= 2 * IMAGE_BORDER || h <= 2 * IMAGE_BORDER {
            continue;
        }
        for level in 1..=p.scales_per_octave {
            let mut found: Vec<Candidate> = Vec::new();
            for y in IMAGE_BORDER..h - IMAGE_BORDER {
                for x in IMAGE_BORDER..w - IMAGE_BORDER {
                    let v = octave.dogs[level].get(x, y);
                    if f64::from(v.abs()) < prefilter || !is_extremum(octave, level, x, y) {
                        continue;
                    }
                    let Some(c) = refine(space, o, level, x, y) else {
                        continue;
                    };
                    if c.response.abs() < p.contrast_threshold {
                        continue;
                    }
                    if on_edge(&octave.dogs[c.level], c.octave_x.round() as usize, c.octave_y.round() as usize, p.edge_ratio_threshold) {
                        continue;
                    }
                    // neighbouring seeds of a plateau converge onto the same extremum
                    let duplicate = found.iter().any(|f| {
                        f.level == c.level
                            && (f.octave_x - c.octave_x).abs() < 0.5
                            && (f.octave_y - c.octave_y).abs() < 0.5
                    });
                    if !duplicate {
                        found.push(c);
                    }
                }
            }
            out.extend(found);
        }
    }
    out
}

/// Non-strict extremum over the 26 neighbours, rejecting perfectly flat neighbourhoods.
fn is_extremum(octave: &Octave, level: usize, x: usize, y: usize) -> bool {
    let v = octave.dogs[level].get(x, y);
    let mut greater_somewhere = false;
    let mut less_somewhere = false;
    let mut is_max = true;
    let mut is_min = true;
    for dog in &octave.dogs[level - 1..=level + 1] {
        for ny in y - 1..=y + 1 {
            for nx in x - 1..=x + 1 {
                let n = dog.get(nx, ny);
                if n > v {
                    is_max = false;
                    greater_somewhere = true;
                } else if n < v {
                    is_min = false;
                    less_somewhere = true;
                }
            }
        }
        if !is_max && !is_min {
            return false;
        }
    }
    (is_max && less_somewhere) || (is_min && greater_somewhere)
}

struct Derivatives {
    gradient: [f64; 3],
    hessian: [[f64; 3]; 3],
}

/// Finite-difference gradient and Hessian in (x, y, level) order.
fn derivatives(dogs: &[Raster], level: usize, x: usize, y: usize) -> Derivatives {
    let prev = &dogs[level - 1];
    let cur = &dogs[level];
    let next = &dogs[level + 1];
    let g = |r: &Raster, x: usize, y: usize| f64::from(r.get(x, y));
    let v2 = 2.0 * g(cur, x, y);
    let dx = (g(cur, x + 1, y) - g(cur, x - 1, y)) / 2.0;
    let dy = (g(cur, x, y + 1) - g(cur, x, y - 1)) / 2.0;
    let ds = (g(next, x, y) - g(prev, x, y)) / 2.0;
    let dxx = g(cur, x + 1, y) + g(cur, x - 1, y) - v2;
    let dyy = g(cur, x, y + 1) + g(cur, x, y - 1) - v2;
    let dss = g(next, x, y) + g(prev, x, y) - v2;
    let dxy = (g(cur, x + 1, y + 1) - g(cur, x - 1, y + 1) - g(cur, x + 1, y - 1) + g(cur, x - 1, y - 1)) / 4.0;
    let dxs = (g(next, x + 1, y) - g(next, x - 1, y) - g(prev, x + 1, y) + g(prev, x - 1, y)) / 4.0;
    let dys = (g(next, x, y + 1) - g(next, x, y - 1) - g(prev, x, y + 1) + g(prev, x, y - 1)) / 4.0;
    Derivatives {
        gradient: [dx, dy, ds],
        hessian: [[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]],
    }
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-18 {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, slot) in out.iter_mut().enumerate() {
        let mut mc = m;
        for row in 0..3 {
            mc[row][col] = b[row];
        }
        let d = mc[0][0] * (mc[1][1] * mc[2][2] - mc[1][2] * mc[2][1])
            - mc[0][1] * (mc[1][0] * mc[2][2] - mc[1][2] * mc[2][0])
            + mc[0][2] * (mc[1][0] * mc[2][1] - mc[1][1] * mc[2][0]);
        *slot = d / det;
    }
    Some(out)
}

/// Largest offset accepted when the refinement step would return to a visited sample.
const OSCILLATION_LIMIT: f64 = 0.6;

/// Quadratic interpolation of the extremum, moving the sample point at most
/// `MAX_REFINE_STEPS` times. Returns `None` for non-converging or escaping points.
fn refine(space: &ScaleSpace, o: usize, level: usize, x: usize, y: usize) -> Option<Candidate> {
    let octave = &space.octaves[o];
    let s = space.params.scales_per_octave;
    let (w, h) = (octave.width(), octave.height());
    let (mut x, mut y, mut level) = (x, y, level);
    let mut visited = Vec::with_capacity(MAX_REFINE_STEPS);
    for _ in 0..MAX_REFINE_STEPS {
        visited.push((x, y, level));
        let d = derivatives(&octave.dogs, level, x, y);
        let off = solve3(d.hessian, d.gradient)?.map(|v| -v);
        let next = (
            x as i64 + off[0].round() as i64,
            y as i64 + off[1].round() as i64,
            level as i64 + off[2].round() as i64,
        );
        // an extremum midway between samples makes the step oscillate; keep the current sample
        let revisit = off.iter().all(|v| v.abs() <= OSCILLATION_LIMIT)
            && visited.iter().any(|&(vx, vy, vl)| (vx as i64, vy as i64, vl as i64) == next);
        if off.iter().all(|v| v.abs() <= 0.5) || revisit {
            let value = f64::from(octave.dogs[level].get(x, y));
            let response = value + 0.5 * (d.gradient[0] * off[0] + d.gradient[1] * off[1] + d.gradient[2] * off[2]);
            return Some(Candidate {
                octave: o,
                level,
                octave_x: x as f64 + off[0],
                octave_y: y as f64 + off[1],
                octave_level: level as f64 + off[2],
                response,
            });
        }
        if off.iter().any(|v| !v.is_finite() || v.abs() > (w.max(h) as f64)) {
            return None;
        }
        let (nx, ny, nl) = next;
        if nl < 1
            || nl > s as i64
            || nx < IMAGE_BORDER as i64
            || ny < IMAGE_BORDER as i64
            || nx >= (w - IMAGE_BORDER) as i64
            || ny >= (h - IMAGE_BORDER) as i64
        {
            return None;
        }
        x = nx as usize;
        y = ny as usize;
        level = nl as usize;
    }
    None
}

/// Principal-curvature ratio test: rejects when `tr^2 / det >= (r + 1)^2 / r`.
pub fn on_edge(dog: &Raster, x: usize, y: usize, r: f64) -> bool {
    let g = |x: usize, y: usize| f64::from(dog.get(x, y));
    let v2 = 2.0 * g(x, y);
    let dxx = g(x + 1, y) + g(x - 1, y) - v2;
    let dyy = g(x, y + 1) + g(x, y - 1) - v2;
    let dxy = (g(x + 1, y + 1) - g(x - 1, y + 1) - g(x + 1, y - 1) + g(x - 1, y - 1)) / 4.0;
    let tr = dxx + dyy;
    let det = dxx * dyy - dxy * dxy;
    if det <= 0.0 {
        return true;
    }
    tr * tr * r >= (r + 1.0) * (r + 1.0) * det
}
