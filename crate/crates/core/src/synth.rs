//! Procedurally rendered test scenes with known geometry.
//!
//! [`BlobGrid`] is a regular grid of Gaussian blobs whose centres are known exactly under
//! rotation and zoom. [`FaceScene`] is a seeded "identity": a portrait-frame texture whose
//! structure concentrates around the default landmark geometry, rendered with small
//! shift/noise perturbations to play the role of repeated captures of one subject.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

use crate::image::{Image, WORKING_HEIGHT, WORKING_WIDTH};
use crate::landmarks::{default_landmarks, RoiRadii};

#[derive(Debug, Clone)]
pub struct BlobGrid {
    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
    pub sigma: f64,
    pub size: usize,
    pub background: f64,
    pub amplitude: f64,
}

impl Default for BlobGrid {
    fn default() -> Self {
        Self {
            rows: 5,
            cols: 5,
            spacing: 20.0,
            sigma: 3.0,
            size: 200,
            background: 40.0,
            amplitude: 180.0,
        }
    }
}

impl BlobGrid {
    fn centre(&self) -> f64 {
        (self.size as f64 - 1.0) / 2.0
    }

    /// Blob centres after rotating the grid by `angle` radians about the image centre.
    pub fn centres(&self, angle: f64, zoom: f64) -> Vec<(f64, f64)> {
        let c = self.centre();
        let (s, co) = angle.sin_cos();
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for r in 0..self.rows {
            for q in 0..self.cols {
                let ux = (q as f64 - (self.cols as f64 - 1.0) / 2.0) * self.spacing;
                let uy = (r as f64 - (self.rows as f64 - 1.0) / 2.0) * self.spacing;
                let (rx, ry) = (co * ux - s * uy, s * ux + co * uy);
                out.push((c * zoom + rx * zoom, c * zoom + ry * zoom));
            }
        }
        out
    }

    /// Analytic rendering with the grid rotated by `angle`, intensities scaled by `gain`.
    pub fn render(&self, angle: f64, gain: f64) -> Image {
        self.render_zoomed(angle, 1.0, gain)
    }

    /// As [`render`](Self::render) on a canvas `zoom` times larger with blobs scaled to match.
    pub fn render_zoomed(&self, angle: f64, zoom: f64, gain: f64) -> Image {
        let centres = self.centres(angle, zoom);
        let sigma = self.sigma * zoom;
        let size = (self.size as f64 * zoom).round() as usize;
        let denom = 2.0 * sigma * sigma;
        Image::from_fn(size, size, |x, y| {
            let mut v = self.background;
            for (cx, cy) in &centres {
                let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                if d2 < 40.0 * sigma * sigma {
                    v += self.amplitude * (-d2 / denom).exp();
                }
            }
            v * gain
        })
        .expect("non-empty canvas")
    }
}

/// Clockwise quarter turn: `(x, y) -> (h - 1 - y, x)`.
pub fn rotate_quarter(image: &Image) -> Image {
    let (w, h) = (image.width(), image.height());
    Image::from_fn(h, w, |nx, ny| f64::from(image.get(ny, h - 1 - nx))).expect("same pixel count")
}

#[derive(Debug, Clone, Copy)]
struct Spot {
    x: f64,
    y: f64,
    sigma: f64,
    amplitude: f64,
}

/// Capture-to-capture variation applied when rendering a [`FaceScene`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub shift_x: f64,
    pub shift_y: f64,
    pub noise_sigma: f64,
    pub gain: f64,
}

impl Default for Perturbation {
    fn default() -> Self {
        Self {
            shift_x: 0.0,
            shift_y: 0.0,
            noise_sigma: 0.0,
            gain: 1.0,
        }
    }
}

impl Perturbation {
    /// Small random shift (up to `max_shift` px), mild gain change and pixel noise.
    pub fn random(rng: &mut impl Rng, max_shift: f64, noise_sigma: f64) -> Self {
        Self {
            shift_x: rng.gen_range(-max_shift..=max_shift),
            shift_y: rng.gen_range(-max_shift..=max_shift),
            noise_sigma,
            gain: rng.gen_range(0.92..=1.08),
        }
    }
}

const SPOT_ATTEMPTS_PER_REGION: usize = 40;
const BACKGROUND_SPOT_ATTEMPTS: usize = 60;
/// Spots closer than this merge into a single blob.
const MIN_SPOT_GAP: f64 = 8.0;
/// Keeps structure where fine-scale descriptor windows still fit inside the frame.
const SAFE_MARGIN: f64 = 23.0;
const SPOT_SIGMA: (f64, f64) = (2.0, 2.8);
const SPOT_AMPLITUDE: (f64, f64) = (90.0, 115.0);

/// A seeded synthetic identity in the 100x140 working frame.
#[derive(Debug, Clone)]
pub struct FaceScene {
    pub seed: u64,
    spots: Vec<Spot>,
}

impl FaceScene {
    pub fn new(seed: u64) -> Self {
        let mut rng = StdRng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0x5eed);
        let (w, h) = (WORKING_WIDTH as f64, WORKING_HEIGHT as f64);
        let lm = default_landmarks(WORKING_WIDTH, WORKING_HEIGHT);
        let radii = RoiRadii::default().resolve(&lm);
        let mut spots: Vec<Spot> = Vec::new();
        let place = |rng: &mut StdRng, spots: &mut Vec<Spot>, x: f64, y: f64| {
            let inside = (SAFE_MARGIN..WORKING_WIDTH as f64 - SAFE_MARGIN).contains(&x)
                && (SAFE_MARGIN..WORKING_HEIGHT as f64 - SAFE_MARGIN).contains(&y);
            if !inside || spots.iter().any(|s| (s.x - x).hypot(s.y - y) < MIN_SPOT_GAP) {
                return;
            }
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            spots.push(Spot {
                x,
                y,
                sigma: rng.gen_range(SPOT_SIGMA.0..SPOT_SIGMA.1),
                amplitude: sign * rng.gen_range(SPOT_AMPLITUDE.0..SPOT_AMPLITUDE.1),
            });
        };
        for (centre, radius) in lm.points().into_iter().zip(radii.as_array()) {
            for _ in 0..SPOT_ATTEMPTS_PER_REGION {
                let r = radius * 0.85 * rng.gen::<f64>().sqrt();
                let t = rng.gen_range(0.0..std::f64::consts::TAU);
                place(&mut rng, &mut spots, centre.0 + r * t.cos(), centre.1 + r * t.sin());
            }
        }
        for _ in 0..BACKGROUND_SPOT_ATTEMPTS {
            let x = rng.gen_range(0.15 * w..0.85 * w);
            let y = rng.gen_range(0.12 * h..0.88 * h);
            place(&mut rng, &mut spots, x, y);
        }
        Self { seed, spots }
    }

    pub fn render(&self, p: &Perturbation, noise_seed: u64) -> Image {
        let mut rng = StdRng::seed_from_u64(noise_seed ^ self.seed.rotate_left(17));
        let noise = Normal::new(0.0, p.noise_sigma.max(1e-12)).expect("valid sigma");
        let (w, h) = (WORKING_WIDTH as f64, WORKING_HEIGHT as f64);
        Image::from_fn(WORKING_WIDTH, WORKING_HEIGHT, |x, y| {
            let (fx, fy) = (x as f64 - p.shift_x, y as f64 - p.shift_y);
            // soft elliptical face on a darker background
            let e = ((fx - w / 2.0) / (0.46 * w)).powi(2) + ((fy - h / 2.0) / (0.47 * h)).powi(2);
            let mut v = 110.0 + 25.0 / (1.0 + (8.0 * (e - 1.0)).exp());
            for s in &self.spots {
                let d2 = (fx - s.x).powi(2) + (fy - s.y).powi(2);
                let k = 2.0 * s.sigma * s.sigma;
                if d2 < 12.0 * k {
                    v += s.amplitude * (-d2 / k).exp();
                }
            }
            let n = if p.noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            v * p.gain + n
        })
        .expect("working frame")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_turn_maps_pixels() {
        let img = Image::new(3, 2, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let r = rotate_quarter(&img);
        assert_eq!((r.width(), r.height()), (2, 3));
        // (x, y) -> (h - 1 - y, x)
        assert_eq!(r.get(1, 0), img.get(0, 0));
        assert_eq!(r.get(0, 2), img.get(2, 1));
        assert_eq!(rotate_quarter(&rotate_quarter(&rotate_quarter(&rotate_quarter(&img)))), img);
    }

    #[test]
    fn grid_centres_rotate_about_the_middle() {
        let g = BlobGrid::default();
        let a = g.centres(0.0, 1.0);
        let b = g.centres(std::f64::consts::FRAC_PI_2, 1.0);
        assert_eq!(a.len(), 25);
        // the middle blob is fixed
        assert!((a[12].0 - b[12].0).abs() < 1e-9 && (a[12].1 - b[12].1).abs() < 1e-9);
    }

    #[test]
    fn scenes_are_seed_deterministic() {
        let p = Perturbation {
            noise_sigma: 2.0,
            ..Perturbation::default()
        };
        assert_eq!(FaceScene::new(4).render(&p, 1), FaceScene::new(4).render(&p, 1));
        assert_ne!(FaceScene::new(4).render(&p, 1), FaceScene::new(5).render(&p, 1));
    }
}
