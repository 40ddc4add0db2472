//! Gaussian and difference-of-Gaussian pyramids.

use super::blur::gaussian_blur;
use super::raster::Raster;
use super::SiftParams;
use crate::error::{Error, Result};
use crate::image::Image;

/// Smallest input accepted by [`build_scale_space`], per side.
pub const MIN_IMAGE_SIZE: usize = 16;
/// Octaves stop once either side would drop below this.
pub const MIN_OCTAVE_SIZE: usize = 8;
/// Blur assumed to be already present in the input image.
pub const ASSUMED_INPUT_BLUR: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct Octave {
    /// `scales_per_octave + 3` progressively blurred rasters.
    pub gaussians: Vec<Raster>,
    /// `scales_per_octave + 2` adjacent differences of `gaussians`.
    pub dogs: Vec<Raster>,
}

impl Octave {
    pub fn width(&self) -> usize {
        self.gaussians[0].width()
    }

    pub fn height(&self) -> usize {
        self.gaussians[0].height()
    }
}

#[derive(Debug, Clone)]
pub struct ScaleSpace {
    pub octaves: Vec<Octave>,
    pub params: SiftParams,
}

impl ScaleSpace {
    /// Blur of gaussian level `level` relative to its own octave's sampling grid.
    pub fn level_sigma(&self, level: f64) -> f64 {
        self.params.level_sigma(level)
    }
}

pub fn build_scale_space(image: &Image, params: &SiftParams) -> Result<ScaleSpace> {
    params.validate()?;
    if image.width() < MIN_IMAGE_SIZE || image.height() < MIN_IMAGE_SIZE {
        return Err(Error::ImageTooSmall {
            width: image.width(),
            height: image.height(),
            min: MIN_IMAGE_SIZE,
        });
    }
    let s = params.scales_per_octave;
    let sigmas: Vec<f64> = (0..s + 3).map(|l| params.level_sigma(l as f64)).collect();
    // incremental blur taking level l-1 to level l
    let steps: Vec<f64> = sigmas
        .windows(2)
        .map(|w| (w[1] * w[1] - w[0] * w[0]).sqrt())
        .collect();

    let initial_blur = (sigmas[0] * sigmas[0] - ASSUMED_INPUT_BLUR * ASSUMED_INPUT_BLUR)
        .max(0.01)
        .sqrt();
    let mut base = gaussian_blur(&Raster::from_image(image), initial_blur);

    let mut octaves = Vec::with_capacity(params.octaves);
    for o in 0..params.octaves {
        if o > 0 {
            let prev: &Octave = octaves.last().expect("previous octave");
            let next = prev.gaussians[s].decimate();
            if next.width() < MIN_OCTAVE_SIZE || next.height() < MIN_OCTAVE_SIZE {
                break;
            }
            base = next;
        }
        let mut gaussians = Vec::with_capacity(s + 3);
        gaussians.push(base.clone());
        for step in &steps {
            let blurred = gaussian_blur(gaussians.last().expect("non-empty"), *step);
            gaussians.push(blurred);
        }
        let dogs = gaussians.windows(2).map(|w| w[1].sub(&w[0])).collect();
        octaves.push(Octave { gaussians, dogs });
    }
    Ok(ScaleSpace {
        octaves,
        params: params.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::blur::{gaussian_kernel, reflect};
    use super::*;

    /// Direct 2-D convolution in f64, independent of the separable path.
    fn direct_gaussian(image: &Image, sigma: f64) -> Vec<f64> {
        let (w, h) = (image.width(), image.height());
        let r = (3.0 * sigma).ceil() as isize;
        let mut taps = Vec::new();
        for i in -r..=r {
            taps.push((-((i * i) as f64) / (2.0 * sigma * sigma)).exp());
        }
        let norm: f64 = taps.iter().sum();
        let mut out = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for j in -r..=r {
                    for i in -r..=r {
                        let px = image.get(reflect(x as isize + i, w), reflect(y as isize + j, h));
                        acc += taps[(i + r) as usize] * taps[(j + r) as usize] * f64::from(px);
                    }
                }
                out[y * w + x] = acc / (norm * norm) / 255.0;
            }
        }
        out
    }

    #[test]
    fn level_counts_and_sizes() {
        let img = Image::filled(64, 48, 10).unwrap();
        let p = SiftParams::default();
        let ss = build_scale_space(&img, &p).unwrap();
        assert_eq!(ss.octaves.len(), 3, "48 -> 24 -> 12 -> 6 stops at the fourth octave");
        for (o, oct) in ss.octaves.iter().enumerate() {
            assert_eq!(oct.gaussians.len(), p.scales_per_octave + 3);
            assert_eq!(oct.dogs.len(), p.scales_per_octave + 2);
            assert_eq!(oct.width(), 64 >> o);
            assert_eq!(oct.height(), 48 >> o);
        }
    }

    #[test]
    fn constant_image_has_zero_dog() {
        let img = Image::filled(40, 40, 123).unwrap();
        let ss = build_scale_space(&img, &SiftParams::default()).unwrap();
        for oct in &ss.octaves {
            for d in &oct.dogs {
                assert!(d.data().iter().all(|v| v.abs() < 1e-6));
            }
        }
    }

    #[test]
    fn too_small_is_rejected() {
        let img = Image::filled(8, 8, 0).unwrap();
        assert!(matches!(
            build_scale_space(&img, &SiftParams::default()),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn level_sigmas_follow_geometric_series() {
        let p = SiftParams::default();
        for l in 0..6 {
            let expect = 1.6 * 2f64.powf(l as f64 / 3.0);
            assert!((p.level_sigma(l as f64) - expect).abs() < 1e-12);
        }
        assert!(gaussian_kernel(1.6).len() == 11);
    }

    #[test]
    fn impulse_levels_match_direct_convolution() {
        let (w, h) = (41, 41);
        let mut px = vec![0u8; w * h];
        px[20 * w + 20] = 255;
        let img = Image::new(w, h, px).unwrap();
        let p = SiftParams::default();
        let ss = build_scale_space(&img, &p).unwrap();
        let oct = &ss.octaves[0];

        // effective blur applied to the data at each level
        let applied: Vec<f64> = (0..p.scales_per_octave + 3)
            .map(|l| {
                let s = p.level_sigma(l as f64);
                (s * s - ASSUMED_INPUT_BLUR * ASSUMED_INPUT_BLUR).sqrt()
            })
            .collect();
        let oracles: Vec<Vec<f64>> = applied.iter().map(|&s| direct_gaussian(&img, s)).collect();
        for (l, g) in oct.gaussians.iter().enumerate() {
            let worst = g
                .data()
                .iter()
                .zip(&oracles[l])
                .map(|(a, b)| (f64::from(*a) - b).abs())
                .fold(0.0, f64::max);
            assert!(worst < 2e-3, "level {l}: {worst}");
        }

        // DoG magnitude at the impulse peaks at the same level in both pyramids
        let centre = 20 * w + 20;
        let ours: Vec<f64> = oct.dogs.iter().map(|d| f64::from(d.data()[centre]).abs()).collect();
        let oracle: Vec<f64> = oracles.windows(2).map(|p| (p[1][centre] - p[0][centre]).abs()).collect();
        let argmax = |v: &[f64]| {
            v.iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap()
        };
        assert_eq!(argmax(&ours), argmax(&oracle));
        for (a, b) in ours.iter().zip(&oracle) {
            assert!((a - b).abs() < 2e-3, "{ours:?} vs {oracle:?}");
        }
    }
}
