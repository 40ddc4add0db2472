//! Separable Gaussian blur with symmetric (edge-repeating) reflection at the borders.

use super::raster::Raster;

/// Normalized 1-D Gaussian taps for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f32> {
    assert!(sigma > 0.0, "sigma must be positive");
    let radius = (3.0 * sigma).ceil() as isize;
    let denom = 2.0 * sigma * sigma;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / denom).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| (t / sum) as f32).collect()
}

/// Maps any integer index into `0..len` by symmetric reflection (`-1 -> 0`, `len -> len - 1`).
#[inline]
pub fn reflect(i: isize, len: usize) -> usize {
    let n = len as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    if m < n {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

pub fn gaussian_blur(src: &Raster, sigma: f64) -> Raster {
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let (w, h) = (src.width(), src.height());

    let mut horizontal = Raster::zeros(w, h);
    let mut padded = vec![0.0f32; w + 2 * radius as usize];
    for y in 0..h {
        let row = src.row(y);
        for (k, slot) in padded.iter_mut().enumerate() {
            *slot = row[reflect(k as isize - radius, w)];
        }
        for x in 0..w {
            let window = &padded[x..x + kernel.len()];
            let acc: f32 = window.iter().zip(&kernel).map(|(a, b)| a * b).sum();
            horizontal.set(x, y, acc);
        }
    }

    let mut out = Raster::zeros(w, h);
    let rows: Vec<usize> = (0..h + 2 * radius as usize)
        .map(|k| reflect(k as isize - radius, h))
        .collect();
    let mut acc = vec![0.0f32; w];
    for y in 0..h {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for (t, &tap) in kernel.iter().enumerate() {
            let row = horizontal.row(rows[y + t]);
            for (a, &v) in acc.iter_mut().zip(row) {
                *a += tap * v;
            }
        }
        for (x, &a) in acc.iter().enumerate() {
            out.set(x, y, a);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand::rngs::StdRng;

    /// Direct 2-D convolution with the outer-product kernel, same border rule.
    fn direct_blur(src: &Raster, sigma: f64) -> Raster {
        let k = gaussian_kernel(sigma);
        let r = (k.len() / 2) as isize;
        let mut out = Raster::zeros(src.width(), src.height());
        for y in 0..src.height() {
            for x in 0..src.width() {
                let mut acc = 0.0f64;
                for j in -r..=r {
                    for i in -r..=r {
                        let sx = reflect(x as isize + i, src.width());
                        let sy = reflect(y as isize + j, src.height());
                        acc += f64::from(k[(i + r) as usize]) * f64::from(k[(j + r) as usize])
                            * f64::from(src.get(sx, sy));
                    }
                }
                out.set(x, y, acc as f32);
            }
        }
        out
    }

    #[test]
    fn reflect_indices() {
        assert_eq!(reflect(-1, 5), 0);
        assert_eq!(reflect(-2, 5), 1);
        assert_eq!(reflect(5, 5), 4);
        assert_eq!(reflect(6, 5), 3);
        assert_eq!(reflect(2, 5), 2);
        // radius larger than the raster keeps reflecting
        assert_eq!(reflect(-7, 3), 0);
        assert!((-50..50).all(|i| reflect(i, 1) == 0));
    }

    #[test]
    fn kernel_is_normalized_and_sized() {
        for sigma in [0.5, 1.0, 1.6, 2.7] {
            let k = gaussian_kernel(sigma);
            assert_eq!(k.len(), 2 * (3.0 * sigma).ceil() as usize + 1);
            let s: f32 = k.iter().sum();
            assert!((s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn separable_matches_direct_convolution() {
        let mut rng = StdRng::seed_from_u64(7);
        for sigma in [0.8, 1.6, 2.5, 4.0] {
            let data = (0..32 * 32).map(|_| rng.gen::<f32>()).collect();
            let src = Raster::new(32, 32, data);
            let a = gaussian_blur(&src, sigma);
            let b = direct_blur(&src, sigma);
            let worst = a
                .data()
                .iter()
                .zip(b.data())
                .map(|(p, q)| (p - q).abs())
                .fold(0.0f32, f32::max);
            assert!(worst < 1e-4, "sigma {sigma}: max deviation {worst}");
        }
    }

    #[test]
    fn constant_is_preserved() {
        let src = Raster::new(9, 6, vec![0.37; 54]);
        let out = gaussian_blur(&src, 3.0);
        assert!(out.data().iter().all(|&v| (v - 0.37).abs() < 1e-6));
    }
}
