use crate::image::Image;

/// Real-valued single-channel raster used inside the scale space.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Raster {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), width * height, "raster buffer size");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![0.0; width * height])
    }

    /// Intensities mapped to [0, 1].
    pub fn from_image(image: &Image) -> Self {
        let data = image.pixels().iter().map(|&p| f32::from(p) / 255.0).collect();
        Self::new(image.width(), image.height(), data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v;
    }

    pub fn row(&self, y: usize) -> &[f32] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Every second pixel in both axes.
    pub fn decimate(&self) -> Raster {
        let w = self.width / 2;
        let h = self.height / 2;
        let mut out = Vec::with_capacity(w * h);
        for y in 0..h {
            let row = self.row(2 * y);
            out.extend((0..w).map(|x| row[2 * x]));
        }
        Raster::new(w, h, out)
    }

    pub fn sub(&self, other: &Raster) -> Raster {
        assert_eq!((self.width, self.height), (other.width, other.height));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Raster::new(self.width, self.height, data)
    }
}
