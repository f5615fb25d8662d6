//! Linear-light RGB raster used by every stage of the pipeline.

use crate::error::{Error, Result};

/// Linear RGB triple.
pub type Rgb = [f64; 3];

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Roi {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Roi {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.x.checked_add(self.w).is_some_and(|r| r <= width)
            && self.y.checked_add(self.h).is_some_and(|b| b <= height)
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.w && y >= self.y && y < self.y + self.h
    }

    pub fn overlaps(&self, other: &Roi) -> bool {
        self.x < other.x + other.w
            && other.x < self.x + self.w
            && self.y < other.y + other.h
            && other.y < self.y + self.h
    }
}

/// H×W×3 image in linear RGB with every component in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearImage {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl LinearImage {
    /// Builds an image from row-major pixels, clamping every component to `[0, 1]`.
    ///
    /// Non-finite components are rejected rather than clamped.
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} pixels", width * height),
                actual: format!("{} pixels", pixels.len()),
            });
        }
        let mut pixels = pixels;
        for (i, px) in pixels.iter_mut().enumerate() {
            for v in px.iter_mut() {
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("pixel {i}")));
                }
                *v = v.clamp(0.0, 1.0);
            }
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: Rgb) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Rgb) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    /// Per-channel mean over the whole image.
    pub fn channel_means(&self) -> Rgb {
        let mut sum = [0.0; 3];
        for px in &self.pixels {
            for c in 0..3 {
                sum[c] += px[c];
            }
        }
        let n = self.pixels.len() as f64;
        sum.map(|s| s / n)
    }

    /// Pixels inside `roi`, row-major. The caller checks bounds.
    pub fn roi_pixels(&self, roi: &Roi) -> impl Iterator<Item = Rgb> + '_ {
        let roi = *roi;
        (roi.y..roi.y + roi.h)
            .flat_map(move |y| (roi.x..roi.x + roi.w).map(move |x| self.get(x, y)))
    }

    pub fn full_roi(&self) -> Roi {
        Roi::new(0, 0, self.width, self.height)
    }

    /// Applies `f` to every pixel and re-validates the result.
    pub(crate) fn map_pixels(&self, f: impl Fn(usize, Rgb) -> Rgb + Sync) -> Result<Self> {
        use rayon::prelude::*;
        let pixels: Vec<Rgb> = self
            .pixels
            .par_iter()
            .enumerate()
            .map(|(i, &px)| f(i, px))
            .collect();
        Self::new(self.width, self.height, pixels)
    }

    pub(crate) fn pixels_mut(&mut self) -> &mut [Rgb] {
        &mut self.pixels
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_on_construction() {
        let img = LinearImage::new(2, 1, vec![[-0.5, 0.5, 1.5], [0.2, 0.3, 0.4]]).unwrap();
        assert_eq!(img.get(0, 0), [0.0, 0.5, 1.0]);
        assert_eq!(img.get(1, 0), [0.2, 0.3, 0.4]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(LinearImage::new(0, 3, vec![]).is_err());
        assert!(LinearImage::new(2, 2, vec![[0.0; 3]; 3]).is_err());
        assert!(LinearImage::new(1, 1, vec![[f64::NAN, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn channel_means() {
        let img = LinearImage::new(2, 1, vec![[0.2, 0.4, 0.0], [0.4, 0.4, 1.0]]).unwrap();
        let m = img.channel_means();
        assert!((m[0] - 0.3).abs() < 1e-15);
        assert!((m[1] - 0.4).abs() < 1e-15);
        assert!((m[2] - 0.5).abs() < 1e-15);
    }
}
