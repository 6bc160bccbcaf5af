//! Single-channel floating-point rasters and the shared resampling kernel.
//!
//! Every stage of the pipeline exchanges [`Image`] values. Samples are kept
//! as `f64` on the nominal 8-bit scale `[0, 255]`; quantization happens only
//! when an image is written as PGM.

mod bicubic;
pub mod io;
pub mod metrics;
pub mod transform;

pub use bicubic::{catmull_rom_weights, sample_bicubic, Stencil};
pub use metrics::{compare, compare_with_cap, QualityReport, DEFAULT_PSNR_CAP};
pub use transform::{GeomTransform, Sidecar, TransformKind};

use crate::error::{Error, Result};

/// Row-major grayscale raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::domain(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::domain(format!(
                "image data has {} samples, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite sample at ({}, {})",
                i % width,
                i / width
            )));
        }
        Ok(Image {
            width,
            height,
            data,
        })
    }

    /// Constant image. Panics on zero dimensions or a non-finite value.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Image::new(width, height, vec![value; width * height]).expect("valid constant image")
    }

    /// Builds an image by evaluating `f(column, row)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(c, r));
            }
        }
        Image::new(width, height, data).expect("from_fn produced an invalid image")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Pixel access with indices clamped to the image (edge replication).
    #[inline]
    pub fn get_clamped(&self, col: isize, row: isize) -> f64 {
        let c = col.clamp(0, self.width as isize - 1) as usize;
        let r = row.clamp(0, self.height as isize - 1) as usize;
        self.data[r * self.width + c]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.data.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.data.len() as f64
    }

    /// Bicubic sample with the coordinate clamped into the image first.
    pub fn sample_clamped(&self, x: f64, y: f64) -> f64 {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let sx = Stencil::new(x, self.width);
        let sy = Stencil::new(y, self.height);
        sx.apply_2d(&sy, &self.data, self.width)
    }

    /// Top-left `width x height` sub-image.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Image> {
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::domain(format!(
                "crop {width}x{height}+{x0}+{y0} exceeds {}x{} image",
                self.width, self.height
            )));
        }
        Ok(Image::from_fn(width, height, |c, r| {
            self.get(x0 + c, y0 + r)
        }))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image::new(
            self.width,
            self.height,
            self.data.iter().map(|&v| f(v)).collect(),
        )
        .expect("map produced an invalid image")
    }

    /// Clamps every sample into `[0, 255]`.
    pub fn clipped(&self) -> Image {
        self.map(|v| v.clamp(0.0, 255.0))
    }

    /// Image rotated by 90 degrees counter-clockwise.
    pub fn rotated_90(&self) -> Image {
        let (w, h) = (self.width, self.height);
        Image::from_fn(h, w, |c, r| self.get(w - 1 - r, c))
    }

    /// Inverse of [`Image::rotated_90`].
    pub fn rotated_270(&self) -> Image {
        let (w, h) = (self.width, self.height);
        Image::from_fn(h, w, |c, r| self.get(r, h - 1 - c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_construction() {
        assert!(Image::new(0, 3, vec![]).is_err());
        assert!(Image::new(2, 2, vec![0.0; 3]).is_err());
        assert!(Image::new(2, 1, vec![0.0, f64::NAN]).is_err());
        assert!(Image::new(1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn rotations_are_inverse() {
        let img = Image::from_fn(5, 3, |c, r| (c * 10 + r) as f64);
        let rot = img.rotated_90();
        assert_eq!((rot.width(), rot.height()), (3, 5));
        assert_eq!(rot.rotated_270(), img);
        assert_eq!(img.rotated_90().rotated_90().rotated_90().rotated_90(), img);
    }

    #[test]
    fn crop_checks_bounds() {
        let img = Image::from_fn(4, 4, |c, r| (c + 4 * r) as f64);
        let sub = img.crop(1, 2, 2, 2).unwrap();
        assert_eq!(sub.data(), &[9.0, 10.0, 13.0, 14.0]);
        assert!(img.crop(3, 0, 2, 1).is_err());
    }
}
