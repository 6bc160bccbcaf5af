//! Catmull-Rom bicubic interpolation (a = -0.5).
//!
//! The kernel is interpolating and reproduces affine functions exactly, which
//! is what the scattered-sample model fit relies on.

use super::Image;
use crate::error::{Error, Result};

/// Catmull-Rom weights for the taps at offsets -1, 0, +1, +2 from `floor(x)`,
/// given the fractional position `t` in `[0, 1)`.
#[inline]
pub fn catmull_rom_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// One-dimensional interpolation stencil: four clamped source indices and
/// their kernel weights. Computing it once lets the same position be
/// evaluated on many grids of equal size.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub idx: [usize; 4],
    pub w: [f64; 4],
}

impl Stencil {
    /// Stencil for index coordinate `x` on an axis of length `len`.
    /// `x` is expected in `[0, len - 1]`; indices are clamped to the axis.
    #[inline]
    pub fn new(x: f64, len: usize) -> Self {
        let base = x.floor();
        let t = x - base;
        let base = base as isize;
        let last = len as isize - 1;
        let mut idx = [0usize; 4];
        for (k, slot) in idx.iter_mut().enumerate() {
            *slot = (base - 1 + k as isize).clamp(0, last) as usize;
        }
        Stencil {
            idx,
            w: catmull_rom_weights(t),
        }
    }

    #[inline]
    pub fn apply_1d(&self, samples: &[f64]) -> f64 {
        (0..4).map(|k| self.w[k] * samples[self.idx[k]]).sum()
    }

    /// Applies `self` along x and `sy` along y to a row-major grid.
    #[inline]
    pub fn apply_2d(&self, sy: &Stencil, data: &[f64], stride: usize) -> f64 {
        let mut acc = 0.0;
        for ky in 0..4 {
            let row = &data[sy.idx[ky] * stride..];
            let mut r = 0.0;
            for kx in 0..4 {
                r += self.w[kx] * row[self.idx[kx]];
            }
            acc += sy.w[ky] * r;
        }
        acc
    }
}

/// Bicubic interpolant of `img` at index coordinates `(x, y)`, where pixel
/// `(c, r)` sits at `(c, r)`. The coordinate must lie inside
/// `[0, width-1] x [0, height-1]`.
pub fn sample_bicubic(img: &Image, x: f64, y: f64) -> Result<f64> {
    let (w, h) = (img.width(), img.height());
    if !(x >= 0.0 && x <= (w - 1) as f64 && y >= 0.0 && y <= (h - 1) as f64) {
        return Err(Error::domain(format!(
            "sample ({x}, {y}) outside [0, {}] x [0, {}]",
            w - 1,
            h - 1
        )));
    }
    let sx = Stencil::new(x, w);
    let sy = Stencil::new(y, h);
    Ok(sx.apply_2d(&sy, img.data(), w))
}
