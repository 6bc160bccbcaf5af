//! Two-dimensional complex FFT on row-major buffers.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// In-place 2-D DFT. The inverse transform is normalized by `1 / (w h)`.
pub(crate) fn fft2d(buf: &mut [Complex64], width: usize, height: usize, inverse: bool) {
    debug_assert_eq!(buf.len(), width * height);
    let mut planner = FftPlanner::new();
    let (row_fft, col_fft) = if inverse {
        (
            planner.plan_fft_inverse(width),
            planner.plan_fft_inverse(height),
        )
    } else {
        (
            planner.plan_fft_forward(width),
            planner.plan_fft_forward(height),
        )
    };
    for row in buf.chunks_exact_mut(width) {
        row_fft.process(row);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); height];
    for c in 0..width {
        for r in 0..height {
            column[r] = buf[r * width + c];
        }
        col_fft.process(&mut column);
        for r in 0..height {
            buf[r * width + c] = column[r];
        }
    }
    if inverse {
        let norm = 1.0 / (width * height) as f64;
        for v in buf.iter_mut() {
            *v *= norm;
        }
    }
}

/// Signed frequency in cycles per sample of DFT bin `k` on an axis of length `n`.
#[inline]
pub(crate) fn bin_frequency(k: usize, n: usize) -> f64 {
    if 2 * k <= n {
        k as f64 / n as f64
    } else {
        k as f64 / n as f64 - 1.0
    }
}
