use super::Image;
use crate::error::{Error, Result};

pub const DEFAULT_PSNR_CAP: f64 = 99.0;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QualityReport {
    pub mse: f64,
    pub psnr: f64,
    pub valid_margin: usize,
}

/// PSNR on the 8-bit scale, saturating at `cap` for a perfect match.
pub fn psnr_from_mse(mse: f64, cap: f64) -> f64 {
    if mse > 0.0 {
        (10.0 * (255.0 * 255.0 / mse).log10()).min(cap)
    } else {
        cap
    }
}

/// MSE and PSNR between `a` and `b`, ignoring `margin` pixels at each border.
pub fn compare(a: &Image, b: &Image, margin: usize) -> Result<QualityReport> {
    compare_with_cap(a, b, margin, DEFAULT_PSNR_CAP)
}

pub fn compare_with_cap(a: &Image, b: &Image, margin: usize, cap: f64) -> Result<QualityReport> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::domain(format!(
            "cannot compare {}x{} with {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    if 2 * margin >= a.width().min(a.height()) {
        return Err(Error::domain(format!(
            "margin {margin} leaves no interior in a {}x{} image",
            a.width(),
            a.height()
        )));
    }
    let mut sum = 0.0;
    for r in margin..a.height() - margin {
        let (ra, rb) = (a.row(r), b.row(r));
        for c in margin..a.width() - margin {
            let d = ra[c] - rb[c];
            sum += d * d;
        }
    }
    let n = (a.width() - 2 * margin) * (a.height() - 2 * margin);
    let mse = sum / n as f64;
    Ok(QualityReport {
        mse,
        psnr: psnr_from_mse(mse, cap),
        valid_margin: margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identical_images_hit_the_cap() {
        let a = Image::from_fn(16, 16, |c, r| (c * r) as f64);
        let q = compare(&a, &a, 2).unwrap();
        assert_eq!(q.mse, 0.0);
        assert_eq!(q.psnr, 99.0);
    }

    #[test]
    fn unit_offset() {
        let a = Image::from_fn(16, 16, |c, r| (c + r) as f64);
        let b = a.map(|v| v + 1.0);
        let q = compare(&a, &b, 0).unwrap();
        assert!((q.mse - 1.0).abs() < 1e-12);
        assert!((q.psnr - 48.130803608679).abs() < 1e-9);
        assert!((q.psnr - 20.0 * 255f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn matches_direct_sum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let a = Image::from_fn(13, 9, |_, _| rng.random_range(0.0..255.0));
        let b = Image::from_fn(13, 9, |_, _| rng.random_range(0.0..255.0));
        let mut direct = 0.0;
        for i in 0..a.data().len() {
            direct += (a.data()[i] - b.data()[i]).powi(2);
        }
        direct /= a.data().len() as f64;
        let q = compare(&a, &b, 0).unwrap();
        assert!((q.mse - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn errors() {
        let a = Image::filled(8, 8, 0.0);
        assert!(compare(&a, &Image::filled(8, 7, 0.0), 0).is_err());
        assert!(compare(&a, &a, 4).is_err());
    }

    #[test]
    fn psnr_decreases_with_mse() {
        let mut prev = f64::INFINITY;
        for k in 1..200 {
            let p = psnr_from_mse(k as f64 * 0.37, 1e9);
            assert!(p < prev);
            prev = p;
        }
    }
}
