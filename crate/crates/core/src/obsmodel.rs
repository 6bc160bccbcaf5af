//! Sensor observation model.
//!
//! A high-resolution reference image stands in for the continuous scene. A
//! simulated capture warps it by the frame motion, filters it with the
//! product of the diffraction-limited lens OTF, the Shannon aberration MTF
//! and the detector-aperture OTF, point-samples it at the detector pitch and
//! adds seeded Gaussian noise.
//!
//! Coordinates follow one convention throughout the crate: pixel `c` of an
//! image covers the continuous interval `[c, c + 1)`, so its centre is at
//! `c + 0.5`. With a downsample factor `D`, LR coordinate `X` corresponds to
//! reference coordinate `D * X`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{bin_frequency, fft2d};
use crate::image::{GeomTransform, Image, TransformKind};
use crate::rng::{derive_seed, stream_rng};

/// Largest RMS wavefront error for which the Shannon formula is used.
pub const MAX_W_RMS: f64 = 0.18;

/// Imaging sensor description.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorParams {
    /// Wavelength in micrometres.
    pub wavelength: f64,
    pub f_number: f64,
    /// RMS wavefront aberration in waves.
    pub w_rms: f64,
    /// Active detector width as a fraction of the pixel pitch.
    pub fill_width: f64,
    /// Gaussian noise standard deviation in gray levels.
    pub noise_sigma: f64,
    /// Reference pixels per LR pixel along each axis.
    pub downsample_factor: usize,
    /// LR detector pitch in micrometres.
    pub pixel_pitch: f64,
    /// Width in reference pixels of the cosine taper applied before
    /// frequency-domain filtering (0 disables it).
    pub apodization: usize,
}

impl Default for SensorParams {
    fn default() -> Self {
        SensorParams {
            wavelength: 0.55,
            f_number: 4.0,
            w_rms: 0.05,
            fill_width: 1.0,
            noise_sigma: 1.0,
            downsample_factor: 4,
            pixel_pitch: 5.0,
            apodization: 16,
        }
    }
}

impl SensorParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::domain(format!("sensor parameter {what}")));
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return bad("wavelength must be positive");
        }
        if !(self.f_number > 0.0 && self.f_number.is_finite()) {
            return bad("f_number must be positive");
        }
        if !(0.0..=MAX_W_RMS).contains(&self.w_rms) {
            return bad("w_rms must lie in [0, 0.18]");
        }
        if !(self.fill_width > 0.0 && self.fill_width <= 1.0) {
            return bad("fill_width must lie in (0, 1]");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be non-negative");
        }
        if self.downsample_factor == 0 {
            return bad("downsample_factor must be at least 1");
        }
        if !(self.pixel_pitch > 0.0 && self.pixel_pitch.is_finite()) {
            return bad("pixel_pitch must be positive");
        }
        Ok(())
    }

    /// Optical cutoff frequency in cycles per reference pixel.
    pub fn cutoff(&self) -> f64 {
        let reference_pitch = self.pixel_pitch / self.downsample_factor as f64;
        reference_pitch / (self.wavelength * self.f_number)
    }

    /// Detector active width in reference pixels.
    pub fn detector_width(&self) -> f64 {
        self.fill_width * self.downsample_factor as f64
    }

    pub fn noiseless(mut self) -> Self {
        self.noise_sigma = 0.0;
        self
    }
}

/// Diffraction-limited OTF of a circular aperture at radial frequency `rho`
/// (cycles per reference pixel).
pub fn lens_otf(rho: f64, p: &SensorParams) -> f64 {
    diffraction(rho / p.cutoff())
}

fn diffraction(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else if u <= 0.0 {
        1.0
    } else {
        (2.0 / PI) * (u.acos() - u * (1.0 - u * u).sqrt())
    }
}

/// Shannon empirical aberration MTF. Equals 1 outside the optical passband,
/// where the lens OTF already vanishes.
pub fn aberration_otf(rho: f64, p: &SensorParams) -> f64 {
    shannon(rho / p.cutoff(), p.w_rms)
}

fn shannon(u: f64, w_rms: f64) -> f64 {
    if u > 1.0 || w_rms == 0.0 {
        return 1.0;
    }
    let k = w_rms / MAX_W_RMS;
    1.0 - k * k * (1.0 - 4.0 * (u - 0.5) * (u - 0.5))
}

#[inline]
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let a = PI * x;
        a.sin() / a
    }
}

/// Separable rectangular-aperture detector OTF; frequencies in cycles per
/// reference pixel.
pub fn detector_otf(fx: f64, fy: f64, p: &SensorParams) -> f64 {
    let d = p.detector_width();
    sinc(d * fx) * sinc(d * fy)
}

/// The complete transfer function for one sampling pitch.
#[derive(Debug, Clone, Copy)]
pub struct OtfChain {
    cutoff: f64,
    w_rms: f64,
    /// Detector width in reference pixels, `None` when the sampling pitch is
    /// the reference pitch itself.
    detector_width: Option<f64>,
}

impl OtfChain {
    /// Chain for the sensor sampling every `pitch_factor` reference pixels.
    pub fn new(p: &SensorParams, pitch_factor: usize) -> Self {
        OtfChain {
            cutoff: p.cutoff(),
            w_rms: p.w_rms,
            detector_width: (pitch_factor > 1).then_some(p.fill_width * pitch_factor as f64),
        }
    }

    pub fn transfer(&self, fx: f64, fy: f64) -> f64 {
        let u = (fx * fx + fy * fy).sqrt() / self.cutoff;
        let optics = diffraction(u) * shannon(u, self.w_rms);
        match self.detector_width {
            Some(d) => optics * sinc(d * fx) * sinc(d * fy),
            None => optics,
        }
    }

    /// Filters `img` and returns the result sampled at index positions
    /// `i + shift` along both axes (periodic boundary).
    fn filter(&self, img: &Image, shift: f64) -> Vec<f64> {
        let (w, h) = (img.width(), img.height());
        let mut buf: Vec<Complex64> = img.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft2d(&mut buf, w, h, false);
        let phase = |f: f64| Complex64::from_polar(1.0, 2.0 * PI * f * shift);
        let col_phase: Vec<Complex64> = (0..w).map(|c| phase(bin_frequency(c, w))).collect();
        for r in 0..h {
            let fy = bin_frequency(r, h);
            let row_phase = phase(fy);
            for c in 0..w {
                let fx = bin_frequency(c, w);
                let g = self.transfer(fx, fy);
                buf[r * w + c] *= col_phase[c] * row_phase * g;
            }
        }
        fft2d(&mut buf, w, h, true);
        buf.into_iter().map(|v| v.re).collect()
    }
}

/// Raised-cosine taper of width `margin` pulling the border toward the image
/// mean.
fn apodize(img: &Image, margin: usize) -> Image {
    if margin == 0 {
        return img.clone();
    }
    let mean = img.mean();
    let ramp = |i: usize, n: usize| {
        let d = i.min(n - 1 - i);
        if d >= margin {
            1.0
        } else {
            0.5 * (1.0 - (PI * (d as f64 + 0.5) / margin as f64).cos())
        }
    };
    let wx: Vec<f64> = (0..img.width()).map(|c| ramp(c, img.width())).collect();
    let wy: Vec<f64> = (0..img.height()).map(|r| ramp(r, img.height())).collect();
    Image::from_fn(img.width(), img.height(), |c, r| {
        mean + wx[c] * wy[r] * (img.get(c, r) - mean)
    })
}

/// Resamples `img` so that output pixel `p` shows the input at `motion(p)`
/// (continuous coordinates, pixel centres at `i + 0.5`).
pub fn warp(img: &Image, motion: &GeomTransform) -> Image {
    if motion.params() == GeomTransform::identity().params() {
        return img.clone();
    }
    Image::from_fn(img.width(), img.height(), |c, r| {
        let (x, y) = motion.apply(c as f64 + 0.5, r as f64 + 0.5);
        img.sample_clamped(x - 0.5, y - 0.5)
    })
}

fn cropped_to_multiple(reference: &Image, factor: usize) -> Result<Image> {
    let w = reference.width() / factor * factor;
    let h = reference.height() / factor * factor;
    if w == 0 || h == 0 {
        return Err(Error::domain(format!(
            "{}x{} reference is smaller than one {factor}x{factor} sensor pixel",
            reference.width(),
            reference.height()
        )));
    }
    if w == reference.width() && h == reference.height() {
        Ok(reference.clone())
    } else {
        reference.crop(0, 0, w, h)
    }
}

/// Senses `reference` through `chain`, sampling every `pitch` reference
/// pixels at the detector centre.
fn sense(reference: &Image, p: &SensorParams, pitch: usize) -> Result<Image> {
    if 2 * p.apodization > reference.width().min(reference.height()) {
        return Err(Error::domain(format!(
            "apodization margin {} too wide for a {}x{} reference",
            p.apodization,
            reference.width(),
            reference.height()
        )));
    }
    let tapered = apodize(reference, p.apodization);
    let chain = OtfChain::new(p, pitch);
    let shift = (pitch as f64 - 1.0) / 2.0;
    let filtered = chain.filter(&tapered, shift);
    let (w, h) = (reference.width() / pitch, reference.height() / pitch);
    let full_w = reference.width();
    Ok(Image::from_fn(w, h, |c, r| {
        filtered[r * pitch * full_w + c * pitch]
    }))
}

/// One simulated LR frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCapture {
    pub image: Image,
    /// Ground-truth motion in LR pixel units: maps this frame's coordinates
    /// to reference-frame coordinates.
    pub applied_transform: GeomTransform,
    pub seed: u64,
}

/// Renders what the sensor `p` records of `reference` moved by `motion`
/// (expressed in reference-pixel units). The reference is cropped to a
/// multiple of the downsample factor first.
pub fn simulate_capture(
    reference: &Image,
    motion: &GeomTransform,
    p: &SensorParams,
    seed: u64,
) -> Result<SimulatedCapture> {
    p.validate()?;
    let factor = p.downsample_factor;
    let reference = cropped_to_multiple(reference, factor)?;
    let warped = warp(&reference, motion);
    let mut image = sense(&warped, p, factor)?;
    if p.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, p.noise_sigma).expect("validated sigma");
        let mut rng = stream_rng(seed, 0x006e_6f69_7365);
        let data: Vec<f64> = image
            .data()
            .iter()
            .map(|&v| v + normal.sample(&mut rng))
            .collect();
        image = Image::new(image.width(), image.height(), data)?;
    }
    Ok(SimulatedCapture {
        image: image.clipped(),
        applied_transform: motion.rescaled(1.0 / factor as f64),
        seed,
    })
}

/// How frame motions are drawn for a synthetic sequence.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MotionSpec {
    pub kind: TransformKind,
    /// Translation amplitude in LR pixels per axis.
    pub amplitude: f64,
}

/// Largest per-entry deviation of a synthetic affine linear part from identity.
pub const MAX_AFFINE_DEVIATION: f64 = 0.02;

impl MotionSpec {
    pub fn translation(amplitude: f64) -> Self {
        MotionSpec {
            kind: TransformKind::Translation,
            amplitude,
        }
    }

    pub fn affine(amplitude: f64) -> Self {
        MotionSpec {
            kind: TransformKind::Affine,
            amplitude,
        }
    }

    /// Draws one LR-unit motion. Affine perturbations act about the centre
    /// of a `width x height` LR frame.
    pub fn draw(&self, rng: &mut impl Rng, width: usize, height: usize) -> GeomTransform {
        let a = self.amplitude;
        let mut uniform = |m: f64| {
            if m > 0.0 {
                rng.random_range(-m..=m)
            } else {
                0.0
            }
        };
        let (tx, ty) = (uniform(a), uniform(a));
        match self.kind {
            TransformKind::Translation => GeomTransform::translation(tx, ty),
            TransformKind::Affine => {
                let m = MAX_AFFINE_DEVIATION;
                let lin = [1.0 + uniform(m), uniform(m), uniform(m), 1.0 + uniform(m)];
                let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
                let about = GeomTransform::affine(lin[0], lin[1], lin[2], lin[3], 0.0, 0.0);
                let (lx, ly) = about.apply(cx, cy);
                GeomTransform::affine(lin[0], lin[1], lin[2], lin[3], cx - lx + tx, cy - ly + ty)
            }
        }
    }
}

/// Synthesizes `n_frames` captures of `reference`. Frame 0 is unmoved; every
/// later frame gets a motion drawn from `motion`. All randomness derives
/// from `seed`, and frames are rendered in parallel.
pub fn synthesize_sequence(
    reference: &Image,
    n_frames: usize,
    motion: MotionSpec,
    p: &SensorParams,
    seed: u64,
) -> Result<Vec<SimulatedCapture>> {
    p.validate()?;
    let factor = p.downsample_factor;
    let lr_w = reference.width() / factor;
    let lr_h = reference.height() / factor;
    let mut rng = stream_rng(seed, 0x6d6f_7469_6f6e);
    let motions: Vec<GeomTransform> = (0..n_frames)
        .map(|k| {
            if k == 0 {
                GeomTransform::identity()
            } else {
                motion.draw(&mut rng, lr_w, lr_h)
            }
        })
        .collect();
    motions
        .par_iter()
        .enumerate()
        .map(|(k, lr_motion)| {
            let frame_seed = derive_seed(seed, k as u64 + 1);
            let mut capture =
                simulate_capture(reference, &lr_motion.rescaled(factor as f64), p, frame_seed)?;
            capture.applied_transform = *lr_motion;
            Ok(capture)
        })
        .collect()
}

/// Noiseless ground truth at `sr_factor` times the LR sampling rate: the same
/// optics, with the detector and sampling at pitch
/// `downsample_factor / sr_factor` reference pixels.
pub fn render_hr_goal(reference: &Image, p: &SensorParams, sr_factor: usize) -> Result<Image> {
    p.validate()?;
    let factor = p.downsample_factor;
    if sr_factor == 0 || !factor.is_multiple_of(sr_factor) {
        return Err(Error::domain(format!(
            "sr_factor {sr_factor} does not divide downsample_factor {factor}"
        )));
    }
    let reference = cropped_to_multiple(reference, factor)?;
    Ok(sense(&reference, p, factor / sr_factor)?.clipped())
}

/// Reference image filtered by the LR sensor's full OTF chain without
/// decimation; value `i` is the detector response centred at reference
/// coordinate `i + 0.5`.
pub fn sensor_blur(reference: &Image, p: &SensorParams) -> Result<Image> {
    p.validate()?;
    let tapered = apodize(
        reference,
        p.apodization
            .min(reference.width().min(reference.height()) / 2),
    );
    let chain = OtfChain::new(p, p.downsample_factor);
    Image::new(
        reference.width(),
        reference.height(),
        chain.filter(&tapered, 0.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> SensorParams {
        SensorParams::default()
    }

    fn textured(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = stream_rng(seed, 0);
        let blobs: Vec<(f64, f64, f64, f64)> = (0..40)
            .map(|_| {
                (
                    rng.random_range(0.0..w as f64),
                    rng.random_range(0.0..h as f64),
                    rng.random_range(2.0..8.0),
                    rng.random_range(-60.0..60.0),
                )
            })
            .collect();
        Image::from_fn(w, h, |c, r| {
            let mut v = 128.0;
            for &(x, y, s, a) in &blobs {
                let d2 = (c as f64 - x).powi(2) + (r as f64 - y).powi(2);
                v += a * (-d2 / (2.0 * s * s)).exp();
            }
            v.clamp(20.0, 235.0)
        })
    }

    #[test]
    fn lens_otf_values() {
        let p = params();
        let rc = p.cutoff();
        assert_eq!(lens_otf(0.0, &p), 1.0);
        assert!(lens_otf(rc, &p).abs() < 1e-15);
        assert_eq!(lens_otf(2.0 * rc, &p), 0.0);
        let expected = (2.0 / PI) * (PI / 3.0 - 0.5 * 0.75f64.sqrt());
        assert!((lens_otf(0.5 * rc, &p) - expected).abs() < 1e-15);
        assert!((expected - 0.3910).abs() < 5e-5);
    }

    #[test]
    fn aberration_values() {
        let mut p = params();
        let rc = p.cutoff();
        p.w_rms = 0.0;
        for k in 0..10 {
            assert_eq!(aberration_otf(k as f64 * 0.1 * rc, &p), 1.0);
        }
        p.w_rms = 0.18;
        assert!(aberration_otf(0.5 * rc, &p).abs() < 1e-15);
        p.w_rms = 0.09;
        assert!((aberration_otf(0.5 * rc, &p) - 0.75).abs() < 1e-12);
        assert_eq!(aberration_otf(0.0, &p), 1.0);
    }

    #[test]
    fn detector_values() {
        let p = params();
        let d = p.detector_width();
        assert_eq!(d, 4.0);
        assert_eq!(detector_otf(0.0, 0.0, &p), 1.0);
        assert!(detector_otf(1.0 / d, 0.0, &p).abs() < 1e-15);
        assert!((detector_otf(0.125, 0.0, &p) - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn otf_factors_bounded() {
        let mut p = params();
        p.w_rms = 0.18;
        let chain = OtfChain::new(&p, 4);
        for i in 0..=40 {
            for j in 0..=40 {
                let (fx, fy) = (i as f64 / 80.0, j as f64 / 80.0);
                let rho = (fx * fx + fy * fy).sqrt();
                for g in [
                    lens_otf(rho, &p),
                    aberration_otf(rho, &p),
                    detector_otf(fx, fy, &p),
                    chain.transfer(fx, fy),
                ] {
                    assert!(g.abs() <= 1.0 + 1e-15);
                }
            }
        }
        assert_eq!(chain.transfer(0.0, 0.0), 1.0);
    }

    #[test]
    fn params_validation() {
        let mut p = params();
        p.w_rms = 0.2;
        assert!(p.validate().is_err());
        let mut p = params();
        p.fill_width = 0.0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.downsample_factor = 0;
        assert!(p.validate().is_err());
        assert!(params().validate().is_ok());
    }

    #[test]
    fn constant_reference_passes_unchanged() {
        let reference = Image::filled(64, 48, 128.0);
        let p = params().noiseless();
        let cap = simulate_capture(&reference, &GeomTransform::identity(), &p, 1).unwrap();
        assert_eq!((cap.image.width(), cap.image.height()), (16, 12));
        for &v in cap.image.data() {
            assert!((v - 128.0).abs() < 1e-6);
        }
    }

    #[test]
    fn reference_is_cropped_to_multiple() {
        let reference = Image::filled(66, 51, 10.0);
        let cap = simulate_capture(&reference, &GeomTransform::identity(), &params(), 1).unwrap();
        assert_eq!((cap.image.width(), cap.image.height()), (16, 12));
        assert!(simulate_capture(
            &Image::filled(3, 8, 1.0),
            &GeomTransform::identity(),
            &params(),
            1
        )
        .is_err());
    }

    #[test]
    fn noisy_capture_is_deterministic() {
        let reference = textured(96, 96, 3);
        let mut p = params();
        p.noise_sigma = 2.0;
        let t = GeomTransform::translation(1.3, -0.7);
        let a = simulate_capture(&reference, &t, &p, 99).unwrap();
        let b = simulate_capture(&reference, &t, &p, 99).unwrap();
        assert_eq!(a, b);
        let c = simulate_capture(&reference, &t, &p, 100).unwrap();
        assert_ne!(a.image, c.image);
        assert_eq!(a.applied_transform.params(), vec![1.3 / 4.0, -0.7 / 4.0]);
    }

    #[test]
    fn bars_above_nyquist_alias() {
        // period 6 reference px = 1.5 LR px, above the LR Nyquist limit of 2 LR px
        let reference = Image::from_fn(192, 192, |c, _| if c % 6 < 3 { 200.0 } else { 50.0 });
        let mut p = params().noiseless();
        p.apodization = 0;
        let cap = simulate_capture(&reference, &GeomTransform::identity(), &p, 0).unwrap();
        let row = cap.image.row(24);
        let n = row.len();
        assert_eq!(n, 48);
        let mean = row.iter().sum::<f64>() / n as f64;
        let amplitude = |k: usize| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, v) in row.iter().enumerate() {
                let a = 2.0 * PI * (k * i) as f64 / n as f64;
                re += (v - mean) * a.cos();
                im -= (v - mean) * a.sin();
            }
            2.0 * (re * re + im * im).sqrt() / n as f64
        };
        // reference fundamental (0.667 cycles/LR px) aliases to 0.333 cycles/LR px = bin 16
        let spectrum: Vec<f64> = (1..=n / 2).map(amplitude).collect();
        let peak = spectrum
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0
            + 1;
        assert_eq!(peak, 16);
        let reference_fundamental = 4.0 / PI * 75.0;
        let aliased = amplitude(16);
        assert!(aliased > 1.0, "aliased component vanished: {aliased}");
        assert!(
            aliased < reference_fundamental,
            "{aliased} vs {reference_fundamental}"
        );
    }

    #[test]
    fn sequence_structure_and_determinism() {
        let reference = textured(96, 96, 5);
        let p = params();
        let seq = synthesize_sequence(&reference, 5, MotionSpec::translation(1.0), &p, 42).unwrap();
        assert_eq!(seq.len(), 5);
        assert_eq!(seq[0].applied_transform, GeomTransform::identity());
        for cap in &seq[1..] {
            let [tx, ty] = cap.applied_transform.translation_part();
            assert!(tx.abs() <= 1.0 && ty.abs() <= 1.0);
        }
        let again =
            synthesize_sequence(&reference, 5, MotionSpec::translation(1.0), &p, 42).unwrap();
        assert_eq!(seq, again);
        let single =
            synthesize_sequence(&reference, 1, MotionSpec::translation(1.0), &p, 42).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].applied_transform, GeomTransform::identity());
    }

    #[test]
    fn affine_motion_is_bounded() {
        let reference = textured(96, 96, 6);
        let seq =
            synthesize_sequence(&reference, 6, MotionSpec::affine(0.5), &params(), 8).unwrap();
        for cap in &seq[1..] {
            let t = cap.applied_transform;
            assert_eq!(t.kind(), TransformKind::Affine);
            let [a, b, c, d] = t.linear();
            for dev in [a - 1.0, b, c, d - 1.0] {
                assert!(dev.abs() <= MAX_AFFINE_DEVIATION);
            }
            let (x, y) = t.apply(12.0, 12.0);
            assert!((x - 12.0).abs() <= 0.5 + 1e-12 && (y - 12.0).abs() <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn hr_goal_limit_and_errors() {
        let reference = textured(64, 64, 7);
        let p = params();
        let full = render_hr_goal(&reference, &p, 4).unwrap();
        assert_eq!((full.width(), full.height()), (64, 64));
        let optics_only = OtfChain::new(&p, 1);
        let expected = optics_only.filter(&apodize(&reference, p.apodization), 0.0);
        for (a, b) in full.data().iter().zip(&expected) {
            assert!((a - b.clamp(0.0, 255.0)).abs() < 1e-9);
        }
        assert!(render_hr_goal(&reference, &p, 3).is_err());
        assert!(render_hr_goal(&reference, &p, 0).is_err());
        let constant = render_hr_goal(&Image::filled(64, 64, 77.0), &p, 2).unwrap();
        assert!(constant.data().iter().all(|v| (v - 77.0).abs() < 1e-9));
    }

    #[test]
    fn hr_goal_preserves_mean() {
        let reference = textured(128, 96, 8);
        let mut p = params();
        p.apodization = 0;
        let goal = render_hr_goal(&reference, &p, 2).unwrap();
        assert_eq!((goal.width(), goal.height()), (64, 48));
        assert!((goal.mean() - reference.mean()).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn noiseless_chain_preserves_mean(seed in any::<u64>()) {
            let reference = textured(64, 64, seed);
            let mut p = params().noiseless();
            p.apodization = 0;
            let cap = simulate_capture(&reference, &GeomTransform::identity(), &p, 0).unwrap();
            prop_assert!((cap.image.mean() - reference.mean()).abs() < 1e-6);
        }

        #[test]
        fn noiseless_chain_is_linear(sa in any::<u64>(), sb in any::<u64>(), alpha in 0.1f64..0.6, beta in 0.1f64..0.4) {
            let a = textured(48, 48, sa);
            let b = textured(48, 48, sb);
            let mix = Image::from_fn(48, 48, |c, r| alpha * a.get(c, r) + beta * b.get(c, r));
            let p = params().noiseless();
            let id = GeomTransform::identity();
            let sim = |img: &Image| simulate_capture(img, &id, &p, 0).unwrap().image;
            let (ia, ib, im) = (sim(&a), sim(&b), sim(&mix));
            for i in 0..im.data().len() {
                let lin = alpha * ia.data()[i] + beta * ib.data()[i];
                prop_assert!((im.data()[i] - lin).abs() < 1e-6);
            }
        }
    }
}
