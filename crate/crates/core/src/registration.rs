//! Sub-pixel registration of frames against a reference frame.
//!
//! Coarse-to-fine Gauss-Newton on the linearized brightness-constancy error.
//! At each level the target is warped into the reference frame by the
//! current estimate, and the normal equations built from the target
//! gradients at the warped positions give a parameter update. An update
//! that increases the mean squared residual is halved up to
//! [`MAX_STEP_HALVINGS`] times, so accepted iterations never increase it.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{GeomTransform, Image, Stencil, TransformKind};

pub const MAX_STEP_HALVINGS: usize = 5;
/// The pyramid stops before a level would be smaller than this on a side.
pub const MIN_LEVEL_SIZE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegistrationOptions {
    pub pyramid_levels: usize,
    pub max_iterations: usize,
    /// Convergence threshold on the largest pixel displacement of the update.
    pub update_tolerance: f64,
    /// Gaussian pre-blur applied at every level, in that level's pixels.
    pub smoothing_sigma: f64,
    /// Reference pixels excluded at each border of the finest level; halved
    /// per coarser level.
    pub border: usize,
}

impl Default for RegistrationOptions {
    fn default() -> Self {
        RegistrationOptions {
            pyramid_levels: 3,
            max_iterations: 50,
            update_tolerance: 1e-4,
            smoothing_sigma: 1.0,
            border: 4,
        }
    }
}

impl RegistrationOptions {
    pub fn validate(&self) -> Result<()> {
        if self.pyramid_levels == 0 {
            return Err(Error::domain("pyramid_levels must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(Error::domain("max_iterations must be at least 1"));
        }
        if self.update_tolerance.is_nan() || self.update_tolerance <= 0.0 {
            return Err(Error::domain("update_tolerance must be positive"));
        }
        if !(self.smoothing_sigma >= 0.0 && self.smoothing_sigma.is_finite()) {
            return Err(Error::domain("smoothing_sigma must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationResult {
    /// Maps target-frame coordinates into reference-frame coordinates.
    pub transform: GeomTransform,
    /// RMS intensity difference over the valid region at the finest level.
    pub residual_rms: f64,
    /// Total accepted iterations over all levels.
    pub iterations: usize,
    pub converged: bool,
    /// Mean squared residual after every accepted iteration of every level,
    /// coarsest level first.
    pub residual_trace: Vec<Vec<f64>>,
}

impl RegistrationResult {
    fn identity() -> Self {
        RegistrationResult {
            transform: GeomTransform::identity(),
            residual_rms: 0.0,
            iterations: 0,
            converged: true,
            residual_trace: Vec::new(),
        }
    }
}

/// Separable Gaussian blur with edge replication.
pub fn gaussian_blur(img: &Image, sigma: f64) -> Image {
    if sigma <= 0.0 {
        return img.clone();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= norm);
    let (w, h) = (img.width(), img.height());
    let horizontal = Image::from_fn(w, h, |c, r| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, wt)| wt * img.get_clamped(c as isize + k as isize - radius, r as isize))
            .sum()
    });
    Image::from_fn(w, h, |c, r| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, wt)| {
                wt * horizontal.get_clamped(c as isize, r as isize + k as isize - radius)
            })
            .sum()
    })
}

/// 2x2 block average. Pixel `i` of the result covers pixels `2i, 2i+1`, so
/// continuous coordinates halve exactly.
fn decimate(img: &Image) -> Image {
    let (w, h) = (img.width() / 2, img.height() / 2);
    Image::from_fn(w, h, |c, r| {
        0.25 * (img.get(2 * c, 2 * r)
            + img.get(2 * c + 1, 2 * r)
            + img.get(2 * c, 2 * r + 1)
            + img.get(2 * c + 1, 2 * r + 1))
    })
}

fn level_count(w: usize, h: usize, requested: usize) -> usize {
    let mut levels = 1;
    let mut size = w.min(h);
    while levels < requested && size / 2 >= MIN_LEVEL_SIZE {
        size /= 2;
        levels += 1;
    }
    levels
}

/// Pyramid of `levels` images, finest first.
fn pyramid(img: &Image, levels: usize) -> Vec<Image> {
    let mut out = vec![img.clone()];
    for _ in 1..levels {
        let next = decimate(&gaussian_blur(out.last().unwrap(), 1.0));
        out.push(next);
    }
    out
}

/// Central-difference gradients (one-sided at the borders).
fn gradients(img: &Image) -> (Image, Image) {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let gx = Image::from_fn(img.width(), img.height(), |c, r| {
        let (c, r) = (c as isize, r as isize);
        let (l, rr) = ((c - 1).max(0), (c + 1).min(w - 1));
        (img.get_clamped(rr, r) - img.get_clamped(l, r)) / (rr - l).max(1) as f64
    });
    let gy = Image::from_fn(img.width(), img.height(), |c, r| {
        let (c, r) = (c as isize, r as isize);
        let (u, d) = ((r - 1).max(0), (r + 1).min(h - 1));
        (img.get_clamped(c, d) - img.get_clamped(c, u)) / (d - u).max(1) as f64
    });
    (gx, gy)
}

struct Level {
    reference: Image,
    target: Image,
    grad_x: Image,
    grad_y: Image,
    border: usize,
}

/// Warp estimate: maps reference-frame coordinates to target coordinates.
#[derive(Clone, Copy)]
struct Warp {
    kind: TransformKind,
    p: [f64; 6],
}

impl Warp {
    fn identity(kind: TransformKind) -> Self {
        Warp {
            kind,
            p: [1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        }
    }

    fn transform(&self) -> GeomTransform {
        let [a, b, c, d, tx, ty] = self.p;
        match self.kind {
            TransformKind::Translation => GeomTransform::translation(tx, ty),
            TransformKind::Affine => GeomTransform::affine(a, b, c, d, tx, ty),
        }
    }

    fn n(&self) -> usize {
        self.kind.n_params()
    }

    /// Adds `step * delta`, where `delta` is in the kind's parameter order.
    fn stepped(&self, delta: &DVector<f64>, step: f64) -> Self {
        let mut out = *self;
        match self.kind {
            TransformKind::Translation => {
                out.p[4] += step * delta[0];
                out.p[5] += step * delta[1];
            }
            TransformKind::Affine => {
                for k in 0..6 {
                    out.p[k] += step * delta[k];
                }
            }
        }
        out
    }

    fn rescaled(&self, factor: f64) -> Self {
        let mut out = *self;
        out.p[4] *= factor;
        out.p[5] *= factor;
        out
    }
}

/// Largest displacement of an update over the corners of a `w x h` frame.
fn displacement(kind: TransformKind, delta: &DVector<f64>, w: f64, h: f64) -> f64 {
    match kind {
        TransformKind::Translation => (delta[0] * delta[0] + delta[1] * delta[1]).sqrt(),
        TransformKind::Affine => [(0.0, 0.0), (w, 0.0), (0.0, h), (w, h)]
            .iter()
            .map(|&(x, y)| {
                let dx = delta[0] * x + delta[1] * y + delta[4];
                let dy = delta[2] * x + delta[3] * y + delta[5];
                (dx * dx + dy * dy).sqrt()
            })
            .fold(0.0, f64::max),
    }
}

impl Level {
    /// Mean squared residual over the valid region and its pixel count.
    fn residual(&self, warp: &Warp) -> (f64, usize) {
        let mut sum = 0.0;
        let mut count = 0;
        self.for_valid(warp, |_, _, sx, sy, rv| {
            let e = sx.apply_2d(&sy, self.target.data(), self.target.width()) - rv;
            sum += e * e;
            count += 1;
        });
        if count == 0 {
            (f64::INFINITY, 0)
        } else {
            (sum / count as f64, count)
        }
    }

    /// Visits every reference pixel whose warped bicubic footprint lies
    /// inside the target.
    fn for_valid(&self, warp: &Warp, mut f: impl FnMut(f64, f64, Stencil, Stencil, f64)) {
        let t = warp.transform();
        let (w, h) = (self.reference.width(), self.reference.height());
        let (tw, th) = (self.target.width(), self.target.height());
        let b = self.border;
        if 2 * b >= w.min(h) {
            return;
        }
        for r in b..h - b {
            for c in b..w - b {
                let (qx, qy) = (c as f64 + 0.5, r as f64 + 0.5);
                let (sx, sy) = t.apply(qx, qy);
                let (ix, iy) = (sx - 0.5, sy - 0.5);
                if ix < 1.0 || iy < 1.0 || ix > tw as f64 - 2.0 || iy > th as f64 - 2.0 {
                    continue;
                }
                f(
                    qx,
                    qy,
                    Stencil::new(ix, tw),
                    Stencil::new(iy, th),
                    self.reference.get(c, r),
                );
            }
        }
    }

    /// Gauss-Newton normal equations `(J^T J, -J^T e)` at `warp`.
    fn normal_equations(&self, warp: &Warp) -> (DMatrix<f64>, DVector<f64>) {
        let n = warp.n();
        let mut jtj = DMatrix::zeros(n, n);
        let mut jte = DVector::zeros(n);
        let stride = self.target.width();
        let mut row = [0.0f64; 6];
        self.for_valid(warp, |qx, qy, sx, sy, rv| {
            let e = sx.apply_2d(&sy, self.target.data(), stride) - rv;
            let gx = sx.apply_2d(&sy, self.grad_x.data(), stride);
            let gy = sx.apply_2d(&sy, self.grad_y.data(), stride);
            match warp.kind {
                TransformKind::Translation => {
                    row[0] = gx;
                    row[1] = gy;
                }
                TransformKind::Affine => {
                    row = [gx * qx, gx * qy, gy * qx, gy * qy, gx, gy];
                }
            }
            for i in 0..n {
                jte[i] -= row[i] * e;
                for j in i..n {
                    jtj[(i, j)] += row[i] * row[j];
                }
            }
        });
        for i in 0..n {
            for j in 0..i {
                jtj[(i, j)] = jtj[(j, i)];
            }
        }
        (jtj, jte)
    }
}

enum LevelOutcome {
    Converged,
    Stalled,
    Singular,
}

fn refine_level(
    level: &Level,
    warp: &mut Warp,
    opts: &RegistrationOptions,
    trace: &mut Vec<f64>,
    iterations: &mut usize,
) -> LevelOutcome {
    let (w, h) = (
        level.reference.width() as f64,
        level.reference.height() as f64,
    );
    let (mut current, _) = level.residual(warp);
    if !current.is_finite() {
        return LevelOutcome::Singular;
    }
    for _ in 0..opts.max_iterations {
        let (jtj, jte) = level.normal_equations(warp);
        let delta = match jtj.clone().cholesky() {
            Some(ch) => ch.solve(&jte),
            None => return LevelOutcome::Singular,
        };
        if delta.iter().any(|v| !v.is_finite()) {
            return LevelOutcome::Singular;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_STEP_HALVINGS {
            let candidate = warp.stepped(&delta, step);
            let (res, _) = level.residual(&candidate);
            if res <= current {
                accepted = Some((candidate, res));
                break;
            }
            step *= 0.5;
        }
        let moved = displacement(warp.kind, &delta, w, h) * step;
        match accepted {
            Some((candidate, res)) => {
                *warp = candidate;
                current = res;
                trace.push(res);
                *iterations += 1;
                if moved < opts.update_tolerance {
                    return LevelOutcome::Converged;
                }
            }
            None => {
                // no descent along the Gauss-Newton direction: at the optimum
                // up to interpolation noise if the step was already tiny
                return if moved < opts.update_tolerance {
                    LevelOutcome::Converged
                } else {
                    LevelOutcome::Stalled
                };
            }
        }
    }
    LevelOutcome::Stalled
}

/// Estimates the `kind` transform mapping `target` coordinates into
/// `reference` coordinates.
///
/// A singular normal matrix yields a non-converged result carrying the
/// identity transform.
pub fn register(
    reference: &Image,
    target: &Image,
    kind: TransformKind,
    opts: &RegistrationOptions,
) -> Result<RegistrationResult> {
    opts.validate()?;
    if reference.width() != target.width() || reference.height() != target.height() {
        return Err(Error::domain(format!(
            "reference is {}x{} but target is {}x{}",
            reference.width(),
            reference.height(),
            target.width(),
            target.height()
        )));
    }
    if reference.variance() == 0.0 || target.variance() == 0.0 {
        return Err(Error::domain("cannot register a zero-variance image"));
    }
    let levels = level_count(reference.width(), reference.height(), opts.pyramid_levels);
    let ref_pyr = pyramid(reference, levels);
    let tgt_pyr = pyramid(target, levels);

    let mut warp = Warp::identity(kind);
    let mut trace = Vec::with_capacity(levels);
    let mut iterations = 0;
    let mut converged = false;
    let mut residual = 0.0;
    for lvl in (0..levels).rev() {
        let target = gaussian_blur(&tgt_pyr[lvl], opts.smoothing_sigma);
        let (grad_x, grad_y) = gradients(&target);
        let level = Level {
            reference: gaussian_blur(&ref_pyr[lvl], opts.smoothing_sigma),
            target,
            grad_x,
            grad_y,
            border: (opts.border >> lvl).max(1),
        };
        let mut level_trace = Vec::new();
        let outcome = refine_level(&level, &mut warp, opts, &mut level_trace, &mut iterations);
        trace.push(level_trace);
        if let LevelOutcome::Singular = outcome {
            return Ok(RegistrationResult {
                transform: match kind {
                    TransformKind::Translation => GeomTransform::identity(),
                    TransformKind::Affine => GeomTransform::identity().to_affine(),
                },
                residual_rms: f64::NAN,
                iterations,
                converged: false,
                residual_trace: trace,
            });
        }
        if lvl == 0 {
            converged = matches!(outcome, LevelOutcome::Converged);
            residual = level.residual(&warp).0.sqrt();
        } else {
            warp = warp.rescaled(2.0);
        }
    }
    let transform = warp.transform().invert()?;
    Ok(RegistrationResult {
        transform,
        residual_rms: residual,
        iterations,
        converged,
        residual_trace: trace,
    })
}

/// Registers every frame against `frames[0]`; entry 0 is the exact identity.
pub fn register_sequence(
    frames: &[Image],
    kind: TransformKind,
    opts: &RegistrationOptions,
) -> Result<Vec<RegistrationResult>> {
    register_sequence_to(frames, 0, kind, opts)
}

/// Registers every frame against `frames[reference]`, whose own entry is
/// the exact identity.
pub fn register_sequence_to(
    frames: &[Image],
    reference: usize,
    kind: TransformKind,
    opts: &RegistrationOptions,
) -> Result<Vec<RegistrationResult>> {
    let anchor = frames.get(reference).ok_or_else(|| {
        Error::domain(format!(
            "reference frame {reference} out of range for {} frames",
            frames.len()
        ))
    })?;
    frames
        .par_iter()
        .enumerate()
        .map(|(k, f)| {
            if k == reference {
                let mut own = RegistrationResult::identity();
                if kind == TransformKind::Affine {
                    own.transform = own.transform.to_affine();
                }
                Ok(own)
            } else {
                register(anchor, f, kind, opts)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obsmodel::{simulate_capture, SensorParams};

    fn scene(w: usize, h: usize) -> Image {
        Image::from_fn(w, h, |c, r| {
            let (x, y) = (c as f64, r as f64);
            128.0
                + 40.0 * (x * 0.07).sin() * (y * 0.05).cos()
                + 30.0 * ((x + 2.0 * y) * 0.031).sin()
                + 20.0
                    * (-((x - 0.4 * w as f64).powi(2) + (y - 0.6 * h as f64).powi(2)) / 800.0).exp()
        })
    }

    #[test]
    fn identical_frames_give_identity() {
        let img = scene(64, 64);
        let res = register(
            &img,
            &img,
            TransformKind::Affine,
            &RegistrationOptions::default(),
        )
        .unwrap();
        assert!(res.converged);
        assert!(res.transform.max_param_diff(&GeomTransform::identity()) < 1e-8);
        assert!(res.residual_rms < 1e-9);
    }

    #[test]
    fn recovers_synthetic_translation() {
        let reference = scene(256, 256);
        let p = SensorParams::default().noiseless();
        let id = GeomTransform::identity();
        let truth = GeomTransform::translation(0.5, -0.25);
        let a = simulate_capture(&reference, &id, &p, 0).unwrap().image;
        let b = simulate_capture(&reference, &truth.rescaled(4.0), &p, 0)
            .unwrap()
            .image;
        let res = register(
            &a,
            &b,
            TransformKind::Translation,
            &RegistrationOptions::default(),
        )
        .unwrap();
        assert!(res.converged);
        let [tx, ty] = res.transform.translation_part();
        assert!(
            (tx - 0.5).abs() < 0.05 && (ty + 0.25).abs() < 0.05,
            "{tx} {ty}"
        );
    }

    #[test]
    fn residual_trace_is_monotone() {
        let reference = scene(128, 128);
        let target = crate::obsmodel::warp(
            &reference,
            &GeomTransform::affine(1.01, 0.005, -0.004, 0.995, 1.7, -2.2),
        );
        let res = register(
            &reference,
            &target,
            TransformKind::Affine,
            &RegistrationOptions::default(),
        )
        .unwrap();
        for level in &res.residual_trace {
            for pair in level.windows(2) {
                assert!(pair[1] <= pair[0]);
            }
        }
    }

    #[test]
    fn errors_and_degenerate_inputs() {
        let a = scene(40, 40);
        let opts = RegistrationOptions::default();
        assert!(register(&a, &scene(40, 41), TransformKind::Translation, &opts).is_err());
        assert!(register(
            &a,
            &Image::filled(40, 40, 3.0),
            TransformKind::Translation,
            &opts
        )
        .is_err());
        let bad = RegistrationOptions {
            pyramid_levels: 0,
            ..opts
        };
        assert!(register(&a, &a, TransformKind::Translation, &bad).is_err());
        // a pure vertical ramp carries no horizontal information
        let ramp_a = Image::from_fn(40, 40, |_, r| r as f64);
        let res = register(&ramp_a, &ramp_a, TransformKind::Translation, &opts).unwrap();
        assert!(!res.converged);
        assert_eq!(res.transform, GeomTransform::identity());
    }

    #[test]
    fn sequence_shape() {
        let img = scene(64, 64);
        let one = register_sequence(
            std::slice::from_ref(&img),
            TransformKind::Translation,
            &RegistrationOptions::default(),
        )
        .unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].transform, GeomTransform::identity());
        let same = register_sequence(
            &[img.clone(), img.clone(), img],
            TransformKind::Translation,
            &RegistrationOptions::default(),
        )
        .unwrap();
        for r in &same {
            assert!(r.transform.max_param_diff(&GeomTransform::identity()) < 1e-6);
        }
        assert!(register_sequence(
            &[],
            TransformKind::Translation,
            &RegistrationOptions::default()
        )
        .is_err());
    }

    #[test]
    fn pyramid_respects_min_size() {
        assert_eq!(level_count(64, 64, 3), 2);
        assert_eq!(level_count(128, 200, 3), 3);
        assert_eq!(level_count(20, 20, 3), 1);
        assert_eq!(level_count(512, 512, 1), 1);
    }

    #[test]
    fn blur_preserves_constant() {
        let img = Image::filled(10, 7, 42.0);
        let b = gaussian_blur(&img, 1.5);
        assert!(b.data().iter().all(|v| (v - 42.0).abs() < 1e-12));
    }
}
