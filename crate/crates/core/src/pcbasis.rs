//! Principal-component basis of densely sampled sub-pixel patches.
//!
//! Patches are windows of reference imagery seen through the LR sensor's
//! optics and detector, sampled `patch_dim / lr_span` times per LR pixel.
//! The leading principal components, interpolated bicubically, are the
//! continuous functions the local models in [`crate::interp`] are built from.
//!
//! Patch-local coordinates `(u, v)` are in LR pixels with the origin at the
//! patch's top-left corner; grid sample `k` sits at `u = (k + 0.5) lr_span / patch_dim`.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{Image, Stencil};
use crate::linalg::thin_svd;
use crate::obsmodel::{sensor_blur, SensorParams};
use crate::rng::stream_rng;

pub const DEFAULT_PATCH_DIM: usize = 64;
pub const DEFAULT_LR_SPAN: usize = 4;
pub const DEFAULT_COMPONENTS: usize = 60;
pub const DEFAULT_PATCH_COUNT: usize = 10_000;

/// Problems with `max_dim * min_dim^2` above this go through randomized
/// subspace iteration instead of a full thin SVD.
const EXACT_SVD_BUDGET: f64 = 2.0e9;
const RANDOMIZED_OVERSAMPLING: usize = 20;
const RANDOMIZED_POWER_ITERATIONS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PatchGeometry {
    /// Samples per patch side.
    pub patch_dim: usize,
    /// LR pixels per patch side.
    pub lr_span: usize,
}

impl Default for PatchGeometry {
    fn default() -> Self {
        PatchGeometry {
            patch_dim: DEFAULT_PATCH_DIM,
            lr_span: DEFAULT_LR_SPAN,
        }
    }
}

impl PatchGeometry {
    pub fn samples(&self) -> usize {
        self.patch_dim * self.patch_dim
    }

    /// Grid samples per LR pixel.
    pub fn oversampling(&self) -> f64 {
        self.patch_dim as f64 / self.lr_span as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.patch_dim < 4 || self.lr_span == 0 || !self.patch_dim.is_multiple_of(self.lr_span) {
            return Err(Error::domain(format!(
                "patch geometry {}x{} over {} LR pixels is not usable",
                self.patch_dim, self.patch_dim, self.lr_span
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    pub geometry: PatchGeometry,
    /// `count * patch_dim^2` samples, one row-major patch after another.
    data: Vec<f64>,
    pub source_seed: u64,
}

impl PatchSet {
    pub fn new(geometry: PatchGeometry, data: Vec<f64>, source_seed: u64) -> Result<Self> {
        geometry.validate()?;
        if !data.len().is_multiple_of(geometry.samples()) {
            return Err(Error::domain("patch data is not a whole number of patches"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite patch sample"));
        }
        Ok(PatchSet {
            geometry,
            data,
            source_seed,
        })
    }

    pub fn count(&self) -> usize {
        self.data.len() / self.geometry.samples()
    }

    pub fn patch(&self, k: usize) -> &[f64] {
        let n = self.geometry.samples();
        &self.data[k * n..(k + 1) * n]
    }

    pub fn patches(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.geometry.samples())
    }

    /// Total centred variance: trace of the sample covariance (normalized
    /// by the patch count, like the basis eigenvalues).
    pub fn total_variance(&self) -> f64 {
        let n = self.count();
        if n == 0 {
            return 0.0;
        }
        let d = self.geometry.samples();
        let mut mean = vec![0.0; d];
        for p in self.patches() {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let ss: f64 = self
            .patches()
            .map(|p| {
                p.iter()
                    .zip(&mean)
                    .map(|(v, m)| (v - m) * (v - m))
                    .sum::<f64>()
            })
            .sum();
        ss / n as f64
    }
}

/// Draws `count` patches from `references` as the LR sensor `p` would see
/// them at sub-pixel resolution. Window positions and source images are
/// uniform under `seed`; patch `k` uses its own RNG stream.
pub fn sample_patches(
    references: &[Image],
    p: &SensorParams,
    geometry: PatchGeometry,
    count: usize,
    seed: u64,
) -> Result<PatchSet> {
    geometry.validate()?;
    if count == 0 {
        return PatchSet::new(geometry, Vec::new(), seed);
    }
    if references.is_empty() {
        return Err(Error::domain("no reference images to sample patches from"));
    }
    let factor = p.downsample_factor as f64;
    let extent = geometry.lr_span as f64 * factor;
    let guard = 2.0 + p.apodization as f64;
    for (i, r) in references.iter().enumerate() {
        if (r.width().min(r.height()) as f64) < extent + 2.0 * guard + 1.0 {
            return Err(Error::domain(format!(
                "reference {i} ({}x{}) is too small for {extent}-pixel patch windows",
                r.width(),
                r.height()
            )));
        }
    }
    let blurred: Vec<Image> = references
        .par_iter()
        .map(|r| sensor_blur(r, p))
        .collect::<Result<_>>()?;
    let dim = geometry.patch_dim;
    let step = extent / dim as f64;
    let data: Vec<f64> = (0..count)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let img = &blurred[rng.random_range(0..blurred.len())];
            let x0 = rng.random_range(guard..img.width() as f64 - guard - extent);
            let y0 = rng.random_range(guard..img.height() as f64 - guard - extent);
            let xs: Vec<Stencil> = (0..dim)
                .map(|i| Stencil::new(x0 + (i as f64 + 0.5) * step - 0.5, img.width()))
                .collect();
            let mut patch = Vec::with_capacity(dim * dim);
            for j in 0..dim {
                let sy = Stencil::new(y0 + (j as f64 + 0.5) * step - 0.5, img.height());
                for sx in &xs {
                    patch.push(sx.apply_2d(&sy, img.data(), img.width()));
                }
            }
            patch
        })
        .collect();
    PatchSet::new(geometry, data, seed)
}

/// Which function of the basis to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Mean,
    Pc(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcBasis {
    pub geometry: PatchGeometry,
    /// Number of patches the basis was trained on.
    pub count: usize,
    pub seed: u64,
    mean: Vec<f64>,
    /// `n_components` row-major component grids, one after another.
    components: Vec<f64>,
    eigenvalues: Vec<f64>,
}

impl PcBasis {
    /// Assembles a basis from explicit parts; components must be orthonormal
    /// for the fitting code to behave as documented.
    pub fn from_parts(
        geometry: PatchGeometry,
        mean: Vec<f64>,
        components: Vec<Vec<f64>>,
        eigenvalues: Vec<f64>,
    ) -> Result<Self> {
        geometry.validate()?;
        let d = geometry.samples();
        if mean.len() != d || components.iter().any(|c| c.len() != d) {
            return Err(Error::domain("basis grids do not match the patch geometry"));
        }
        if components.is_empty() || eigenvalues.len() != components.len() {
            return Err(Error::domain("need one eigenvalue per component"));
        }
        Ok(PcBasis {
            geometry,
            count: 0,
            seed: 0,
            mean,
            components: components.concat(),
            eigenvalues,
        })
    }

    pub fn n_components(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn mean_patch(&self) -> &[f64] {
        &self.mean
    }

    pub fn component(&self, j: usize) -> &[f64] {
        let d = self.geometry.samples();
        &self.components[j * d..(j + 1) * d]
    }

    /// True when the training data had no variance at all.
    pub fn is_degenerate(&self) -> bool {
        self.eigenvalues.iter().all(|&e| e <= 1e-12)
    }

    /// Basis truncated to its first `n` components.
    pub fn truncated(&self, n: usize) -> Result<PcBasis> {
        if n == 0 || n > self.n_components() {
            return Err(Error::domain(format!(
                "cannot keep {n} of {} components",
                self.n_components()
            )));
        }
        let d = self.geometry.samples();
        Ok(PcBasis {
            components: self.components[..n * d].to_vec(),
            eigenvalues: self.eigenvalues[..n].to_vec(),
            ..self.clone()
        })
    }

    /// Patch-local extent in LR pixels.
    pub fn extent(&self) -> f64 {
        self.geometry.lr_span as f64
    }

    /// Interpolation stencils for patch-local `(u, v)`, clamped to the grid.
    #[inline]
    pub fn stencils(&self, u: f64, v: f64) -> (Stencil, Stencil) {
        let dim = self.geometry.patch_dim;
        let k = self.geometry.oversampling();
        let last = (dim - 1) as f64;
        (
            Stencil::new((u * k - 0.5).clamp(0.0, last), dim),
            Stencil::new((v * k - 0.5).clamp(0.0, last), dim),
        )
    }

    /// `f_j(u, v)` for the mean or a component.
    pub fn eval(&self, which: Component, u: f64, v: f64) -> Result<f64> {
        let ext = self.extent();
        if !(u >= 0.0 && u < ext && v >= 0.0 && v < ext) {
            return Err(Error::domain(format!(
                "patch coordinate ({u}, {v}) outside [0, {ext})"
            )));
        }
        let grid = match which {
            Component::Mean => &self.mean[..],
            Component::Pc(j) if j < self.n_components() => self.component(j),
            Component::Pc(j) => {
                return Err(Error::domain(format!(
                    "component {j} out of range for a {}-component basis",
                    self.n_components()
                )))
            }
        };
        let (sx, sy) = self.stencils(u, v);
        Ok(sx.apply_2d(&sy, grid, self.geometry.patch_dim))
    }

    pub fn eval_component(&self, j: usize, u: f64, v: f64) -> Result<f64> {
        self.eval(Component::Pc(j), u, v)
    }

    /// Mean value and all component values at `(u, v)`; `out` receives one
    /// value per component. Coordinates are clamped rather than checked.
    #[inline]
    pub fn eval_all(&self, u: f64, v: f64, out: &mut [f64]) -> f64 {
        let (sx, sy) = self.stencils(u, v);
        let dim = self.geometry.patch_dim;
        let d = self.geometry.samples();
        for (j, o) in out.iter_mut().enumerate().take(self.n_components()) {
            *o = sx.apply_2d(&sy, &self.components[j * d..(j + 1) * d], dim);
        }
        sx.apply_2d(&sy, &self.mean, dim)
    }

    /// Coefficients of the orthogonal projection of `patch - mean`.
    pub fn project(&self, patch: &[f64], n: usize) -> Vec<f64> {
        (0..n.min(self.n_components()))
            .map(|j| {
                self.component(j)
                    .iter()
                    .zip(patch.iter().zip(&self.mean))
                    .map(|(c, (p, m))| c * (p - m))
                    .sum()
            })
            .collect()
    }

    pub fn reconstruct(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (j, a) in coeffs.iter().enumerate() {
            for (o, c) in out.iter_mut().zip(self.component(j)) {
                *o += a * c;
            }
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f =
            std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
        self.write_to(&mut f).map_err(|e| Error::io(path, e))?;
        f.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut &bytes[..])
    }

    /// Writes the `PCSR` v1 container.
    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(b"PCSR")?;
        w.write_all(&1u32.to_le_bytes())?;
        for v in [
            self.geometry.patch_dim as u32,
            self.geometry.lr_span as u32,
            self.n_components() as u32,
            self.count as u32,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.seed.to_le_bytes())?;
        for v in self
            .mean
            .iter()
            .chain(&self.components)
            .chain(&self.eigenvalues)
        {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let bad = |why: &str| Error::format("PCSR", why.to_string());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| bad("truncated header"))?;
        if &magic != b"PCSR" {
            return Err(bad("bad magic"));
        }
        let mut u32s = [0u32; 5];
        for v in u32s.iter_mut() {
            let mut b = [0u8; 4];
            r.read_exact(&mut b).map_err(|_| bad("truncated header"))?;
            *v = u32::from_le_bytes(b);
        }
        let [version, patch_dim, lr_span, n_components, count] = u32s;
        if version != 1 {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8).map_err(|_| bad("truncated header"))?;
        let seed = u64::from_le_bytes(b8);
        let geometry = PatchGeometry {
            patch_dim: patch_dim as usize,
            lr_span: lr_span as usize,
        };
        geometry.validate().map_err(|e| bad(&e.to_string()))?;
        let d = geometry.samples();
        let n = n_components as usize;
        let mut read_f64s = |len: usize| -> Result<Vec<f64>> {
            let mut buf = vec![0u8; len * 8];
            r.read_exact(&mut buf).map_err(|_| bad("truncated body"))?;
            Ok(buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        };
        let mean = read_f64s(d)?;
        let components = read_f64s(n * d)?;
        let eigenvalues = read_f64s(n)?;
        if n == 0 {
            return Err(bad("basis has no components"));
        }
        Ok(PcBasis {
            geometry,
            count: count as usize,
            seed,
            mean,
            components,
            eigenvalues,
        })
    }
}

/// Flips `v` so its entry of largest magnitude (first on ties) is positive.
fn canonical_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn thin_qr(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Right singular vectors and singular values of `x`, largest first.
fn exact_right_singular(x: DMatrix<f64>) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let svd = thin_svd(&x)?;
    let vectors = (0..svd.v.ncols())
        .map(|j| svd.v.column(j).iter().copied().collect())
        .collect();
    Ok((vectors, svd.sigma.iter().copied().collect()))
}

/// Leading `k` right singular vectors by randomized subspace iteration, with
/// an exact SVD of the projected problem.
fn randomized_right_singular(
    x: &DMatrix<f64>,
    k: usize,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let (n, d) = x.shape();
    let l = (k + RANDOMIZED_OVERSAMPLING).min(n.min(d));
    let mut rng = stream_rng(seed, 0x0070_6361);
    let omega = DMatrix::from_fn(d, l, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut q = thin_qr(x * omega);
    for _ in 0..RANDOMIZED_POWER_ITERATIONS {
        let z = thin_qr(x.tr_mul(&q));
        q = thin_qr(x * z);
    }
    // B = Q^T X shares its right singular vectors with X on the captured subspace
    let svd = thin_svd(&q.tr_mul(x))?;
    let r = k.min(svd.sigma.len());
    let vectors = (0..r)
        .map(|j| svd.v.column(j).iter().copied().collect())
        .collect();
    Ok((vectors, svd.sigma.iter().take(r).copied().collect()))
}

/// Mean-subtracted PCA of `set`, keeping `n_components` components.
///
/// Works on the singular value decomposition of the centred data matrix.
/// Small problems use a full thin SVD; large ones use randomized subspace
/// iteration seeded from the patch set's seed, so training stays
/// deterministic.
pub fn train_pca(set: &PatchSet, n_components: usize) -> Result<PcBasis> {
    let n = set.count();
    let d = set.geometry.samples();
    if n_components == 0 {
        return Err(Error::domain("n_components must be at least 1"));
    }
    if n < n_components {
        return Err(Error::domain(format!(
            "{n} patches cannot support {n_components} components"
        )));
    }
    if n_components > d {
        return Err(Error::domain(format!(
            "{n_components} components exceed the {d}-dimensional patch space"
        )));
    }
    let mut mean = vec![0.0; d];
    for p in set.patches() {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let x = DMatrix::from_fn(n, d, |i, j| set.patch(i)[j] - mean[j]);

    let (lo, hi) = (n.min(d) as f64, n.max(d) as f64);
    let exact = hi * lo * lo <= EXACT_SVD_BUDGET || 2 * n_components >= n.min(d);
    let (mut vectors, sigma) = if exact {
        exact_right_singular(x)?
    } else {
        randomized_right_singular(&x, n_components, set.source_seed)?
    };
    let denom = n as f64;
    // with fewer patches than dimensions the null-space directions are not
    // produced by the thin SVD; pad with an orthonormal completion
    if vectors.len() < n_components {
        complete_orthonormal(&mut vectors, n_components, d);
    }
    let mut components = Vec::with_capacity(n_components * d);
    let mut eigenvalues = Vec::with_capacity(n_components);
    for (j, v) in vectors.iter().take(n_components).enumerate() {
        let mut v = v.clone();
        canonical_sign(&mut v);
        components.extend_from_slice(&v);
        let s = sigma.get(j).copied().unwrap_or(0.0);
        eigenvalues.push(s * s / denom);
    }
    Ok(PcBasis {
        geometry: set.geometry,
        count: n,
        seed: set.source_seed,
        mean,
        components,
        eigenvalues,
    })
}

/// Extends `vectors` to `k` orthonormal vectors of length `d` by
/// Gram-Schmidt against the unit vectors.
fn complete_orthonormal(vectors: &mut Vec<Vec<f64>>, k: usize, d: usize) {
    let mut e = 0;
    while vectors.len() < k && e < d {
        let mut v = vec![0.0; d];
        v[e] = 1.0;
        for _ in 0..2 {
            for u in vectors.iter() {
                let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= norm);
            vectors.push(v);
        }
        e += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::sample_bicubic;

    fn small() -> PatchGeometry {
        PatchGeometry {
            patch_dim: 8,
            lr_span: 4,
        }
    }

    fn orthonormality_error(b: &PcBasis) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..b.n_components() {
            for j in 0..b.n_components() {
                let dot: f64 = b
                    .component(i)
                    .iter()
                    .zip(b.component(j))
                    .map(|(x, y)| x * y)
                    .sum();
                worst = worst.max((dot - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        worst
    }

    #[test]
    fn empty_and_constant_sampling() {
        let refs = vec![Image::filled(96, 96, 90.0)];
        let p = SensorParams::default();
        let empty = sample_patches(&refs, &p, PatchGeometry::default(), 0, 1).unwrap();
        assert_eq!(empty.count(), 0);
        let set = sample_patches(&refs, &p, PatchGeometry::default(), 5, 1).unwrap();
        assert_eq!(set.count(), 5);
        for patch in set.patches() {
            assert_eq!(patch.len(), 4096);
            assert!(patch.iter().all(|v| (v - 90.0).abs() < 1e-9));
        }
        assert_eq!(
            set,
            sample_patches(&refs, &p, PatchGeometry::default(), 5, 1).unwrap()
        );
        assert!(sample_patches(
            &[Image::filled(30, 30, 1.0)],
            &p,
            PatchGeometry::default(),
            1,
            1
        )
        .is_err());
    }

    #[test]
    fn identical_patches_are_degenerate() {
        let patch: Vec<f64> = (0..64).map(|i| i as f64).collect();
        let set = PatchSet::new(small(), patch.repeat(10), 0).unwrap();
        let b = train_pca(&set, 5).unwrap();
        assert!(b.is_degenerate());
        assert!(orthonormality_error(&b) < 1e-8);
        assert_eq!(b.mean_patch(), &patch[..]);
    }

    #[test]
    fn rank_one_patches() {
        let base: Vec<f64> = (0..64).map(|i| 100.0 + (i % 7) as f64).collect();
        let dir: Vec<f64> = (0..64)
            .map(|i| ((i * 13) % 5) as f64 - 2.0 + if i == 9 { 3.0 } else { 0.0 })
            .collect();
        let norm2: f64 = dir.iter().map(|v| v * v).sum();
        let mut data = Vec::new();
        for s in [1.0, -1.0, 1.0, -1.0] {
            data.extend(base.iter().zip(&dir).map(|(b, d)| b + s * d));
        }
        let set = PatchSet::new(small(), data, 0).unwrap();
        let b = train_pca(&set, 3).unwrap();
        assert!(
            b.eigenvalues()[1].abs() < 1e-10 && b.eigenvalues()[2].abs() < 1e-10,
            "{:?}",
            b.eigenvalues()
        );
        assert!(b.eigenvalues()[1].abs() < 1e-10 && b.eigenvalues()[2].abs() < 1e-10);
        let mut unit: Vec<f64> = dir.iter().map(|v| v / norm2.sqrt()).collect();
        canonical_sign(&mut unit);
        for (a, e) in b.component(0).iter().zip(&unit) {
            assert!((a - e).abs() < 1e-10, "{:?} {:?}", b.component(0), unit);
        }
    }

    #[test]
    fn count_checks() {
        let set = PatchSet::new(small(), vec![1.0; 64 * 3], 0).unwrap();
        assert!(train_pca(&set, 4).is_err());
        assert!(train_pca(&set, 0).is_err());
    }

    #[test]
    fn eval_component_examples() {
        let set = PatchSet::new(
            small(),
            (0..64 * 20).map(|i| ((i * 7919) % 101) as f64).collect(),
            0,
        )
        .unwrap();
        let b = train_pca(&set, 6).unwrap();
        // grid sample (3, 5) sits at u = 3.5 / 2, v = 5.5 / 2
        let v = b.eval_component(2, 1.75, 2.75).unwrap();
        assert!((v - b.component(2)[5 * 8 + 3]).abs() < 1e-15);
        let m = b.eval(Component::Mean, 1.75, 2.75).unwrap();
        assert!((m - b.mean_patch()[5 * 8 + 3]).abs() < 1e-15);
        assert!(b.eval_component(6, 1.0, 1.0).is_err());
        assert!(b.eval_component(0, 4.0, 1.0).is_err());
        assert!(b.eval_component(0, -0.01, 1.0).is_err());

        let grid = Image::new(8, 8, b.component(4).to_vec()).unwrap();
        for &(u, v) in &[(0.3, 0.9), (1.11, 3.2), (2.0, 2.0), (3.7, 0.26)] {
            let gx = (u * 2.0 - 0.5f64).clamp(0.0, 7.0);
            let gy = (v * 2.0 - 0.5f64).clamp(0.0, 7.0);
            let oracle = sample_bicubic(&grid, gx, gy).unwrap();
            assert!((b.eval_component(4, u, v).unwrap() - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_grid_evaluates_constant() {
        let c = vec![0.125; 64];
        let b = PcBasis::from_parts(small(), vec![3.0; 64], vec![c], vec![1.0]).unwrap();
        for &(u, v) in &[(0.0, 0.0), (3.99, 3.99), (1.3, 2.2)] {
            assert!((b.eval_component(0, u, v).unwrap() - 0.125).abs() < 1e-15);
            assert!((b.eval(Component::Mean, u, v).unwrap() - 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn file_round_trip_is_bit_exact() {
        let set = PatchSet::new(
            small(),
            (0..64 * 12)
                .map(|i| (i as f64 * 0.37).sin() * 40.0)
                .collect(),
            77,
        )
        .unwrap();
        let b = train_pca(&set, 5).unwrap();
        let mut buf = Vec::new();
        b.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"PCSR");
        assert_eq!(buf.len(), 4 + 4 + 16 + 8 + 8 * (64 + 5 * 64 + 5));
        let back = PcBasis::read_from(&mut &buf[..]).unwrap();
        assert_eq!(back, b);
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(again, buf);
        assert!(PcBasis::read_from(&mut &buf[..20]).is_err());
        let mut wrong = buf.clone();
        wrong[4] = 2;
        assert!(PcBasis::read_from(&mut &wrong[..]).is_err());
    }

    #[test]
    fn randomized_route_matches_exact() {
        let mut rng = stream_rng(3, 0);
        let (n, d) = (400, 64);
        let scales: Vec<f64> = (0..d).map(|j| 10.0 * 0.8f64.powi(j as i32)).collect();
        let data: Vec<f64> = (0..n * d)
            .map(|i| scales[i % d] * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let x = DMatrix::from_fn(n, d, |i, j| data[i * d + j]);
        let (ve, se) = exact_right_singular(x.clone()).unwrap();
        let (vr, sr) = randomized_right_singular(&x, 5, 1).unwrap();
        for j in 0..5 {
            assert!((se[j] - sr[j]).abs() < 1e-8 * se[0]);
            let dot: f64 = ve[j].iter().zip(&vr[j]).map(|(a, b)| a * b).sum();
            assert!((dot.abs() - 1.0).abs() < 1e-8);
        }
    }
}
