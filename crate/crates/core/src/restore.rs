//! Rotationally symmetric Wiener-style restoration filter.
//!
//! Taps are shared by every offset whose distance from the centre rounds to
//! the same half-pixel ring, so a radius-7 filter has around 20 free values
//! instead of 225. The filter is fitted by least squares from pairs of
//! (interpolated image, ideal image) and applied by direct convolution with
//! edge replication.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

const MAGIC: &[u8; 4] = b"PCRF";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RestoreOptions {
    pub radius: usize,
    /// Ridge weight relative to the mean diagonal of the normal matrix.
    pub ridge: f64,
}

impl Default for RestoreOptions {
    fn default() -> Self {
        RestoreOptions {
            radius: 7,
            ridge: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainingPair {
    pub input: Image,
    pub target: Image,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestorationFilter {
    radius: usize,
    /// Ring index of every offset in the `(2r+1)^2` support, row-major.
    ring_of: Vec<usize>,
    /// Twice the radius each ring stands for.
    ring_key: Vec<usize>,
    taps: Vec<f64>,
}

fn ring_layout(radius: usize) -> (Vec<usize>, Vec<usize>) {
    let r = radius as isize;
    let keys: Vec<usize> = (-r..=r)
        .flat_map(|dy| {
            (-r..=r).map(move |dx| (2.0 * ((dx * dx + dy * dy) as f64).sqrt()).round() as usize)
        })
        .collect();
    let mut distinct = keys.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let ring_of = keys
        .iter()
        .map(|k| distinct.binary_search(k).unwrap())
        .collect();
    (ring_of, distinct)
}

impl RestorationFilter {
    /// Filter with the given per-ring taps; see [`RestorationFilter::rings`].
    pub fn from_taps(radius: usize, taps: Vec<f64>) -> Result<Self> {
        let (ring_of, ring_key) = ring_layout(radius);
        if taps.len() != ring_key.len() {
            return Err(Error::domain(format!(
                "radius {radius} has {} rings, got {} taps",
                ring_key.len(),
                taps.len()
            )));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::domain("taps must be finite"));
        }
        Ok(RestorationFilter {
            radius,
            ring_of,
            ring_key,
            taps,
        })
    }

    pub fn identity(radius: usize) -> Self {
        let mut taps = vec![0.0; ring_layout(radius).1.len()];
        taps[0] = 1.0;
        RestorationFilter::from_taps(radius, taps).unwrap()
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Ring radii in pixels, one per tap.
    pub fn rings(&self) -> Vec<f64> {
        self.ring_key.iter().map(|&k| k as f64 / 2.0).collect()
    }

    pub fn ring_count(&self) -> usize {
        self.taps.len()
    }

    /// Weight at offset `(dx, dy)`; zero outside the support.
    pub fn weight(&self, dx: isize, dy: isize) -> f64 {
        let r = self.radius as isize;
        if dx.abs() > r || dy.abs() > r {
            return 0.0;
        }
        let side = 2 * r + 1;
        self.taps[self.ring_of[((dy + r) * side + dx + r) as usize]]
    }

    /// Full `(2r+1)^2` kernel, row-major.
    pub fn kernel(&self) -> Vec<f64> {
        self.ring_of.iter().map(|&k| self.taps[k]).collect()
    }

    /// Convolution with edge replication, without clipping.
    pub fn convolve(&self, img: &Image) -> Image {
        let r = self.radius as isize;
        let kernel = self.kernel();
        let side = (2 * r + 1) as usize;
        Image::from_fn(img.width(), img.height(), |c, rr| {
            let mut acc = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let w = kernel[(dy + r) as usize * side + (dx + r) as usize];
                    if w != 0.0 {
                        acc += w * img.get_clamped(c as isize + dx, rr as isize + dy);
                    }
                }
            }
            acc
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut bytes.as_slice())
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.radius as u32).to_le_bytes())?;
        w.write_all(&(self.taps.len() as u32).to_le_bytes())?;
        for t in &self.taps {
            w.write_all(&t.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let bad = |reason: &str| Error::format("PCRF", reason);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| bad("truncated header"))?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let mut word = [0u8; 4];
        let mut next_u32 = |r: &mut dyn Read| -> Result<u32> {
            r.read_exact(&mut word)
                .map_err(|_| bad("truncated header"))?;
            Ok(u32::from_le_bytes(word))
        };
        let version = next_u32(r)?;
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let radius = next_u32(r)? as usize;
        let rings = next_u32(r)? as usize;
        if radius > 1024 {
            return Err(bad("implausible radius"));
        }
        let mut taps = Vec::with_capacity(rings.min(4096));
        let mut b = [0u8; 8];
        for _ in 0..rings {
            r.read_exact(&mut b).map_err(|_| bad("truncated taps"))?;
            taps.push(f64::from_le_bytes(b));
        }
        if r.read(&mut [0u8; 1])? != 0 {
            return Err(bad("trailing bytes"));
        }
        RestorationFilter::from_taps(radius, taps).map_err(|e| bad(&e.to_string()))
    }
}

/// Convolves and clips to `[0, 255]`.
pub fn apply_filter(img: &Image, filter: &RestorationFilter) -> Image {
    filter.convolve(img).clipped()
}

/// Least-squares ring taps mapping inputs to targets, over pixels whose
/// whole support lies inside the image.
pub fn train_filter(pairs: &[TrainingPair], opts: &RestoreOptions) -> Result<RestorationFilter> {
    if !(opts.ridge >= 0.0 && opts.ridge.is_finite()) {
        return Err(Error::domain("ridge must be non-negative"));
    }
    let (ring_of, ring_key) = ring_layout(opts.radius);
    let k = ring_key.len();
    let r = opts.radius;
    let side = 2 * r + 1;
    let mut a = DMatrix::<f64>::zeros(k, k);
    let mut b = DVector::<f64>::zeros(k);
    let mut used = 0usize;
    let mut phi = vec![0.0; k];
    for (n, pair) in pairs.iter().enumerate() {
        let (w, h) = (pair.input.width(), pair.input.height());
        if (pair.target.width(), pair.target.height()) != (w, h) {
            return Err(Error::domain(format!(
                "training pair {n} has mismatched sizes"
            )));
        }
        if w <= 2 * r || h <= 2 * r {
            continue;
        }
        for y in r..h - r {
            for x in r..w - r {
                phi.iter_mut().for_each(|v| *v = 0.0);
                for dy in 0..side {
                    let row = pair.input.row(y + dy - r);
                    for dx in 0..side {
                        phi[ring_of[dy * side + dx]] += row[x + dx - r];
                    }
                }
                let t = pair.target.get(x, y);
                for i in 0..k {
                    b[i] += phi[i] * t;
                    for j in 0..=i {
                        a[(i, j)] += phi[i] * phi[j];
                    }
                }
                used += 1;
            }
        }
    }
    if used == 0 {
        return Err(Error::domain(format!(
            "no training pixel has a full radius-{r} neighbourhood"
        )));
    }
    for i in 0..k {
        for j in 0..i {
            a[(j, i)] = a[(i, j)];
        }
    }
    let ridge = opts.ridge * a.trace() / k as f64;
    for i in 0..k {
        a[(i, i)] += ridge;
    }
    let chol = a.cholesky().ok_or_else(|| {
        Error::Arithmetic("restoration normal matrix is not positive definite".into())
    })?;
    let taps = chol.solve(&b);
    RestorationFilter::from_taps(r, taps.iter().copied().collect())
}
