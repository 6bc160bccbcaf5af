//! Scattered-sample interpolation with overlapping principal-component models.
//!
//! Every frame pixel is projected into the reference frame. A lattice of
//! local models with spacing half the patch extent covers the
//! reconstruction area, so each point lies in exactly two patches per axis.
//! Each model is the basis mean plus a linear combination of the continuous
//! components, fitted by truncated-SVD least squares to the samples in its
//! patch. A conjugate-gradient pass then trades per-patch data fidelity
//! against agreement of neighbouring models on their shared half-patches,
//! and the HR image is a tent-weighted blend of the covering models.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{GeomTransform, Image};
use crate::linalg::thin_svd;
use crate::pcbasis::PcBasis;

/// Samples this far outside the reconstruction area (LR pixels) are kept.
pub const APRON: f64 = 2.0;
pub const DEFAULT_SVD_REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedSample {
    /// Reference-frame LR coordinates.
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub frame: usize,
}

/// Reconstruction extent in reference-frame LR pixels, anchored at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Area {
    pub width: usize,
    pub height: usize,
}

impl Area {
    fn contains_with_apron(&self, x: f64, y: f64) -> bool {
        x >= -APRON
            && y >= -APRON
            && x < self.width as f64 + APRON
            && y < self.height as f64 + APRON
    }
}

/// Maps the centre of every pixel of every frame through its transform.
/// Samples outside the reference frame plus [`APRON`] are dropped.
pub fn project_sequence(
    frames: &[Image],
    transforms: &[GeomTransform],
) -> Result<Vec<ProjectedSample>> {
    if frames.len() != transforms.len() {
        return Err(Error::domain(format!(
            "{} frames but {} transforms",
            frames.len(),
            transforms.len()
        )));
    }
    let Some(first) = frames.first() else {
        return Ok(Vec::new());
    };
    let area = Area {
        width: first.width(),
        height: first.height(),
    };
    let mut out = Vec::new();
    for (k, (img, t)) in frames.iter().zip(transforms).enumerate() {
        for r in 0..img.height() {
            for c in 0..img.width() {
                let (x, y) = t.apply(c as f64 + 0.5, r as f64 + 0.5);
                if area.contains_with_apron(x, y) {
                    out.push(ProjectedSample {
                        x,
                        y,
                        z: img.get(c, r),
                        frame: k,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalModel {
    /// Model centre in reference-frame LR coordinates.
    pub center: (f64, f64),
    /// One coefficient per basis component; the mean enters with weight 1.
    pub coeffs: Vec<f64>,
    pub rank_used: usize,
    /// `1/2 * sum of squared residuals` over the patch samples.
    pub fit_energy: f64,
    pub n_samples: usize,
}

impl LocalModel {
    /// No samples fell in the patch; the model predicts the mean patch.
    pub fn is_empty(&self) -> bool {
        self.n_samples == 0
    }

    /// Top-left corner of the patch in reference LR coordinates.
    pub fn origin(&self, basis: &PcBasis) -> (f64, f64) {
        let half = basis.extent() / 2.0;
        (self.center.0 - half, self.center.1 - half)
    }

    /// Model value at reference-frame coordinates `(x, y)`.
    pub fn predict(&self, basis: &PcBasis, x: f64, y: f64) -> f64 {
        let (ox, oy) = self.origin(basis);
        predict_local(&self.coeffs, basis, x - ox, y - oy)
    }
}

fn predict_local(coeffs: &[f64], basis: &PcBasis, u: f64, v: f64) -> f64 {
    let mut vals = vec![0.0; basis.n_components()];
    let mean = basis.eval_all(u, v, &mut vals);
    mean + coeffs.iter().zip(&vals).map(|(a, f)| a * f).sum::<f64>()
}

/// Design matrix `M[i][j] = f_j(u_i, v_i)` and mean-removed targets.
fn design(
    samples: &[&ProjectedSample],
    origin: (f64, f64),
    basis: &PcBasis,
) -> (DMatrix<f64>, DVector<f64>) {
    let k = basis.n_components();
    let mut m = DMatrix::zeros(samples.len(), k);
    let mut z = DVector::zeros(samples.len());
    let mut vals = vec![0.0; k];
    for (i, s) in samples.iter().enumerate() {
        let mean = basis.eval_all(s.x - origin.0, s.y - origin.1, &mut vals);
        for j in 0..k {
            m[(i, j)] = vals[j];
        }
        z[i] = s.z - mean;
    }
    (m, z)
}

fn in_patch(s: &ProjectedSample, origin: (f64, f64), extent: f64) -> bool {
    let (u, v) = (s.x - origin.0, s.y - origin.1);
    u >= 0.0 && u < extent && v >= 0.0 && v < extent
}

fn fit_selected(
    samples: &[&ProjectedSample],
    center: (f64, f64),
    basis: &PcBasis,
    svd_rel_tol: f64,
) -> LocalModel {
    let k = basis.n_components();
    if samples.is_empty() {
        return LocalModel {
            center,
            coeffs: vec![0.0; k],
            rank_used: 0,
            fit_energy: 0.0,
            n_samples: 0,
        };
    }
    let half = basis.extent() / 2.0;
    let origin = (center.0 - half, center.1 - half);
    let (m, z) = design(samples, origin, basis);
    let mut coeffs = DVector::zeros(k);
    let mut rank = 0;
    // a failed decomposition leaves the model at the mean
    if let Ok(svd) = thin_svd(&m) {
        let cutoff = svd_rel_tol * svd.sigma.get(0).copied().unwrap_or(0.0);
        for (i, &s) in svd.sigma.iter().enumerate() {
            if s > cutoff && s > 0.0 {
                rank += 1;
                coeffs += svd.v.column(i) * (svd.u.column(i).dot(&z) / s);
            }
        }
    }
    let residual = &z - &m * &coeffs;
    LocalModel {
        center,
        coeffs: coeffs.iter().copied().collect(),
        rank_used: rank,
        fit_energy: 0.5 * residual.norm_squared(),
        n_samples: samples.len(),
    }
}

/// Fits one local model centred at `center` to the samples inside its patch.
///
/// The solution is the minimum-norm least-squares solution after zeroing
/// singular values below `svd_rel_tol` times the largest one.
pub fn fit_local_model(
    samples: &[ProjectedSample],
    center: (f64, f64),
    basis: &PcBasis,
    svd_rel_tol: f64,
) -> LocalModel {
    let half = basis.extent() / 2.0;
    let origin = (center.0 - half, center.1 - half);
    let selected: Vec<&ProjectedSample> = samples
        .iter()
        .filter(|s| in_patch(s, origin, basis.extent()))
        .collect();
    fit_selected(&selected, center, basis, svd_rel_tol)
}

/// Overlapping lattice of local models. Node `(i, j)` is centred at
/// `(i * spacing, j * spacing)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelField {
    pub area: Area,
    pub spacing: f64,
    pub nodes_x: usize,
    pub nodes_y: usize,
    /// Row-major over nodes.
    pub models: Vec<LocalModel>,
}

impl ModelField {
    pub fn model(&self, i: usize, j: usize) -> &LocalModel {
        &self.models[j * self.nodes_x + i]
    }

    pub fn empty_count(&self) -> usize {
        self.models.iter().filter(|m| m.is_empty()).count()
    }

    pub fn total_fit_energy(&self) -> f64 {
        self.models.iter().map(|m| m.fit_energy).sum()
    }

    /// Node indices and tent weights of the models covering coordinate `x`
    /// along one axis.
    fn covering(&self, x: f64, nodes: usize) -> [(usize, f64); 2] {
        let s = self.spacing;
        let q = (x / s).floor().clamp(0.0, (nodes - 2) as f64) as usize;
        let t = (x - q as f64 * s) / s;
        [(q, 1.0 - t), (q + 1, t)]
    }

    /// Blended prediction and the covering `(model index, weight)` pairs.
    pub fn blend_weights(&self, x: f64, y: f64) -> [(usize, f64); 4] {
        let wx = self.covering(x, self.nodes_x);
        let wy = self.covering(y, self.nodes_y);
        let mut out = [(0, 0.0); 4];
        let mut k = 0;
        for &(j, b) in &wy {
            for &(i, a) in &wx {
                out[k] = (j * self.nodes_x + i, a * b);
                k += 1;
            }
        }
        out
    }

    pub fn predict(&self, basis: &PcBasis, x: f64, y: f64) -> f64 {
        self.blend_weights(x, y)
            .iter()
            .filter(|(_, w)| *w != 0.0)
            .map(|&(m, w)| w * self.models[m].predict(basis, x, y))
            .sum()
    }
}

fn lattice(area: Area, spacing: f64) -> (usize, usize) {
    let nx = (area.width as f64 / spacing).ceil() as usize + 1;
    let ny = (area.height as f64 / spacing).ceil() as usize + 1;
    (nx.max(2), ny.max(2))
}

/// Samples per patch, gathered through a bucket grid of `spacing`-sized
/// cells. Order within a patch follows the input order.
fn patch_members(
    samples: &[ProjectedSample],
    nx: usize,
    ny: usize,
    spacing: f64,
) -> Vec<Vec<&ProjectedSample>> {
    // cell q along an axis spans [q s, (q + 1) s) and lies in patches q, q + 1
    let (cx, cy) = (nx + 1, ny + 1);
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); cx * cy];
    for (idx, s) in samples.iter().enumerate() {
        let qx = (s.x / spacing).floor() as isize + 1;
        let qy = (s.y / spacing).floor() as isize + 1;
        if qx >= 0 && qy >= 0 && (qx as usize) < cx && (qy as usize) < cy {
            cells[qy as usize * cx + qx as usize].push(idx);
        }
    }
    let mut members = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let mut ids: Vec<usize> = Vec::new();
            for dy in 0..2 {
                for dx in 0..2 {
                    ids.extend(&cells[(j + dy) * cx + (i + dx)]);
                }
            }
            ids.sort_unstable();
            members.push(ids.into_iter().map(|k| &samples[k]).collect());
        }
    }
    members
}

/// One model per lattice node, each fitted independently.
pub fn build_model_field(
    samples: &[ProjectedSample],
    basis: &PcBasis,
    area: Area,
    svd_rel_tol: f64,
) -> Result<ModelField> {
    if area.width == 0 || area.height == 0 {
        return Err(Error::domain("empty reconstruction area"));
    }
    let spacing = basis.extent() / 2.0;
    let (nx, ny) = lattice(area, spacing);
    let members = patch_members(samples, nx, ny, spacing);
    let models = members
        .par_iter()
        .enumerate()
        .map(|(idx, mem)| {
            let center = ((idx % nx) as f64 * spacing, (idx / nx) as f64 * spacing);
            let half = basis.extent() / 2.0;
            let origin = (center.0 - half, center.1 - half);
            let inside: Vec<&ProjectedSample> = mem
                .iter()
                .copied()
                .filter(|s| in_patch(s, origin, basis.extent()))
                .collect();
            fit_selected(&inside, center, basis, svd_rel_tol)
        })
        .collect();
    Ok(ModelField {
        area,
        spacing,
        nodes_x: nx,
        nodes_y: ny,
        models,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CgOptions {
    pub max_iterations: usize,
    /// Stop once `|grad J| / |grad J_0|` drops to this.
    pub gradient_tolerance: f64,
    /// Points per axis of the comparison grid on each shared half-patch.
    pub overlap_points: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            max_iterations: 200,
            gradient_tolerance: 1e-6,
            overlap_points: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ContinuityReport {
    /// Objective after every iteration, starting with the initial value.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// RMS model disagreement over all overlap grids, before and after.
    pub disagreement_before: f64,
    pub disagreement_after: f64,
}

impl ContinuityReport {
    pub fn objective_before(&self) -> f64 {
        self.objective_trace[0]
    }

    pub fn objective_after(&self) -> f64 {
        *self.objective_trace.last().unwrap()
    }
}

/// Evaluation matrices of the two models of a neighbour pair on their
/// shared half-patch. Identical for every pair of the same orientation.
struct OverlapOperator {
    first: DMatrix<f64>,
    second: DMatrix<f64>,
    /// Mean-patch difference `mean_first - mean_second` at each point.
    mean_diff: DVector<f64>,
}

impl OverlapOperator {
    fn new(basis: &PcBasis, horizontal: bool, points: usize) -> Self {
        let s = basis.extent() / 2.0;
        let k = basis.n_components();
        let n = points * points;
        let mut first = DMatrix::zeros(n, k);
        let mut second = DMatrix::zeros(n, k);
        let mut mean_diff = DVector::zeros(n);
        let mut va = vec![0.0; k];
        let mut vb = vec![0.0; k];
        for b in 0..points {
            for a in 0..points {
                let along = (a as f64 + 0.5) * s / points as f64;
                let across = (b as f64 + 0.5) * 2.0 * s / points as f64;
                // first model's local coordinate along the pair axis is s + along
                let ((ua, va_), (ub, vb_)) = if horizontal {
                    ((s + along, across), (along, across))
                } else {
                    ((across, s + along), (across, along))
                };
                let row = b * points + a;
                let ma = basis.eval_all(ua, va_, &mut va);
                let mb = basis.eval_all(ub, vb_, &mut vb);
                for j in 0..k {
                    first[(row, j)] = va[j];
                    second[(row, j)] = vb[j];
                }
                mean_diff[row] = ma - mb;
            }
        }
        OverlapOperator {
            first,
            second,
            mean_diff,
        }
    }

    fn residual(&self, a: &DVector<f64>, b: &DVector<f64>, with_means: bool) -> DVector<f64> {
        let mut r = &self.first * a - &self.second * b;
        if with_means {
            r += &self.mean_diff;
        }
        r
    }
}

struct DataTerm {
    gram: DMatrix<f64>,
    rhs: DVector<f64>,
    zz: f64,
}

/// Quadratic continuity objective over all model coefficients.
struct Continuity<'a> {
    nx: usize,
    ny: usize,
    lambda: f64,
    horizontal: OverlapOperator,
    vertical: OverlapOperator,
    data: &'a [DataTerm],
}

impl Continuity<'_> {
    fn pairs_h(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ny).flat_map(move |j| {
            (0..self.nx - 1).map(move |i| (j * self.nx + i, j * self.nx + i + 1))
        })
    }

    fn pairs_v(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ny - 1)
            .flat_map(move |j| (0..self.nx).map(move |i| (j * self.nx + i, (j + 1) * self.nx + i)))
    }

    fn disagreement_sq(&self, coeffs: &[DVector<f64>]) -> (f64, usize) {
        let mut sum = 0.0;
        let mut n = 0;
        for (op, pairs) in [
            (&self.horizontal, self.pairs_h().collect::<Vec<_>>()),
            (&self.vertical, self.pairs_v().collect::<Vec<_>>()),
        ] {
            for (a, b) in pairs {
                let r = op.residual(&coeffs[a], &coeffs[b], true);
                sum += r.norm_squared();
                n += r.len();
            }
        }
        (sum, n)
    }

    fn objective(&self, coeffs: &[DVector<f64>]) -> f64 {
        let (cont, _) = self.disagreement_sq(coeffs);
        let data: f64 = coeffs
            .iter()
            .zip(self.data)
            .map(|(a, d)| 0.5 * (a.dot(&(&d.gram * a)) - 2.0 * d.rhs.dot(a) + d.zz))
            .sum();
        cont + self.lambda * data
    }

    /// `H p` plus, when `affine`, the constant term of the gradient, i.e.
    /// the gradient of the objective at `p`.
    fn apply(&self, p: &[DVector<f64>], affine: bool) -> Vec<DVector<f64>> {
        let nx = self.nx;
        let ny = self.ny;
        let res_h: Vec<DVector<f64>> = (0..ny * nx)
            .into_par_iter()
            .map(|idx| {
                if idx % nx + 1 < nx {
                    self.horizontal.residual(&p[idx], &p[idx + 1], affine)
                } else {
                    DVector::zeros(0)
                }
            })
            .collect();
        let res_v: Vec<DVector<f64>> = (0..ny * nx)
            .into_par_iter()
            .map(|idx| {
                if idx / nx + 1 < ny {
                    self.vertical.residual(&p[idx], &p[idx + nx], affine)
                } else {
                    DVector::zeros(0)
                }
            })
            .collect();
        (0..ny * nx)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx % nx, idx / nx);
                let d = &self.data[idx];
                let mut g = &d.gram * &p[idx] * self.lambda;
                if affine {
                    g -= &d.rhs * self.lambda;
                }
                let mut cont = DVector::zeros(g.len());
                if i + 1 < nx {
                    cont += self.horizontal.first.tr_mul(&res_h[idx]);
                }
                if i > 0 {
                    cont -= self.horizontal.second.tr_mul(&res_h[idx - 1]);
                }
                if j + 1 < ny {
                    cont += self.vertical.first.tr_mul(&res_v[idx]);
                }
                if j > 0 {
                    cont -= self.vertical.second.tr_mul(&res_v[idx - nx]);
                }
                g + cont * 2.0
            })
            .collect()
    }
}

fn dot_all(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn data_terms(field: &ModelField, samples: &[ProjectedSample], basis: &PcBasis) -> Vec<DataTerm> {
    let members = patch_members(samples, field.nodes_x, field.nodes_y, field.spacing);
    members
        .par_iter()
        .zip(field.models.par_iter())
        .map(|(mem, model)| {
            let origin = model.origin(basis);
            let inside: Vec<&ProjectedSample> = mem
                .iter()
                .copied()
                .filter(|s| in_patch(s, origin, basis.extent()))
                .collect();
            let (m, z) = design(&inside, origin, basis);
            DataTerm {
                gram: m.tr_mul(&m),
                rhs: m.tr_mul(&z),
                zz: z.norm_squared(),
            }
        })
        .collect()
}

/// Jointly adjusts all coefficients to minimize
/// `J = sum over neighbour pairs of squared disagreement on the overlap
/// grid + lambda_data * sum of per-patch fit energies`
/// by linear conjugate gradient with exact line search.
pub fn refine_continuity(
    field: &ModelField,
    samples: &[ProjectedSample],
    basis: &PcBasis,
    lambda_data: f64,
    opts: &CgOptions,
) -> Result<(ModelField, ContinuityReport)> {
    if !(lambda_data >= 0.0 && lambda_data.is_finite()) {
        return Err(Error::domain("lambda_data must be non-negative"));
    }
    if opts.overlap_points == 0 {
        return Err(Error::domain("overlap_points must be at least 1"));
    }
    let data = data_terms(field, samples, basis);
    let problem = Continuity {
        nx: field.nodes_x,
        ny: field.nodes_y,
        lambda: lambda_data,
        horizontal: OverlapOperator::new(basis, true, opts.overlap_points),
        vertical: OverlapOperator::new(basis, false, opts.overlap_points),
        data: &data,
    };
    let mut coeffs: Vec<DVector<f64>> = field
        .models
        .iter()
        .map(|m| DVector::from_column_slice(&m.coeffs))
        .collect();
    let rms = |c: &[DVector<f64>]| {
        let (s, n) = problem.disagreement_sq(c);
        if n == 0 {
            0.0
        } else {
            (s / n as f64).sqrt()
        }
    };
    let disagreement_before = rms(&coeffs);
    let mut trace = vec![problem.objective(&coeffs)];

    let mut residual: Vec<DVector<f64>> = problem
        .apply(&coeffs, true)
        .into_iter()
        .map(|g| -g)
        .collect();
    let g0 = dot_all(&residual, &residual).sqrt();
    let mut iterations = 0;
    if g0 > 0.0 {
        let mut direction = residual.clone();
        let mut rr = g0 * g0;
        while iterations < opts.max_iterations {
            let hd = problem.apply(&direction, false);
            let curvature = dot_all(&direction, &hd);
            if curvature.is_nan() || curvature <= 0.0 {
                break;
            }
            let alpha = rr / curvature;
            let candidate: Vec<DVector<f64>> = coeffs
                .iter()
                .zip(&direction)
                .map(|(c, d)| c + d * alpha)
                .collect();
            let j_new = problem.objective(&candidate);
            if j_new > *trace.last().unwrap() {
                // rounding noise at the optimum
                break;
            }
            coeffs = candidate;
            trace.push(j_new);
            iterations += 1;
            for (r, h) in residual.iter_mut().zip(&hd) {
                *r -= h * alpha;
            }
            let rr_new = dot_all(&residual, &residual);
            if rr_new.sqrt() <= opts.gradient_tolerance * g0 {
                break;
            }
            let beta = rr_new / rr;
            rr = rr_new;
            for (d, r) in direction.iter_mut().zip(&residual) {
                *d = r + &*d * beta;
            }
        }
    }

    let disagreement_after = rms(&coeffs);
    let models = field
        .models
        .iter()
        .zip(&coeffs)
        .zip(&data)
        .map(|((m, c), d)| LocalModel {
            coeffs: c.iter().copied().collect(),
            fit_energy: (0.5 * (c.dot(&(&d.gram * c)) - 2.0 * d.rhs.dot(c) + d.zz)).max(0.0),
            ..m.clone()
        })
        .collect();
    Ok((
        ModelField {
            models,
            ..field.clone()
        },
        ContinuityReport {
            objective_trace: trace,
            iterations,
            disagreement_before,
            disagreement_after,
        },
    ))
}

/// Blends the field on the `sr_factor`-times finer grid: HR pixel `(c, r)`
/// sits at reference LR coordinates `((c + 0.5) / sr, (r + 0.5) / sr)`.
pub fn evaluate_hr(field: &ModelField, basis: &PcBasis, sr_factor: usize) -> Result<Image> {
    if sr_factor == 0 {
        return Err(Error::domain("sr_factor must be at least 1"));
    }
    let (w, h) = (field.area.width * sr_factor, field.area.height * sr_factor);
    let sr = sr_factor as f64;
    let rows: Vec<Vec<f64>> = (0..h)
        .into_par_iter()
        .map(|r| {
            let y = (r as f64 + 0.5) / sr;
            (0..w)
                .map(|c| {
                    let x = (c as f64 + 0.5) / sr;
                    field.predict(basis, x, y).clamp(0.0, 255.0)
                })
                .collect()
        })
        .collect();
    Image::new(w, h, rows.concat())
}

/// Interpolation stage settings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterpOptions {
    pub svd_rel_tol: f64,
    pub lambda_data: f64,
    pub refine: bool,
    pub cg: CgOptions,
}

impl Default for InterpOptions {
    fn default() -> Self {
        InterpOptions {
            svd_rel_tol: DEFAULT_SVD_REL_TOL,
            lambda_data: 1.0,
            refine: true,
            cg: CgOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Interpolation {
    pub image: Image,
    pub field: ModelField,
    pub continuity: Option<ContinuityReport>,
}

/// Project, fit, refine and evaluate in one call.
pub fn interpolate(
    frames: &[Image],
    transforms: &[GeomTransform],
    basis: &PcBasis,
    sr_factor: usize,
    opts: &InterpOptions,
) -> Result<Interpolation> {
    let first = frames
        .first()
        .ok_or_else(|| Error::domain("interpolation needs at least one frame"))?;
    let area = Area {
        width: first.width(),
        height: first.height(),
    };
    let samples = project_sequence(frames, transforms)?;
    let field = build_model_field(&samples, basis, area, opts.svd_rel_tol)?;
    let (field, continuity) = if opts.refine {
        let (f, rep) = refine_continuity(&field, &samples, basis, opts.lambda_data, &opts.cg)?;
        (f, Some(rep))
    } else {
        (field, None)
    };
    let image = evaluate_hr(&field, basis, sr_factor)?;
    Ok(Interpolation {
        image,
        field,
        continuity,
    })
}

/// Single-frame Catmull-Rom upsampling onto the same HR grid; the control
/// the multi-frame reconstruction is compared against.
pub fn bicubic_baseline(frame: &Image, sr_factor: usize) -> Result<Image> {
    if sr_factor == 0 {
        return Err(Error::domain("sr_factor must be at least 1"));
    }
    let sr = sr_factor as f64;
    Ok(Image::from_fn(
        frame.width() * sr_factor,
        frame.height() * sr_factor,
        |c, r| {
            let x = (c as f64 + 0.5) / sr - 0.5;
            let y = (r as f64 + 0.5) / sr - 0.5;
            frame.sample_clamped(x, y).clamp(0.0, 255.0)
        },
    ))
}
