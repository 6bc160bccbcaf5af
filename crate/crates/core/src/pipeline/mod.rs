//! End-to-end orchestration: synthesis, basis and filter training,
//! registration, interpolation, restoration and evaluation, each stage
//! reading and writing fixed artifact paths under the output directory.
//!
//! Layout of the output directory:
//!
//! ```text
//! sequences/<name>/frame_NN.pgm   frames (synthetic or imported)
//! sequences/<name>/frame_NN.txt   ground-truth motion sidecar (synthetic)
//! sequences/<name>/goal.pfm       noiseless HR goal (synthetic)
//! basis.pcsr                      principal-component basis
//! registration/<name>/frame_NN.txt estimated transforms
//! interpolated/<name>.pfm         step-1 reconstruction
//! interpolated/<name>.json        fit and continuity diagnostics
//! baseline/<name>.pfm             single-frame bicubic upsampling
//! filter.pcrf                     restoration filter
//! superresolved/<name>.{pfm,pgm}  final reconstruction
//! report.json                     run report (deterministic)
//! timings.json                    wall-clock time per stage
//! ```

mod config;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{
    ConfigError, CorpusConfig, EvaluationConfig, MotionConfig, PatchConfig, PipelineConfig,
    RealSequence, RegistrationConfig, Seeds,
};

use crate::error::{Error, Result};
use crate::image::io::{load_pfm, load_pgm, quantized, save_pfm, save_pgm};
use crate::image::{compare_with_cap, GeomTransform, Image, QualityReport, Sidecar};
use crate::interp::{bicubic_baseline, interpolate, ContinuityReport, Interpolation};
use crate::obsmodel::{render_hr_goal, synthesize_sequence, warp, SimulatedCapture};
use crate::pcbasis::{sample_patches, train_pca, PcBasis};
use crate::registration::{register_sequence_to, RegistrationResult};
use crate::restore::{apply_filter, train_filter, RestorationFilter, TrainingPair};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Simulate,
    TrainBasis,
    Register,
    Interpolate,
    TrainFilter,
    Superresolve,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Simulate,
        Stage::TrainBasis,
        Stage::Register,
        Stage::Interpolate,
        Stage::TrainFilter,
        Stage::Superresolve,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Simulate => "simulate",
            Stage::TrainBasis => "train-basis",
            Stage::Register => "register",
            Stage::Interpolate => "interpolate",
            Stage::TrainFilter => "train-filter",
            Stage::Superresolve => "superresolve",
            Stage::Evaluate => "evaluate",
        }
    }
}

/// A stage failed; carries the stage name for the exit diagnostic.
#[derive(Debug)]
pub struct StageError {
    pub stage: Stage,
    pub source: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {} failed: {}", self.stage.name(), self.source)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

// ---------------------------------------------------------------------------
// In-memory building blocks

/// Frames of one synthetic sequence plus the HR goal in the coordinates of
/// the configured reference frame.
#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub captures: Vec<SimulatedCapture>,
    pub goal: Image,
}

impl SyntheticSequence {
    pub fn frames(&self) -> Vec<Image> {
        self.captures.iter().map(|c| c.image.clone()).collect()
    }

    /// Ground-truth transforms from each frame into the reference frame.
    pub fn true_transforms(&self, reference_frame: usize) -> Result<Vec<GeomTransform>> {
        relative_truth(
            &self
                .captures
                .iter()
                .map(|c| c.applied_transform)
                .collect::<Vec<_>>(),
            reference_frame,
        )
    }
}

fn relative_truth(applied: &[GeomTransform], reference_frame: usize) -> Result<Vec<GeomTransform>> {
    let anchor_inv = applied[reference_frame].invert()?;
    Ok(applied.iter().map(|a| anchor_inv.compose(a)).collect())
}

/// Simulates the configured capture of one reference image.
pub fn synthesize(reference: &Image, cfg: &PipelineConfig, seed: u64) -> Result<SyntheticSequence> {
    let d = cfg.sensor.downsample_factor;
    let (w, h) = (reference.width() / d * d, reference.height() / d * d);
    let reference = reference.crop(0, 0, w, h)?;
    let captures = synthesize_sequence(
        &reference,
        cfg.n_frames,
        cfg.motion.spec(),
        &cfg.sensor,
        seed,
    )?;
    let anchor = captures[cfg.reference_frame].applied_transform;
    let scene = if anchor == GeomTransform::identity() {
        reference
    } else {
        warp(&reference, &anchor.rescaled(d as f64))
    };
    let goal = render_hr_goal(&scene, &cfg.sensor.noiseless(), cfg.sr_factor)?;
    Ok(SyntheticSequence { captures, goal })
}

/// Samples patches from `references` and trains the basis.
pub fn train_basis(references: &[Image], cfg: &PipelineConfig) -> Result<PcBasis> {
    let set = sample_patches(
        references,
        &cfg.sensor,
        cfg.patch.geometry(),
        cfg.patch.count,
        cfg.seeds.patches,
    )?;
    train_pca(&set, cfg.n_components)
}

/// Registration, interpolation and the bicubic control for one sequence.
#[derive(Debug, Clone)]
pub struct StepOne {
    pub registrations: Vec<RegistrationResult>,
    pub interpolation: Interpolation,
    pub baseline: Image,
}

pub fn register_frames(frames: &[Image], cfg: &PipelineConfig) -> Result<Vec<RegistrationResult>> {
    register_sequence_to(
        frames,
        cfg.reference_frame,
        cfg.registration.kind,
        &cfg.registration.options(),
    )
}

pub fn interpolate_frames(
    frames: &[Image],
    transforms: &[GeomTransform],
    basis: &PcBasis,
    cfg: &PipelineConfig,
) -> Result<Interpolation> {
    interpolate(frames, transforms, basis, cfg.sr_factor, &cfg.interp)
}

pub fn step_one(frames: &[Image], basis: &PcBasis, cfg: &PipelineConfig) -> Result<StepOne> {
    let registrations = register_frames(frames, cfg)?;
    let transforms: Vec<GeomTransform> = registrations.iter().map(|r| r.transform).collect();
    let interpolation = interpolate_frames(frames, &transforms, basis, cfg)?;
    let baseline = bicubic_baseline(&frames[cfg.reference_frame], cfg.sr_factor)?;
    Ok(StepOne {
        registrations,
        interpolation,
        baseline,
    })
}

/// Rounds through single precision, the storage format of HR artifacts.
pub fn as_stored(img: &Image) -> Image {
    img.map(|v| v as f32 as f64)
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRegistration {
    pub frame: usize,
    pub params: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Final photometric residual; absent when the solve was singular.
    pub residual_rms: Option<f64>,
    /// Mean reprojection error against the ground truth, LR pixels.
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuitySummary {
    pub objective_before: f64,
    pub objective_after: f64,
    pub iterations: usize,
    pub disagreement_before: f64,
    pub disagreement_after: f64,
}

impl From<&ContinuityReport> for ContinuitySummary {
    fn from(r: &ContinuityReport) -> Self {
        ContinuitySummary {
            objective_before: r.objective_before(),
            objective_after: r.objective_after(),
            iterations: r.iterations,
            disagreement_before: r.disagreement_before,
            disagreement_after: r.disagreement_after,
        }
    }
}

/// Written next to every step-1 image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationDiagnostics {
    pub samples: usize,
    pub models: usize,
    pub empty_models: usize,
    pub fit_energy: f64,
    pub continuity: Option<ContinuitySummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsnrSummary {
    pub baseline: f64,
    pub step1: f64,
    #[serde(rename = "final")]
    pub restored: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub name: String,
    pub registration: Vec<FrameRegistration>,
    /// RMS over frames of the reprojection error.
    pub registration_rms_error: Option<f64>,
    pub interpolation: InterpolationDiagnostics,
    pub psnr: Option<PsnrSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: String,
    pub sr_factor: usize,
    pub n_frames: usize,
    pub n_components: usize,
    pub filter_radius: usize,
    pub sequences: Vec<SequenceReport>,
    /// Evaluated sequences where the reconstruction beats the baseline.
    pub sr_above_baseline: usize,
    /// Evaluated sequences where restoration did not lower PSNR.
    pub restoration_not_worse: usize,
    pub evaluated: usize,
}

// ---------------------------------------------------------------------------
// Artifact plan

#[derive(Debug, Clone)]
struct SequencePlan {
    name: String,
    /// Corpus image, or none for the imported real sequence.
    source: Option<PathBuf>,
    seed: u64,
    training: bool,
    evaluation: bool,
}

/// Resolved artifact paths for one configuration.
#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Workspace { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
    pub fn sequence_dir(&self, name: &str) -> PathBuf {
        self.root.join("sequences").join(name)
    }
    pub fn frame(&self, name: &str, k: usize) -> PathBuf {
        self.sequence_dir(name).join(format!("frame_{k:02}.pgm"))
    }
    pub fn truth(&self, name: &str, k: usize) -> PathBuf {
        self.sequence_dir(name).join(format!("frame_{k:02}.txt"))
    }
    pub fn goal(&self, name: &str) -> PathBuf {
        self.sequence_dir(name).join("goal.pfm")
    }
    pub fn basis(&self) -> PathBuf {
        self.root.join("basis.pcsr")
    }
    pub fn registration(&self, name: &str, k: usize) -> PathBuf {
        self.root
            .join("registration")
            .join(name)
            .join(format!("frame_{k:02}.txt"))
    }
    pub fn interpolated(&self, name: &str) -> PathBuf {
        self.root.join("interpolated").join(format!("{name}.pfm"))
    }
    pub fn diagnostics(&self, name: &str) -> PathBuf {
        self.root.join("interpolated").join(format!("{name}.json"))
    }
    pub fn baseline(&self, name: &str) -> PathBuf {
        self.root.join("baseline").join(format!("{name}.pfm"))
    }
    pub fn filter(&self) -> PathBuf {
        self.root.join("filter.pcrf")
    }
    pub fn superresolved(&self, name: &str) -> PathBuf {
        self.root.join("superresolved").join(format!("{name}.pfm"))
    }
    pub fn report(&self) -> PathBuf {
        self.root.join("report.json")
    }
    pub fn timings(&self) -> PathBuf {
        self.root.join("timings.json")
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::format("JSON", e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::format("JSON", format!("{}: {e}", path.display())))
}

/// Loads a PGM or PFM image by extension.
pub fn load_image(path: &Path) -> Result<Image> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("pfm") => load_pfm(path),
        Some("pgm") => load_pgm(path),
        _ => Err(Error::domain(format!(
            "{}: expected a .pgm or .pfm image",
            path.display()
        ))),
    }
}

/// Corpus images sorted by file name.
pub fn corpus_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if matches!(ext.as_deref(), Some("pgm") | Some("pfm")) {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::domain(format!(
            "no .pgm or .pfm images in {}",
            dir.display()
        )));
    }
    Ok(paths)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// The pipeline bound to one configuration.
pub struct Pipeline {
    cfg: PipelineConfig,
    ws: Workspace,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Self {
        let ws = Workspace::new(cfg.output_dir.clone());
        Pipeline { cfg, ws }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn workspace(&self) -> &Workspace {
        &self.ws
    }

    pub fn is_real(&self) -> bool {
        self.cfg.real.is_some()
    }

    fn plan(&self) -> Result<Vec<SequencePlan>> {
        let images = corpus_images(&self.cfg.corpus_dir)?;
        let n = images.len();
        let held = self.cfg.corpus.evaluation_count;
        if held > n {
            return Err(Error::domain(format!(
                "evaluation_count {held} exceeds the {n} corpus images"
            )));
        }
        let mut plan: Vec<SequencePlan> = images
            .iter()
            .enumerate()
            .map(|(i, path)| {
                let evaluation = held == 0 || i >= n - held;
                let training = held == 0 || i < n - held;
                let base = if evaluation {
                    self.cfg.seeds.synthesis
                } else {
                    self.cfg.seeds.training
                };
                SequencePlan {
                    name: stem(path),
                    source: Some(path.clone()),
                    seed: derive_seed(base, i as u64),
                    training,
                    evaluation,
                }
            })
            .collect();
        if let Some(real) = &self.cfg.real {
            plan.retain(|p| p.training);
            for p in plan.iter_mut() {
                p.evaluation = false;
            }
            plan.push(SequencePlan {
                name: real.name.clone(),
                source: None,
                seed: 0,
                training: false,
                evaluation: true,
            });
        }
        Ok(plan)
    }

    fn training_images(&self) -> Result<Vec<Image>> {
        self.plan()?
            .iter()
            .filter(|p| p.training)
            .filter_map(|p| p.source.as_ref())
            .map(|path| load_image(path))
            .collect()
    }

    fn frame_count(&self, plan: &SequencePlan) -> usize {
        match (&self.cfg.real, plan.source.is_none()) {
            (Some(real), true) => real.frames.len(),
            _ => self.cfg.n_frames,
        }
    }

    fn load_frames(&self, plan: &SequencePlan) -> Result<Vec<Image>> {
        (0..self.frame_count(plan))
            .map(|k| load_pgm(self.ws.frame(&plan.name, k)))
            .collect()
    }

    /// Runs one stage.
    pub fn run(&self, stage: Stage) -> std::result::Result<(), StageError> {
        let start = Instant::now();
        let outcome = match stage {
            Stage::Simulate => self.simulate(),
            Stage::TrainBasis => self.train_basis(),
            Stage::Register => self.register(),
            Stage::Interpolate => self.interpolate(),
            Stage::TrainFilter => self.train_filter(),
            Stage::Superresolve => self.superresolve(),
            Stage::Evaluate => self.evaluate().map(|_| ()),
        };
        let outcome =
            outcome.and_then(|_| self.record_timing(stage, start.elapsed().as_secs_f64()));
        outcome.map_err(|source| StageError { stage, source })
    }

    /// Runs every production stage in order.
    pub fn run_all(&self) -> std::result::Result<(), StageError> {
        Stage::ALL.iter().try_for_each(|&s| self.run(s))
    }

    fn record_timing(&self, stage: Stage, seconds: f64) -> Result<()> {
        let path = self.ws.timings();
        let mut map: BTreeMap<String, f64> = if path.exists() {
            read_json(&path)?
        } else {
            BTreeMap::new()
        };
        map.insert(stage.name().to_string(), seconds);
        write_json(&path, &map)
    }

    fn simulate(&self) -> Result<()> {
        for plan in self.plan()? {
            match &plan.source {
                Some(path) => {
                    let reference = load_image(path)?;
                    let seq = synthesize(&reference, &self.cfg, plan.seed)?;
                    for (k, cap) in seq.captures.iter().enumerate() {
                        let frame = self.ws.frame(&plan.name, k);
                        ensure_parent(&frame)?;
                        save_pgm(&cap.image, &frame)?;
                        Sidecar::new(cap.applied_transform)
                            .with_seed(cap.seed)
                            .save(self.ws.truth(&plan.name, k))?;
                    }
                    save_pfm(&seq.goal, self.ws.goal(&plan.name))?;
                }
                None => {
                    let real = self.cfg.real.as_ref().expect("real plan without frames");
                    let frames: Vec<Image> = real
                        .frames
                        .iter()
                        .map(|p| load_image(p))
                        .collect::<Result<_>>()?;
                    let (w, h) = (frames[0].width(), frames[0].height());
                    for (k, f) in frames.iter().enumerate() {
                        if (f.width(), f.height()) != (w, h) {
                            return Err(Error::domain(format!(
                                "real frame {k} is {}x{}, frame 0 is {w}x{h}",
                                f.width(),
                                f.height()
                            )));
                        }
                        let path = self.ws.frame(&plan.name, k);
                        ensure_parent(&path)?;
                        save_pgm(&quantized(f), &path)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn train_basis(&self) -> Result<()> {
        let refs = self.training_images()?;
        let basis = train_basis(&refs, &self.cfg)?;
        ensure_parent(&self.ws.basis())?;
        basis.save(self.ws.basis())
    }

    fn register_one(&self, plan: &SequencePlan) -> Result<Vec<RegistrationResult>> {
        let frames = self.load_frames(plan)?;
        let results = register_frames(&frames, &self.cfg)?;
        for (k, r) in results.iter().enumerate() {
            let path = self.ws.registration(&plan.name, k);
            ensure_parent(&path)?;
            let residual = if r.residual_rms.is_finite() {
                format!("{:?}", r.residual_rms)
            } else {
                "none".into()
            };
            Sidecar::new(r.transform)
                .with_extra("converged", r.converged)
                .with_extra("iterations", r.iterations)
                .with_extra("residual_rms", residual)
                .save(path)?;
        }
        Ok(results)
    }

    fn register(&self) -> Result<()> {
        for plan in self.plan()? {
            self.register_one(&plan)?;
        }
        Ok(())
    }

    fn load_registrations(&self, plan: &SequencePlan) -> Result<Vec<Sidecar>> {
        (0..self.frame_count(plan))
            .map(|k| Sidecar::load(self.ws.registration(&plan.name, k)))
            .collect()
    }

    fn interpolate_one(&self, plan: &SequencePlan, basis: &PcBasis) -> Result<()> {
        let frames = self.load_frames(plan)?;
        let transforms: Vec<GeomTransform> = self
            .load_registrations(plan)?
            .iter()
            .map(|s| s.transform)
            .collect();
        let interp = interpolate_frames(&frames, &transforms, basis, &self.cfg)?;
        let baseline = bicubic_baseline(&frames[self.cfg.reference_frame], self.cfg.sr_factor)?;
        let out = self.ws.interpolated(&plan.name);
        ensure_parent(&out)?;
        save_pfm(&interp.image, &out)?;
        let base = self.ws.baseline(&plan.name);
        ensure_parent(&base)?;
        save_pfm(&baseline, &base)?;
        let samples = crate::interp::project_sequence(&frames, &transforms)?.len();
        let diag = InterpolationDiagnostics {
            samples,
            models: interp.field.models.len(),
            empty_models: interp.field.empty_count(),
            fit_energy: interp.field.total_fit_energy(),
            continuity: interp.continuity.as_ref().map(ContinuitySummary::from),
        };
        write_json(&self.ws.diagnostics(&plan.name), &diag)
    }

    fn load_basis(&self) -> Result<PcBasis> {
        let path = self.ws.basis();
        if !path.exists() {
            return Err(Error::domain(format!(
                "{} is missing; run train-basis first",
                path.display()
            )));
        }
        PcBasis::load(&path)
    }

    fn interpolate(&self) -> Result<()> {
        let basis = self.load_basis()?;
        for plan in self.plan()? {
            self.interpolate_one(&plan, &basis)?;
        }
        Ok(())
    }

    fn train_filter(&self) -> Result<()> {
        let pairs: Vec<TrainingPair> = self
            .plan()?
            .iter()
            .filter(|p| p.training && p.source.is_some())
            .map(|p| {
                Ok(TrainingPair {
                    input: load_pfm(self.ws.interpolated(&p.name))?,
                    target: load_pfm(self.ws.goal(&p.name))?,
                })
            })
            .collect::<Result<_>>()?;
        let filter = train_filter(&pairs, &self.cfg.restore)?;
        ensure_parent(&self.ws.filter())?;
        filter.save(&self.ws.filter())
    }

    fn superresolve(&self) -> Result<()> {
        let filter_path = self.ws.filter();
        if !filter_path.exists() {
            return Err(Error::domain(format!(
                "{} is missing; run train-filter first",
                filter_path.display()
            )));
        }
        let filter = RestorationFilter::load(&filter_path)?;
        let mut basis = None;
        let mut sequences = Vec::new();
        for plan in self.plan()?.into_iter().filter(|p| p.evaluation) {
            if !self.ws.registration(&plan.name, 0).exists() {
                self.register_one(&plan)?;
            }
            if !self.ws.interpolated(&plan.name).exists() {
                if basis.is_none() {
                    basis = Some(self.load_basis()?);
                }
                self.interpolate_one(&plan, basis.as_ref().unwrap())?;
            }
            let step1 = load_pfm(self.ws.interpolated(&plan.name))?;
            let restored = apply_filter(&step1, &filter);
            let out = self.ws.superresolved(&plan.name);
            ensure_parent(&out)?;
            save_pfm(&restored, &out)?;
            save_pgm(&restored, out.with_extension("pgm"))?;
            sequences.push(self.sequence_report(&plan)?);
        }
        let evaluated: Vec<&PsnrSummary> =
            sequences.iter().filter_map(|s| s.psnr.as_ref()).collect();
        let report = RunReport {
            mode: if self.is_real() { "real" } else { "synthetic" }.to_string(),
            sr_factor: self.cfg.sr_factor,
            n_frames: self.cfg.n_frames,
            n_components: self.cfg.n_components,
            filter_radius: filter.radius(),
            sr_above_baseline: evaluated.iter().filter(|p| p.restored > p.baseline).count(),
            restoration_not_worse: evaluated.iter().filter(|p| p.restored >= p.step1).count(),
            evaluated: evaluated.len(),
            sequences,
        };
        write_json(&self.ws.report(), &report)
    }

    fn sequence_report(&self, plan: &SequencePlan) -> Result<SequenceReport> {
        let estimated = self.load_registrations(plan)?;
        let truth: Option<Vec<GeomTransform>> = if plan.source.is_some() {
            let applied: Vec<GeomTransform> = (0..self.frame_count(plan))
                .map(|k| Sidecar::load(self.ws.truth(&plan.name, k)).map(|s| s.transform))
                .collect::<Result<_>>()?;
            Some(relative_truth(&applied, self.cfg.reference_frame)?)
        } else {
            None
        };
        let frames = self.load_frames(plan)?;
        let (w, h) = (frames[0].width(), frames[0].height());
        let extra = |s: &Sidecar, key: &str| {
            s.extra
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.clone())
                .unwrap_or_default()
        };
        let registration: Vec<FrameRegistration> = estimated
            .iter()
            .enumerate()
            .map(|(k, s)| FrameRegistration {
                frame: k,
                params: s.transform.params(),
                converged: extra(s, "converged") == "true",
                iterations: extra(s, "iterations").parse().unwrap_or(0),
                residual_rms: extra(s, "residual_rms").parse().ok(),
                error: truth
                    .as_ref()
                    .map(|t| s.transform.mean_reprojection_error(&t[k], w, h)),
            })
            .collect();
        let errors: Vec<f64> = registration
            .iter()
            .filter(|r| r.frame != self.cfg.reference_frame)
            .filter_map(|r| r.error)
            .collect();
        let registration_rms_error = if truth.is_some() && !errors.is_empty() {
            Some((errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt())
        } else {
            None
        };
        let psnr = if plan.source.is_some() {
            let goal = load_pfm(self.ws.goal(&plan.name))?;
            let q = |img: &Image| self.quality(img, &goal).map(|r| r.psnr);
            Some(PsnrSummary {
                baseline: q(&load_pfm(self.ws.baseline(&plan.name))?)?,
                step1: q(&load_pfm(self.ws.interpolated(&plan.name))?)?,
                restored: q(&load_pfm(self.ws.superresolved(&plan.name))?)?,
            })
        } else {
            None
        };
        Ok(SequenceReport {
            name: plan.name.clone(),
            registration,
            registration_rms_error,
            interpolation: read_json(&self.ws.diagnostics(&plan.name))?,
            psnr,
        })
    }

    fn quality(&self, image: &Image, reference: &Image) -> Result<QualityReport> {
        compare_with_cap(
            image,
            reference,
            self.cfg.evaluation.margin,
            self.cfg.evaluation.psnr_cap,
        )
    }

    /// Compares two saved images with the configured margin and cap.
    pub fn evaluate_files(&self, image: &Path, reference: &Path) -> Result<QualityReport> {
        self.quality(&load_image(image)?, &load_image(reference)?)
    }

    /// Final-output quality of every evaluated synthetic sequence, by name.
    pub fn evaluate(&self) -> Result<BTreeMap<String, QualityReport>> {
        let mut out = BTreeMap::new();
        for plan in self
            .plan()?
            .into_iter()
            .filter(|p| p.evaluation && p.source.is_some())
        {
            let goal = load_pfm(self.ws.goal(&plan.name))?;
            let img = load_pfm(self.ws.superresolved(&plan.name))?;
            out.insert(plan.name.clone(), self.quality(&img, &goal)?);
        }
        write_json(&self.ws.root().join("evaluation.json"), &out)?;
        Ok(out)
    }
}

/// Colour-free text summary of a report, one line per sequence.
pub fn summarize(report: &RunReport) -> String {
    let mut s = String::new();
    for seq in &report.sequences {
        s.push_str(&seq.name);
        if let Some(e) = seq.registration_rms_error {
            s.push_str(&format!("  reg_rms={e:.4}"));
        }
        if let Some(c) = &seq.interpolation.continuity {
            s.push_str(&format!(
                "  J {:.4e} -> {:.4e}",
                c.objective_before, c.objective_after
            ));
        }
        if let Some(p) = &seq.psnr {
            s.push_str(&format!(
                "  psnr baseline={:.3} step1={:.3} final={:.3}",
                p.baseline, p.step1, p.restored
            ));
        }
        s.push('\n');
    }
    if report.evaluated > 0 {
        s.push_str(&format!(
            "above baseline {}/{}  restoration not worse {}/{}\n",
            report.sr_above_baseline,
            report.evaluated,
            report.restoration_not_worse,
            report.evaluated
        ));
    }
    s
}

/// Reads a report written by the superresolve stage.
pub fn load_report(path: &Path) -> Result<RunReport> {
    read_json(path)
}
