use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::image::{TransformKind, DEFAULT_PSNR_CAP};
use crate::interp::InterpOptions;
use crate::obsmodel::{MotionSpec, SensorParams};
use crate::pcbasis::{
    PatchGeometry, DEFAULT_COMPONENTS, DEFAULT_LR_SPAN, DEFAULT_PATCH_COUNT, DEFAULT_PATCH_DIM,
};
use crate::registration::RegistrationOptions;
use crate::restore::RestoreOptions;
use crate::rng::derive_seed;

/// A configuration problem, located by line when the parser can tell.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub origin: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.origin, line, self.message),
            None => write!(f, "{}: {}", self.origin, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Directory of high-resolution grayscale PGM/PFM reference images.
    pub corpus_dir: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_sr_factor")]
    pub sr_factor: usize,
    #[serde(default = "default_n_frames")]
    pub n_frames: usize,
    #[serde(default = "default_components")]
    pub n_components: usize,
    /// LR pixels between neighbouring model centres.
    #[serde(default = "default_spacing")]
    pub model_grid_spacing: f64,
    /// Index of the frame whose coordinates the reconstruction uses.
    #[serde(default)]
    pub reference_frame: usize,
    #[serde(default)]
    pub sensor: SensorParams,
    #[serde(default)]
    pub motion: MotionConfig,
    #[serde(default)]
    pub patch: PatchConfig,
    #[serde(default)]
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub registration: RegistrationConfig,
    #[serde(default)]
    pub interp: InterpOptions,
    #[serde(default)]
    pub restore: RestoreOptions,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub seeds: Seeds,
    /// Present for real-sequence mode: user frames instead of synthesis.
    #[serde(default)]
    pub real: Option<RealSequence>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("pcsr-out")
}
fn default_sr_factor() -> usize {
    2
}
fn default_n_frames() -> usize {
    5
}
fn default_components() -> usize {
    DEFAULT_COMPONENTS
}
fn default_spacing() -> f64 {
    DEFAULT_LR_SPAN as f64 / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotionConfig {
    pub kind: TransformKind,
    /// Largest translation per axis, LR pixels.
    pub amplitude: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        MotionConfig {
            kind: TransformKind::Translation,
            amplitude: 3.0,
        }
    }
}

impl MotionConfig {
    pub fn spec(&self) -> MotionSpec {
        MotionSpec {
            kind: self.kind,
            amplitude: self.amplitude,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PatchConfig {
    pub patch_dim: usize,
    pub lr_span: usize,
    pub count: usize,
}

impl Default for PatchConfig {
    fn default() -> Self {
        PatchConfig {
            patch_dim: DEFAULT_PATCH_DIM,
            lr_span: DEFAULT_LR_SPAN,
            count: DEFAULT_PATCH_COUNT,
        }
    }
}

impl PatchConfig {
    pub fn geometry(&self) -> PatchGeometry {
        PatchGeometry {
            patch_dim: self.patch_dim,
            lr_span: self.lr_span,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusConfig {
    /// Trailing images (sorted by name) held out for evaluation. Zero uses
    /// every image for both training and evaluation.
    pub evaluation_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegistrationConfig {
    pub kind: TransformKind,
    pub pyramid_levels: usize,
    pub max_iterations: usize,
    pub update_tolerance: f64,
    pub smoothing_sigma: f64,
    pub border: usize,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        let o = RegistrationOptions::default();
        RegistrationConfig {
            kind: TransformKind::Translation,
            pyramid_levels: o.pyramid_levels,
            max_iterations: o.max_iterations,
            update_tolerance: o.update_tolerance,
            smoothing_sigma: o.smoothing_sigma,
            border: o.border,
        }
    }
}

impl RegistrationConfig {
    pub fn options(&self) -> RegistrationOptions {
        RegistrationOptions {
            pyramid_levels: self.pyramid_levels,
            max_iterations: self.max_iterations,
            update_tolerance: self.update_tolerance,
            smoothing_sigma: self.smoothing_sigma,
            border: self.border,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    /// HR pixels excluded at each border when computing metrics.
    pub margin: usize,
    pub psnr_cap: f64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            margin: 8,
            psnr_cap: DEFAULT_PSNR_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Seeds {
    /// Evaluation sequences.
    pub synthesis: u64,
    pub patches: u64,
    /// Filter-training sequences.
    pub training: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            synthesis: 1,
            patches: 2,
            training: 3,
        }
    }
}

impl Seeds {
    /// All seeds derived from one master value.
    pub fn from_master(seed: u64) -> Self {
        Seeds {
            synthesis: derive_seed(seed, 1),
            patches: derive_seed(seed, 2),
            training: derive_seed(seed, 3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealSequence {
    /// Sequence name used for artifact paths.
    #[serde(default = "default_real_name")]
    pub name: String,
    pub frames: Vec<PathBuf>,
}

fn default_real_name() -> String {
    "real".to_string()
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl PipelineConfig {
    /// Parses and validates a configuration. Relative paths are resolved
    /// against `base_dir`.
    pub fn parse(text: &str, origin: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| ConfigError {
            origin: origin.to_string(),
            line: e.span().map(|s| line_of(text, s.start)),
            message: e.message().trim().to_string(),
        })?;
        let locate = |key: &str| {
            text.lines()
                .position(|l| l.trim_start().starts_with(key))
                .map(|i| i + 1)
        };
        cfg.validate().map_err(|(key, message)| ConfigError {
            origin: origin.to_string(),
            line: locate(key),
            message: format!("{key}: {message}"),
        })?;
        let resolve = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base_dir.join(p)
            }
        };
        cfg.corpus_dir = resolve(&cfg.corpus_dir);
        cfg.output_dir = resolve(&cfg.output_dir);
        if let Some(real) = cfg.real.as_mut() {
            real.frames = real.frames.iter().map(|p| resolve(p)).collect();
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            origin: path.display().to_string(),
            line: None,
            message: format!("cannot read config: {e}"),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        PipelineConfig::parse(&text, &path.display().to_string(), base)
    }

    fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.corpus_dir.as_os_str().is_empty() {
            return Err(("corpus_dir", "must not be empty".into()));
        }
        self.sensor
            .validate()
            .map_err(|e| ("[sensor]", e.to_string()))?;
        let d = self.sensor.downsample_factor;
        if self.sr_factor == 0 || !d.is_multiple_of(self.sr_factor) {
            return Err(("sr_factor", format!("must divide downsample_factor {d}")));
        }
        if self.n_frames == 0 {
            return Err(("n_frames", "must be at least 1".into()));
        }
        if self.reference_frame >= self.n_frames {
            return Err((
                "reference_frame",
                format!("must be below n_frames {}", self.n_frames),
            ));
        }
        self.patch
            .geometry()
            .validate()
            .map_err(|e| ("[patch]", e.to_string()))?;
        let dim = self.patch.patch_dim * self.patch.patch_dim;
        if self.n_components == 0 || self.n_components > dim {
            return Err(("n_components", format!("must be in 1..={dim}")));
        }
        if self.patch.count < self.n_components {
            return Err(("count", "must be at least n_components".into()));
        }
        if self.model_grid_spacing != self.patch.lr_span as f64 / 2.0 {
            return Err((
                "model_grid_spacing",
                format!(
                    "must be half the patch span ({})",
                    self.patch.lr_span as f64 / 2.0
                ),
            ));
        }
        if !(self.motion.amplitude >= 0.0 && self.motion.amplitude.is_finite()) {
            return Err(("amplitude", "must be finite and non-negative".into()));
        }
        self.registration
            .options()
            .validate()
            .map_err(|e| ("[registration]", e.to_string()))?;
        if !(self.interp.svd_rel_tol >= 0.0 && self.interp.svd_rel_tol < 1.0) {
            return Err(("svd_rel_tol", "must be in [0, 1)".into()));
        }
        if !(self.interp.lambda_data >= 0.0 && self.interp.lambda_data.is_finite()) {
            return Err(("lambda_data", "must be finite and non-negative".into()));
        }
        if !(self.restore.ridge >= 0.0 && self.restore.ridge.is_finite()) {
            return Err(("ridge", "must be finite and non-negative".into()));
        }
        if self.evaluation.psnr_cap.is_nan() || self.evaluation.psnr_cap <= 0.0 {
            return Err(("psnr_cap", "must be positive".into()));
        }
        if let Some(real) = &self.real {
            if real.frames.is_empty() {
                return Err(("frames", "needs at least one frame".into()));
            }
            if self.reference_frame >= real.frames.len() {
                return Err(("reference_frame", "beyond the listed frames".into()));
            }
        }
        Ok(())
    }

    pub fn with_seed_override(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seeds = Seeds::from_master(s);
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<PipelineConfig, ConfigError> {
        PipelineConfig::parse(text, "test.toml", Path::new("/base"))
    }

    #[test]
    fn defaults_follow_the_method() {
        let cfg = parse("corpus_dir = \"refs\"\n").unwrap();
        assert_eq!(cfg.n_components, 60);
        assert_eq!(cfg.n_frames, 5);
        assert_eq!(cfg.sr_factor, 2);
        assert_eq!(cfg.model_grid_spacing, 2.0);
        assert_eq!((cfg.patch.patch_dim, cfg.patch.lr_span), (64, 4));
        assert_eq!(cfg.restore.radius, 7);
        assert_eq!(cfg.corpus_dir, PathBuf::from("/base/refs"));
    }

    #[test]
    fn sections_parse() {
        let cfg = parse(
            "corpus_dir = \"/abs\"\nsr_factor = 4\n[sensor]\nnoise_sigma = 2.0\n[registration]\nkind = \"affine\"\n[seeds]\nsynthesis = 9\n",
        )
        .unwrap();
        assert_eq!(cfg.corpus_dir, PathBuf::from("/abs"));
        assert_eq!(cfg.sensor.noise_sigma, 2.0);
        assert_eq!(cfg.registration.kind, TransformKind::Affine);
        assert_eq!(cfg.seeds.synthesis, 9);
        assert_eq!(cfg.seeds.patches, 2);
    }

    #[test]
    fn unknown_key_is_located() {
        let err = parse("corpus_dir = \"a\"\n\n[sensor]\nwavelenght = 0.5\n").unwrap_err();
        assert_eq!(err.line, Some(4));
        assert!(err.message.contains("wavelenght"), "{}", err.message);
        assert!(err.to_string().starts_with("test.toml:4:"));
    }

    #[test]
    fn missing_corpus_is_named() {
        let err = parse("sr_factor = 2\n").unwrap_err();
        assert!(err.message.contains("corpus_dir"), "{}", err.message);
        assert!(err.line.is_some());
    }

    #[test]
    fn semantic_errors_are_located() {
        let err = parse("corpus_dir = \"a\"\nsr_factor = 3\n").unwrap_err();
        assert_eq!(err.line, Some(2));
        assert!(err.message.starts_with("sr_factor"));
        assert!(parse("corpus_dir = \"a\"\nmodel_grid_spacing = 1.0\n").is_err());
        assert!(parse("corpus_dir = \"a\"\nreference_frame = 5\n").is_err());
        assert!(parse("corpus_dir = \"a\"\n[sensor]\nw_rms = 0.5\n").is_err());
    }

    #[test]
    fn seed_override_replaces_all() {
        let cfg = parse("corpus_dir = \"a\"\n")
            .unwrap()
            .with_seed_override(Some(5));
        assert_eq!(cfg.seeds, Seeds::from_master(5));
        assert_ne!(cfg.seeds.synthesis, cfg.seeds.patches);
    }
}
