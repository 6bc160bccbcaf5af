//! Translation and affine mappings between frame coordinate systems, plus the
//! plain-text sidecar format used to store them next to image files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    Translation,
    Affine,
}

impl TransformKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TransformKind::Translation => "translation",
            TransformKind::Affine => "affine",
        }
    }

    pub fn n_params(self) -> usize {
        match self {
            TransformKind::Translation => 2,
            TransformKind::Affine => 6,
        }
    }
}

impl std::str::FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "translation" => Ok(TransformKind::Translation),
            "affine" => Ok(TransformKind::Affine),
            other => Err(Error::domain(format!("unknown transform kind `{other}`"))),
        }
    }
}

/// `p' = L p + t`, mapping target-frame coordinates to reference-frame
/// coordinates. A translation is stored with an identity linear part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeomTransform {
    kind: TransformKind,
    /// Row-major `[a11, a12, a21, a22]`.
    linear: [f64; 4],
    translation: [f64; 2],
}

/// Bounds on `|det L|` outside of which a transform is treated as a
/// registration failure.
pub const DETERMINANT_BOUNDS: (f64, f64) = (0.5, 2.0);

impl GeomTransform {
    pub fn identity() -> Self {
        Self::translation(0.0, 0.0)
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        GeomTransform {
            kind: TransformKind::Translation,
            linear: [1.0, 0.0, 0.0, 1.0],
            translation: [tx, ty],
        }
    }

    pub fn affine(a11: f64, a12: f64, a21: f64, a22: f64, tx: f64, ty: f64) -> Self {
        GeomTransform {
            kind: TransformKind::Affine,
            linear: [a11, a12, a21, a22],
            translation: [tx, ty],
        }
    }

    /// Builds a transform of `kind` from its parameter vector: `(tx, ty)` or
    /// `(a11, a12, a21, a22, tx, ty)`.
    pub fn from_params(kind: TransformKind, params: &[f64]) -> Result<Self> {
        if params.len() != kind.n_params() {
            return Err(Error::domain(format!(
                "{} transform takes {} parameters, got {}",
                kind.as_str(),
                kind.n_params(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::domain("non-finite transform parameter"));
        }
        Ok(match kind {
            TransformKind::Translation => Self::translation(params[0], params[1]),
            TransformKind::Affine => Self::affine(
                params[0], params[1], params[2], params[3], params[4], params[5],
            ),
        })
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn params(&self) -> Vec<f64> {
        match self.kind {
            TransformKind::Translation => self.translation.to_vec(),
            TransformKind::Affine => {
                let [a11, a12, a21, a22] = self.linear;
                vec![a11, a12, a21, a22, self.translation[0], self.translation[1]]
            }
        }
    }

    pub fn linear(&self) -> [f64; 4] {
        self.linear
    }

    pub fn translation_part(&self) -> [f64; 2] {
        self.translation
    }

    /// Same mapping re-tagged as affine.
    pub fn to_affine(&self) -> Self {
        GeomTransform {
            kind: TransformKind::Affine,
            ..*self
        }
    }

    pub fn determinant(&self) -> f64 {
        let [a, b, c, d] = self.linear;
        a * d - b * c
    }

    /// Whether `|det L|` is inside [`DETERMINANT_BOUNDS`].
    pub fn is_plausible(&self) -> bool {
        let d = self.determinant().abs();
        d >= DETERMINANT_BOUNDS.0 && d <= DETERMINANT_BOUNDS.1
    }

    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let [a, b, c, d] = self.linear;
        (
            a * x + b * y + self.translation[0],
            c * x + d * y + self.translation[1],
        )
    }

    /// `self ∘ inner`: applies `inner` first.
    pub fn compose(&self, inner: &GeomTransform) -> GeomTransform {
        let [a, b, c, d] = self.linear;
        let [e, f, g, h] = inner.linear;
        let (tx, ty) = self.apply(inner.translation[0], inner.translation[1]);
        let kind = if self.kind == TransformKind::Translation
            && inner.kind == TransformKind::Translation
        {
            TransformKind::Translation
        } else {
            TransformKind::Affine
        };
        GeomTransform {
            kind,
            linear: [a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h],
            translation: [tx, ty],
        }
    }

    pub fn invert(&self) -> Result<GeomTransform> {
        let det = self.determinant();
        let scale = self.linear.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if det.abs() <= 1e-14 * scale * scale || det == 0.0 {
            return Err(Error::Arithmetic(format!(
                "cannot invert transform with determinant {det}"
            )));
        }
        let [a, b, c, d] = self.linear;
        let inv = [d / det, -b / det, -c / det, a / det];
        let [tx, ty] = self.translation;
        let t = [-(inv[0] * tx + inv[1] * ty), -(inv[2] * tx + inv[3] * ty)];
        Ok(GeomTransform {
            kind: self.kind,
            linear: inv,
            translation: t,
        })
    }

    /// Re-expresses the transform in coordinates scaled by `factor`
    /// (`p_new = factor * p_old`): the linear part is unchanged and the
    /// translation scales.
    pub fn rescaled(&self, factor: f64) -> GeomTransform {
        GeomTransform {
            translation: [self.translation[0] * factor, self.translation[1] * factor],
            ..*self
        }
    }

    /// Maximum absolute parameter difference after converting both to the
    /// affine parameterization.
    pub fn max_param_diff(&self, other: &GeomTransform) -> f64 {
        let a = self.to_affine().params();
        let b = other.to_affine().params();
        a.iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// Mean Euclidean distance between `self(p)` and `other(p)` over the pixel
    /// centres of a `width x height` frame.
    pub fn mean_reprojection_error(
        &self,
        other: &GeomTransform,
        width: usize,
        height: usize,
    ) -> f64 {
        let mut acc = 0.0;
        for r in 0..height {
            for c in 0..width {
                let (x, y) = (c as f64 + 0.5, r as f64 + 0.5);
                let (ax, ay) = self.apply(x, y);
                let (bx, by) = other.apply(x, y);
                acc += ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt();
            }
        }
        acc / (width * height) as f64
    }
}

impl Default for GeomTransform {
    fn default() -> Self {
        Self::identity()
    }
}

/// Contents of a transform sidecar file.
///
/// ```text
/// translation
/// 0.5 -0.25
/// seed 17
/// ```
///
/// The first line names the kind, the second lists the parameters in
/// shortest round-trip decimal form. Any further lines are `key value`
/// pairs; `seed` is the only one interpreted.
#[derive(Debug, Clone, PartialEq)]
pub struct Sidecar {
    pub transform: GeomTransform,
    pub seed: Option<u64>,
    pub extra: Vec<(String, String)>,
}

impl Sidecar {
    pub fn new(transform: GeomTransform) -> Self {
        Sidecar {
            transform,
            seed: None,
            extra: Vec::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_extra(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.push((key.to_string(), value.to_string()));
        self
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(self.transform.kind().as_str());
        out.push('\n');
        let params: Vec<String> = self
            .transform
            .params()
            .iter()
            .map(|p| format!("{p:?}"))
            .collect();
        out.push_str(&params.join(" "));
        out.push('\n');
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed {seed}");
        }
        for (k, v) in &self.extra {
            let _ = writeln!(out, "{k} {v}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let kind: TransformKind = lines
            .next()
            .ok_or_else(|| Error::format("sidecar", "missing kind line"))?
            .parse()
            .map_err(|e: Error| Error::format("sidecar", e.to_string()))?;
        let params = lines
            .next()
            .ok_or_else(|| Error::format("sidecar", "missing parameter line"))?
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::format("sidecar", format!("bad parameter `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let transform = GeomTransform::from_params(kind, &params)
            .map_err(|e| Error::format("sidecar", e.to_string()))?;
        let mut sidecar = Sidecar::new(transform);
        for line in lines {
            let (key, value) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            if key == "seed" {
                let seed = value
                    .trim()
                    .parse()
                    .map_err(|_| Error::format("sidecar", format!("bad seed `{value}`")))?;
                sidecar.seed = Some(seed);
            } else {
                sidecar
                    .extra
                    .push((key.to_string(), value.trim().to_string()));
            }
        }
        Ok(sidecar)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: (f64, f64), b: (f64, f64), tol: f64) -> bool {
        (a.0 - b.0).abs() <= tol && (a.1 - b.1).abs() <= tol
    }

    #[test]
    fn apply_examples() {
        assert_eq!(GeomTransform::identity().apply(4.2, 7.0), (4.2, 7.0));
        assert_eq!(
            GeomTransform::translation(0.5, -0.25).apply(0.0, 0.0),
            (0.5, -0.25)
        );
        let t = GeomTransform::affine(2.0, 0.0, 0.0, 2.0, 1.0, 1.0);
        assert_eq!(t.apply(3.0, 4.0), (7.0, 9.0));
    }

    #[test]
    fn compose_and_invert_examples() {
        let t = GeomTransform::affine(1.01, 0.02, -0.01, 0.99, 0.3, -1.2);
        assert_eq!(GeomTransform::identity().compose(&t).params(), t.params());
        let inv = GeomTransform::translation(1.0, 2.0).invert().unwrap();
        assert_eq!(inv.kind(), TransformKind::Translation);
        assert_eq!(inv.params(), vec![-1.0, -2.0]);
        let id = t.compose(&t.invert().unwrap());
        assert!(id.max_param_diff(&GeomTransform::identity()) < 1e-9);
    }

    #[test]
    fn singular_inverse_fails() {
        let t = GeomTransform::affine(1.0, 2.0, 2.0, 4.0, 0.0, 0.0);
        assert!(matches!(t.invert(), Err(Error::Arithmetic(_))));
    }

    #[test]
    fn plausibility_bounds() {
        assert!(GeomTransform::identity().is_plausible());
        assert!(!GeomTransform::affine(3.0, 0.0, 0.0, 1.0, 0.0, 0.0).is_plausible());
        assert!(!GeomTransform::affine(0.5, 0.0, 0.0, 0.5, 0.0, 0.0).is_plausible());
    }

    #[test]
    fn sidecar_round_trip() {
        let t = GeomTransform::affine(1.0 / 3.0, 1e-17, -0.1, 0.999, 0.5, -0.25);
        let s = Sidecar::new(t).with_seed(u64::MAX).with_extra("frame", 3);
        let parsed = Sidecar::parse(&s.to_text()).unwrap();
        assert_eq!(parsed, s);
        assert!(Sidecar::parse("rotation\n1 2\n").is_err());
        assert!(Sidecar::parse("translation\n1\n").is_err());
    }

    fn arb_affine() -> impl Strategy<Value = GeomTransform> {
        (
            0.8f64..1.2,
            -0.2f64..0.2,
            -0.2f64..0.2,
            0.8f64..1.2,
            -10.0f64..10.0,
            -10.0f64..10.0,
        )
            .prop_map(|(a, b, c, d, e, f)| GeomTransform::affine(a, b, c, d, e, f))
    }

    proptest! {
        #[test]
        fn composition_matches_sequential_application(
            t1 in arb_affine(), t2 in arb_affine(), x in -50.0f64..50.0, y in -50.0f64..50.0
        ) {
            let (ix, iy) = t2.apply(x, y);
            prop_assert!(close(t1.compose(&t2).apply(x, y), t1.apply(ix, iy), 1e-12));
        }

        #[test]
        fn composition_is_associative(t1 in arb_affine(), t2 in arb_affine(), t3 in arb_affine()) {
            let left = t1.compose(&t2).compose(&t3);
            let right = t1.compose(&t2.compose(&t3));
            prop_assert!(left.max_param_diff(&right) <= 1e-12);
        }

        #[test]
        fn inversion_round_trips(t in arb_affine(), x in -50.0f64..50.0, y in -50.0f64..50.0) {
            let inv = t.invert().unwrap();
            let (tx, ty) = t.apply(x, y);
            prop_assert!(close(inv.apply(tx, ty), (x, y), 1e-9));
            prop_assert!(inv.invert().unwrap().max_param_diff(&t) <= 1e-9);
        }
    }
}
