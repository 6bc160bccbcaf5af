//! Synthetic high-contrast scenes with points, lines and text, used as
//! reference imagery when no real corpus is available.

use rand::Rng;

use crate::image::Image;
use crate::rng::stream_rng;

const GLYPHS: &[(char, [u8; 7])] = &[
    ('0', [0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E]),
    ('1', [0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E]),
    ('2', [0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F]),
    ('3', [0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E]),
    ('4', [0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02]),
    ('5', [0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E]),
    ('6', [0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E]),
    ('7', [0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08]),
    ('8', [0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E]),
    ('9', [0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C]),
    ('A', [0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11]),
    ('B', [0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E]),
    ('C', [0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E]),
    ('D', [0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C]),
    ('E', [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F]),
    ('F', [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10]),
    ('G', [0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F]),
    ('H', [0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11]),
    ('I', [0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E]),
    ('K', [0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11]),
    ('L', [0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F]),
    ('M', [0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11]),
    ('N', [0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11]),
    ('O', [0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E]),
    ('P', [0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10]),
    ('R', [0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11]),
    ('S', [0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E]),
    ('T', [0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04]),
    ('U', [0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E]),
    ('V', [0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04]),
    ('W', [0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A]),
    ('X', [0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11]),
    ('Y', [0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04]),
    ('Z', [0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F]),
];

/// Subsamples per pixel along each axis when rasterizing.
const SUPERSAMPLE: usize = 4;

/// Coverage mask at `SUPERSAMPLE` times the output resolution.
struct Canvas {
    w: usize,
    h: usize,
    ink: Vec<bool>,
}

impl Canvas {
    fn new(width: usize, height: usize) -> Self {
        let (w, h) = (width * SUPERSAMPLE, height * SUPERSAMPLE);
        Canvas {
            w,
            h,
            ink: vec![false; w * h],
        }
    }

    /// Marks subsamples inside an axis-aligned box given in output pixels.
    fn fill_rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64) {
        let s = SUPERSAMPLE as f64;
        let cx0 = ((x0 * s - 0.5).ceil().max(0.0)) as usize;
        let cy0 = ((y0 * s - 0.5).ceil().max(0.0)) as usize;
        let cx1 = ((x1 * s - 0.5).floor().min(self.w as f64 - 1.0)).max(-1.0);
        let cy1 = ((y1 * s - 0.5).floor().min(self.h as f64 - 1.0)).max(-1.0);
        if cx1 < 0.0 || cy1 < 0.0 {
            return;
        }
        for y in cy0..=cy1 as usize {
            for x in cx0..=cx1 as usize {
                self.ink[y * self.w + x] = true;
            }
        }
    }

    /// Marks subsamples within `half_width` of the segment `a`-`b`.
    fn stroke(&mut self, a: (f64, f64), b: (f64, f64), half_width: f64) {
        let s = SUPERSAMPLE as f64;
        let lo_x = (a.0.min(b.0) - half_width - 1.0).max(0.0);
        let hi_x = (a.0.max(b.0) + half_width + 1.0) * s;
        let lo_y = (a.1.min(b.1) - half_width - 1.0).max(0.0);
        let hi_y = (a.1.max(b.1) + half_width + 1.0) * s;
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let len2 = (dx * dx + dy * dy).max(1e-12);
        for y in (lo_y * s) as usize..(hi_y as usize).min(self.h) {
            for x in (lo_x * s) as usize..(hi_x as usize).min(self.w) {
                let (px, py) = ((x as f64 + 0.5) / s, (y as f64 + 0.5) / s);
                let t = (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0);
                let (qx, qy) = (a.0 + t * dx - px, a.1 + t * dy - py);
                if qx * qx + qy * qy <= half_width * half_width {
                    self.ink[y * self.w + x] = true;
                }
            }
        }
    }

    fn dot(&mut self, c: (f64, f64), radius: f64) {
        self.stroke(c, c, radius);
    }

    fn text(&mut self, s: &str, x: f64, y: f64, scale: f64) {
        let mut pen = x;
        for ch in s.chars() {
            if let Some((_, rows)) = GLYPHS.iter().find(|(g, _)| *g == ch) {
                for (r, bits) in rows.iter().enumerate() {
                    for c in 0..5 {
                        if bits & (0x10 >> c) != 0 {
                            let gx = pen + c as f64 * scale;
                            let gy = y + r as f64 * scale;
                            self.fill_rect(gx, gy, gx + scale, gy + scale);
                        }
                    }
                }
            }
            pen += 6.0 * scale;
        }
    }

    /// Area-averaged image with `background` tone and `ink` foreground.
    fn render(&self, background: f64, ink: f64) -> Image {
        let (w, h) = (self.w / SUPERSAMPLE, self.h / SUPERSAMPLE);
        let n = (SUPERSAMPLE * SUPERSAMPLE) as f64;
        Image::from_fn(w, h, |c, r| {
            let mut covered = 0usize;
            for y in r * SUPERSAMPLE..(r + 1) * SUPERSAMPLE {
                for x in c * SUPERSAMPLE..(c + 1) * SUPERSAMPLE {
                    covered += self.ink[y * self.w + x] as usize;
                }
            }
            let f = covered as f64 / n;
            background + f * (ink - background)
        })
    }
}

/// Map-like chart: polyline "routes" of varying width, station dots, short
/// labels in several sizes and a few bar groups, dark ink on a light background.
pub fn text_chart(width: usize, height: usize, seed: u64) -> Image {
    let mut rng = stream_rng(seed, 0x0063_6861_7274);
    let mut canvas = Canvas::new(width, height);
    let (wf, hf) = (width as f64, height as f64);
    let area = wf * hf;
    let point =
        |rng: &mut rand_chacha::ChaCha8Rng| (rng.random_range(0.0..wf), rng.random_range(0.0..hf));

    let routes = 2 + (area / 12000.0) as usize;
    for _ in 0..routes {
        let half = rng.random_range(0.6..2.2);
        let mut a = point(&mut rng);
        for _ in 0..rng.random_range(2..5) {
            let b = point(&mut rng);
            canvas.stroke(a, b, half);
            if rng.random_bool(0.6) {
                canvas.dot(b, half + rng.random_range(1.0..3.0));
            }
            a = b;
        }
    }
    let dots = 4 + (area / 3000.0) as usize;
    for _ in 0..dots {
        let c = point(&mut rng);
        canvas.dot(c, rng.random_range(0.8..3.0));
    }
    let labels = 3 + (area / 5000.0) as usize;
    for _ in 0..labels {
        let len = rng.random_range(2..7);
        let s: String = (0..len)
            .map(|_| GLYPHS[rng.random_range(0..GLYPHS.len())].0)
            .collect();
        let scale = rng.random_range(1.2..3.6);
        let (x, y) = (
            rng.random_range(-10.0..wf - 10.0),
            rng.random_range(-4.0..hf - 4.0),
        );
        canvas.text(&s, x, y, scale);
    }
    let bar_groups = 1 + (area / 30000.0) as usize;
    for _ in 0..bar_groups {
        let (x0, y0) = point(&mut rng);
        let pitch = rng.random_range(3.0..9.0);
        let bar_len = rng.random_range(10.0..30.0);
        let vertical = rng.random_bool(0.5);
        for k in 0..5 {
            let o = k as f64 * pitch;
            if vertical {
                canvas.fill_rect(x0 + o, y0, x0 + o + pitch / 2.0, y0 + bar_len);
            } else {
                canvas.fill_rect(x0, y0 + o, x0 + bar_len, y0 + o + pitch / 2.0);
            }
        }
    }
    let background = rng.random_range(215.0..240.0);
    let ink = rng.random_range(15.0..45.0);
    canvas.render(background, ink)
}

/// Smooth, band-limited texture of superposed Gaussian blobs; a gentle scene
/// for registration experiments.
pub fn blob_scene(width: usize, height: usize, seed: u64) -> Image {
    let mut rng = stream_rng(seed, 0x626c_6f62);
    let n = 20 + width * height / 400;
    let blobs: Vec<(f64, f64, f64, f64)> = (0..n)
        .map(|_| {
            (
                rng.random_range(0.0..width as f64),
                rng.random_range(0.0..height as f64),
                rng.random_range(3.0..12.0),
                rng.random_range(-50.0..50.0),
            )
        })
        .collect();
    Image::from_fn(width, height, |c, r| {
        let mut v = 128.0;
        for &(x, y, s, a) in &blobs {
            let d2 = (c as f64 - x).powi(2) + (r as f64 - y).powi(2);
            if d2 < 16.0 * s * s {
                v += a * (-d2 / (2.0 * s * s)).exp();
            }
        }
        v.clamp(5.0, 250.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_deterministic_and_contrasted() {
        let a = text_chart(128, 96, 3);
        assert_eq!(a, text_chart(128, 96, 3));
        assert_ne!(a, text_chart(128, 96, 4));
        let (lo, hi) = a
            .data()
            .iter()
            .fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
        assert!(lo < 60.0 && hi > 200.0);
        let dark = a.data().iter().filter(|&&v| v < 128.0).count() as f64 / a.data().len() as f64;
        assert!(dark > 0.02 && dark < 0.6, "ink fraction {dark}");
    }

    #[test]
    fn glyph_rendering() {
        let mut canvas = Canvas::new(12, 16);
        canvas.text("T", 1.0, 1.0, 2.0);
        let img = canvas.render(200.0, 0.0);
        // top bar of the T
        assert_eq!(img.get(2, 1), 0.0);
        assert_eq!(img.get(10, 2), 0.0);
        // stem centre, and background beside it
        assert_eq!(img.get(5, 10), 0.0);
        assert_eq!(img.get(2, 10), 200.0);
    }

    #[test]
    fn blob_scene_range() {
        let img = blob_scene(64, 64, 1);
        assert!(img.data().iter().all(|v| (5.0..=250.0).contains(v)));
        assert!(img.variance() > 10.0);
    }
}
