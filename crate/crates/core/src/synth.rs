//! Deterministic synthetic test content: line art, smooth "photos", strokes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::raster::{Raster, LUMA_WEIGHTS};

/// Anti-aliased coverage of a thick segment at pixel center `(px, py)`.
fn segment_coverage(px: f64, py: f64, a: [f64; 2], b: [f64; 2], width: f64) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((px - a[0]) * dx + (py - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a[0] + t * dx, a[1] + t * dy);
    let d = ((px - cx).powi(2) + (py - cy).powi(2)).sqrt();
    (width / 2.0 + 0.5 - d).clamp(0.0, 1.0)
}

/// Rasterizes polylines into `buf` (single channel), taking the max coverage.
pub fn draw_polylines(
    buf: &mut [f64],
    width: usize,
    height: usize,
    lines: &[(Vec<[f64; 2]>, f64)],
    value: f64,
) {
    for (pts, w) in lines {
        for seg in pts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let pad = w / 2.0 + 1.0;
            let x0 = (a[0].min(b[0]) - pad).floor().max(0.0) as usize;
            let y0 = (a[1].min(b[1]) - pad).floor().max(0.0) as usize;
            let x1 = ((a[0].max(b[0]) + pad).ceil().max(0.0) as usize).min(width - 1);
            let y1 = ((a[1].max(b[1]) + pad).ceil().max(0.0) as usize).min(height - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let cov = segment_coverage(x as f64, y as f64, a, b, *w) * value;
                    let i = y * width + x;
                    if cov > buf[i] {
                        buf[i] = cov;
                    }
                }
            }
        }
    }
}

fn circle(cx: f64, cy: f64, r: f64) -> Vec<[f64; 2]> {
    (0..=48)
        .map(|i| {
            let t = i as f64 / 48.0 * std::f64::consts::TAU;
            [cx + r * t.cos(), cy + r * t.sin()]
        })
        .collect()
}

/// Stroke/background arrangement of [`line_art`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// Dark strokes on a light background, like a projected slide.
    #[default]
    DarkOnLight,
    /// Light strokes on a dark background, like chalk on a board.
    LightOnDark,
}

/// High-contrast technical drawing.
pub fn line_art(width: usize, height: usize, seed: u64, polarity: Polarity) -> Result<Raster> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);
    let mut lines: Vec<(Vec<[f64; 2]>, f64)> = Vec::new();
    // frame and a perspective grid
    lines.push((
        vec![
            [0.06 * w, 0.08 * h],
            [0.94 * w, 0.08 * h],
            [0.94 * w, 0.92 * h],
            [0.06 * w, 0.92 * h],
            [0.06 * w, 0.08 * h],
        ],
        3.0,
    ));
    let vanish = [0.5 * w, 0.2 * h];
    for i in 0..=8 {
        let x = 0.1 * w + 0.8 * w * i as f64 / 8.0;
        lines.push((vec![vanish, [x, 0.88 * h]], 2.0));
    }
    for i in 1..6 {
        let y = 0.2 * h + 0.68 * h * (i as f64 / 6.0).powf(1.4);
        lines.push((vec![[0.1 * w, y], [0.9 * w, y]], 2.0));
    }
    for _ in 0..6 {
        let cx = rng.gen_range(0.15..0.85) * w;
        let cy = rng.gen_range(0.2..0.8) * h;
        let r = rng.gen_range(0.04..0.1) * w.min(h);
        lines.push((circle(cx, cy, r), 2.5));
    }
    for _ in 0..10 {
        let a = [rng.gen_range(0.1..0.9) * w, rng.gen_range(0.12..0.88) * h];
        let b = [rng.gen_range(0.1..0.9) * w, rng.gen_range(0.12..0.88) * h];
        lines.push((vec![a, b], rng.gen_range(1.5..3.5)));
    }
    let mut buf = vec![0.0; width * height];
    draw_polylines(&mut buf, width, height, &lines, 1.0);
    let (bg, ink) = match polarity {
        Polarity::DarkOnLight => (0.92, 0.06),
        Polarity::LightOnDark => (0.05, 1.0),
    };
    let data = buf.iter().map(|c| bg + (ink - bg) * c).collect();
    Raster::new(width, height, 1, 1.0, data)
}

/// Continuous-tone grayscale content: a smooth gradient with soft blobs and a
/// low-contrast fine texture.
pub fn photo(width: usize, height: usize, seed: u64) -> Result<Raster> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blobs: Vec<(f64, f64, f64, f64)> = (0..12)
        .map(|_| {
            (
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.05..0.2),
                rng.gen_range(-0.3..0.3),
            )
        })
        .collect();
    let grain: Vec<f64> = (0..width * height).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (w, h) = (width as f64, height as f64);
    let base = Raster::from_fn(width, height, |x, y| {
        let u = x as f64 / w;
        let v = y as f64 / h;
        let mut s = 0.3 + 0.3 * u + 0.15 * v + 0.05 * (9.0 * u).sin() * (7.0 * v).cos();
        for (bx, by, r, a) in &blobs {
            let d2 = (u - bx).powi(2) + (v - by).powi(2);
            s += a * (-d2 / (2.0 * r * r)).exp();
        }
        s += 0.04 * (0.9 * x as f64).sin() * (0.7 * y as f64).cos();
        s += 0.12 * grain[y * width + x];
        s.clamp(0.08, 0.92)
    })?;
    // soften the grain to photographic scale
    Ok(crate::raster::gaussian_blur(&base, 0.7))
}

/// Colorized version of `gray`: adds a luma-neutral chroma field, so the
/// Rec.601 luma of the result matches `gray` wherever no channel clips.
pub fn colorize(gray: &Raster, seed: u64) -> Result<Raster> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let (w, h) = gray.dims();
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let mut data = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let l = gray.get(x, y, 0);
            let t = phase + 6.0 * x as f64 / w as f64 + 4.0 * y as f64 / h as f64;
            let amp = 0.25 * l.min(1.0 - l);
            let (cr, cb) = (amp * t.cos(), amp * t.sin());
            let r = l + cr;
            let b = l + cb;
            let g = l - (wr * cr + wb * cb) / wg;
            data.extend_from_slice(&[r, g, b]);
        }
    }
    Raster::from_vec_clamped(w, h, 3, gray.range(), data)
}

pub fn gradient(width: usize, height: usize) -> Result<Raster> {
    let denom = (width + height).saturating_sub(2).max(1) as f64;
    Raster::from_fn(width, height, |x, y| 0.1 + 0.8 * (x + y) as f64 / denom)
}

pub fn checkerboard(width: usize, height: usize, cell: usize) -> Result<Raster> {
    let cell = cell.max(1);
    Raster::from_fn(width, height, |x, y| {
        if (x / cell + y / cell).is_multiple_of(2) {
            0.9
        } else {
            0.1
        }
    })
}
