//! Normalized floating-point image carrier plus the resampling and tone
//! operations every other module builds on.
//!
//! Samples are stored interleaved, row-major: the sample for channel `c` of
//! pixel `(x, y)` lives at `(y * width + x) * channels + c`.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rec.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Coordinates this close outside the sampling domain snap to its edge.
const EDGE_EPS: f64 = 1e-9;

/// An image with samples in `[0, range]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    range: f64,
    data: Vec<f64>,
}

impl Raster {
    /// Builds a raster, validating every invariant.
    pub fn new(width: usize, height: usize, channels: usize, range: f64, data: Vec<f64>) -> Result<Self> {
        Self::check_header(width, height, channels, range)?;
        if data.len() != width * height * channels {
            return Err(Error::shape(
                format!("{width}x{height}x{channels} header"),
                format!("{} samples", data.len()),
            ));
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=range).contains(*v)) {
            return Err(Error::param(format!("sample {bad} outside [0, {range}]")));
        }
        Ok(Self {
            width,
            height,
            channels,
            range,
            data,
        })
    }

    /// Builds a raster, clamping samples into `[0, range]`. NaN becomes 0.
    pub fn from_vec_clamped(
        width: usize,
        height: usize,
        channels: usize,
        range: f64,
        mut data: Vec<f64>,
    ) -> Result<Self> {
        for v in &mut data {
            *v = clamp_sample(*v, range);
        }
        Self::new(width, height, channels, range, data)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            1.0,
            vec![value; width * height * channels],
        )
    }

    /// Single-channel raster with range 1 built from `f(x, y)`, clamped.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::check_header(width, height, 1, 1.0)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(clamp_sample(f(x, y), 1.0));
            }
        }
        Self::new(width, height, 1, 1.0, data)
    }

    fn check_header(width: usize, height: usize, channels: usize, range: f64) -> Result<()> {
        if width == 0 || height == 0 {
            return Err(Error::param(format!("empty raster {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::param(format!("unsupported channel count {channels}")));
        }
        if !(range > 0.0 && range.is_finite()) {
            return Err(Error::param(format!(
                "dynamic range must be positive, got {range}"
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Dynamic range `L`.
    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn samples(&self) -> &[f64] {
        &self.data
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.data
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// `WxHxC` description used in diagnostics.
    pub fn describe(&self) -> String {
        format!("{}x{}x{}", self.width, self.height, self.channels)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Same raster with a different dynamic range; samples are clamped into it.
    pub fn with_range(mut self, range: f64) -> Result<Self> {
        Self::check_header(self.width, self.height, self.channels, range)?;
        for v in &mut self.data {
            *v = clamp_sample(*v, range);
        }
        self.range = range;
        Ok(self)
    }

    /// Extracts one channel as a single-channel raster.
    pub fn channel(&self, c: usize) -> Raster {
        assert!(c < self.channels);
        let data = self.data.iter().skip(c).step_by(self.channels).copied().collect();
        Raster {
            width: self.width,
            height: self.height,
            channels: 1,
            range: self.range,
            data,
        }
    }

    /// Interleaves equally sized single-channel planes.
    pub fn from_planes(planes: &[Raster]) -> Result<Raster> {
        let first = planes.first().ok_or_else(|| Error::param("no planes"))?;
        for p in planes {
            if p.dims() != first.dims() || p.channels != 1 {
                return Err(Error::shape(first.describe(), p.describe()));
            }
        }
        let n = planes.len();
        let mut data = vec![0.0; first.data.len() * n];
        for (c, p) in planes.iter().enumerate() {
            for (i, v) in p.data.iter().enumerate() {
                data[i * n + c] = *v;
            }
        }
        Raster::new(first.width, first.height, n, first.range, data)
    }

    /// Applies `f` to every sample and clamps the result back into range.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Raster {
        let range = self.range;
        Raster {
            data: self.data.iter().map(|&v| clamp_sample(f(v), range)).collect(),
            ..self.clone()
        }
    }

    /// Sub-rectangle copy.
    pub fn crop(&self, rect: Rect) -> Result<Raster> {
        if rect.width == 0
            || rect.height == 0
            || rect.x + rect.width > self.width
            || rect.y + rect.height > self.height
        {
            return Err(Error::param(format!(
                "crop {}x{}+{}+{} exceeds {}",
                rect.width,
                rect.height,
                rect.x,
                rect.y,
                self.describe()
            )));
        }
        let c = self.channels;
        let mut data = Vec::with_capacity(rect.width * rect.height * c);
        for y in rect.y..rect.y + rect.height {
            let start = (y * self.width + rect.x) * c;
            data.extend_from_slice(&self.data[start..start + rect.width * c]);
        }
        Ok(Raster {
            width: rect.width,
            height: rect.height,
            channels: c,
            range: self.range,
            data,
        })
    }

    /// Surrounds the raster with a constant border of `margin` pixels.
    pub fn pad(&self, margin: usize, fill: f64) -> Raster {
        let w = self.width + 2 * margin;
        let h = self.height + 2 * margin;
        let c = self.channels;
        let fill = clamp_sample(fill, self.range);
        let mut data = vec![fill; w * h * c];
        for y in 0..self.height {
            let src = y * self.width * c;
            let dst = ((y + margin) * w + margin) * c;
            data[dst..dst + self.width * c].copy_from_slice(&self.data[src..src + self.width * c]);
        }
        Raster {
            width: w,
            height: h,
            channels: c,
            range: self.range,
            data,
        }
    }
}

/// Axis-aligned pixel rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

#[inline]
fn clamp_sample(v: f64, range: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, range)
    }
}

/// Rec.601 luma of a 3-channel raster; 1-channel input is returned as is.
pub fn to_luma(img: &Raster) -> Raster {
    if img.channels == 1 {
        return img.clone();
    }
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let range = img.range;
    let data = img
        .data
        .chunks_exact(3)
        .map(|p| {
            // neutral pixels map to themselves exactly
            if p[0] == p[1] && p[1] == p[2] {
                p[0]
            } else {
                clamp_sample(wr * p[0] + wg * p[1] + wb * p[2], range)
            }
        })
        .collect();
    Raster {
        width: img.width,
        height: img.height,
        channels: 1,
        range,
        data,
    }
}

/// Bilinear sample of channel 0 at pixel-center coordinates `(x, y)`.
///
/// Points outside `[0, w-1] x [0, h-1]` return `fill`.
pub fn sample_bilinear(img: &Raster, x: f64, y: f64, fill: f64) -> f64 {
    sample_bilinear_channel(img, 0, x, y, fill)
}

pub fn sample_bilinear_channel(img: &Raster, c: usize, x: f64, y: f64, fill: f64) -> f64 {
    let max_x = (img.width - 1) as f64;
    let max_y = (img.height - 1) as f64;
    if !(x >= -EDGE_EPS && x <= max_x + EDGE_EPS && y >= -EDGE_EPS && y <= max_y + EDGE_EPS) {
        return fill;
    }
    let x = x.clamp(0.0, max_x);
    let y = y.clamp(0.0, max_y);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let top = img.get(x0, y0, c) * (1.0 - fx) + img.get(x1, y0, c) * fx;
    let bottom = img.get(x0, y1, c) * (1.0 - fx) + img.get(x1, y1, c) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Nearest-rank percentile of `sorted` (ascending), `pct` in `[0, 100]`.
pub fn nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    let n = sorted.len();
    let rank = ((pct / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Per-channel contrast stretch sending the `low_pct` percentile to 0 and the
/// `high_pct` percentile to `L`. Channels whose two percentiles coincide are
/// left untouched.
pub fn linear_stretch(img: &Raster, low_pct: f64, high_pct: f64) -> Result<Raster> {
    if !(0.0..100.0).contains(&low_pct) || !(high_pct > low_pct && high_pct <= 100.0) {
        return Err(Error::param(format!(
            "percentiles must satisfy 0 <= low < high <= 100, got ({low_pct}, {high_pct})"
        )));
    }
    let c = img.channels;
    let range = img.range;
    let mut out = img.clone();
    for ch in 0..c {
        let mut values: Vec<f64> = img.data.iter().skip(ch).step_by(c).copied().collect();
        values.sort_by(f64::total_cmp);
        let lo = nearest_rank(&values, low_pct);
        let hi = nearest_rank(&values, high_pct);
        if hi <= lo {
            continue;
        }
        let scale = range / (hi - lo);
        for v in out.data.iter_mut().skip(ch).step_by(c) {
            *v = ((*v - lo) * scale).clamp(0.0, range);
        }
    }
    Ok(out)
}

/// Normalized 1-D Gaussian kernel of radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as usize;
    gaussian_kernel_with_radius(sigma, radius)
}

pub fn gaussian_kernel_with_radius(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let mut k: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Half-sample symmetric reflection of `i` into `[0, n)`.
#[inline]
fn mirror(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - 1 - m) as usize
    } else {
        m as usize
    }
}

/// Separable Gaussian blur with mirrored borders. The symmetric boundary makes
/// the operator doubly stochastic, so total intensity is preserved.
pub fn gaussian_blur(img: &Raster, sigma: f64) -> Raster {
    if sigma <= 0.0 {
        return img.clone();
    }
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as isize;
    let (w, h, c) = (img.width, img.height, img.channels);

    let mut tmp = vec![0.0; img.data.len()];
    tmp.par_chunks_mut(w * c).enumerate().for_each(|(y, row)| {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (k, kv) in kernel.iter().enumerate() {
                    let sx = mirror(x as isize + k as isize - r, w);
                    acc += kv * img.data[(y * w + sx) * c + ch];
                }
                row[x * c + ch] = acc;
            }
        }
    });

    let mut out = vec![0.0; img.data.len()];
    out.par_chunks_mut(w * c).enumerate().for_each(|(y, row)| {
        for (k, &kv) in kernel.iter().enumerate() {
            let sy = mirror(y as isize + k as isize - r, h);
            let src = &tmp[sy * w * c..(sy + 1) * w * c];
            for (o, s) in row.iter_mut().zip(src) {
                *o += kv * s;
            }
        }
    });
    let range = img.range;
    out.iter_mut().for_each(|v| *v = clamp_sample(*v, range));
    Raster {
        data: out,
        ..img.clone()
    }
}
