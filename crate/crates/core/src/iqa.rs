//! Full-reference quality metrics: MSE, PSNR, SSIM, falsecolor composites and
//! decay-curve statistics.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{gaussian_kernel_with_radius, Raster};

fn same_shape(a: &Raster, b: &Raster) -> Result<()> {
    if a.dims() != b.dims() || a.channels() != b.channels() {
        return Err(Error::shape(a.describe(), b.describe()));
    }
    Ok(())
}

/// Mean squared difference over all samples.
pub fn mse(a: &Raster, b: &Raster) -> Result<f64> {
    same_shape(a, b)?;
    let sum: f64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.samples().len() as f64)
}

/// Peak signal-to-noise ratio. Identical images have no finite PSNR.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Psnr {
    Finite(f64),
    Infinite,
}

impl Psnr {
    pub fn db(self) -> Option<f64> {
        match self {
            Psnr::Finite(v) => Some(v),
            Psnr::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Psnr::Infinite)
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Finite(v) => match f.precision() {
                Some(p) => write!(f, "{v:.p$}"),
                None => write!(f, "{v}"),
            },
            Psnr::Infinite => f.write_str("inf"),
        }
    }
}

pub fn psnr(a: &Raster, b: &Raster) -> Result<Psnr> {
    if a.range() != b.range() {
        return Err(Error::param(format!(
            "dynamic ranges differ: {} vs {}",
            a.range(),
            b.range()
        )));
    }
    let err = mse(a, b)?;
    if err == 0.0 {
        return Ok(Psnr::Infinite);
    }
    let l = a.range();
    Ok(Psnr::Finite(10.0 * (l * l / err).log10()))
}

/// SSIM constants and window shape.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsimParams {
    pub k1: f64,
    pub k2: f64,
    pub window_radius: usize,
    pub gaussian_sigma: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            k1: 0.01,
            k2: 0.03,
            window_radius: 5,
            gaussian_sigma: 1.5,
        }
    }
}

impl SsimParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > 0.0 && self.k2 > 0.0) {
            return Err(Error::param("k1 and k2 must be positive"));
        }
        if self.window_radius < 1 {
            return Err(Error::param("window_radius must be at least 1"));
        }
        if !(self.gaussian_sigma > 0.0) {
            return Err(Error::param("gaussian_sigma must be positive"));
        }
        Ok(())
    }

    pub fn window_size(&self) -> usize {
        2 * self.window_radius + 1
    }

    /// Stabilizers `(C1, C2)` for dynamic range `range`.
    pub fn stabilizers(&self, range: f64) -> (f64, f64) {
        ((self.k1 * range).powi(2), (self.k2 * range).powi(2))
    }
}

#[derive(Clone, Debug)]
pub struct SsimResult {
    pub mean_ssim: f64,
    /// Local scores clamped to `[0, 1]` for display.
    pub ssim_map: Raster,
    /// Unclamped local scores, row-major over the valid window positions.
    pub raw: Vec<f64>,
}

/// Windowed SSIM of `a` against `reference`, both single-channel.
///
/// Local moments use a Gaussian window evaluated only where it fits entirely
/// inside the image, so the map is `(w - 2r) x (h - 2r)`.
pub fn ssim(a: &Raster, reference: &Raster, params: &SsimParams) -> Result<SsimResult> {
    params.validate()?;
    same_shape(a, reference)?;
    if a.channels() != 1 {
        return Err(Error::param(
            "ssim expects single-channel inputs; convert with to_luma",
        ));
    }
    if a.range() != reference.range() {
        return Err(Error::param("ssim inputs must share a dynamic range"));
    }
    let win = params.window_size();
    let (w, h) = a.dims();
    if w < win || h < win {
        return Err(Error::param(format!(
            "{win}x{win} window does not fit a {w}x{h} image"
        )));
    }
    let (c1, c2) = params.stabilizers(a.range());
    let kernel = gaussian_kernel_with_radius(params.gaussian_sigma, params.window_radius);
    let ow = w - win + 1;
    let oh = h - win + 1;
    let xa = a.samples();
    let xr = reference.samples();

    // Horizontal pass: five moment planes restricted to valid columns.
    let mut horiz = vec![[0.0f64; 5]; ow * h];
    horiz.par_chunks_mut(ow).enumerate().for_each(|(y, row)| {
        let base = y * w;
        for (x, out) in row.iter_mut().enumerate() {
            let mut m = [0.0; 5];
            for (k, kv) in kernel.iter().enumerate() {
                let p = xa[base + x + k];
                let q = xr[base + x + k];
                m[0] += kv * p;
                m[1] += kv * q;
                m[2] += kv * p * p;
                m[3] += kv * q * q;
                m[4] += kv * p * q;
            }
            *out = m;
        }
    });

    let mut raw = vec![0.0; ow * oh];
    raw.par_chunks_mut(ow).enumerate().for_each(|(y, row)| {
        for (x, out) in row.iter_mut().enumerate() {
            let mut m = [0.0; 5];
            for (k, kv) in kernel.iter().enumerate() {
                let src = &horiz[(y + k) * ow + x];
                for i in 0..5 {
                    m[i] += kv * src[i];
                }
            }
            *out = local_ssim(m, c1, c2);
        }
    });

    let mean_ssim = raw.iter().sum::<f64>() / raw.len() as f64;
    let ssim_map = Raster::from_vec_clamped(ow, oh, 1, 1.0, raw.clone())?;
    Ok(SsimResult {
        mean_ssim,
        ssim_map,
        raw,
    })
}

/// SSIM from weighted moments `[E a, E r, E a^2, E r^2, E ar]`.
#[inline]
pub(crate) fn local_ssim(m: [f64; 5], c1: f64, c2: f64) -> f64 {
    let [mu_a, mu_r, ea2, er2, ear] = m;
    let var_a = (ea2 - mu_a * mu_a).max(0.0);
    let var_r = (er2 - mu_r * mu_r).max(0.0);
    let cov = ear - mu_a * mu_r;
    ((2.0 * mu_a * mu_r + c1) * (2.0 * cov + c2)) / ((mu_a * mu_a + mu_r * mu_r + c1) * (var_a + var_r + c2))
}

/// Falsecolor overlay: `R = a`, `G = b`, `B = a`. Agreement renders gray,
/// `a`-dominant pixels magenta and `b`-dominant pixels green.
pub fn falsecolor_composite(a: &Raster, b: &Raster) -> Result<Raster> {
    if a.channels() != 1 || b.channels() != 1 {
        return Err(Error::param("falsecolor composite expects single-channel inputs"));
    }
    same_shape(a, b)?;
    let mut data = Vec::with_capacity(a.samples().len() * 3);
    for (&p, &q) in a.samples().iter().zip(b.samples()) {
        data.extend_from_slice(&[p, q, p]);
    }
    Raster::from_vec_clamped(a.width(), a.height(), 3, a.range().max(b.range()), data)
}

/// Summary of an SSIM-per-cycle sequence. Cycle indices are 1-based; the
/// implicit cycle 0 has similarity 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayStats {
    pub values: Vec<f64>,
    pub non_increasing: bool,
    pub first_drop: f64,
    /// Drop into each cycle, `drops[k-1] = s[k-1] - s[k]` with `s[0] = 1`.
    pub drops: Vec<f64>,
    pub largest_drop_index: usize,
    pub threshold: f64,
    pub cycles_to_threshold: Option<usize>,
}

pub fn decay_stats(values: &[f64], threshold: f64) -> Result<DecayStats> {
    if values.is_empty() {
        return Err(Error::param("decay sequence is empty"));
    }
    if let Some(v) = values.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
        return Err(Error::param(format!("SSIM value {v} outside [-1, 1]")));
    }
    let non_increasing = values.windows(2).all(|p| p[1] <= p[0]);
    let mut prev = 1.0;
    let drops: Vec<f64> = values
        .iter()
        .map(|&v| {
            let d = prev - v;
            prev = v;
            d
        })
        .collect();
    let largest_drop_index = drops
        .iter()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |best, (i, &d)| if d > best.1 { (i, d) } else { best },
        )
        .0
        + 1;
    let cycles_to_threshold = values.iter().position(|&v| v < threshold).map(|i| i + 1);
    Ok(DecayStats {
        values: values.to_vec(),
        non_increasing,
        first_drop: drops[0],
        drops,
        largest_drop_index,
        threshold,
        cycles_to_threshold,
    })
}
