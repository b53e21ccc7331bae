//! Marker detection, homography estimation and perspective warping.

use nalgebra::{DMatrix, Matrix3, Point2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{sample_bilinear_channel, Raster};

pub type Point = Point2<f64>;

const MIN_DET: f64 = 1e-12;

/// Invertible 3x3 projective map, stored with `h[2][2] = 1` when possible.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Homography(Matrix3<f64>);

impl Homography {
    pub fn identity() -> Self {
        Homography(Matrix3::identity())
    }

    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("homography has non-finite entries"));
        }
        let m = normalize(m);
        if m.determinant().abs() <= MIN_DET {
            return Err(Error::param("homography is singular"));
        }
        Ok(Homography(m))
    }

    /// Row-major 9-number form.
    pub fn from_row_slice(v: &[f64; 9]) -> Result<Self> {
        Self::new(Matrix3::from_row_slice(v))
    }

    pub fn to_row_array(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Homography(Matrix3::new(1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        let inv = self.0.try_inverse().expect("homography invariant: invertible");
        Homography(normalize(inv))
    }

    /// `self` applied after `first`.
    pub fn compose(&self, first: &Homography) -> Result<Self> {
        Homography::new(self.0 * first.0)
    }

    /// Maps a point; `None` when it lands on the line at infinity.
    pub fn apply(&self, p: Point) -> Option<Point> {
        let v = self.0 * Vector3::new(p.x, p.y, 1.0);
        if v.z.abs() < 1e-15 {
            None
        } else {
            Some(Point::new(v.x / v.z, v.y / v.z))
        }
    }
}

impl Serialize for Homography {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_row_array().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Homography {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = <[f64; 9]>::deserialize(d)?;
        Homography::from_row_slice(&v).map_err(serde::de::Error::custom)
    }
}

fn normalize(m: Matrix3<f64>) -> Matrix3<f64> {
    let corner = m[(2, 2)];
    if corner.abs() > 1e-12 {
        m / corner
    } else {
        m / m.norm()
    }
}

/// Similarity that moves the centroid to the origin and the mean distance to √2.
fn hartley(points: &[Point]) -> Result<Matrix3<f64>> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.y).sum::<f64>() / n;
    let mean_dist = points
        .iter()
        .map(|p| ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    if !(mean_dist > 0.0 && mean_dist.is_finite()) {
        return Err(Error::Estimation("points are coincident".into()));
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    Ok(Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))
}

fn transform(m: &Matrix3<f64>, p: &Point) -> Point {
    let v = m * Vector3::new(p.x, p.y, 1.0);
    Point::new(v.x / v.z, v.y / v.z)
}

fn collinear(a: &Point, b: &Point, c: &Point, scale: f64) -> bool {
    let cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    cross.abs() <= 1e-9 * scale * scale
}

/// Result of a normalized DLT fit.
#[derive(Clone, Debug)]
pub struct DltFit {
    pub homography: Homography,
    /// Solution in Hartley-normalized coordinates, scaled to unit Frobenius norm
    /// with a non-negative last entry.
    pub normalized: Matrix3<f64>,
    /// Smallest singular value of the normalized design matrix.
    pub algebraic_residual: f64,
}

/// Normalized DLT over `(source, target)` pairs.
pub fn estimate_homography(pairs: &[(Point, Point)]) -> Result<Homography> {
    fit_homography(pairs).map(|f| f.homography)
}

pub fn fit_homography(pairs: &[(Point, Point)]) -> Result<DltFit> {
    if pairs.len() < 4 {
        return Err(Error::Estimation(format!(
            "need at least 4 correspondences, got {}",
            pairs.len()
        )));
    }
    if pairs
        .iter()
        .any(|(s, t)| !(s.x.is_finite() && s.y.is_finite() && t.x.is_finite() && t.y.is_finite()))
    {
        return Err(Error::Estimation("non-finite coordinates".into()));
    }
    let src: Vec<Point> = pairs.iter().map(|p| p.0).collect();
    let dst: Vec<Point> = pairs.iter().map(|p| p.1).collect();
    let t_src = hartley(&src)?;
    let t_dst = hartley(&dst)?;
    let ns: Vec<Point> = src.iter().map(|p| transform(&t_src, p)).collect();
    let nd: Vec<Point> = dst.iter().map(|p| transform(&t_dst, p)).collect();

    if pairs.len() == 4 {
        for (i, j, k) in [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)] {
            if collinear(&ns[i], &ns[j], &ns[k], 1.0) || collinear(&nd[i], &nd[j], &nd[k], 1.0) {
                return Err(Error::Estimation("three of four points are collinear".into()));
            }
        }
    }

    // Pad to at least 9 rows so the SVD yields a full right-singular basis.
    let rows = (2 * pairs.len()).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (s, d)) in ns.iter().zip(&nd).enumerate() {
        let (x, y, u, v) = (s.x, s.y, d.x, d.y);
        let r = 2 * i;
        a.row_mut(r)
            .copy_from_slice(&[-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u]);
        a.row_mut(r + 1)
            .copy_from_slice(&[0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v]);
    }
    let svd = a.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Estimation("SVD did not converge".into()))?;
    let sv = &svd.singular_values;
    let (min_idx, _) = sv
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |b, (i, &s)| if s < b.1 { (i, s) } else { b });
    let mut sorted: Vec<f64> = sv.iter().copied().collect();
    sorted.sort_by(f64::total_cmp);
    // A second (near-)null direction means the points do not pin down the map.
    if sorted[1] < 1e-10 * sorted[8].max(1e-300) {
        return Err(Error::Estimation("degenerate point configuration".into()));
    }
    let h: Vec<f64> = v_t.row(min_idx).iter().copied().collect();
    let mut hn = Matrix3::from_row_slice(&h);
    if hn[(2, 2)] < 0.0 {
        hn = -hn;
    }
    hn /= hn.norm();

    let t_dst_inv = t_dst
        .try_inverse()
        .ok_or_else(|| Error::Estimation("normalization not invertible".into()))?;
    let full = t_dst_inv * hn * t_src;
    let homography =
        Homography::new(full).map_err(|_| Error::Estimation("estimated homography is singular".into()))?;
    for p in &src {
        if homography.apply(*p).is_none() {
            return Err(Error::Estimation("a source point maps to infinity".into()));
        }
    }
    Ok(DltFit {
        homography,
        normalized: hn,
        algebraic_residual: sorted[0],
    })
}

/// Inverse-mapped warp: output pixel `p` takes `img(h^-1 p)`; points falling
/// outside the source take `fill`.
pub fn warp(img: &Raster, h: &Homography, out_width: usize, out_height: usize, fill: f64) -> Result<Raster> {
    if out_width == 0 || out_height == 0 {
        return Err(Error::param("warp output must be non-empty"));
    }
    if h.matrix().determinant().abs() <= MIN_DET {
        return Err(Error::param("warp homography is not invertible"));
    }
    let inv = h.inverse();
    let m = *inv.matrix();
    let c = img.channels();
    let mut data = vec![0.0; out_width * out_height * c];
    data.par_chunks_mut(out_width * c)
        .enumerate()
        .for_each(|(y, row)| {
            let yf = y as f64;
            for x in 0..out_width {
                let xf = x as f64;
                let w = m[(2, 0)] * xf + m[(2, 1)] * yf + m[(2, 2)];
                let px = &mut row[x * c..(x + 1) * c];
                if w.abs() < 1e-15 {
                    px.fill(fill);
                    continue;
                }
                let sx = (m[(0, 0)] * xf + m[(0, 1)] * yf + m[(0, 2)]) / w;
                let sy = (m[(1, 0)] * xf + m[(1, 1)] * yf + m[(1, 2)]) / w;
                for (ch, v) in px.iter_mut().enumerate() {
                    *v = sample_bilinear_channel(img, ch, sx, sy, fill);
                }
            }
        });
    Raster::from_vec_clamped(out_width, out_height, c, img.range(), data)
}

/// Physical marker rectangle and its placement on the board raster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarkerLayout {
    /// TL, TR, BR, BL marker centers in board meters.
    pub board_points: [[f64; 2]; 4],
    pub physical_width: f64,
    pub physical_height: f64,
    /// Distance in pixels from the raster edge to the marker centers.
    pub inset_px: f64,
    /// Rendered disk radius in pixels.
    pub radius_px: f64,
}

impl Default for MarkerLayout {
    fn default() -> Self {
        Self {
            board_points: [[0.0, 0.0], [1.26, 0.0], [1.26, 0.85], [0.0, 0.85]],
            physical_width: 1.26,
            physical_height: 0.85,
            inset_px: 12.0,
            radius_px: 6.0,
        }
    }
}

impl MarkerLayout {
    pub fn validate(&self) -> Result<()> {
        if !(self.physical_width > 0.0 && self.physical_height > 0.0) {
            return Err(Error::param("marker layout must have positive physical size"));
        }
        if !(self.radius_px > 0.0 && self.inset_px >= 0.0) {
            return Err(Error::param(
                "marker radius must be positive and inset non-negative",
            ));
        }
        let p = self.board_points;
        // Convex and consistently ordered: all turn directions share a sign.
        let mut sign = 0.0;
        for i in 0..4 {
            let a = p[i];
            let b = p[(i + 1) % 4];
            let c = p[(i + 2) % 4];
            let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            if cross == 0.0 || (sign != 0.0 && cross.signum() != sign) {
                return Err(Error::param("marker points must form a convex TL,TR,BR,BL quad"));
            }
            sign = cross.signum();
        }
        Ok(())
    }

    /// Marker centers in pixel coordinates of a `width x height` board raster.
    pub fn pixel_points(&self, width: usize, height: usize) -> [Point; 4] {
        let sx = (width as f64 - 1.0 - 2.0 * self.inset_px) / self.physical_width;
        let sy = (height as f64 - 1.0 - 2.0 * self.inset_px) / self.physical_height;
        self.board_points
            .map(|[x, y]| Point::new(self.inset_px + x * sx, self.inset_px + y * sy))
    }

    /// Margin that keeps every disk clear of content placed inside it.
    pub fn margin_px(&self) -> usize {
        (self.inset_px + self.radius_px + 2.0).ceil() as usize
    }
}

/// Renders anti-aliased disks of `value` at `centers` (4x4 supersampled coverage).
pub fn stamp_disks(
    img: &mut [f64],
    width: usize,
    height: usize,
    channels: usize,
    centers: &[Point],
    radius: f64,
    value: f64,
) {
    const SS: usize = 4;
    for c in centers {
        let x0 = (c.x - radius - 1.0).floor().max(0.0) as usize;
        let y0 = (c.y - radius - 1.0).floor().max(0.0) as usize;
        let x1 = ((c.x + radius + 1.0).ceil() as usize).min(width.saturating_sub(1));
        let y1 = ((c.y + radius + 1.0).ceil() as usize).min(height.saturating_sub(1));
        for y in y0..=y1 {
            for x in x0..=x1 {
                let mut inside = 0;
                for sy in 0..SS {
                    for sx in 0..SS {
                        let px = x as f64 - 0.5 + (sx as f64 + 0.5) / SS as f64;
                        let py = y as f64 - 0.5 + (sy as f64 + 0.5) / SS as f64;
                        if (px - c.x).powi(2) + (py - c.y).powi(2) <= radius * radius {
                            inside += 1;
                        }
                    }
                }
                if inside == 0 {
                    continue;
                }
                let cov = inside as f64 / (SS * SS) as f64;
                for ch in 0..channels {
                    let i = (y * width + x) * channels + ch;
                    img[i] = cov * value + (1.0 - cov) * img[i];
                }
            }
        }
    }
}

/// Thresholding and component filters for [`detect_markers`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectParams {
    /// Threshold as a fraction of the raster's dynamic range.
    pub threshold: f64,
    pub min_area: usize,
    pub max_area: usize,
    /// Minimum ratio of component area to bounding-box area.
    pub min_fill: f64,
    /// Maximum bounding-box elongation.
    pub max_aspect: f64,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            threshold: 0.9,
            min_area: 12,
            max_area: 2000,
            min_fill: 0.5,
            max_aspect: 2.0,
        }
    }
}

struct Component {
    area: usize,
    min_x: usize,
    max_x: usize,
    min_y: usize,
    max_y: usize,
    wsum: f64,
    wx: f64,
    wy: f64,
}

/// Finds the four fiducial disks and returns their intensity-weighted
/// centroids ordered TL, TR, BR, BL.
pub fn detect_markers(img: &Raster, params: &DetectParams) -> Result<[Point; 4]> {
    if img.channels() != 1 {
        return Err(Error::param("marker detection expects a single-channel raster"));
    }
    let (w, h) = img.dims();
    let level = params.threshold * img.range();
    let s = img.samples();
    let mut label = vec![false; w * h];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if label[start] || s[start] < level {
            continue;
        }
        label[start] = true;
        stack.push(start);
        let mut comp = Component {
            area: 0,
            min_x: usize::MAX,
            max_x: 0,
            min_y: usize::MAX,
            max_y: 0,
            wsum: 0.0,
            wx: 0.0,
            wy: 0.0,
        };
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            let v = s[i];
            comp.area += 1;
            comp.min_x = comp.min_x.min(x);
            comp.max_x = comp.max_x.max(x);
            comp.min_y = comp.min_y.min(y);
            comp.max_y = comp.max_y.max(y);
            comp.wsum += v;
            comp.wx += v * x as f64;
            comp.wy += v * y as f64;
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let nx = x as isize + dx;
                    let ny = y as isize + dy;
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if !label[j] && s[j] >= level {
                        label[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        components.push(comp);
    }

    let centers: Vec<Point> = components
        .iter()
        .filter(|c| {
            let bw = (c.max_x - c.min_x + 1) as f64;
            let bh = (c.max_y - c.min_y + 1) as f64;
            c.area >= params.min_area
                && c.area <= params.max_area
                && c.area as f64 / (bw * bh) >= params.min_fill
                && bw.max(bh) / bw.min(bh) <= params.max_aspect
        })
        .map(|c| Point::new(c.wx / c.wsum, c.wy / c.wsum))
        .collect();
    if centers.len() != 4 {
        return Err(Error::Detection { found: centers.len() });
    }
    Ok(order_corners([centers[0], centers[1], centers[2], centers[3]]))
}

/// Orders four points TL, TR, BR, BL: angular sort around the centroid
/// (clockwise on screen), rotated to start at the smallest `x + y`.
pub fn order_corners(points: [Point; 4]) -> [Point; 4] {
    let cx = points.iter().map(|p| p.x).sum::<f64>() / 4.0;
    let cy = points.iter().map(|p| p.y).sum::<f64>() / 4.0;
    let mut sorted = points;
    sorted.sort_by(|a, b| {
        let ta = (a.y - cy).atan2(a.x - cx);
        let tb = (b.y - cy).atan2(b.x - cx);
        ta.total_cmp(&tb)
    });
    let start = (0..4)
        .min_by(|&i, &j| (sorted[i].x + sorted[i].y).total_cmp(&(sorted[j].x + sorted[j].y)))
        .unwrap_or(0);
    sorted.rotate_left(start);
    sorted
}

/// Perspective keystone of a `width x height` frame: the frame seen through a
/// camera rotated `degrees` about the vertical axis, then scaled and centered
/// so its image fits inside the frame with `margin` pixels to spare.
pub fn tilt_keystone(width: usize, height: usize, degrees: f64, margin: f64) -> Result<Homography> {
    let (w, h) = (width as f64 - 1.0, height as f64 - 1.0);
    let f = w.max(h);
    let (cx, cy) = (w / 2.0, h / 2.0);
    let t = degrees.to_radians();
    let k = Matrix3::new(f, 0.0, cx, 0.0, f, cy, 0.0, 0.0, 1.0);
    let r = Matrix3::new(t.cos(), 0.0, t.sin(), 0.0, 1.0, 0.0, -t.sin(), 0.0, t.cos());
    let k_inv = k.try_inverse().expect("intrinsics invertible");
    let persp = Homography::new(k * r * k_inv)?;
    fit_into_frame(&persp, width, height, margin)
}

/// Trapezoid keystone whose top edge is pulled in by `top_inset` of the width on
/// each side, scaled to fit inside the frame with `margin` pixels to spare.
pub fn trapezoid_keystone(width: usize, height: usize, top_inset: f64, margin: f64) -> Result<Homography> {
    let (w, h) = (width as f64 - 1.0, height as f64 - 1.0);
    let d = top_inset * w;
    let corners = [
        Point::new(0.0, 0.0),
        Point::new(w, 0.0),
        Point::new(w, h),
        Point::new(0.0, h),
    ];
    let targets = [
        Point::new(d, 0.0),
        Point::new(w - d, 0.0),
        Point::new(w, h),
        Point::new(0.0, h),
    ];
    let pairs: Vec<(Point, Point)> = corners.into_iter().zip(targets).collect();
    let persp = estimate_homography(&pairs)?;
    fit_into_frame(&persp, width, height, margin)
}

fn fit_into_frame(persp: &Homography, width: usize, height: usize, margin: f64) -> Result<Homography> {
    let (w, h) = (width as f64 - 1.0, height as f64 - 1.0);
    let mapped: Vec<Point> = [
        Point::new(0.0, 0.0),
        Point::new(w, 0.0),
        Point::new(w, h),
        Point::new(0.0, h),
    ]
    .into_iter()
    .map(|p| {
        persp
            .apply(p)
            .ok_or_else(|| Error::param("keystone maps frame to infinity"))
    })
    .collect::<Result<_>>()?;
    let min_x = mapped.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let max_x = mapped.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
    let min_y = mapped.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let max_y = mapped.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    let s = ((w - 2.0 * margin) / (max_x - min_x)).min((h - 2.0 * margin) / (max_y - min_y));
    if !(s > 0.0) {
        return Err(Error::param("keystone margin leaves no room"));
    }
    let tx = (w - s * (max_x - min_x)) / 2.0 - s * min_x;
    let ty = (h - s * (max_y - min_y)) / 2.0 - s * min_y;
    let fit = Matrix3::new(s, 0.0, tx, 0.0, s, ty, 0.0, 0.0, 1.0);
    Homography::new(fit * persp.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_square() -> [Point; 4] {
        [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ]
    }

    fn pairs(src: &[Point], f: impl Fn(&Point) -> Point) -> Vec<(Point, Point)> {
        src.iter().map(|p| (*p, f(p))).collect()
    }

    #[test]
    fn identity_from_identical_pairs() {
        let h = estimate_homography(&pairs(&unit_square(), |p| *p)).unwrap();
        assert_relative_eq!(*h.matrix(), Matrix3::identity(), epsilon = 1e-9);
    }

    #[test]
    fn translation_is_recovered() {
        let h = estimate_homography(&pairs(&unit_square(), |p| Point::new(p.x + 3.0, p.y + 7.0))).unwrap();
        let expect = Matrix3::new(1.0, 0.0, 3.0, 0.0, 1.0, 7.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(*h.matrix(), expect, epsilon = 1e-9);
    }

    #[test]
    fn scaling_to_marker_rectangle() {
        // Hand-solved: x' = 126 x, y' = 85 y, so H = diag(126, 85, 1).
        let h = estimate_homography(&pairs(&unit_square(), |p| Point::new(126.0 * p.x, 85.0 * p.y))).unwrap();
        let expect = Matrix3::new(126.0, 0.0, 0.0, 0.0, 85.0, 0.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(*h.matrix(), expect, epsilon = 1e-8);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let sq = unit_square();
        assert!(estimate_homography(&pairs(&sq[..3], |p| *p)).is_err());
        let line = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(2.0, 2.0),
            Point::new(5.0, 0.0),
        ];
        assert!(matches!(
            estimate_homography(&pairs(&line, |p| *p)),
            Err(Error::Estimation(_))
        ));
        let same = [Point::new(1.0, 1.0); 4];
        assert!(estimate_homography(&pairs(&same, |p| *p)).is_err());
    }

    #[test]
    fn warp_identity_and_translation() {
        let img = Raster::from_fn(9, 7, |x, y| ((x * 7 + y * 3) % 11) as f64 / 10.0).unwrap();
        let same = warp(&img, &Homography::identity(), 9, 7, 0.0).unwrap();
        assert_eq!(same, img);

        let shifted = warp(&img, &Homography::translation(5.0, 0.0), 9, 7, 0.25).unwrap();
        for y in 0..7 {
            for x in 0..9 {
                let expect = if x < 5 { 0.25 } else { img.get(x - 5, y, 0) };
                assert_eq!(shifted.get(x, y, 0), expect);
            }
        }
    }

    #[test]
    fn singular_homography_is_rejected() {
        assert!(Homography::from_row_slice(&[1.0, 2.0, 0.0, 2.0, 4.0, 0.0, 0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn ordering_contract() {
        let (w, h) = (40.0, 30.0);
        let tl = Point::new(0.0, 0.0);
        let tr = Point::new(w, 0.0);
        let br = Point::new(w, h);
        let bl = Point::new(0.0, h);
        for perm in [[br, tl, bl, tr], [bl, br, tr, tl], [tr, bl, tl, br]] {
            assert_eq!(order_corners(perm), [tl, tr, br, bl]);
        }
    }

    fn board_with_disks(centers: &[Point]) -> Raster {
        let (w, h) = (640, 480);
        let mut data = vec![0.1; w * h];
        stamp_disks(&mut data, w, h, 1, centers, 6.0, 1.0);
        Raster::new(w, h, 1, 1.0, data).unwrap()
    }

    #[test]
    fn detects_disks_subpixel() {
        let truth = [
            Point::new(50.3, 40.7),
            Point::new(590.25, 42.1),
            Point::new(585.6, 440.45),
            Point::new(55.0, 437.9),
        ];
        let img = board_with_disks(&truth);
        let found = detect_markers(&img, &DetectParams::default()).unwrap();
        for (f, t) in found.iter().zip(&truth) {
            assert!((f - t).norm() < 0.5, "{f} vs {t}");
        }
    }

    #[test]
    fn corner_disks_come_back_in_order() {
        let truth = [
            Point::new(0.0, 0.0),
            Point::new(639.0, 0.0),
            Point::new(639.0, 479.0),
            Point::new(0.0, 479.0),
        ];
        let img = board_with_disks(&[truth[2], truth[0], truth[3], truth[1]]);
        let params = DetectParams {
            min_fill: 0.0,
            max_aspect: 10.0,
            min_area: 5,
            ..Default::default()
        };
        let found = detect_markers(&img, &params).unwrap();
        for (f, t) in found.iter().zip(&truth) {
            assert!((f - t).norm() < 4.0, "{f} vs {t}");
        }
    }

    #[test]
    fn three_disks_is_an_error() {
        let img = board_with_disks(&[
            Point::new(50.0, 50.0),
            Point::new(590.0, 50.0),
            Point::new(590.0, 430.0),
        ]);
        match detect_markers(&img, &DetectParams::default()) {
            Err(Error::Detection { found }) => assert_eq!(found, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn layout_defaults() {
        let l = MarkerLayout::default();
        l.validate().unwrap();
        assert_relative_eq!(l.physical_width / l.physical_height, 126.0 / 85.0);
        let p = l.pixel_points(100, 80);
        assert_relative_eq!(p[0].x, 12.0);
        assert_relative_eq!(p[2].x, 87.0);
        assert_relative_eq!(p[2].y, 67.0);
        let mut bad = l.clone();
        bad.board_points.swap(1, 2);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn homography_serializes_row_major() {
        let h = Homography::translation(3.0, 7.0);
        let json = serde_json::to_string(&h).unwrap();
        assert_eq!(json, "[1.0,0.0,3.0,0.0,1.0,7.0,0.0,0.0,1.0]");
        let back: Homography = serde_json::from_str(&json).unwrap();
        assert_eq!(back, h);
    }
}
