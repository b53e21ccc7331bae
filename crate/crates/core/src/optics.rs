//! One projection-capture cycle: projector light on a chalk-marked board,
//! followed by a camera that warps, blurs, exposes, adds noise and quantizes,
//! and finally rectifies back to the board frame using the fiducials.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    detect_markers, estimate_homography, stamp_disks, tilt_keystone, trapezoid_keystone, warp, DetectParams,
    Homography, MarkerLayout,
};
use crate::raster::{gaussian_blur, linear_stretch, nearest_rank, to_luma, Raster, LUMA_WEIGHTS};

/// Digital level that `exposure_white` is placed at by default.
pub const WHITE_DIGITAL: f64 = 0.95;

/// Fiducial radiance as a multiple of `exposure_white`; always saturates.
const MARKER_GAIN: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectorModel {
    pub gamma: f64,
    /// Lux added on the board by a full-white signal.
    pub board_illuminance: f64,
    /// Chroma attenuation for color signals (color / white light output).
    pub chroma_ratio: f64,
}

impl Default for ProjectorModel {
    fn default() -> Self {
        Self {
            gamma: 2.2,
            board_illuminance: 820.0,
            chroma_ratio: 700.0 / 2700.0,
        }
    }
}

impl ProjectorModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::config("projector.gamma", "must be positive"));
        }
        if !(self.board_illuminance >= 0.0) {
            return Err(Error::config(
                "projector.board_illuminance",
                "must be non-negative",
            ));
        }
        if !(self.chroma_ratio > 0.0 && self.chroma_ratio <= 1.0) {
            return Err(Error::config("projector.chroma_ratio", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneModel {
    pub ambient_illuminance: f64,
    pub board_reflectance: f64,
    pub chalk_reflectance: f64,
    /// Half-width of the uniform multiplicative board grain.
    pub texture_amplitude: f64,
    pub texture_seed: u64,
}

impl Default for SceneModel {
    fn default() -> Self {
        Self {
            ambient_illuminance: 205.0,
            board_reflectance: 0.15,
            chalk_reflectance: 0.85,
            texture_amplitude: 0.03,
            texture_seed: 0,
        }
    }
}

impl SceneModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.ambient_illuminance >= 0.0) {
            return Err(Error::config("scene.ambient_illuminance", "must be non-negative"));
        }
        if !(self.board_reflectance > 0.0 && self.board_reflectance < self.chalk_reflectance) {
            return Err(Error::config(
                "scene.board_reflectance",
                "must satisfy 0 < board < chalk reflectance",
            ));
        }
        if !(self.chalk_reflectance <= 1.0) {
            return Err(Error::config("scene.chalk_reflectance", "must be at most 1"));
        }
        if !(0.0..0.5).contains(&self.texture_amplitude) {
            return Err(Error::config("scene.texture_amplitude", "must lie in [0, 0.5)"));
        }
        Ok(())
    }

    /// Static board grain, zero-mean and bounded by the amplitude.
    pub fn texture(&self, width: usize, height: usize) -> Vec<f64> {
        let a = self.texture_amplitude;
        if a == 0.0 {
            return vec![0.0; width * height];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.texture_seed);
        (0..width * height).map(|_| rng.gen_range(-a..=a)).collect()
    }

    /// Largest reflectance any pixel can have.
    pub fn max_reflectance(&self) -> f64 {
        self.chalk_reflectance
            .max(self.board_reflectance * (1.0 + self.texture_amplitude))
            .min(1.0)
    }
}

/// Chalk coverage in board coordinates, 0 = bare board, 1 = full chalk.
#[derive(Clone, Debug, PartialEq)]
pub struct ChalkLayer {
    coverage: Raster,
}

impl ChalkLayer {
    pub fn new(coverage: Raster) -> Result<Self> {
        if coverage.channels() != 1 {
            return Err(Error::param("chalk coverage must be single-channel"));
        }
        let coverage = if coverage.range() == 1.0 {
            coverage
        } else {
            let l = coverage.range();
            coverage.map(|v| v / l).with_range(1.0)?
        };
        Ok(Self { coverage })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(Raster::filled(width, height, 1, 0.0)?)
    }

    pub fn coverage(&self) -> &Raster {
        &self.coverage
    }

    /// Accumulates strokes: coverage becomes the pointwise maximum.
    pub fn merge(&self, delta: &ChalkLayer) -> Result<ChalkLayer> {
        if self.coverage.dims() != delta.coverage.dims() {
            return Err(Error::shape(self.coverage.describe(), delta.coverage.describe()));
        }
        let data = self
            .coverage
            .samples()
            .iter()
            .zip(delta.coverage.samples())
            .map(|(a, b)| a.max(*b))
            .collect();
        let (w, h) = self.coverage.dims();
        Ok(ChalkLayer {
            coverage: Raster::new(w, h, 1, 1.0, data)?,
        })
    }
}

/// Camera pose relative to the board.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Keystone {
    Identity,
    /// Top edge pulled in by `top_inset` of the width on each side.
    Trapezoid {
        top_inset: f64,
        margin: f64,
    },
    /// Rotation of `degrees` about the vertical axis.
    Tilt {
        degrees: f64,
        margin: f64,
    },
    /// Explicit board-to-camera map, 9 numbers row-major.
    Matrix {
        h: Homography,
    },
}

impl Default for Keystone {
    fn default() -> Self {
        Keystone::Trapezoid {
            top_inset: 0.04,
            margin: 4.0,
        }
    }
}

impl Keystone {
    pub fn homography(&self, width: usize, height: usize) -> Result<Homography> {
        match self {
            Keystone::Identity => Ok(Homography::identity()),
            Keystone::Trapezoid { top_inset, margin } => {
                trapezoid_keystone(width, height, *top_inset, *margin)
            }
            Keystone::Tilt { degrees, margin } => tilt_keystone(width, height, *degrees, *margin),
            Keystone::Matrix { h } => Ok(*h),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExposureMode {
    /// Linear map fixed by `exposure_black`/`exposure_white`.
    Fixed,
    /// `exposure_white` replaced per frame by the given radiance percentile
    /// divided by the white digital level.
    Percentile { pct: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraModel {
    pub keystone: Keystone,
    pub blur_sigma: f64,
    pub noise_sigma: f64,
    /// Radiance mapped to digital 0.
    pub exposure_black: f64,
    /// Radiance mapped to digital 1. The default puts bare board under
    /// full-white projection at 0.95.
    pub exposure_white: f64,
    pub exposure: ExposureMode,
    pub quantization_bits: u32,
    pub seed: u64,
    pub detect: DetectParams,
}

impl Default for CameraModel {
    fn default() -> Self {
        let p = ProjectorModel::default();
        let s = SceneModel::default();
        Self {
            keystone: Keystone::default(),
            blur_sigma: 1.2,
            noise_sigma: 0.01,
            exposure_black: 0.0,
            exposure_white: s.board_reflectance * (s.ambient_illuminance + p.board_illuminance)
                / WHITE_DIGITAL,
            exposure: ExposureMode::Fixed,
            quantization_bits: 8,
            seed: 0,
            detect: DetectParams {
                threshold: 0.98,
                ..DetectParams::default()
            },
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.blur_sigma >= 0.0) {
            return Err(Error::config("camera.blur_sigma", "must be non-negative"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::config("camera.noise_sigma", "must be non-negative"));
        }
        if !(self.exposure_white > 0.0) {
            return Err(Error::config("camera.exposure_white", "must be positive"));
        }
        if !(self.exposure_black >= 0.0 && self.exposure_black < self.exposure_white) {
            return Err(Error::config(
                "camera.exposure_black",
                "must satisfy 0 <= black < exposure_white",
            ));
        }
        if !(1..=16).contains(&self.quantization_bits) {
            return Err(Error::config("camera.quantization_bits", "must lie in [1, 16]"));
        }
        if let ExposureMode::Percentile { pct } = self.exposure {
            if !(pct > 0.0 && pct <= 100.0) {
                return Err(Error::config("camera.exposure.pct", "must lie in (0, 100]"));
            }
        }
        Ok(())
    }

    /// Exposure that maps bare board under black/white projection exactly to 0/1.
    pub fn calibrated_exposure(proj: &ProjectorModel, scene: &SceneModel) -> (f64, f64) {
        let black = scene.board_reflectance * scene.ambient_illuminance;
        (black, black + scene.board_reflectance * proj.board_illuminance)
    }
}

/// Everything one cycle needs besides the signal and chalk.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpticsModels {
    pub projector: ProjectorModel,
    pub scene: SceneModel,
    pub camera: CameraModel,
    pub markers: MarkerLayout,
}

impl OpticsModels {
    pub fn validate(&self) -> Result<()> {
        self.projector.validate()?;
        self.scene.validate()?;
        self.camera.validate()?;
        self.markers
            .validate()
            .map_err(|e| Error::config("markers", e.to_string()))
    }

    /// Models whose only loss is resampling: linear projector, no grain,
    /// no blur or noise, head-on camera, calibrated exposure, 16-bit capture.
    pub fn lossless() -> Self {
        let projector = ProjectorModel {
            gamma: 1.0,
            ..Default::default()
        };
        let scene = SceneModel {
            texture_amplitude: 0.0,
            ..Default::default()
        };
        let (black, white) = CameraModel::calibrated_exposure(&projector, &scene);
        let camera = CameraModel {
            keystone: Keystone::Identity,
            blur_sigma: 0.0,
            noise_sigma: 0.0,
            exposure_black: black,
            exposure_white: white,
            quantization_bits: 16,
            ..Default::default()
        };
        Self {
            projector,
            scene,
            camera,
            markers: MarkerLayout::default(),
        }
    }
}

/// Board radiance under projection of `signal`.
///
/// `radiance = rho * (E_ambient + E_proj * s^gamma)` with
/// `rho = (1 - a) * rho_b * (1 + grain) + a * rho_c`.
pub fn project(
    signal: &Raster,
    proj: &ProjectorModel,
    scene: &SceneModel,
    chalk: Option<&ChalkLayer>,
) -> Result<Raster> {
    let (w, h) = signal.dims();
    if let Some(ch) = chalk {
        if ch.coverage.dims() != (w, h) {
            return Err(Error::shape(signal.describe(), ch.coverage.describe()));
        }
    }
    let c = signal.channels();
    let l = signal.range();
    let grain = scene.texture(w, h);
    let e_amb = scene.ambient_illuminance;
    let e_proj = proj.board_illuminance;
    let mut data = Vec::with_capacity(w * h * c);
    let [wr, wg, wb] = LUMA_WEIGHTS;
    for (i, px) in signal.samples().chunks_exact(c).enumerate() {
        let alpha = chalk.map_or(0.0, |ch| ch.coverage.samples()[i]);
        let board = (scene.board_reflectance * (1.0 + grain[i])).clamp(f64::MIN_POSITIVE, 1.0);
        let rho = ((1.0 - alpha) * board + alpha * scene.chalk_reflectance).min(1.0);
        if c == 3 {
            let y = (wr * px[0] + wg * px[1] + wb * px[2]) / l;
            for v in px {
                let s = (y + proj.chroma_ratio * (v / l - y)).clamp(0.0, 1.0);
                data.push(rho * (e_amb + e_proj * s.powf(proj.gamma)));
            }
        } else {
            let s = px[0] / l;
            data.push(rho * (e_amb + e_proj * s.powf(proj.gamma)));
        }
    }
    let range = scene.max_reflectance() * (e_amb + e_proj);
    Raster::from_vec_clamped(w, h, c, range.max(f64::MIN_POSITIVE), data)
}

/// Camera model applied to board radiance: fiducials, keystone, blur,
/// exposure, noise, quantization and optional rectification.
pub fn capture(
    radiance: &Raster,
    cam: &CameraModel,
    rectify: bool,
    markers: &MarkerLayout,
) -> Result<Raster> {
    if radiance.samples().iter().any(|v| *v < 0.0) {
        return Err(Error::param("radiance must be non-negative"));
    }
    let (w, h) = radiance.dims();
    let c = radiance.channels();

    let white = match cam.exposure {
        ExposureMode::Fixed => cam.exposure_white,
        ExposureMode::Percentile { pct } => {
            let mut v = radiance.samples().to_vec();
            v.sort_by(f64::total_cmp);
            (nearest_rank(&v, pct) / WHITE_DIGITAL).max(cam.exposure_black + f64::EPSILON)
        }
    };
    let black = cam.exposure_black;

    // (0) physical fiducials on the board
    let marker_value = MARKER_GAIN * white;
    let range = radiance.range().max(marker_value);
    let mut data = radiance.samples().to_vec();
    let board_pts = markers.pixel_points(w, h);
    stamp_disks(&mut data, w, h, c, &board_pts, markers.radius_px, marker_value);
    let mut frame = Raster::new(w, h, c, range, data)?;

    // (1) keystone
    let key = cam.keystone.homography(w, h)?;
    if key != Homography::identity() {
        frame = warp(&frame, &key, w, h, 0.0)?;
    }
    // (2) blur
    frame = gaussian_blur(&frame, cam.blur_sigma);
    // (3) exposure
    let span = white - black;
    let mut digital: Vec<f64> = frame.samples().iter().map(|r| (r - black) / span).collect();
    // (4) noise, added before the sensor clips so saturated pixels stay saturated
    if cam.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cam.seed);
        let normal = Normal::new(0.0, cam.noise_sigma).map_err(|e| Error::param(format!("noise: {e}")))?;
        for v in &mut digital {
            *v += normal.sample(&mut rng);
        }
    }
    // (5) clip and quantize
    let levels = ((1u32 << cam.quantization_bits) - 1) as f64;
    for v in &mut digital {
        *v = (v.clamp(0.0, 1.0) * levels + 0.5).floor() / levels;
    }
    let captured = Raster::new(w, h, c, 1.0, digital)?;

    // (6) rectify
    if !rectify {
        return Ok(captured);
    }
    let seen = detect_markers(&to_luma(&captured), &cam.detect)?;
    let pairs: Vec<_> = seen.into_iter().zip(board_pts).collect();
    let back = estimate_homography(&pairs)?;
    warp(&captured, &back, w, h, 0.0)
}

/// Contrast correction applied after capture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Enhancement {
    pub low_pct: f64,
    pub high_pct: f64,
}

impl Default for Enhancement {
    fn default() -> Self {
        Self {
            low_pct: 1.0,
            high_pct: 99.0,
        }
    }
}

/// One full project, capture, rectify (and optionally enhance) pass. The
/// result is in the board frame and can be projected again.
pub fn cycle(
    board_state: &Raster,
    chalk: Option<&ChalkLayer>,
    models: &OpticsModels,
    enhance: Option<&Enhancement>,
) -> Result<Raster> {
    let radiance = project(board_state, &models.projector, &models.scene, chalk)?;
    let captured = capture(&radiance, &models.camera, true, &models.markers)?;
    match enhance {
        Some(e) => linear_stretch(&captured, e.low_pct, e.high_pct),
        None => Ok(captured),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_grain() -> SceneModel {
        SceneModel {
            texture_amplitude: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn project_closed_forms() {
        let proj = ProjectorModel::default();
        let scene = no_grain();
        let black = Raster::filled(4, 3, 1, 0.0).unwrap();
        let white = Raster::filled(4, 3, 1, 1.0).unwrap();
        let r0 = project(&black, &proj, &scene, None).unwrap();
        assert!(r0.samples().iter().all(|v| (v - 30.75).abs() < 1e-9));
        let r1 = project(&white, &proj, &scene, None).unwrap();
        assert!(r1.samples().iter().all(|v| (v - 153.75).abs() < 1e-9));

        let chalk = ChalkLayer::new(Raster::filled(4, 3, 1, 1.0).unwrap()).unwrap();
        let rc = project(&black, &proj, &scene, Some(&chalk)).unwrap();
        assert!(rc.samples().iter().all(|v| (v - 174.25).abs() < 1e-9));
        assert!((rc.samples()[0] / r0.samples()[0] - 0.85 / 0.15).abs() < 1e-12);
    }

    #[test]
    fn project_rejects_mismatched_chalk() {
        let s = Raster::filled(4, 3, 1, 0.5).unwrap();
        let chalk = ChalkLayer::empty(3, 3).unwrap();
        assert!(matches!(
            project(
                &s,
                &ProjectorModel::default(),
                &SceneModel::default(),
                Some(&chalk)
            ),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn texture_is_bounded_and_static() {
        let scene = SceneModel::default();
        let t = scene.texture(64, 64);
        assert!(t.iter().all(|v| v.abs() <= scene.texture_amplitude));
        assert_eq!(t, scene.texture(64, 64));
        let mean = t.iter().sum::<f64>() / t.len() as f64;
        assert!(mean.abs() < 0.002);
    }

    #[test]
    fn chroma_is_attenuated() {
        let proj = ProjectorModel {
            gamma: 1.0,
            ..Default::default()
        };
        let red = Raster::new(1, 1, 3, 1.0, vec![1.0, 0.0, 0.0]).unwrap();
        let r = project(&red, &proj, &no_grain(), None).unwrap();
        let s: Vec<f64> = r.samples().iter().map(|v| (v / 0.15 - 205.0) / 820.0).collect();
        let y = 0.299;
        assert!((s[0] - (y + proj.chroma_ratio * (1.0 - y))).abs() < 1e-12);
        assert!((s[1] - (y - proj.chroma_ratio * y)).abs() < 1e-12);
    }

    #[test]
    fn model_validation() {
        assert!(OpticsModels::default().validate().is_ok());
        let mut m = OpticsModels::default();
        m.scene.board_reflectance = 0.9;
        assert!(m.validate().is_err());
        let mut m = OpticsModels::default();
        m.camera.quantization_bits = 0;
        assert!(m.validate().is_err());
        let mut m = OpticsModels::default();
        m.projector.chroma_ratio = 0.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn default_exposure_puts_board_white_at_095() {
        let cam = CameraModel::default();
        assert!((153.75 / cam.exposure_white - WHITE_DIGITAL).abs() < 1e-12);
    }

    #[test]
    fn chalk_merge_takes_max() {
        let a = ChalkLayer::new(Raster::new(2, 1, 1, 1.0, vec![0.2, 0.9]).unwrap()).unwrap();
        let b = ChalkLayer::new(Raster::new(2, 1, 1, 1.0, vec![0.5, 0.1]).unwrap()).unwrap();
        assert_eq!(a.merge(&b).unwrap().coverage().samples(), &[0.5, 0.9]);
    }
}
