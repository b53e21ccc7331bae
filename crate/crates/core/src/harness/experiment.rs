use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::MarkerLayout;
use crate::iqa::{mse, psnr, ssim, Psnr, SsimParams};
use crate::optics::{cycle, CameraModel, ChalkLayer, Enhancement, OpticsModels, ProjectorModel, SceneModel};
use crate::raster::{to_luma, Raster, Rect};
use crate::synth;

/// Where the reference image comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSource {
    LineArt {
        width: usize,
        height: usize,
        seed: u64,
        #[serde(default)]
        polarity: synth::Polarity,
    },
    Photo {
        width: usize,
        height: usize,
        seed: u64,
    },
    PhotoColor {
        width: usize,
        height: usize,
        seed: u64,
    },
    Gradient {
        width: usize,
        height: usize,
    },
    Checkerboard {
        width: usize,
        height: usize,
        cell: usize,
    },
    /// PNG/PGM/PPM path, relative to the config file.
    File {
        path: PathBuf,
    },
}

impl ReferenceSource {
    pub fn load(&self, base_dir: &Path) -> Result<Raster> {
        match self {
            ReferenceSource::LineArt {
                width,
                height,
                seed,
                polarity,
            } => synth::line_art(*width, *height, *seed, *polarity),
            ReferenceSource::Photo { width, height, seed } => synth::photo(*width, *height, *seed),
            ReferenceSource::PhotoColor { width, height, seed } => {
                synth::colorize(&synth::photo(*width, *height, *seed)?, *seed)
            }
            ReferenceSource::Gradient { width, height } => synth::gradient(*width, *height),
            ReferenceSource::Checkerboard { width, height, cell } => {
                synth::checkerboard(*width, *height, *cell)
            }
            ReferenceSource::File { path } => crate::io::load(base_dir.join(path)),
        }
        .map_err(|e| match e {
            Error::Parameter(m) => Error::config("reference", m),
            other => other,
        })
    }
}

/// A chalk stroke in reference pixel coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stroke {
    pub points: Vec<[f64; 2]>,
    #[serde(default = "default_stroke_width")]
    pub width: f64,
}

fn default_stroke_width() -> f64 {
    3.0
}

/// Chalk added to the board before the given cycle's capture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotation {
    /// 1-based cycle index.
    pub cycle: usize,
    #[serde(default)]
    pub strokes: Vec<Stroke>,
    /// Traces over reference content whose luma is at least this level.
    #[serde(default)]
    pub redraw_threshold: Option<f64>,
}

/// JSON experiment description. Illuminance in lux, lengths in pixels unless
/// a field says otherwise, intensities normalized to `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub reference: ReferenceSource,
    pub cycles: usize,
    #[serde(default)]
    pub annotations: Vec<Annotation>,
    #[serde(default)]
    pub projector: ProjectorModel,
    #[serde(default)]
    pub scene: SceneModel,
    #[serde(default)]
    pub camera: CameraModel,
    #[serde(default)]
    pub markers: MarkerLayout,
    #[serde(default)]
    pub enhance: Option<Enhancement>,
    /// Metric region in reference coordinates; the whole reference when absent.
    #[serde(default)]
    pub crop: Option<Rect>,
    #[serde(default)]
    pub ssim: SsimParams,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn models(&self) -> OpticsModels {
        OpticsModels {
            projector: self.projector.clone(),
            scene: self.scene.clone(),
            camera: self.camera.clone(),
            markers: self.markers.clone(),
        }
    }

    pub fn set_models(&mut self, m: OpticsModels) {
        self.projector = m.projector;
        self.scene = m.scene;
        self.camera = m.camera;
        self.markers = m.markers;
    }

    pub fn validate(&self) -> Result<()> {
        if self.cycles < 1 {
            return Err(Error::config("cycles", "must be at least 1"));
        }
        for (i, a) in self.annotations.iter().enumerate() {
            if a.cycle < 1 || a.cycle > self.cycles {
                return Err(Error::config(
                    format!("annotations[{i}].cycle"),
                    format!("cycle {} outside 1..={}", a.cycle, self.cycles),
                ));
            }
            if let Some(t) = a.redraw_threshold {
                if !(0.0..=1.0).contains(&t) {
                    return Err(Error::config(
                        format!("annotations[{i}].redraw_threshold"),
                        "must lie in [0, 1]",
                    ));
                }
            }
            for (j, s) in a.strokes.iter().enumerate() {
                if !(s.width > 0.0) {
                    return Err(Error::config(
                        format!("annotations[{i}].strokes[{j}].width"),
                        "must be positive",
                    ));
                }
            }
        }
        if let Some(e) = &self.enhance {
            if !(0.0..100.0).contains(&e.low_pct) || !(e.high_pct > e.low_pct && e.high_pct <= 100.0) {
                return Err(Error::config(
                    "enhance",
                    "percentiles must satisfy 0 <= low < high <= 100",
                ));
            }
        }
        self.ssim
            .validate()
            .map_err(|e| Error::config("ssim", e.to_string()))?;
        self.models().validate()
    }

    /// SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// A config with its reference loaded and chalk deltas rasterized.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub reference: Raster,
    margin: usize,
    deltas: Vec<(usize, ChalkLayer)>,
    crop: Rect,
}

/// Metrics of one cycle's output against the reference.
#[derive(Clone, Debug)]
pub struct CycleRecord {
    pub cycle: usize,
    pub ssim: f64,
    pub mse: f64,
    pub psnr: Psnr,
    /// Output restricted to the reference region.
    pub image: Raster,
}

#[derive(Clone, Debug)]
pub struct DecayCurve {
    pub records: Vec<CycleRecord>,
    pub fingerprint: String,
    /// Region the metrics were computed on, in reference coordinates.
    pub crop: Rect,
    /// Captures were rectified through the fiducials before comparison.
    pub rectified: bool,
}

impl DecayCurve {
    pub fn ssim_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.ssim).collect()
    }

    /// `cycle,ssim,mse,psnr` table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cycle,ssim,mse,psnr\n");
        for r in &self.records {
            out.push_str(&format!("{},{:.6},{:.8},{:.4}\n", r.cycle, r.ssim, r.mse, r.psnr));
        }
        out
    }
}

fn mix_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over the combined words
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Experiment {
    pub fn prepare(config: ExperimentConfig, base_dir: &Path) -> Result<Self> {
        config.validate()?;
        let reference = config.reference.load(base_dir)?;
        Self::with_reference(config, reference)
    }

    pub fn with_reference(config: ExperimentConfig, reference: Raster) -> Result<Self> {
        config.validate()?;
        let (w, h) = reference.dims();
        let crop = config.crop.unwrap_or(Rect {
            x: 0,
            y: 0,
            width: w,
            height: h,
        });
        if crop.width == 0 || crop.height == 0 || crop.x + crop.width > w || crop.y + crop.height > h {
            return Err(Error::config(
                "crop",
                format!("does not fit the {w}x{h} reference"),
            ));
        }
        let win = config.ssim.window_size();
        if crop.width < win || crop.height < win {
            return Err(Error::config(
                "crop",
                format!("smaller than the {win}x{win} SSIM window"),
            ));
        }
        let margin = config.markers.margin_px();
        let (bw, bh) = (w + 2 * margin, h + 2 * margin);
        let ref_luma = to_luma(&reference);
        let mut deltas = Vec::new();
        for a in &config.annotations {
            let mut cov = vec![0.0; bw * bh];
            let off = margin as f64;
            let lines: Vec<(Vec<[f64; 2]>, f64)> = a
                .strokes
                .iter()
                .map(|s| {
                    (
                        s.points.iter().map(|p| [p[0] + off, p[1] + off]).collect(),
                        s.width,
                    )
                })
                .collect();
            synth::draw_polylines(&mut cov, bw, bh, &lines, 1.0);
            if let Some(t) = a.redraw_threshold {
                for y in 0..h {
                    for x in 0..w {
                        if ref_luma.get(x, y, 0) >= t * ref_luma.range() {
                            cov[(y + margin) * bw + x + margin] = 1.0;
                        }
                    }
                }
            }
            deltas.push((a.cycle, ChalkLayer::new(Raster::new(bw, bh, 1, 1.0, cov)?)?));
        }
        Ok(Self {
            config,
            reference,
            margin,
            deltas,
            crop,
        })
    }

    /// Runs with the config's own models.
    pub fn run(&self) -> Result<DecayCurve> {
        self.run_with(&self.config.models())
    }

    /// Runs with substitute models; everything else comes from the config.
    pub fn run_with(&self, models: &OpticsModels) -> Result<DecayCurve> {
        let cfg = &self.config;
        let (w, h) = self.reference.dims();
        let margin = self.margin;
        let content = Rect {
            x: margin + self.crop.x,
            y: margin + self.crop.y,
            width: self.crop.width,
            height: self.crop.height,
        };
        let reference = to_luma(&self.reference).crop(self.crop)?;

        let mut models = models.clone();
        models.scene.texture_seed = mix_seed(cfg.seed ^ models.scene.texture_seed, 0);
        let camera_seed = models.camera.seed;

        let mut state = self.reference.pad(margin, 0.0);
        let mut chalk: Option<ChalkLayer> = None;
        let mut records = Vec::with_capacity(cfg.cycles);
        for k in 1..=cfg.cycles {
            for (_, delta) in self.deltas.iter().filter(|(c, _)| *c == k) {
                chalk = Some(match &chalk {
                    Some(c) => c.merge(delta)?,
                    None => delta.clone(),
                });
            }
            models.camera.seed = mix_seed(cfg.seed ^ camera_seed, k as u64);
            let out =
                cycle(&state, chalk.as_ref(), &models, cfg.enhance.as_ref()).map_err(|e| Error::Cycle {
                    cycle: k,
                    source: Box::new(e),
                })?;
            debug_assert_eq!(out.dims(), (w + 2 * margin, h + 2 * margin));
            let measured = to_luma(&out).crop(content)?;
            let s = ssim(&measured, &reference, &cfg.ssim)?.mean_ssim;
            let err = mse(&measured, &reference)?;
            let p = psnr(&measured, &reference)?;
            records.push(CycleRecord {
                cycle: k,
                ssim: s,
                mse: err,
                psnr: p,
                image: out.crop(Rect {
                    x: margin,
                    y: margin,
                    width: w,
                    height: h,
                })?,
            });
            state = out;
        }
        Ok(DecayCurve {
            records,
            fingerprint: cfg.fingerprint(),
            crop: self.crop,
            rectified: true,
        })
    }
}

/// Loads, validates and runs a config in one go.
pub fn run_experiment(config: &ExperimentConfig, base_dir: &Path) -> Result<DecayCurve> {
    Experiment::prepare(config.clone(), base_dir)?.run()
}

/// Per-class decay curves and the line-art minus photo gap at cycle 3.
#[derive(Clone, Debug, Serialize)]
pub struct ContentReport {
    pub line_art: Vec<f64>,
    pub photo_bw: Vec<f64>,
    pub photo_color: Vec<f64>,
    pub cycle3_gap: f64,
    pub cycle3_bw_color_gap: f64,
}

/// Runs the same models and seed over three content classes.
pub fn compare_content_classes(
    line_art: &Raster,
    photo_bw: &Raster,
    photo_color: &Raster,
    template: &ExperimentConfig,
) -> Result<ContentReport> {
    if line_art.dims() != photo_bw.dims() || line_art.dims() != photo_color.dims() {
        return Err(Error::shape(
            line_art.describe(),
            format!("{} / {}", photo_bw.describe(), photo_color.describe()),
        ));
    }
    if template.cycles < 3 {
        return Err(Error::config(
            "cycles",
            "content comparison needs at least 3 cycles",
        ));
    }
    let run = |r: &Raster| -> Result<Vec<f64>> {
        Ok(Experiment::with_reference(template.clone(), r.clone())?
            .run()?
            .ssim_values())
    };
    let (a, (b, c)) = rayon::join(
        || run(line_art),
        || rayon::join(|| run(photo_bw), || run(photo_color)),
    );
    let (a, b, c) = (a?, b?, c?);
    Ok(ContentReport {
        cycle3_gap: a[2] - b[2],
        cycle3_bw_color_gap: b[2] - c[2],
        line_art: a,
        photo_bw: b,
        photo_color: c,
    })
}
