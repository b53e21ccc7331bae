use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiment::{Experiment, ExperimentConfig};
use super::nelder_mead::{grid_search, minimize, NelderMeadOptions};
use crate::error::{Error, Result};
use crate::optics::OpticsModels;

/// Optics parameters the calibration may adjust.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeParameter {
    BlurSigma,
    NoiseSigma,
    TextureAmplitude,
    ExposureWhite,
    ChromaRatio,
}

impl FreeParameter {
    pub fn name(self) -> &'static str {
        match self {
            FreeParameter::BlurSigma => "blur_sigma",
            FreeParameter::NoiseSigma => "noise_sigma",
            FreeParameter::TextureAmplitude => "texture_amplitude",
            FreeParameter::ExposureWhite => "exposure_white",
            FreeParameter::ChromaRatio => "chroma_ratio",
        }
    }

    pub fn get(self, m: &OpticsModels) -> f64 {
        match self {
            FreeParameter::BlurSigma => m.camera.blur_sigma,
            FreeParameter::NoiseSigma => m.camera.noise_sigma,
            FreeParameter::TextureAmplitude => m.scene.texture_amplitude,
            FreeParameter::ExposureWhite => m.camera.exposure_white,
            FreeParameter::ChromaRatio => m.projector.chroma_ratio,
        }
    }

    pub fn set(self, m: &mut OpticsModels, v: f64) {
        match self {
            FreeParameter::BlurSigma => m.camera.blur_sigma = v,
            FreeParameter::NoiseSigma => m.camera.noise_sigma = v,
            FreeParameter::TextureAmplitude => m.scene.texture_amplitude = v,
            FreeParameter::ExposureWhite => m.camera.exposure_white = v,
            FreeParameter::ChromaRatio => m.projector.chroma_ratio = v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterBound {
    pub name: FreeParameter,
    pub lower: f64,
    pub upper: f64,
    /// Starting value; the config's value (clipped) when absent.
    #[serde(default)]
    pub start: Option<f64>,
}

fn default_budget() -> usize {
    200
}

/// Fit of optics parameters to a target SSIM sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationProblem {
    /// SSIM per cycle, cycle 1 first.
    pub target: Vec<f64>,
    pub parameters: Vec<ParameterBound>,
    /// Reference, base models and seed. `cycles` is forced to the target length.
    pub experiment: ExperimentConfig,
    #[serde(default = "default_budget")]
    pub budget: usize,
    /// Levels per axis of an optional coarse grid used to pick the start.
    #[serde(default)]
    pub grid: usize,
}

impl CalibrationProblem {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut p: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        p.experiment.cycles = p.target.len().max(1);
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.target.is_empty() {
            return Err(Error::config("target", "must not be empty"));
        }
        if let Some(i) = self.target.iter().position(|v| !(-1.0..=1.0).contains(v)) {
            return Err(Error::config(format!("target[{i}]"), "must lie in [-1, 1]"));
        }
        if self.parameters.is_empty() {
            return Err(Error::config(
                "parameters",
                "at least one free parameter is required",
            ));
        }
        for (i, b) in self.parameters.iter().enumerate() {
            if !(b.lower.is_finite() && b.upper.is_finite() && b.lower < b.upper) {
                return Err(Error::config(
                    format!("parameters[{i}]"),
                    "bounds must be finite with lower < upper",
                ));
            }
            if self.parameters[..i].iter().any(|o| o.name == b.name) {
                return Err(Error::config(
                    format!("parameters[{i}].name"),
                    "duplicate parameter",
                ));
            }
        }
        if self.budget < 50 {
            return Err(Error::config("budget", "at least 50 evaluations are required"));
        }
        if self.experiment.cycles != self.target.len() {
            return Err(Error::config("experiment.cycles", "must equal the target length"));
        }
        self.experiment.validate().map_err(|e| match e {
            Error::Config { path, message } => Error::config(format!("experiment.{path}"), message),
            other => other,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CalibrationResult {
    pub parameters: BTreeMap<String, f64>,
    /// RMSE between the fitted and target sequences.
    pub rmse: f64,
    pub evaluations: usize,
    /// Best loss after each evaluation.
    pub loss_trace: Vec<f64>,
    pub target: Vec<f64>,
    pub fitted_curve: Vec<f64>,
    #[serde(skip)]
    pub models: OpticsModels,
}

pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(1) as f64;
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n).sqrt()
}

/// Derivative-free fit of the free parameters to the target sequence.
pub fn calibrate(problem: &CalibrationProblem, base_dir: &Path) -> Result<CalibrationResult> {
    let mut problem = problem.clone();
    problem.experiment.cycles = problem.target.len();
    problem.validate()?;
    let experiment = Experiment::prepare(problem.experiment.clone(), base_dir)?;
    calibrate_prepared(&problem, &experiment)
}

pub fn calibrate_prepared(
    problem: &CalibrationProblem,
    experiment: &Experiment,
) -> Result<CalibrationResult> {
    problem.validate()?;
    let base = problem.experiment.models();
    let bounds = &problem.parameters;

    let to_models = |u: &[f64]| -> OpticsModels {
        let mut m = base.clone();
        for (b, ui) in bounds.iter().zip(u) {
            b.name
                .set(&mut m, b.lower + ui.clamp(0.0, 1.0) * (b.upper - b.lower));
        }
        m
    };
    let simulate = |u: &[f64]| -> Option<Vec<f64>> {
        let m = to_models(u);
        m.validate().ok()?;
        experiment.run_with(&m).ok().map(|c| c.ssim_values())
    };
    let objective = |u: &[f64]| -> f64 { simulate(u).map_or(f64::INFINITY, |s| rmse(&s, &problem.target)) };

    let mut start: Vec<f64> = bounds
        .iter()
        .map(|b| {
            let v = b.start.unwrap_or_else(|| b.name.get(&base));
            ((v - b.lower) / (b.upper - b.lower)).clamp(0.0, 1.0)
        })
        .collect();

    let mut budget = problem.budget;
    let mut seed_trace = Vec::new();
    let mut seed_best = f64::INFINITY;
    if problem.grid >= 2 {
        let cells = problem.grid.pow(bounds.len() as u32);
        if cells <= budget / 2 {
            let grid = grid_search(&objective, bounds.len(), problem.grid);
            let start_val = objective(&start);
            let mut best = (start.clone(), start_val);
            seed_trace.push(start_val);
            seed_best = start_val;
            for (x, v) in grid {
                if v < best.1 {
                    best = (x, v);
                }
                seed_best = seed_best.min(v);
                seed_trace.push(seed_best);
            }
            start = best.0;
            budget -= cells + 1;
        }
    }

    let opts = NelderMeadOptions {
        max_evals: budget,
        ..Default::default()
    };
    let found = minimize(&objective, &start, &opts);
    let mut loss_trace = seed_trace;
    loss_trace.extend(found.trace.iter().map(|v| v.min(seed_best)));
    let evaluations = loss_trace.len();
    if !found.value.is_finite() {
        return Err(Error::Calibration(format!(
            "no valid simulation in {evaluations} evaluations"
        )));
    }
    let models = to_models(&found.x);
    let fitted_curve = experiment.run_with(&models)?.ssim_values();
    let parameters = bounds
        .iter()
        .map(|b| (b.name.name().to_string(), b.name.get(&models)))
        .collect();
    Ok(CalibrationResult {
        parameters,
        rmse: rmse(&fitted_curve, &problem.target),
        evaluations,
        loss_trace,
        target: problem.target.clone(),
        fitted_curve,
        models,
    })
}
