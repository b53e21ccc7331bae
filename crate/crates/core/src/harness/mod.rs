//! Iterated reprojection experiments and calibration against measured
//! SSIM sequences.

mod calibrate;
mod experiment;
pub mod nelder_mead;

pub use calibrate::{
    calibrate, calibrate_prepared, rmse, CalibrationProblem, CalibrationResult, FreeParameter, ParameterBound,
};
pub use experiment::{
    compare_content_classes, run_experiment, Annotation, ContentReport, CycleRecord, DecayCurve, Experiment,
    ExperimentConfig, ReferenceSource, Stroke,
};
