//! Simulator and measurement toolkit for projector/camera reprojection loops
//! on a chalkboard.
//!
//! The pipeline modules are:
//!
//! - [`raster`]: normalized image carrier, luma, bilinear sampling, blur, contrast stretch.
//! - [`iqa`]: MSE, PSNR, SSIM, falsecolor composites and decay statistics.
//! - [`geometry`]: fiducial detection, DLT homographies and warping.
//! - [`optics`]: projector, board, chalk and camera models for one cycle.
//! - [`harness`]: multi-cycle experiments and parameter calibration.
//! - [`subjective`]: mean opinion scores and their correlation with SSIM.

// `!(x > 0.0)` is the idiom used to reject NaN parameters along with bad values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod iqa;
pub mod optics;
pub mod raster;
pub mod subjective;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{DetectParams, Homography, MarkerLayout, Point};
pub use harness::{CalibrationProblem, DecayCurve, ExperimentConfig};
pub use iqa::{DecayStats, Psnr, SsimParams, SsimResult};
pub use optics::{CameraModel, ChalkLayer, OpticsModels, ProjectorModel, SceneModel};
pub use raster::{Raster, Rect};
