//! `reproj`: image-quality metrics, falsecolor composites, rectification,
//! reprojection experiments, calibration and rating analysis.
//!
//! Exit codes: 0 on success, 2 for bad input, 3 for internal failures.

mod commands;
mod manifest;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "reproj",
    version,
    about = "Projection-capture-reprojection simulator and image-quality toolkit"
)]
pub struct Cli {
    /// Overrides the seed of `simulate` and `calibrate` configs.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory for commands that write several files.
    #[arg(long, global = true, default_value = "reproj-out")]
    pub out: PathBuf,

    /// Suppress progress and summary lines.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Mean SSIM of IMAGE against REFERENCE, printed with 4 decimals.
    Ssim {
        image: PathBuf,
        reference: PathBuf,
        /// Also write the local SSIM map as a grayscale PNG.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Peak signal-to-noise ratio in dB (`inf` for identical images).
    Psnr { image: PathBuf, reference: PathBuf },
    /// Mean squared error on the normalized luma.
    Mse { image: PathBuf, reference: PathBuf },
    /// Falsecolor overlay: R = A, G = B, B = A.
    Compose {
        image_a: PathBuf,
        image_b: PathBuf,
        output: PathBuf,
    },
    /// Detects the four fiducials in a capture and warps it to the board frame.
    Rectify {
        input: PathBuf,
        output: PathBuf,
        /// Board frame width; defaults to the input width.
        #[arg(long)]
        width: Option<usize>,
        /// Board frame height; defaults to the input height.
        #[arg(long)]
        height: Option<usize>,
        /// Detection threshold as a fraction of the dynamic range.
        #[arg(long, default_value_t = 0.9)]
        threshold: f64,
    },
    /// Runs a reprojection experiment from a JSON config.
    Simulate {
        config: PathBuf,
        /// Draws a horizontal reference line on the decay chart.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Fits optics parameters to a target SSIM sequence.
    Calibrate {
        problem: PathBuf,
        /// Simulation budget.
        #[arg(long, default_value_t = 200)]
        evals: usize,
    },
    /// Mean opinion scores per image and group, optionally correlated with SSIM.
    Mos {
        ratings: PathBuf,
        /// CSV with columns `image_id,ssim`.
        #[arg(long)]
        ssim: Option<PathBuf>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<reproj_core::Error>() {
        return if e.is_user_error() { 2 } else { 3 };
    }
    if err.downcast_ref::<std::io::Error>().is_some() || err.downcast_ref::<serde_json::Error>().is_some() {
        return 2;
    }
    if err.downcast_ref::<commands::UsageError>().is_some() {
        return 2;
    }
    3
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| commands::run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
        Err(_) => ExitCode::from(3),
    }
}
