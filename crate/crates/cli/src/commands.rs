use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use reproj_core::geometry::{detect_markers, estimate_homography, warp};
use reproj_core::harness::{calibrate, Experiment, ReferenceSource};
use reproj_core::io::{load, save};
use reproj_core::iqa::{decay_stats, falsecolor_composite, mse, psnr, ssim};
use reproj_core::raster::to_luma;
use reproj_core::subjective::{correlate, group_delta, mos, mos_table, read_ratings, read_ssim_table};
use reproj_core::{CalibrationProblem, DetectParams, ExperimentConfig, MarkerLayout, Raster, SsimParams};
use serde_json::json;

use crate::manifest::RunManifest;
use crate::svg::decay_chart;
use crate::{Cli, Command};

/// Bad command-line input that clap cannot catch.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ssim {
            image,
            reference,
            map,
        } => cmd_ssim(image, reference, map.as_deref()),
        Command::Psnr { image, reference } => {
            let (a, r) = load_pair(image, reference)?;
            println!("{:.4}", psnr(&a, &r)?);
            Ok(())
        }
        Command::Mse { image, reference } => {
            let (a, r) = load_pair(image, reference)?;
            println!("{:.8}", mse(&a, &r)?);
            Ok(())
        }
        Command::Compose {
            image_a,
            image_b,
            output,
        } => {
            let (a, b) = load_pair(image_a, image_b)?;
            let composite = falsecolor_composite(&a, &b)?;
            save(&composite, output)?;
            Ok(())
        }
        Command::Rectify {
            input,
            output,
            width,
            height,
            threshold,
        } => cmd_rectify(input, output, *width, *height, *threshold),
        Command::Simulate { config, threshold } => cmd_simulate(cli, config, *threshold),
        Command::Calibrate { problem, evals } => cmd_calibrate(cli, problem, *evals),
        Command::Mos { ratings, ssim } => cmd_mos(cli, ratings, ssim.as_deref()),
    }
}

/// Both images as luma on a common `[0, 1]` range.
fn load_pair(image: &Path, reference: &Path) -> Result<(Raster, Raster)> {
    let a = to_luma(&load(image)?);
    let r = to_luma(&load(reference)?);
    if a.dims() != r.dims() {
        return Err(usage(format!(
            "size mismatch: {} is {}x{}, {} is {}x{}",
            image.display(),
            a.width(),
            a.height(),
            reference.display(),
            r.width(),
            r.height()
        )));
    }
    Ok((a, r))
}

fn cmd_ssim(image: &Path, reference: &Path, map: Option<&Path>) -> Result<()> {
    let (a, r) = load_pair(image, reference)?;
    let result = ssim(&a, &r, &SsimParams::default())?;
    println!("{:.4}", result.mean_ssim);
    if let Some(path) = map {
        save(&result.ssim_map, path)?;
    }
    Ok(())
}

fn cmd_rectify(
    input: &Path,
    output: &Path,
    width: Option<usize>,
    height: Option<usize>,
    threshold: f64,
) -> Result<()> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(usage("--threshold must lie in (0, 1]"));
    }
    let img = load(input)?;
    let w = width.unwrap_or(img.width());
    let h = height.unwrap_or(img.height());
    if w == 0 || h == 0 {
        return Err(usage("--width and --height must be positive"));
    }
    let params = DetectParams {
        threshold,
        ..Default::default()
    };
    let seen = detect_markers(&to_luma(&img), &params)?;
    let targets = MarkerLayout::default().pixel_points(w, h);
    let pairs: Vec<_> = seen.into_iter().zip(targets).collect();
    let h_mat = estimate_homography(&pairs)?;
    save(&warp(&img, &h_mat, w, h, 0.0)?, output)?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>, outputs: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    outputs.push(path.to_path_buf());
    Ok(())
}

fn reference_inputs(config_path: &Path, reference: &ReferenceSource) -> Vec<PathBuf> {
    let mut inputs = vec![config_path.to_path_buf()];
    if let ReferenceSource::File { path } = reference {
        inputs.push(base_dir(config_path).join(path));
    }
    inputs
}

fn cmd_simulate(cli: &Cli, config_path: &Path, threshold: Option<f64>) -> Result<()> {
    if let Some(t) = threshold {
        if !(-1.0..=1.0).contains(&t) {
            return Err(usage("--threshold must lie in [-1, 1]"));
        }
    }
    let mut manifest = RunManifest::start("simulate");
    let mut cfg = ExperimentConfig::from_json(&read_text(config_path)?)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let experiment = Experiment::prepare(cfg.clone(), &base_dir(config_path))?;
    let curve = experiment.run()?;

    let out = &cli.out;
    create_out(out)?;
    let mut outputs = Vec::new();
    write_file(&out.join("curve.csv"), curve.to_csv(), &mut outputs)?;
    let reference_png = out.join("reference.png");
    save(&experiment.reference, &reference_png)?;
    outputs.push(reference_png);
    for r in &curve.records {
        let p = out.join(format!("cycle_{:02}.png", r.cycle));
        save(&r.image, &p)?;
        outputs.push(p);
    }
    let values = curve.ssim_values();
    let title = format!("SSIM decay over {} cycles", values.len());
    write_file(
        &out.join("decay.svg"),
        decay_chart(&values, threshold, &title),
        &mut outputs,
    )?;

    if !cli.quiet {
        for r in &curve.records {
            println!("cycle {:>2}  ssim {:.4}  psnr {:.2}", r.cycle, r.ssim, r.psnr);
        }
        if let Ok(stats) = decay_stats(&values, threshold.unwrap_or(0.5)) {
            if let Some(k) = stats.cycles_to_threshold {
                println!("ssim falls below {} at cycle {k}", stats.threshold);
            }
        }
    }
    manifest.record(json!({
        "metric_crop": curve.crop,
        "rectified": curve.rectified,
        "fingerprint": curve.fingerprint,
    }));
    manifest.finish(
        serde_json::to_value(&cfg)?,
        &reference_inputs(config_path, &cfg.reference),
        Some(cfg.seed),
        outputs,
        &out.join("manifest.json"),
    )
}

fn cmd_calibrate(cli: &Cli, problem_path: &Path, evals: usize) -> Result<()> {
    let mut manifest = RunManifest::start("calibrate");
    let mut problem = CalibrationProblem::from_json(&read_text(problem_path)?)?;
    problem.budget = evals;
    if let Some(seed) = cli.seed {
        problem.experiment.seed = seed;
    }
    problem.validate()?;
    let result = calibrate(&problem, &base_dir(problem_path))?;

    let out = &cli.out;
    create_out(out)?;
    let mut outputs = Vec::new();
    let report = json!({
        "parameters": result.parameters,
        "rmse": result.rmse,
        "evaluations": result.evaluations,
        "target": result.target,
        "fitted_curve": result.fitted_curve,
        "loss_trace": result.loss_trace,
        "fitted_models": result.models,
    });
    write_file(
        &out.join("calibration.json"),
        serde_json::to_string_pretty(&report)? + "\n",
        &mut outputs,
    )?;
    let mut csv = String::from("cycle,target,fitted\n");
    for (i, (t, f)) in result.target.iter().zip(&result.fitted_curve).enumerate() {
        csv.push_str(&format!("{},{:.6},{:.6}\n", i + 1, t, f));
    }
    write_file(&out.join("fitted_curve.csv"), csv, &mut outputs)?;

    if !cli.quiet {
        for (name, v) in &result.parameters {
            println!("{name} = {v:.6}");
        }
        println!("rmse {:.4} after {} evaluations", result.rmse, result.evaluations);
    }
    manifest.finish(
        serde_json::to_value(&problem)?,
        &reference_inputs(problem_path, &problem.experiment.reference),
        Some(problem.experiment.seed),
        outputs,
        &out.join("manifest.json"),
    )
}

fn cmd_mos(cli: &Cli, ratings_path: &Path, ssim_path: Option<&Path>) -> Result<()> {
    let mut manifest = RunManifest::start("mos");
    let open = |p: &Path| fs::File::open(p).with_context(|| format!("cannot read {}", p.display()));
    let records = read_ratings(open(ratings_path)?).with_context(|| ratings_path.display().to_string())?;
    if records.is_empty() {
        return Err(usage(format!("{} holds no ratings", ratings_path.display())));
    }
    let table = match ssim_path {
        Some(p) => Some(read_ssim_table(open(p)?).with_context(|| p.display().to_string())?),
        None => None,
    };

    let out = &cli.out;
    create_out(out)?;
    let mut outputs = Vec::new();
    let mut csv = String::from("image_id,group,mean,stddev,n\n");
    for row in mos_table(&records) {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            row.image_id, row.group, row.mean, row.stddev, row.n
        ));
    }
    write_file(&out.join("mos.csv"), csv, &mut outputs)?;

    match group_delta(&records) {
        Ok(delta) => {
            if !cli.quiet {
                println!(
                    "teacher minus student MOS: {:+.4} over {} images",
                    delta.mean_delta,
                    delta.per_image.len()
                );
            }
            write_file(
                &out.join("group_delta.json"),
                serde_json::to_string_pretty(&delta)? + "\n",
                &mut outputs,
            )?;
        }
        Err(e) if !cli.quiet => println!("no group comparison: {e}"),
        Err(_) => {}
    }

    let mut inputs = vec![ratings_path.to_path_buf()];
    if let (Some(table), Some(p)) = (table, ssim_path) {
        inputs.push(p.to_path_buf());
        let mut mos_values = Vec::with_capacity(table.len());
        let mut images = Vec::with_capacity(table.len());
        for (id, s) in &table {
            let m = mos(&records, id, None)?;
            mos_values.push(m.mean);
            images.push(json!({"image_id": id, "mos": m.mean, "ssim": s}));
        }
        let ssim_values: Vec<f64> = table.iter().map(|(_, s)| *s).collect();
        let c = correlate(&mos_values, &ssim_values)?;
        let report = json!({
            "n": c.n,
            "pearson_r": c.pearson_r,
            "spearman_rho": c.spearman_rho,
            "images": images,
        });
        write_file(
            &out.join("correlation.json"),
            serde_json::to_string_pretty(&report)? + "\n",
            &mut outputs,
        )?;
        if !cli.quiet {
            let show = |v: Option<f64>| v.map_or("undefined".to_string(), |r| format!("{r:.4}"));
            println!("pearson {}  spearman {}", show(c.pearson_r), show(c.spearman_rho));
        }
    }
    manifest.finish(json!(null), &inputs, None, outputs, &out.join("manifest.json"))
}
