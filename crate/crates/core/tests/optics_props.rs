use proptest::prelude::*;
use reproj_core::optics::{capture, cycle, project, Keystone};
use reproj_core::synth::{checkerboard, line_art, Polarity};
use reproj_core::{CameraModel, ChalkLayer, MarkerLayout, OpticsModels, ProjectorModel, Raster, SceneModel};

fn flat_camera() -> CameraModel {
    let (black, white) = CameraModel::calibrated_exposure(&ProjectorModel::default(), &SceneModel::default());
    CameraModel {
        keystone: Keystone::Identity,
        blur_sigma: 0.0,
        noise_sigma: 0.0,
        exposure_black: black,
        exposure_white: white,
        ..Default::default()
    }
}

fn spread(img: &Raster) -> f64 {
    let s = img.samples();
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    (s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / s.len() as f64).sqrt()
}

proptest! {
    #[test]
    fn radiance_is_monotone_in_signal(a in 0.0f64..=1.0, b in 0.0f64..=1.0, gamma in 0.5f64..3.0, seed in any::<u64>()) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let proj = ProjectorModel { gamma, ..Default::default() };
        let scene = SceneModel { texture_seed: seed, ..Default::default() };
        let rl = project(&Raster::filled(8, 8, 1, lo).unwrap(), &proj, &scene, None).unwrap();
        let rh = project(&Raster::filled(8, 8, 1, hi).unwrap(), &proj, &scene, None).unwrap();
        for (x, y) in rl.samples().iter().zip(rh.samples()) {
            prop_assert!(x <= y);
        }
    }

    #[test]
    fn chalk_never_darkens(signal in 0.0f64..=1.0, alpha in 0.0f64..=1.0, seed in any::<u64>()) {
        let scene = SceneModel { texture_seed: seed, ..Default::default() };
        let s = Raster::filled(8, 8, 1, signal).unwrap();
        let chalk = ChalkLayer::new(Raster::filled(8, 8, 1, alpha).unwrap()).unwrap();
        let bare = project(&s, &ProjectorModel::default(), &scene, None).unwrap();
        let marked = project(&s, &ProjectorModel::default(), &scene, Some(&chalk)).unwrap();
        for (x, y) in bare.samples().iter().zip(marked.samples()) {
            prop_assert!(y >= x);
        }
    }
}

#[test]
fn full_chalk_outshines_any_projection_on_bare_board() {
    let scene = SceneModel {
        texture_amplitude: 0.0,
        ..Default::default()
    };
    let proj = ProjectorModel::default();
    let white = project(&Raster::filled(4, 4, 1, 1.0).unwrap(), &proj, &scene, None).unwrap();
    let chalk = ChalkLayer::new(Raster::filled(4, 4, 1, 1.0).unwrap()).unwrap();
    let dark_chalk = project(
        &Raster::filled(4, 4, 1, 0.0).unwrap(),
        &proj,
        &scene,
        Some(&chalk),
    )
    .unwrap();
    assert!(dark_chalk.samples()[0] > white.samples()[0]);
}

#[test]
fn blur_lowers_checkerboard_contrast() {
    let board = checkerboard(96, 96, 2).unwrap();
    let radiance = project(&board, &ProjectorModel::default(), &SceneModel::default(), None).unwrap();
    let markers = MarkerLayout::default();
    let mut last = f64::INFINITY;
    for sigma in [0.0, 0.8, 1.6, 3.2] {
        let cam = CameraModel {
            blur_sigma: sigma,
            ..flat_camera()
        };
        let s = spread(
            &capture(&radiance, &cam, false, &markers)
                .unwrap()
                .crop(reproj_core::Rect {
                    x: 30,
                    y: 30,
                    width: 36,
                    height: 36,
                })
                .unwrap(),
        );
        assert!(s < last, "sigma {sigma}: {s} vs {last}");
        last = s;
    }
}

#[test]
fn capture_is_deterministic_per_seed() {
    let art = line_art(160, 120, 1, Polarity::DarkOnLight).unwrap().pad(20, 0.0);
    let radiance = project(&art, &ProjectorModel::default(), &SceneModel::default(), None).unwrap();
    let markers = MarkerLayout::default();
    let noisy = |seed| CameraModel {
        seed,
        ..CameraModel::default()
    };
    let a = capture(&radiance, &noisy(1), true, &markers).unwrap();
    assert_eq!(a, capture(&radiance, &noisy(1), true, &markers).unwrap());
    assert_ne!(a, capture(&radiance, &noisy(2), true, &markers).unwrap());

    let quiet = |seed| CameraModel {
        seed,
        noise_sigma: 0.0,
        ..CameraModel::default()
    };
    assert_eq!(
        capture(&radiance, &quiet(1), true, &markers).unwrap(),
        capture(&radiance, &quiet(2), true, &markers).unwrap()
    );
}

#[test]
fn captures_are_quantized_to_the_bit_depth() {
    let art = line_art(120, 90, 2, Polarity::DarkOnLight).unwrap().pad(20, 0.0);
    let radiance = project(&art, &ProjectorModel::default(), &SceneModel::default(), None).unwrap();
    for bits in [4u32, 8] {
        let cam = CameraModel {
            quantization_bits: bits,
            ..CameraModel::default()
        };
        let out = capture(&radiance, &cam, false, &MarkerLayout::default()).unwrap();
        let levels = ((1u32 << bits) - 1) as f64;
        for v in out.samples() {
            assert!(((v * levels).round() - v * levels).abs() < 1e-9);
        }
    }
}

#[test]
fn cycle_keeps_the_board_frame() {
    let art = line_art(200, 150, 4, Polarity::DarkOnLight).unwrap();
    let margin = MarkerLayout::default().margin_px();
    let state = art.pad(margin, 0.0);
    let out = cycle(&state, None, &OpticsModels::default(), None).unwrap();
    assert_eq!(out.dims(), state.dims());
    assert_eq!(out.range(), 1.0);

    let rgb = reproj_core::synth::colorize(&reproj_core::synth::photo(200, 150, 4).unwrap(), 4).unwrap();
    let out = cycle(&rgb.pad(margin, 0.0), None, &OpticsModels::default(), None).unwrap();
    assert_eq!(out.channels(), 3);
}

#[test]
fn color_signals_lose_chroma_but_keep_luma() {
    let px = Raster::new(1, 1, 3, 1.0, vec![0.8, 0.3, 0.5]).unwrap();
    let scene = SceneModel {
        texture_amplitude: 0.0,
        ..Default::default()
    };
    let linear = ProjectorModel {
        gamma: 1.0,
        ..Default::default()
    };
    let r = project(&px, &linear, &scene, None).unwrap();
    let s = r.samples();
    // chroma spread shrinks by the color/white ratio
    let input_spread = 0.8 - 0.3;
    let output_spread = (s[0] - s[1]) / (scene.board_reflectance * linear.board_illuminance);
    assert!((output_spread - input_spread * linear.chroma_ratio).abs() < 1e-12);
}
